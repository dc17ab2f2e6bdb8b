//! Command line runner for channel estimation experiments.
//!
//! Exit codes: 0 on success, 2 for configuration problems (bad flags,
//! unreadable or invalid config files), 3 when some estimator failed on
//! every trial of some sweep point (the CSV is still produced).

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chanest::harness::{
    run_ber, run_sweep, BerConfig, ExperimentConfig, Preset, PresetConfig,
};
use chanest::rice::plan_smoothing;
use chanest::Result;

#[derive(Parser)]
#[command(
    name = "chanest",
    version,
    about = "Monte-Carlo experiments for tensor-based downlink channel estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an NMSE sweep described by a JSON config file.
    Sweep {
        /// Path to the experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a bit error rate experiment described by a JSON config file.
    Ber {
        /// Path to the experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the smoothing split and resolvable path bound per antenna count.
    Identifiability {
        /// Training columns on the x axis.
        #[arg(long)]
        n_x: usize,
        /// Training columns on the y axis.
        #[arg(long)]
        n_y: usize,
        /// Smallest receive array to tabulate.
        #[arg(long, default_value_t = 2)]
        m_r_min: usize,
        /// Largest receive array to tabulate.
        #[arg(long, default_value_t = 8)]
        m_r_max: usize,
    },
    /// Run a canned experiment (fig2a, fig2b, fig3, fig5, fig6, fig7).
    Preset {
        /// Preset name.
        name: String,
        /// Override the preset's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the preset's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Whether a finished run left any point with zero successful trials.
enum Outcome {
    Clean,
    PointsAllFailed,
}

fn emit(csv: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_sweep_config(
    mut cfg: ExperimentConfig,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<&Path>,
) -> Result<Outcome> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let report = run_sweep(&cfg)?;
    emit(&report.to_csv(), out)?;
    let failed = report.fully_failed_points();
    for (value, estimator) in &failed {
        eprintln!("warning: {estimator} failed every trial at sweep value {value}");
    }
    Ok(if failed.is_empty() {
        Outcome::Clean
    } else {
        Outcome::PointsAllFailed
    })
}

fn run_ber_config(
    mut cfg: BerConfig,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<&Path>,
) -> Result<Outcome> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let report = run_ber(&cfg)?;
    emit(&report.to_csv(), out)?;
    let failed = report.fully_failed_points();
    for (value, paths, estimator) in &failed {
        eprintln!(
            "warning: {estimator} failed every trial at {value} dB with {paths} paths"
        );
    }
    Ok(if failed.is_empty() {
        Outcome::Clean
    } else {
        Outcome::PointsAllFailed
    })
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Sweep {
            config,
            seed,
            trials,
            out,
        } => {
            let text = std::fs::read_to_string(&config)?;
            run_sweep_config(ExperimentConfig::from_json(&text)?, seed, trials, out.as_deref())
        }
        Command::Ber {
            config,
            seed,
            trials,
            out,
        } => {
            let text = std::fs::read_to_string(&config)?;
            run_ber_config(BerConfig::from_json(&text)?, seed, trials, out.as_deref())
        }
        Command::Identifiability {
            n_x,
            n_y,
            m_r_min,
            m_r_max,
        } => {
            if m_r_min > m_r_max {
                return Err(chanest::Error::Config(format!(
                    "empty antenna range {m_r_min}..{m_r_max}"
                )));
            }
            println!("m_r,p_r,q_r,k_max");
            for m_r in m_r_min..=m_r_max {
                let plan = plan_smoothing(m_r, n_x, n_y)?;
                println!("{m_r},{},{},{}", plan.p_r, plan.q_r, plan.k_max);
            }
            Ok(Outcome::Clean)
        }
        Command::Preset {
            name,
            seed,
            trials,
            out,
        } => match name.parse::<Preset>()?.config() {
            PresetConfig::Sweep(cfg) => run_sweep_config(cfg, seed, trials, out.as_deref()),
            PresetConfig::Ber(cfg) => run_ber_config(cfg, seed, trials, out.as_deref()),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::PointsAllFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

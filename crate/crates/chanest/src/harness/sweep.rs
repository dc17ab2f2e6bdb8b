//! Monte-Carlo sweep execution and CSV reporting.
//!
//! A sweep fixes a training block once, then walks the configured axis. At
//! each point it runs seeded independent trials in parallel: draw a
//! scenario, pass the training through the channel, run every configured
//! estimator, and score the reconstruction. Per-trial RNGs are separate
//! cipher streams of the master seed, so results are reproducible
//! regardless of thread scheduling, and a timing-off report is
//! byte-identical across reruns.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

use crate::baselines::{ls_benchmark_nmse, omp_estimate, AngleGrid};
use crate::channel::{
    grid_phases, random_phases, rician_gains, synth_channel, ArrayGeometry, MultipathParams,
    GRID_RANGE_R, GRID_RANGE_X, GRID_RANGE_Y,
};
use crate::error::Result;
use crate::harness::config::{EstimatorKind, ExperimentConfig, ScenarioMode};
use crate::harness::matching::param_error;
use crate::harness::nmse;
use crate::mdalg::CMat;
use crate::rice::rice_estimate;
use crate::ricer::{ricer_estimate, single_antenna_estimate};
use crate::training::{build_training, full_matrix, TrainingSequence};

/// Column layout of every sweep CSV.
pub const SWEEP_CSV_HEADER: &str =
    "sweep_value,estimator,nmse_mean,nmse_median,param_err_median,failures,trials,seconds";

/// Aggregated results for one estimator at one sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub estimator: String,
    pub nmse_mean: f64,
    pub nmse_median: f64,
    /// Median over trials of the mean matched phase distance; NaN where not
    /// applicable (benchmark row, or no successful trial).
    pub param_err_median: f64,
    pub failures: usize,
    pub trials: usize,
    /// Cumulative estimator runtime over all trials; zero when timing is
    /// disabled.
    pub seconds: f64,
}

/// A finished sweep, one row per (point, estimator) plus a benchmark row per
/// point.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    include_timing: bool,
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let seconds = if self.include_timing {
                format!("{:.3}", r.seconds)
            } else {
                "0".into()
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt_float(r.sweep_value),
                r.estimator,
                fmt_float(r.nmse_mean),
                fmt_float(r.nmse_median),
                fmt_float(r.param_err_median),
                r.failures,
                r.trials,
                seconds,
            ));
        }
        out
    }

    /// Points at which an estimator failed on every trial; nonempty reports
    /// map to a dedicated process exit code in the CLI.
    pub fn fully_failed_points(&self) -> Vec<(f64, String)> {
        self.rows
            .iter()
            .filter(|r| r.estimator != "benchmark" && r.failures == r.trials)
            .map(|r| (r.sweep_value, r.estimator.clone()))
            .collect()
    }
}

/// Draws the trial scenario for a sweep point: phases per the mode, gains
/// Rician with unit mean power.
pub fn scenario_for_trial<R: Rng>(
    mode: &ScenarioMode,
    k: usize,
    rician_db: f64,
    rng: &mut R,
) -> Result<MultipathParams> {
    let (omega_r, omega_x, omega_y) = match mode {
        ScenarioMode::Fixed {
            omega_r,
            omega_x,
            omega_y,
        } => (omega_r.clone(), omega_x.clone(), omega_y.clone()),
        ScenarioMode::Grid => (
            grid_phases(k, GRID_RANGE_R.0, GRID_RANGE_R.1),
            grid_phases(k, GRID_RANGE_X.0, GRID_RANGE_X.1),
            grid_phases(k, GRID_RANGE_Y.0, GRID_RANGE_Y.1),
        ),
        ScenarioMode::Random { min_separation } => (
            random_phases(k, *min_separation, rng)?,
            random_phases(k, *min_separation, rng)?,
            random_phases(k, *min_separation, rng)?,
        ),
    };
    let beta = rician_gains(k, rician_db, rng);
    MultipathParams::new(omega_r, omega_x, omega_y, beta)
}

/// Runs one configured estimator on a snapshot.
pub(crate) fn estimate(
    kind: EstimatorKind,
    y: &CMat,
    s_full: &CMat,
    ts: &TrainingSequence,
    geom: &ArrayGeometry,
    k: usize,
    grid: Option<&AngleGrid>,
) -> Result<MultipathParams> {
    match kind {
        EstimatorKind::Rice if geom.m_r == 1 => single_antenna_estimate(y, k, ts),
        EstimatorKind::Ricer if geom.m_r == 1 => single_antenna_estimate(y, k, ts),
        EstimatorKind::Rice => rice_estimate(y, k, ts, geom),
        EstimatorKind::Ricer => ricer_estimate(y, k, ts, geom),
        EstimatorKind::Omp => {
            let grid = grid.expect("grid built whenever the pursuit baseline is configured");
            omp_estimate(y, s_full, geom, grid, k)
        }
    }
}

struct EstSample {
    nmse: f64,
    param_err: f64,
    seconds: f64,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn median_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    median(&v)
}

/// Executes the sweep described by the config.
///
/// Per-trial numerical failures are counted, never fatal; a point where an
/// estimator fails every trial shows `failures == trials` and NaN
/// statistics.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;

    // training depends only on the transmit side, so one draw serves the
    // whole sweep even when the receive array varies
    let ts = {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::MAX);
        build_training(&cfg.geometry.build(None)?, cfg.window, &mut rng)?
    };
    let s_full = full_matrix(&ts);
    let grid = if cfg.estimators.contains(&EstimatorKind::Omp) {
        Some(AngleGrid::new(cfg.omp_bits)?)
    } else {
        None
    };

    let mut rows = Vec::new();
    for (pi, &value) in cfg.values.iter().enumerate() {
        let (m_r, k, snr_db) = cfg.resolve_point(value)?;
        let geom = cfg.geometry.build(Some(m_r))?;
        let snr_eff = if cfg.noiseless { f64::INFINITY } else { snr_db };

        let outcomes: Vec<Vec<Option<EstSample>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(((pi as u64) << 32) | trial as u64);
                let prep = scenario_for_trial(&cfg.scenario, k, cfg.rician_db, &mut rng)
                    .and_then(|truth| {
                        let h = synth_channel(&truth, &geom);
                        let y = crate::channel::received(&h, &s_full, snr_eff, &mut rng)?;
                        Ok((truth, h, y))
                    });
                let (truth, h, y) = match prep {
                    Ok(t) => t,
                    Err(_) => return cfg.estimators.iter().map(|_| None).collect(),
                };
                cfg.estimators
                    .iter()
                    .map(|&kind| {
                        let started = cfg.include_timing.then(Instant::now);
                        let res = estimate(kind, &y, &s_full, &ts, &geom, k, grid.as_ref());
                        let seconds = started.map_or(0.0, |t| t.elapsed().as_secs_f64());
                        res.ok().and_then(|est| {
                            let err = nmse(&synth_channel(&est, &geom), &h);
                            param_error(&est, &truth).ok().map(|param_err| EstSample {
                                nmse: err,
                                param_err,
                                seconds,
                            })
                        })
                    })
                    .collect()
            })
            .collect();

        for (ei, kind) in cfg.estimators.iter().enumerate() {
            let samples: Vec<&EstSample> =
                outcomes.iter().filter_map(|t| t[ei].as_ref()).collect();
            let n = samples.len();
            rows.push(SweepRow {
                sweep_value: value,
                estimator: kind.label().to_string(),
                nmse_mean: if n == 0 {
                    f64::NAN
                } else {
                    samples.iter().map(|s| s.nmse).sum::<f64>() / n as f64
                },
                nmse_median: median_of(samples.iter().map(|s| s.nmse)),
                param_err_median: median_of(samples.iter().map(|s| s.param_err)),
                failures: cfg.trials - n,
                trials: cfg.trials,
                seconds: samples.iter().map(|s| s.seconds).sum(),
            });
        }
        let bench = ls_benchmark_nmse(snr_db);
        rows.push(SweepRow {
            sweep_value: value,
            estimator: "benchmark".into(),
            nmse_mean: bench,
            nmse_median: bench,
            param_err_median: f64::NAN,
            failures: 0,
            trials: cfg.trials,
            seconds: 0.0,
        });
    }
    Ok(SweepReport {
        rows,
        include_timing: cfg.include_timing,
    })
}

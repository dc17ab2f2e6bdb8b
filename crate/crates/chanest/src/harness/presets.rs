//! Canned experiment configurations.
//!
//! Each preset pins every knob of a standard run, so two machines running
//! the same preset name produce identical CSVs. The `fig2*` presets use a
//! fixed phase table and report per-path recovery; the rest sweep an axis.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::config::{
    BerConfig, EstimatorKind, ExperimentConfig, GeometryConfig, PathRule, ScenarioMode, SweepAxis,
};

/// Named, fully pinned experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig3,
    Fig5,
    Fig6,
    Fig7,
}

/// A preset resolves to either a sweep or an error rate run.
#[derive(Debug, Clone)]
pub enum PresetConfig {
    Sweep(ExperimentConfig),
    Ber(BerConfig),
}

impl PresetConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            PresetConfig::Sweep(c) => c.validate(),
            PresetConfig::Ber(c) => c.validate(),
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            PresetConfig::Sweep(c) => c.seed = seed,
            PresetConfig::Ber(c) => c.seed = seed,
        }
    }

    pub fn set_trials(&mut self, trials: usize) {
        match self {
            PresetConfig::Sweep(c) => c.trials = trials,
            PresetConfig::Ber(c) => c.trials = trials,
        }
    }
}

fn geometry(m_r: usize) -> GeometryConfig {
    GeometryConfig {
        m_r,
        m_x: 10,
        m_y: 10,
        spacing_ratio: 0.5,
    }
}

fn scaled(phases: &[f64]) -> Vec<f64> {
    phases.iter().map(|p| p * PI).collect()
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig2a,
        Preset::Fig2b,
        Preset::Fig3,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig3 => "fig3",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
        }
    }

    /// The pinned configuration for this preset.
    pub fn config(self) -> PresetConfig {
        match self {
            Preset::Fig2a => PresetConfig::Sweep(ExperimentConfig {
                geometry: geometry(3),
                window: 2,
                estimators: vec![EstimatorKind::Rice, EstimatorKind::Ricer],
                axis: SweepAxis::Snr,
                values: vec![20.0],
                snr_db: 20.0,
                paths: PathRule::Fixed { count: 4 },
                trials: 100,
                seed: 21,
                scenario: ScenarioMode::Fixed {
                    omega_r: scaled(&[0.8, 0.57, 0.1, 0.33]),
                    omega_x: scaled(&[0.36, 0.7, 0.53, 0.2]),
                    omega_y: scaled(&[0.8, 0.33, 0.57, 0.1]),
                },
                rician_db: 10.0,
                omp_bits: 5,
                noiseless: false,
                include_timing: false,
            }),
            Preset::Fig2b => PresetConfig::Sweep(ExperimentConfig {
                geometry: geometry(4),
                window: 2,
                estimators: vec![EstimatorKind::Rice, EstimatorKind::Ricer],
                axis: SweepAxis::Snr,
                values: vec![30.0],
                snr_db: 30.0,
                paths: PathRule::Fixed { count: 8 },
                trials: 100,
                seed: 22,
                scenario: ScenarioMode::Fixed {
                    omega_r: scaled(&[0.8, 0.4, 0.3, 0.1, 0.5, 0.2, 0.7, 0.6]),
                    omega_x: scaled(&[0.34, 0.49, 0.41, 0.27, 0.56, 0.7, 0.2, 0.63]),
                    omega_y: scaled(&[0.2, 0.3, 0.5, 0.8, 0.1, 0.6, 0.7, 0.4]),
                },
                rician_db: 10.0,
                omp_bits: 5,
                noiseless: false,
                include_timing: false,
            }),
            Preset::Fig3 => PresetConfig::Sweep(ExperimentConfig {
                geometry: geometry(4),
                window: 2,
                estimators: vec![
                    EstimatorKind::Rice,
                    EstimatorKind::Ricer,
                    EstimatorKind::Omp,
                ],
                axis: SweepAxis::Snr,
                values: vec![0.0, 5.0, 10.0, 15.0, 20.0],
                snr_db: 10.0,
                paths: PathRule::Fixed { count: 4 },
                trials: 200,
                seed: 3,
                scenario: ScenarioMode::Grid,
                rician_db: 10.0,
                omp_bits: 5,
                noiseless: false,
                include_timing: false,
            }),
            Preset::Fig5 => PresetConfig::Sweep(ExperimentConfig {
                geometry: geometry(3),
                window: 3,
                estimators: vec![
                    EstimatorKind::Rice,
                    EstimatorKind::Ricer,
                    EstimatorKind::Omp,
                ],
                axis: SweepAxis::PathCount,
                values: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
                snr_db: 10.0,
                paths: PathRule::Fixed { count: 1 },
                trials: 200,
                seed: 5,
                scenario: ScenarioMode::Grid,
                rician_db: 10.0,
                omp_bits: 5,
                noiseless: false,
                include_timing: false,
            }),
            Preset::Fig6 => PresetConfig::Sweep(ExperimentConfig {
                geometry: geometry(4),
                window: 3,
                estimators: vec![
                    EstimatorKind::Rice,
                    EstimatorKind::Ricer,
                    EstimatorKind::Omp,
                ],
                axis: SweepAxis::ReceiveAntennas,
                values: vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
                snr_db: 10.0,
                paths: PathRule::AntennasPlus { offset: 3 },
                trials: 200,
                seed: 6,
                scenario: ScenarioMode::Grid,
                rician_db: 10.0,
                omp_bits: 5,
                noiseless: false,
                include_timing: false,
            }),
            Preset::Fig7 => PresetConfig::Ber(BerConfig {
                geometry: geometry(3),
                window: 2,
                estimators: vec![EstimatorKind::Rice, EstimatorKind::Ricer],
                values: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
                path_counts: vec![3, 4],
                frame_len: 10_000,
                trials: 50,
                seed: 7,
                scenario: ScenarioMode::Grid,
                rician_db: 10.0,
                omp_bits: 5,
                include_timing: false,
            }),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Config(format!(
                    "unknown preset {s:?}, expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

//! Seeded Monte-Carlo experiments: sweeps, error rate runs, and presets.
//!
//! The harness turns a JSON-serializable config into a CSV report. Trials
//! are parallel but individually seeded, so every report is reproducible
//! from (config, seed) alone; see [`run_sweep`] and [`run_ber`].

pub mod ber;
pub mod config;
pub mod matching;
pub mod presets;
pub mod sweep;

pub use ber::{run_ber, BerReport, BerRow, BER_CSV_HEADER};
pub use config::{
    BerConfig, EstimatorKind, ExperimentConfig, GeometryConfig, PathRule, ScenarioMode, SweepAxis,
};
pub use matching::{match_paths, matched_phase_errors, param_error};
pub use presets::{Preset, PresetConfig};
pub use sweep::{run_sweep, scenario_for_trial, SweepReport, SweepRow, SWEEP_CSV_HEADER};

use crate::mdalg::{fro_norm_sq, CMat};

/// Normalized mean squared error `|h_hat - h|_F^2 / |h|_F^2`.
pub fn nmse(h_hat: &CMat, h: &CMat) -> f64 {
    let diff = h_hat - h;
    fro_norm_sq(&diff) / fro_norm_sq(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn nmse_is_relative() {
        let h = CMat::from_shape_fn((2, 3), |(r, c)| Complex64::new(r as f64 + 1.0, c as f64));
        assert_eq!(nmse(&h, &h), 0.0);
        let scaled = h.mapv(|z| z * 2.0);
        assert!((nmse(&scaled, &h) - 1.0).abs() < 1e-15);
    }
}

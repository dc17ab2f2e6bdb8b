//! Experiment configuration documents.
//!
//! Sweeps and link simulations are described by plain JSON documents so runs
//! can be scripted, diffed, and replayed. Every randomized quantity derives
//! from the single `seed`, making (config, seed) a complete description of
//! the output.

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, MultipathParams};
use crate::error::{Error, Result};

/// Antenna counts and element spacing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub m_r: usize,
    pub m_x: usize,
    pub m_y: usize,
    #[serde(default = "default_spacing")]
    pub spacing_ratio: f64,
}

fn default_spacing() -> f64 {
    0.5
}

impl GeometryConfig {
    /// Geometry with an optional receive-antenna override (used when the
    /// sweep axis varies the receive array).
    pub fn build(&self, m_r_override: Option<usize>) -> Result<ArrayGeometry> {
        ArrayGeometry::new(
            m_r_override.unwrap_or(self.m_r),
            self.m_x,
            self.m_y,
            self.spacing_ratio,
        )
    }
}

/// Which estimators a run exercises; the closed-form benchmark row is always
/// emitted alongside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Rice,
    Ricer,
    Omp,
}

impl EstimatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Rice => "rice",
            EstimatorKind::Ricer => "ricer",
            EstimatorKind::Omp => "omp",
        }
    }
}

/// The quantity varied across sweep points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "snr")]
    Snr,
    #[serde(rename = "k")]
    PathCount,
    #[serde(rename = "mr")]
    ReceiveAntennas,
}

/// How the path count is fixed at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum PathRule {
    /// Same count everywhere.
    Fixed { count: usize },
    /// Count tied to the receive array: `k = m_r + offset`.
    AntennasPlus { offset: usize },
}

impl PathRule {
    pub fn resolve(&self, m_r: usize) -> usize {
        match self {
            PathRule::Fixed { count } => *count,
            PathRule::AntennasPlus { offset } => m_r + offset,
        }
    }
}

/// How per-trial scenarios are generated.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScenarioMode {
    /// Explicit phase lists shared by every trial; gains redrawn per trial.
    Fixed {
        omega_r: Vec<f64>,
        omega_x: Vec<f64>,
        omega_y: Vec<f64>,
    },
    /// Phases divide fixed ranges evenly (shared by every trial); gains
    /// redrawn per trial.
    #[default]
    Grid,
    /// Phases redrawn uniformly each trial with a minimum wrapped
    /// separation per axis.
    Random { min_separation: f64 },
}

fn default_trials() -> usize {
    200
}

fn default_snr() -> f64 {
    10.0
}

fn default_rician() -> f64 {
    10.0
}

fn default_bits() -> usize {
    5
}

fn default_frame() -> usize {
    10_000
}

fn default_ber_trials() -> usize {
    50
}

/// One Monte-Carlo sweep: an axis, its values, and everything held fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    /// Windows per training half; each axis sends `2 * window` columns.
    pub window: usize,
    pub estimators: Vec<EstimatorKind>,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Operating point when the axis is not SNR.
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    pub paths: PathRule,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scenario: ScenarioMode,
    /// Rician K-factor of the per-trial gain draws, in dB.
    #[serde(default = "default_rician")]
    pub rician_db: f64,
    /// Grid resolution for the matched-pursuit baseline.
    #[serde(default = "default_bits")]
    pub omp_bits: usize,
    /// Disable noise entirely (exactness checks).
    #[serde(default)]
    pub noiseless: bool,
    /// Report cumulative per-estimator seconds; off by default so reruns are
    /// byte-identical.
    #[serde(default)]
    pub include_timing: bool,
}

/// A link-level bit error rate run over SNR points and path counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerConfig {
    pub geometry: GeometryConfig,
    pub window: usize,
    /// Channel estimators run besides the always-on genie and orthogonal
    /// least-squares references.
    pub estimators: Vec<EstimatorKind>,
    /// SNR points in dB.
    pub values: Vec<f64>,
    /// Path counts, one curve family each.
    pub path_counts: Vec<usize>,
    #[serde(default = "default_frame")]
    pub frame_len: usize,
    #[serde(default = "default_ber_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scenario: ScenarioMode,
    #[serde(default = "default_rician")]
    pub rician_db: f64,
    #[serde(default = "default_bits")]
    pub omp_bits: usize,
    #[serde(default)]
    pub include_timing: bool,
}

fn check_estimators(list: &[EstimatorKind]) -> Result<()> {
    for (i, a) in list.iter().enumerate() {
        if list[..i].contains(a) {
            return Err(Error::Config(format!("estimator {} listed twice", a.label())));
        }
    }
    Ok(())
}

fn check_window(geometry: &GeometryConfig, window: usize) -> Result<()> {
    if window < 2 {
        return Err(Error::Config("window must be at least 2".into()));
    }
    if geometry.m_x < window + 1 || geometry.m_y < window + 1 {
        return Err(Error::Config(format!(
            "window {} needs at least {} antennas per transmit axis",
            window,
            window + 1
        )));
    }
    Ok(())
}

fn check_scenario(mode: &ScenarioMode, path_counts: &[usize]) -> Result<()> {
    match mode {
        ScenarioMode::Fixed {
            omega_r,
            omega_x,
            omega_y,
        } => {
            // constructing the params validates lengths and distinctness
            let probe = MultipathParams::new(
                omega_r.clone(),
                omega_x.clone(),
                omega_y.clone(),
                vec![num_complex::Complex64::new(1.0, 0.0); omega_r.len()],
            )
            .map_err(|e| Error::Config(format!("fixed scenario invalid: {e}")))?;
            for &k in path_counts {
                if k != probe.k() {
                    return Err(Error::Config(format!(
                        "fixed scenario pins {} paths but a sweep point needs {k}",
                        probe.k()
                    )));
                }
            }
            Ok(())
        }
        ScenarioMode::Grid => Ok(()),
        ScenarioMode::Random { min_separation } => {
            if *min_separation <= 0.0 {
                return Err(Error::Config("minimum separation must be positive".into()));
            }
            Ok(())
        }
    }
}

impl ExperimentConfig {
    /// The `(m_r, k, snr_db)` operating point for one sweep value.
    pub fn resolve_point(&self, value: f64) -> Result<(usize, usize, f64)> {
        let integral = |what: &str| -> Result<usize> {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::Config(format!(
                    "{what} sweep values must be positive integers, got {value}"
                )));
            }
            Ok(value as usize)
        };
        Ok(match self.axis {
            SweepAxis::Snr => (self.geometry.m_r, self.paths.resolve(self.geometry.m_r), value),
            SweepAxis::PathCount => (self.geometry.m_r, integral("path count")?, self.snr_db),
            SweepAxis::ReceiveAntennas => {
                let m_r = integral("antenna count")?;
                (m_r, self.paths.resolve(m_r), self.snr_db)
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry
            .build(None)
            .map_err(|e| Error::Config(format!("geometry invalid: {e}")))?;
        check_window(&self.geometry, self.window)?;
        check_estimators(&self.estimators)?;
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if matches!(self.paths, PathRule::AntennasPlus { .. })
            && self.axis != SweepAxis::ReceiveAntennas
        {
            return Err(Error::Config(
                "antenna-tied path rule only makes sense on the antenna axis".into(),
            ));
        }
        if self.omp_bits == 0 && self.estimators.contains(&EstimatorKind::Omp) {
            return Err(Error::Config("grid bits must be positive".into()));
        }
        let mut counts = Vec::with_capacity(self.values.len());
        for &v in &self.values {
            let (m_r, k, _) = self.resolve_point(v)?;
            if m_r == 0 || k == 0 {
                return Err(Error::Config("antenna and path counts must be positive".into()));
            }
            counts.push(k);
        }
        check_scenario(&self.scenario, &counts)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse sweep config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl BerConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry
            .build(None)
            .map_err(|e| Error::Config(format!("geometry invalid: {e}")))?;
        check_window(&self.geometry, self.window)?;
        check_estimators(&self.estimators)?;
        if self.values.is_empty() || self.path_counts.is_empty() {
            return Err(Error::Config(
                "need at least one operating point and one path count".into(),
            ));
        }
        if self.trials == 0 || self.frame_len == 0 {
            return Err(Error::Config("trials and frame length must be positive".into()));
        }
        if self.path_counts.contains(&0) {
            return Err(Error::Config("path counts must be positive".into()));
        }
        if self.omp_bits == 0 && self.estimators.contains(&EstimatorKind::Omp) {
            return Err(Error::Config("grid bits must be positive".into()));
        }
        check_scenario(&self.scenario, &self.path_counts)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("cannot parse link config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

//! Link-level bit error rate runs over estimated channels.
//!
//! Each trial estimates the channel from a training snapshot, builds a
//! zero-forcing precoder from the estimate, and streams a frame of QPSK
//! symbols through the true channel. A genie (perfect channel knowledge)
//! and an orthogonal-training least-squares reference always run alongside
//! the configured estimators, sharing the same channel, symbols, and noise
//! draws so the curves differ only through the channel estimate.
//!
//! Full spatial multiplexing needs a full-rank channel, which requires at
//! least as many paths as receive antennas; trials below that rank are
//! counted as failures rather than silently dropping streams.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;
use std::time::Instant;

use crate::baselines::{ls_orthogonal_estimate, AngleGrid};
use crate::channel::{received, synth_channel};
use crate::error::{Error, Result};
use crate::harness::config::{BerConfig, EstimatorKind};
use crate::harness::sweep::{estimate, scenario_for_trial};
use crate::mdalg::{fro_norm_sq, pinv, truncated_svd, CMat};
use crate::training::{build_training, full_matrix};

/// Column layout of every bit error rate CSV.
pub const BER_CSV_HEADER: &str =
    "sweep_value,paths,estimator,ber,ber_median,bits,failures,trials,seconds";

/// Smallest acceptable condition ratio for the precoder and equalizer.
const RANK_GUARD: f64 = 1e-10;

/// Aggregated error rate for one estimator at one (SNR, path count) point.
#[derive(Debug, Clone)]
pub struct BerRow {
    pub sweep_value: f64,
    pub paths: usize,
    pub estimator: String,
    /// Pooled rate: total bit errors over total bits of successful trials.
    pub ber: f64,
    /// Median of per-trial rates.
    pub ber_median: f64,
    /// Total bits counted into `ber`.
    pub bits: u64,
    pub failures: usize,
    pub trials: usize,
    pub seconds: f64,
}

/// A finished error rate run.
#[derive(Debug, Clone)]
pub struct BerReport {
    pub rows: Vec<BerRow>,
    include_timing: bool,
}

fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

impl BerReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(BER_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let seconds = if self.include_timing {
                format!("{:.3}", r.seconds)
            } else {
                "0".into()
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                fmt_float(r.sweep_value),
                r.paths,
                r.estimator,
                fmt_float(r.ber),
                fmt_float(r.ber_median),
                r.bits,
                r.failures,
                r.trials,
                seconds,
            ));
        }
        out
    }

    /// Points at which an estimator failed on every trial.
    pub fn fully_failed_points(&self) -> Vec<(f64, usize, String)> {
        self.rows
            .iter()
            .filter(|r| r.failures == r.trials)
            .map(|r| (r.sweep_value, r.paths, r.estimator.clone()))
            .collect()
    }
}

/// One transmit chain per channel-knowledge source.
#[derive(Debug, Clone, Copy, PartialEq)]
enum BerEstimator {
    Configured(EstimatorKind),
    Genie,
    LsOrthogonal,
}

impl BerEstimator {
    fn label(self) -> &'static str {
        match self {
            BerEstimator::Configured(kind) => kind.label(),
            BerEstimator::Genie => "genie",
            BerEstimator::LsOrthogonal => "ls_orthogonal",
        }
    }
}

/// Zero-forcing precoder: right pseudo-inverse of the channel estimate with
/// every column rescaled to unit power.
fn zf_precoder(h_hat: &CMat) -> Result<CMat> {
    let m_r = h_hat.nrows();
    let svd = truncated_svd(h_hat, m_r)?;
    let smax = svd.s[0];
    if smax <= 0.0 || svd.s[m_r - 1] < RANK_GUARD * smax {
        return Err(Error::Numerical(
            "channel estimate too ill-conditioned to precode".into(),
        ));
    }
    let mut w = pinv(h_hat)?;
    for mut col in w.columns_mut() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 0.0 {
            return Err(Error::Numerical("precoder column vanished".into()));
        }
        col.mapv_inplace(|z| z / norm);
    }
    Ok(w)
}

/// Inverts the effective stream matrix, rejecting near-singular ones.
fn equalizer(g_hat: &CMat) -> Result<CMat> {
    let m_r = g_hat.nrows();
    let svd = truncated_svd(g_hat, m_r)?;
    let smax = svd.s[0];
    if smax <= 0.0 || svd.s[m_r - 1] < RANK_GUARD * smax {
        return Err(Error::Numerical(
            "effective stream matrix is singular".into(),
        ));
    }
    pinv(g_hat)
}

struct BerSample {
    errors: u64,
    bits: u64,
    seconds: f64,
}

fn median_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs the error rate experiment described by the config.
pub fn run_ber(cfg: &BerConfig) -> Result<BerReport> {
    cfg.validate()?;

    let geom = cfg.geometry.build(None)?;
    let ts = {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::MAX);
        build_training(&geom, cfg.window, &mut rng)?
    };
    let s_full = full_matrix(&ts);
    let s_orth = CMat::eye(geom.m_t());
    let grid = if cfg.estimators.contains(&EstimatorKind::Omp) {
        Some(AngleGrid::new(cfg.omp_bits)?)
    } else {
        None
    };

    let mut chains: Vec<BerEstimator> = cfg
        .estimators
        .iter()
        .map(|&k| BerEstimator::Configured(k))
        .collect();
    chains.push(BerEstimator::Genie);
    chains.push(BerEstimator::LsOrthogonal);

    let m_r = geom.m_r;
    let frame = cfg.frame_len;
    let half_std = Normal::new(0.0, FRAC_1_SQRT_2).expect("valid normal");

    let mut rows = Vec::new();
    for (ki, &k) in cfg.path_counts.iter().enumerate() {
        for (si, &snr_db) in cfg.values.iter().enumerate() {
            let pi = (ki * cfg.values.len() + si) as u64;
            let snr_lin = 10f64.powf(snr_db / 10.0);

            let outcomes: Vec<Vec<Option<BerSample>>> = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream((pi << 32) | trial as u64);
                    let prep = scenario_for_trial(&cfg.scenario, k, cfg.rician_db, &mut rng)
                        .and_then(|truth| {
                            let h = synth_channel(&truth, &geom);
                            let y_tr = received(&h, &s_full, snr_db, &mut rng)?;
                            let y_orth = received(&h, &s_orth, snr_db, &mut rng)?;
                            Ok((h, y_tr, y_orth))
                        });
                    let (h, y_tr, y_orth) = match prep {
                        Ok(t) => t,
                        Err(_) => return chains.iter().map(|_| None).collect(),
                    };
                    // symbols and data noise are drawn once so every chain
                    // sees the same frame
                    let symbols = Array2::from_shape_fn((m_r, frame), |_| {
                        let re = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        let im = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
                    });
                    let unit_noise = Array2::from_shape_fn((m_r, frame), |_| {
                        Complex64::new(rng.sample(half_std), rng.sample(half_std))
                    });

                    chains
                        .iter()
                        .map(|&chain| {
                            let started = cfg.include_timing.then(Instant::now);
                            let h_hat: Result<CMat> = match chain {
                                BerEstimator::Genie => Ok(h.clone()),
                                BerEstimator::LsOrthogonal => {
                                    ls_orthogonal_estimate(&y_orth, &s_orth)
                                }
                                BerEstimator::Configured(kind) => {
                                    estimate(kind, &y_tr, &s_full, &ts, &geom, k, grid.as_ref())
                                        .map(|p| synth_channel(&p, &geom))
                                }
                            };
                            let seconds = started.map_or(0.0, |t| t.elapsed().as_secs_f64());
                            h_hat
                                .and_then(|hh| {
                                    let w = zf_precoder(&hh)?;
                                    let g_inv = equalizer(&hh.dot(&w))?;
                                    let g_true = h.dot(&w);
                                    let sigma =
                                        (fro_norm_sq(&g_true) / (m_r as f64 * snr_lin)).sqrt();
                                    let mut y_d = g_true.dot(&symbols);
                                    y_d.zip_mut_with(&unit_noise, |y, n| *y += sigma * n);
                                    let d_hat = g_inv.dot(&y_d);
                                    let mut errors = 0u64;
                                    for (est, tx) in d_hat.iter().zip(symbols.iter()) {
                                        if (est.re > 0.0) != (tx.re > 0.0) {
                                            errors += 1;
                                        }
                                        if (est.im > 0.0) != (tx.im > 0.0) {
                                            errors += 1;
                                        }
                                    }
                                    Ok(BerSample {
                                        errors,
                                        bits: 2 * (m_r * frame) as u64,
                                        seconds,
                                    })
                                })
                                .ok()
                        })
                        .collect()
                })
                .collect();

            for (ci, &chain) in chains.iter().enumerate() {
                let samples: Vec<&BerSample> =
                    outcomes.iter().filter_map(|t| t[ci].as_ref()).collect();
                let bits: u64 = samples.iter().map(|s| s.bits).sum();
                let errors: u64 = samples.iter().map(|s| s.errors).sum();
                rows.push(BerRow {
                    sweep_value: snr_db,
                    paths: k,
                    estimator: chain.label().to_string(),
                    ber: if bits == 0 {
                        f64::NAN
                    } else {
                        errors as f64 / bits as f64
                    },
                    ber_median: median_of(
                        samples.iter().map(|s| s.errors as f64 / s.bits as f64),
                    ),
                    bits,
                    failures: cfg.trials - samples.len(),
                    trials: cfg.trials,
                    seconds: samples.iter().map(|s| s.seconds).sum(),
                });
            }
        }
    }
    Ok(BerReport {
        rows,
        include_timing: cfg.include_timing,
    })
}

//! Structured training construction.
//!
//! Each URA axis gets a short training matrix whose columns are windows of
//! one base symbol vector: column `l` keeps the first `m + 1 - l` symbols and
//! pads with zeros, and every such column is paired with its conjugated flip.
//! For a ULA steering vector `a` this pairing satisfies the identity
//!
//! ```text
//! flip_l^H a = conj(win_l^H a) * a_{m+1-l}
//! ```
//!
//! so element ratios of the received projections expose the steering entries
//! directly; see [`cri_check`]. The two axis matrices combine into the full
//! training via a Kronecker product, and the final symbol of the x base times
//! the final symbol of the y base is pinned to 1, which later cancels the
//! unknown scale in the path-loss recovery.
//!
//! Symbols are unit-modulus with uniformly random phases, drawn from a pool
//! shared by both axes (an independent-pool mode is available).

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{steering_ula, ArrayGeometry};
use crate::error::{Error, Result};
use crate::mdalg::{kron, CMat, CVec};

/// Which URA axis a per-axis quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Whether the two axes draw from one symbol pool or two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymbolSharing {
    /// One pool of `max(m_x, m_y)` symbols; the shorter axis reuses a
    /// shifted window of it.
    #[default]
    Shared,
    /// Fresh symbols per axis; the closing constraint still ties the two
    /// final entries together.
    Independent,
}

/// Per-axis training matrices for one downlink training block.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSequence {
    s_x: CMat,
    s_y: CMat,
    l: usize,
}

/// Smallest magnitude allowed for a projected training entry on the probe
/// grid; draws violating it are rejected (the entries are later divided by).
const PROJECTION_FLOOR: f64 = 1e-6;
const PROBE_POINTS: usize = 64;
const MAX_DRAWS: usize = 1_000;

impl TrainingSequence {
    /// x-axis training, `m_x x 2l`.
    pub fn s_x(&self) -> &CMat {
        &self.s_x
    }

    /// y-axis training, `m_y x 2l`.
    pub fn s_y(&self) -> &CMat {
        &self.s_y
    }

    pub fn axis_matrix(&self, axis: Axis) -> &CMat {
        match axis {
            Axis::X => &self.s_x,
            Axis::Y => &self.s_y,
        }
    }

    /// Window count per half; columns per axis is `2l`.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n_x(&self) -> usize {
        2 * self.l
    }

    pub fn n_y(&self) -> usize {
        2 * self.l
    }

    /// Training length of the combined block.
    pub fn n(&self) -> usize {
        self.n_x() * self.n_y()
    }

    pub fn m_x(&self) -> usize {
        self.s_x.nrows()
    }

    pub fn m_y(&self) -> usize {
        self.s_y.nrows()
    }

    /// Base symbol vector of an axis (the untruncated window column).
    pub fn base(&self, axis: Axis) -> CVec {
        self.axis_matrix(axis).column(self.l - 1).to_owned()
    }

    /// JSON export; complex entries are `[re, im]` pairs.
    pub fn to_json(&self) -> String {
        let dto = TrainingDto {
            l: self.l,
            s_x: mat_to_pairs(&self.s_x),
            s_y: mat_to_pairs(&self.s_y),
        };
        serde_json::to_string(&dto).expect("training serializes")
    }

    /// Parses [`TrainingSequence::to_json`] output and re-validates the
    /// structural invariants (shapes, zero pattern, pairing identity,
    /// closing constraint).
    pub fn from_json(text: &str) -> Result<Self> {
        let dto: TrainingDto = serde_json::from_str(text)?;
        let ts = TrainingSequence {
            s_x: pairs_to_mat(&dto.s_x)?,
            s_y: pairs_to_mat(&dto.s_y)?,
            l: dto.l,
        };
        ts.validate()?;
        Ok(ts)
    }

    fn validate(&self) -> Result<()> {
        if self.l < 2 {
            return Err(Error::Invalid("window count l must be at least 2".into()));
        }
        for (axis, s) in [(Axis::X, &self.s_x), (Axis::Y, &self.s_y)] {
            let m = s.nrows();
            if m < self.l + 1 {
                return Err(Error::Invalid(format!(
                    "axis with {m} elements cannot host {} windows",
                    self.l
                )));
            }
            if s.ncols() != 2 * self.l {
                return Err(Error::Dim(format!(
                    "axis matrix has {} columns, expected {}",
                    s.ncols(),
                    2 * self.l
                )));
            }
            // zero pattern: window column for shift l carries l-1 trailing zeros
            for (col, shift) in window_shifts(self.l) {
                for r in (m + 1 - shift)..m {
                    for half in [0, self.l] {
                        if s[[r, half + col]].norm() != 0.0 {
                            return Err(Error::Invalid("unexpected nonzero in zero pad".into()));
                        }
                    }
                }
            }
            for omega in [0.37, -1.91] {
                if cri_residual(s, self.l, omega) > 1e-9 {
                    return Err(Error::Invalid(format!(
                        "axis {axis:?} violates the conjugate-pairing identity"
                    )));
                }
            }
        }
        let close = self.s_x[[self.m_x() - 1, self.l - 1]] * self.s_y[[self.m_y() - 1, self.l - 1]];
        if (close - Complex64::ONE).norm() > 1e-9 {
            return Err(Error::Invalid("closing symbol constraint violated".into()));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TrainingDto {
    l: usize,
    s_x: Vec<Vec<[f64; 2]>>,
    s_y: Vec<Vec<[f64; 2]>>,
}

fn mat_to_pairs(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn pairs_to_mat(rows: &[Vec<[f64; 2]>]) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Invalid("ragged or empty matrix in JSON".into()));
    }
    Ok(CMat::from_shape_fn((nrows, ncols), |(r, c)| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

/// `(column, shift)` pairs: column 0 holds the largest shift `l`, the last
/// column shift 1 (the untruncated base).
fn window_shifts(l: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..l).map(move |col| (col, l - col))
}

/// Window column: first `m + 1 - shift` base symbols, then zeros.
fn window_column(base: &CVec, shift: usize) -> CVec {
    let m = base.len();
    let keep = m + 1 - shift;
    Array1::from_shape_fn(m, |i| if i < keep { base[i] } else { Complex64::ZERO })
}

/// Conjugated flip of the window: the kept symbols reversed and conjugated,
/// then zeros.
fn flipped_column(base: &CVec, shift: usize) -> CVec {
    let m = base.len();
    let keep = m + 1 - shift;
    Array1::from_shape_fn(m, |i| {
        if i < keep {
            base[keep - 1 - i].conj()
        } else {
            Complex64::ZERO
        }
    })
}

fn axis_matrix_from_base(base: &CVec, l: usize) -> CMat {
    let m = base.len();
    let mut s = CMat::zeros((m, 2 * l));
    for (col, shift) in window_shifts(l) {
        let w = window_column(base, shift);
        let f = flipped_column(base, shift);
        for r in 0..m {
            s[[r, col]] = w[r];
            s[[r, l + col]] = f[r];
        }
    }
    s
}

/// Residual of the conjugate-pairing identity for one axis matrix at `omega`.
fn cri_residual(s: &CMat, l: usize, omega: f64) -> f64 {
    let m = s.nrows();
    let a = steering_ula(omega, m);
    let mut worst = 0.0_f64;
    for (col, shift) in window_shifts(l) {
        let win: Complex64 = s.column(col).iter().zip(a.iter()).map(|(w, av)| w.conj() * av).sum();
        let flip: Complex64 = s
            .column(l + col)
            .iter()
            .zip(a.iter())
            .map(|(f, av)| f.conj() * av)
            .sum();
        let target = win.conj() * Complex64::cis((m - shift) as f64 * omega);
        worst = worst.max((flip - target).norm());
    }
    worst
}

/// Largest conjugate-pairing residual across all window columns of an axis,
/// evaluated at `omega`. Zero (to rounding) for any valid training.
pub fn cri_check(ts: &TrainingSequence, omega: f64, axis: Axis) -> f64 {
    cri_residual(ts.axis_matrix(axis), ts.l(), omega)
}

/// Full training block `S = S_y (x) S_x`, `m_t x n`.
pub fn full_matrix(ts: &TrainingSequence) -> CMat {
    kron(ts.s_y(), ts.s_x())
}

/// Builds the per-axis training from a shared symbol pool.
///
/// `l` is the window count per half-axis, so each axis sends `2l` columns
/// and the block length is `4 l^2`. Requires `l >= 2` and strictly more
/// antennas than windows on both axes.
pub fn build_training<R: Rng>(geom: &ArrayGeometry, l: usize, rng: &mut R) -> Result<TrainingSequence> {
    build_training_with(geom, l, SymbolSharing::Shared, rng)
}

/// [`build_training`] with an explicit symbol-sharing mode.
pub fn build_training_with<R: Rng>(
    geom: &ArrayGeometry,
    l: usize,
    sharing: SymbolSharing,
    rng: &mut R,
) -> Result<TrainingSequence> {
    if l < 2 {
        return Err(Error::Invalid(format!("window count {l} below minimum 2")));
    }
    if geom.m_x < l + 1 || geom.m_y < l + 1 {
        return Err(Error::Invalid(format!(
            "array {}x{} too small for {l} windows",
            geom.m_x, geom.m_y
        )));
    }
    for _ in 0..MAX_DRAWS {
        let (base_x, base_y) = draw_bases(geom, sharing, rng);
        let s_x = axis_matrix_from_base(&base_x, l);
        let s_y = axis_matrix_from_base(&base_y, l);
        let ts = TrainingSequence { s_x, s_y, l };
        if projections_bounded(&ts) {
            return Ok(ts);
        }
    }
    Err(Error::Numerical(format!(
        "no symbol draw kept projections above {PROJECTION_FLOOR} in {MAX_DRAWS} attempts"
    )))
}

fn unit_symbol<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::cis(rng.random_range(-PI..PI))
}

/// Base vectors for both axes. The longer axis keeps the raw pool; the other
/// axis reuses a shifted window of it and closes with the reciprocal of the
/// pool's final symbol so the two final entries multiply to 1.
fn draw_bases<R: Rng>(
    geom: &ArrayGeometry,
    sharing: SymbolSharing,
    rng: &mut R,
) -> (CVec, CVec) {
    let (m_x, m_y) = (geom.m_x, geom.m_y);
    match sharing {
        SymbolSharing::Shared => {
            let m_max = m_x.max(m_y);
            let pool: Vec<Complex64> = (0..m_max).map(|_| unit_symbol(rng)).collect();
            let closing = pool[m_max - 1].conj(); // reciprocal of a unit symbol
            let long = CVec::from_vec(pool.clone());
            let short_of = |m: usize| {
                let delta = m_max - m;
                Array1::from_shape_fn(m, |i| {
                    if i + 1 < m {
                        pool[i + delta]
                    } else {
                        closing
                    }
                })
            };
            if m_x >= m_y {
                (long, short_of(m_y))
            } else {
                (short_of(m_x), long)
            }
        }
        SymbolSharing::Independent => {
            let base_x = Array1::from_shape_fn(m_x, |_| unit_symbol(rng));
            let mut base_y = Array1::from_shape_fn(m_y, |_| unit_symbol(rng));
            base_y[m_y - 1] = base_x[m_x - 1].conj();
            (base_x, base_y)
        }
    }
}

/// Checks every projected window entry on a phase probe grid; the estimators
/// divide by these entries, so none may sit near zero.
fn projections_bounded(ts: &TrainingSequence) -> bool {
    for s in [ts.s_x(), ts.s_y()] {
        let m = s.nrows();
        for p in 0..PROBE_POINTS {
            let omega = -PI + 2.0 * PI * (p as f64 + 0.5) / PROBE_POINTS as f64;
            let a = steering_ula(omega, m);
            for col in 0..ts.l() {
                let win: Complex64 =
                    s.column(col).iter().zip(a.iter()).map(|(w, av)| w.conj() * av).sum();
                if win.norm() < PROJECTION_FLOOR {
                    return false;
                }
            }
        }
    }
    true
}

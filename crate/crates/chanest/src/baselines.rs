//! Reference estimators: grid-matched pursuit and least squares.
//!
//! [`omp_estimate`] runs orthogonal matching pursuit over a separable
//! dictionary of physical angles (arrival angle, departure azimuth,
//! departure elevation), greedily picking the atom best correlated with the
//! residual and refitting all gains jointly after each pick. The dictionary
//! is never materialized: correlations against every atom reduce to two
//! small matrix products per iteration.
//!
//! [`ls_orthogonal_estimate`] is the unstructured least-squares channel
//! estimate available when the training block is row-orthogonal, and
//! [`ls_benchmark_nmse`] is its closed-form expected error, used as the
//! reference curve in the experiment sweeps.

use num_complex::Complex64;

use crate::channel::{
    doa_to_phase, dod_to_phases, steering_ula, steering_ura, ArrayGeometry, MultipathParams,
};
use crate::error::{Error, Result};
use crate::mdalg::{adjoint, khatri_rao, pinv, vec_cm, CMat};

/// Largest grid resolution accepted; the transmit codebook alone holds
/// `4^bits` columns, so this caps memory at a sane level.
const MAX_BITS: usize = 8;

/// Cell-center grids over the physical angle ranges.
#[derive(Debug, Clone)]
pub struct AngleGrid {
    /// Arrival angles in `(-pi/2, pi/2)`.
    pub theta_r: Vec<f64>,
    /// Departure azimuths in `(-pi, pi)`.
    pub theta_t: Vec<f64>,
    /// Departure elevations in `(0, pi/2)`.
    pub phi_t: Vec<f64>,
}

fn cell_centers(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * step).collect()
}

impl AngleGrid {
    /// `2^bits` cell centers per angle axis.
    pub fn new(bits: usize) -> Result<Self> {
        if bits == 0 || bits > MAX_BITS {
            return Err(Error::Invalid(format!(
                "grid resolution must be between 1 and {MAX_BITS} bits"
            )));
        }
        let n = 1usize << bits;
        use std::f64::consts::{FRAC_PI_2, PI};
        Ok(Self {
            theta_r: cell_centers(-FRAC_PI_2, FRAC_PI_2, n),
            theta_t: cell_centers(-PI, PI, n),
            phi_t: cell_centers(0.0, FRAC_PI_2, n),
        })
    }

    /// Total number of dictionary atoms (never materialized).
    pub fn atom_count(&self) -> u64 {
        self.theta_r.len() as u64 * self.theta_t.len() as u64 * self.phi_t.len() as u64
    }
}

/// Greedy sparse estimate over the angle grid.
///
/// Each iteration scores every atom through `a_r^H (R S^H) a_t`, normalized
/// by the atom norm, picks the best unused one, and refits all selected
/// gains by least squares before recomputing the residual. Returns the
/// parameters of the `k` selected atoms with their final joint gains.
pub fn omp_estimate(
    y: &CMat,
    s_full: &CMat,
    geom: &ArrayGeometry,
    grid: &AngleGrid,
    k: usize,
) -> Result<MultipathParams> {
    if k == 0 {
        return Err(Error::Invalid("path count must be positive".into()));
    }
    let (m_r, n) = y.dim();
    if m_r != geom.m_r || s_full.dim() != (geom.m_t(), n) {
        return Err(Error::Dim(format!(
            "snapshot {:?} and training {:?} disagree with the geometry",
            y.dim(),
            s_full.dim()
        )));
    }

    // receive codebook, one column per arrival cell
    let g_r = grid.theta_r.len();
    let mut a_r_grid = CMat::zeros((m_r, g_r));
    for (j, &th) in grid.theta_r.iter().enumerate() {
        let col = steering_ula(doa_to_phase(th, geom.spacing_ratio), m_r);
        for i in 0..m_r {
            a_r_grid[[i, j]] = col[i];
        }
    }

    // transmit codebook, azimuth-major over (azimuth, elevation) cells
    let g_t = grid.theta_t.len() * grid.phi_t.len();
    let mut a_t_grid = CMat::zeros((geom.m_t(), g_t));
    let mut tx_phases = Vec::with_capacity(g_t);
    for (it, &th) in grid.theta_t.iter().enumerate() {
        for (ip, &ph) in grid.phi_t.iter().enumerate() {
            let (wx, wy) = dod_to_phases(th, ph, geom.spacing_ratio);
            let col = steering_ura(wx, wy, geom);
            let j = it * grid.phi_t.len() + ip;
            for i in 0..geom.m_t() {
                a_t_grid[[i, j]] = col[i];
            }
            tx_phases.push((wx, wy));
        }
    }

    // projected transmit codebook: column norms give the atom norms, and the
    // conjugate columns are exactly the Kronecker factors of the atoms
    let proj = adjoint(s_full).dot(&a_t_grid);
    let norms: Vec<f64> = proj
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * (m_r as f64).sqrt())
        .collect();

    let mut selected: Vec<(usize, usize)> = Vec::with_capacity(k);
    let mut residual = y.clone();
    let mut beta = Vec::new();
    for _ in 0..k {
        let w = residual.dot(&adjoint(s_full));
        let corr = adjoint(&a_r_grid).dot(&w).dot(&a_t_grid);
        let mut best: Option<(f64, usize, usize)> = None;
        for jr in 0..g_r {
            for jt in 0..g_t {
                if norms[jt] < 1e-12 || selected.contains(&(jr, jt)) {
                    continue;
                }
                let score = corr[[jr, jt]].norm() / norms[jt];
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, jr, jt));
                }
            }
        }
        let (_, jr, jt) = best.ok_or_else(|| {
            Error::Numerical("dictionary exhausted before reaching the path count".into())
        })?;
        selected.push((jr, jt));

        // joint least-squares refit of every selected gain
        let cols = selected.len();
        let mut proj_sel = CMat::zeros((n, cols));
        let mut ar_sel = CMat::zeros((m_r, cols));
        for (c, &(sr, st)) in selected.iter().enumerate() {
            for i in 0..n {
                proj_sel[[i, c]] = proj[[i, st]].conj();
            }
            for i in 0..m_r {
                ar_sel[[i, c]] = a_r_grid[[i, sr]];
            }
        }
        let dict = khatri_rao(&proj_sel, &ar_sel)?;
        let coef = pinv(&dict)?.dot(&vec_cm(y));
        beta = coef.to_vec();

        // residual = y minus the refit contribution of every selected atom
        residual = y.clone();
        for (c, &(sr, st)) in selected.iter().enumerate() {
            let a_r = a_r_grid.column(sr);
            let s_row = proj.column(st);
            for row in 0..m_r {
                for col in 0..n {
                    residual[[row, col]] -= beta[c] * a_r[row] * s_row[col].conj();
                }
            }
        }
    }

    let mut omega_r = Vec::with_capacity(k);
    let mut omega_x = Vec::with_capacity(k);
    let mut omega_y = Vec::with_capacity(k);
    for &(jr, jt) in &selected {
        omega_r.push(doa_to_phase(grid.theta_r[jr], geom.spacing_ratio));
        let (wx, wy) = tx_phases[jt];
        omega_x.push(wx);
        omega_y.push(wy);
    }
    Ok(MultipathParams {
        omega_r,
        omega_x,
        omega_y,
        beta,
    })
}

/// Expected relative error of the row-orthogonal least-squares estimate at
/// the given operating point.
pub fn ls_benchmark_nmse(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Unstructured least-squares channel estimate `Y S^H`, valid only when the
/// training rows are orthonormal (`S S^H = I`).
pub fn ls_orthogonal_estimate(y: &CMat, s: &CMat) -> Result<CMat> {
    if y.ncols() != s.ncols() {
        return Err(Error::Dim(format!(
            "snapshot has {} columns, training has {}",
            y.ncols(),
            s.ncols()
        )));
    }
    let gram = s.dot(&adjoint(s));
    let m_t = s.nrows();
    let dev = (0..m_t)
        .flat_map(|i| (0..m_t).map(move |j| (i, j)))
        .map(|(i, j)| {
            let target = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::ZERO
            };
            (gram[[i, j]] - target).norm()
        })
        .fold(0.0_f64, f64::max);
    if dev > 1e-10 {
        return Err(Error::Invalid(format!(
            "training rows are not orthonormal (deviation {dev:.3e})"
        )));
    }
    Ok(y.dot(&adjoint(s)))
}

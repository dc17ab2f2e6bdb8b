//! Algebraic channel estimation from one structured training block.
//!
//! The noiseless receive snapshot factors as `Y = B_r (C_y (.) C_x)^H` with
//! `B_r = A_r diag(beta)` Vandermonde and `C_x = S_x^H A_x`, `C_y = S_y^H A_y`
//! the projected transmit factors. The pipeline:
//!
//! 1. unfold `Y` along mode 3 and spatially smooth the receive aperture into
//!    overlapping windows ([`plan_smoothing`] picks the split);
//! 2. a rank-K SVD plus the shift invariance between window rows yields the
//!    three factors up to one joint column permutation and per-column scaling,
//!    and alternating least-squares sweeps against the raw snapshot polish
//!    them ([`factor_estimate`]);
//! 3. receive phases come from adjacent-row correlations of `B_r`
//!    ([`doa_phases`]), transmit phases from conjugate-pairing ratios of the
//!    projected factors ([`dod_phases_cri`]);
//! 4. path losses close in closed form by combining the receive scaling with
//!    forward/backward differences of the projected factors
//!    ([`pathloss_rice`]); the training's closing-symbol constraint cancels
//!    the leftover symbol product.
//!
//! [`rice_estimate`] runs the whole chain.

use ndarray::s;
use num_complex::Complex64;

use crate::channel::{steering_ula, ArrayGeometry, MultipathParams};
use crate::error::{Error, Result};
use crate::mdalg::{
    khatri_rao, mode1_unfold, mode2_unfold, mode3_unfold, pinv, right_eigenvectors,
    spatial_smooth, truncated_svd, CMat, CVec,
};
use crate::training::TrainingSequence;

/// How to split the receive aperture for spatial smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingPlan {
    /// Window length (rows kept per shift).
    pub p_r: usize,
    /// Number of shifts; `p_r + q_r = m_r + 1`.
    pub q_r: usize,
    /// Largest path count the smoothed snapshot can resolve.
    pub k_max: usize,
}

/// Picks the window split maximizing `min((p_r - 1) n_x, q_r n_y)`; ties go
/// to the smallest window. Needs at least two receive antennas.
pub fn plan_smoothing(m_r: usize, n_x: usize, n_y: usize) -> Result<SmoothingPlan> {
    if m_r < 2 {
        return Err(Error::Invalid(format!(
            "{m_r} receive antennas cannot form a shifted window pair"
        )));
    }
    if n_x == 0 || n_y == 0 {
        return Err(Error::Invalid("empty training axis".into()));
    }
    let mut best = SmoothingPlan {
        p_r: 2,
        q_r: m_r - 1,
        k_max: 0,
    };
    for p_r in 2..=m_r {
        let q_r = m_r + 1 - p_r;
        let k_max = ((p_r - 1) * n_x).min(q_r * n_y);
        if k_max > best.k_max {
            best = SmoothingPlan { p_r, q_r, k_max };
        }
    }
    Ok(best)
}

/// The three snapshot factors, one column per path, known up to a joint
/// column permutation and per-factor diagonal scaling.
#[derive(Debug, Clone)]
pub struct FactorEstimate {
    /// Scaled receive steering matrix, `m_r x k`.
    pub b_r: CMat,
    /// Projected x-axis factor `S_x^H A_x` (scaled), `n_x x k`.
    pub c_x: CMat,
    /// Projected y-axis factor `S_y^H A_y` (scaled), `n_y x k`.
    pub c_y: CMat,
}

/// Relative floor on the K-th singular value of the smoothed snapshot.
const RANK_FLOOR: f64 = 1e-12;

/// Least-squares read of a repeated factor from a windowed Khatri-Rao
/// product: block `p` of column `j` repeats the factor scaled by
/// `lambda_j^p`, so the weighted block average recovers it while using every
/// row of the product.
fn collapse_blocks(g: &CMat, lambda: &CVec, rows: usize, blocks: usize) -> CMat {
    let k = g.ncols();
    let mut out = CMat::zeros((rows, k));
    for j in 0..k {
        let mut w = Complex64::new(1.0, 0.0);
        let mut den = 0.0;
        for p in 0..blocks {
            for r in 0..rows {
                out[[r, j]] += w.conj() * g[[p * rows + r, j]];
            }
            den += w.norm_sqr();
            w *= lambda[j];
        }
        for r in 0..rows {
            out[[r, j]] /= den;
        }
    }
    out
}

/// Recovers the snapshot factors for `k` paths.
///
/// In the noiseless case the outputs match the ground-truth factors up to
/// one joint column permutation and per-factor scalings whose product is
/// consistent with the snapshot (so reconstruction is exact).
pub fn factor_estimate(
    y: &CMat,
    k: usize,
    plan: &SmoothingPlan,
    n_x: usize,
    n_y: usize,
) -> Result<FactorEstimate> {
    if k == 0 {
        return Err(Error::Invalid("path count must be positive".into()));
    }
    if k > plan.k_max {
        return Err(Error::Identifiability(format!(
            "{k} paths exceed the smoothing bound {}",
            plan.k_max
        )));
    }
    let m_r = y.nrows();
    let y3 = mode3_unfold(y, n_x, n_y)?;
    let z = spatial_smooth(&y3, plan.p_r, plan.q_r, n_x, m_r)?;

    // regroup rows from (x column major, window minor) to (window major):
    // both shifted halves then become contiguous row blocks
    let p_r = plan.p_r;
    let mut zt = CMat::zeros(z.dim());
    for ix in 0..n_x {
        for p in 0..p_r {
            for col in 0..z.ncols() {
                zt[[p * n_x + ix, col]] = z[[ix * p_r + p, col]];
            }
        }
    }

    let svd = truncated_svd(&zt, k)?;
    if svd.s[k - 1] < RANK_FLOOR * svd.s[0] {
        return Err(Error::Numerical(format!(
            "smoothed snapshot is rank deficient for {k} paths (s_k/s_1 = {:.3e})",
            svd.s[k - 1] / svd.s[0]
        )));
    }

    // shift invariance between the window rows: dropping the last window row
    // block versus the first differs by the receive phase rotation
    let rows = (p_r - 1) * n_x;
    let u1 = svd.u.slice(s![..rows, ..]).to_owned();
    let u2 = svd.u.slice(s![n_x..n_x + rows, ..]).to_owned();
    let m = pinv(&u1)?.dot(&u2);
    let (t, lam) = right_eigenvectors(&m)?;

    // rotating the subspace by the eigenvector basis separates the paths
    let gamma1 = svd.u.dot(&t);
    let sigma_vh = {
        let mut sv = svd.vh.clone();
        for (i, mut row) in sv.rows_mut().into_iter().enumerate() {
            let scale = Complex64::new(svd.s[i], 0.0);
            row.mapv_inplace(|z| z * scale);
        }
        sv
    };
    let gamma2 = pinv(&t)?.dot(&sigma_vh).t().to_owned();

    let c_x = collapse_blocks(&gamma1, &lam, n_x, p_r).mapv(|z| z.conj());
    let c_y = collapse_blocks(&gamma2, &lam, n_y, plan.q_r).mapv(|z| z.conj());

    // receive factor by least squares against the mode-1 unfolding
    let y1 = mode1_unfold(y, n_x, n_y)?;
    let kr = khatri_rao(&c_y.mapv(|z| z.conj()), &c_x.mapv(|z| z.conj()))?;
    let b_r = pinv(&kr)?.dot(&y1).t().to_owned();

    let mut f = FactorEstimate { b_r, c_x, c_y };
    polish_factors(y, &mut f, n_x, n_y)?;
    Ok(f)
}

/// Number of alternating polish sweeps after the algebraic factorization.
const POLISH_SWEEPS: usize = 2;

/// Cycles the receive-factor least-squares read over the transmit factors
/// too: each factor in turn is refit against its unfolding with the other
/// two held fixed, so the transmit factors graduate from the subspace-only
/// estimate to a fit that averages every snapshot sample. Exact factors are
/// a fixed point, so noiseless recovery is untouched.
fn polish_factors(y: &CMat, f: &mut FactorEstimate, n_x: usize, n_y: usize) -> Result<()> {
    let y1 = mode1_unfold(y, n_x, n_y)?;
    let y2 = mode2_unfold(y, n_x, n_y)?;
    let y3 = mode3_unfold(y, n_x, n_y)?;
    for _ in 0..POLISH_SWEEPS {
        let g = khatri_rao(&f.c_y.mapv(|z| z.conj()), &f.b_r)?;
        f.c_x = pinv(&g)?.dot(&y2).t().mapv(|z| z.conj());
        let g = khatri_rao(&f.c_x.mapv(|z| z.conj()), &f.b_r)?;
        f.c_y = pinv(&g)?.dot(&y3).t().mapv(|z| z.conj());
        let g = khatri_rao(&f.c_y.mapv(|z| z.conj()), &f.c_x.mapv(|z| z.conj()))?;
        f.b_r = pinv(&g)?.dot(&y1).t().to_owned();
    }
    Ok(())
}

/// Receive phase per path from adjacent-element correlations of the scaled
/// steering columns. Scale invariant.
pub fn doa_phases(b_r: &CMat) -> Result<Vec<f64>> {
    let m_r = b_r.nrows();
    if m_r < 2 {
        return Err(Error::Invalid("need two receive antennas for a phase".into()));
    }
    let mut out = Vec::with_capacity(b_r.ncols());
    for col in b_r.columns() {
        let corr: Complex64 = (0..m_r - 1).map(|i| col[i].conj() * col[i + 1]).sum();
        if corr.norm() == 0.0 {
            return Err(Error::Numerical("degenerate receive column".into()));
        }
        out.push(corr.arg());
    }
    Ok(out)
}

/// Transmit phases recovered from a projected factor via the conjugate
/// pairing of the training halves.
#[derive(Debug, Clone)]
pub struct CriPhases {
    pub omega: Vec<f64>,
    /// Columns whose window projections came dangerously close to zero; the
    /// phase is still produced but should be treated as unreliable.
    pub flagged: Vec<bool>,
}

/// Relative floor below which a window projection is flagged.
const CRI_FLOOR: f64 = 1e-9;

/// Per-column transmit phase from a projected factor (`2l x k`).
///
/// Rows `0..l` hold the window projections, rows `l..2l` the flipped ones;
/// their elementwise ratio reproduces the tail of the steering vector, whose
/// adjacent-element correlation gives the phase.
pub fn dod_phases_cri(c_hat: &CMat, l: usize) -> Result<CriPhases> {
    if l < 2 {
        return Err(Error::Invalid("need at least two windows per half".into()));
    }
    if c_hat.nrows() != 2 * l {
        return Err(Error::Dim(format!(
            "projected factor has {} rows, expected {}",
            c_hat.nrows(),
            2 * l
        )));
    }
    let mut omega = Vec::with_capacity(c_hat.ncols());
    let mut flagged = Vec::with_capacity(c_hat.ncols());
    for col in c_hat.columns() {
        let scale = col.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        if scale == 0.0 {
            return Err(Error::Numerical("zero projected column".into()));
        }
        let mut flag = false;
        let mut v = vec![Complex64::ZERO; l];
        for i in 0..l {
            let win = col[i];
            if win.norm() == 0.0 {
                return Err(Error::Numerical("zero window projection".into()));
            }
            if win.norm() < CRI_FLOOR * scale {
                flag = true;
            }
            v[i] = col[l + i] / win.conj();
        }
        let corr: Complex64 = (0..l - 1).map(|i| v[i].conj() * v[i + 1]).sum();
        if corr.norm() == 0.0 {
            return Err(Error::Numerical("degenerate pairing ratios".into()));
        }
        omega.push(corr.arg());
        flagged.push(flag);
    }
    Ok(CriPhases { omega, flagged })
}

/// Closed-form path losses from the estimated factors and phases.
///
/// Combines the receive scaling `a_r^+ b_r` with the average of two
/// independent reads of the transmit scalings: the forward read differences
/// the two longest window projections, the backward read the two flipped
/// ones. The training's closing constraint makes the leftover symbol product
/// equal one in both reads.
pub fn pathloss_rice(
    factors: &FactorEstimate,
    omega_r: &[f64],
    omega_x: &[f64],
    omega_y: &[f64],
    ts: &TrainingSequence,
) -> Result<Vec<Complex64>> {
    let k = factors.b_r.ncols();
    if omega_r.len() != k || omega_x.len() != k || omega_y.len() != k {
        return Err(Error::Dim("phase lists must cover every path".into()));
    }
    Ok(pathloss_reads(factors, omega_r, omega_x, omega_y, ts)
        .into_iter()
        .map(|r| r.combined())
        .collect())
}

struct PathlossRead {
    xi_r: Complex64,
    forward: Complex64,
    backward: Complex64,
}

impl PathlossRead {
    fn combined(&self) -> Complex64 {
        self.xi_r * 0.5 * (self.forward + self.backward)
    }
}

fn pathloss_reads(
    factors: &FactorEstimate,
    omega_r: &[f64],
    omega_x: &[f64],
    omega_y: &[f64],
    ts: &TrainingSequence,
) -> Vec<PathlossRead> {
    let m_r = factors.b_r.nrows();
    let l = ts.l();
    let (m_x, m_y) = (ts.m_x(), ts.m_y());
    (0..factors.b_r.ncols())
        .map(|k| {
            let a_r = steering_ula(omega_r[k], m_r);
            let xi_r = factors
                .b_r
                .column(k)
                .iter()
                .zip(a_r.iter())
                .map(|(b, a)| a.conj() * b)
                .sum::<Complex64>()
                / m_r as f64;

            // window rows: l-1 is the untruncated projection, l-2 one shorter
            let axis = |c: &CMat, m: usize, omega: f64| {
                let win_full = c[[l - 1, k]];
                let win_short = c[[l - 2, k]];
                let flip_full = c[[2 * l - 1, k]];
                let flip_short = c[[2 * l - 2, k]];
                let fwd = (win_full - win_short) * Complex64::cis(-((m - 1) as f64) * omega);
                let bwd = flip_full - flip_short * Complex64::cis(omega);
                (fwd, bwd)
            };
            let (fwd_x, bwd_x) = axis(&factors.c_x, m_x, omega_x[k]);
            let (fwd_y, bwd_y) = axis(&factors.c_y, m_y, omega_y[k]);

            PathlossRead {
                xi_r,
                forward: (fwd_y * fwd_x).conj(),
                backward: (bwd_y * bwd_x).conj(),
            }
        })
        .collect()
}

/// Full algebraic estimate: factors, phases, then path losses.
///
/// `y` is the `m_r x n` receive snapshot under the full training block.
/// Paths come back in estimator order; use
/// [`MultipathParams::sorted_by_omega_r`] for a canonical ordering.
pub fn rice_estimate(
    y: &CMat,
    k: usize,
    ts: &TrainingSequence,
    geom: &ArrayGeometry,
) -> Result<MultipathParams> {
    let (n_x, n_y) = (ts.n_x(), ts.n_y());
    if y.dim() != (geom.m_r, n_x * n_y) {
        return Err(Error::Dim(format!(
            "snapshot is {:?}, expected ({}, {})",
            y.dim(),
            geom.m_r,
            n_x * n_y
        )));
    }
    if ts.m_x() != geom.m_x || ts.m_y() != geom.m_y {
        return Err(Error::Dim("training and geometry disagree on the array".into()));
    }
    let plan = plan_smoothing(geom.m_r, n_x, n_y)?;
    let factors = factor_estimate(y, k, &plan, n_x, n_y)?;
    let omega_r = doa_phases(&factors.b_r)?;
    let cri_x = dod_phases_cri(&factors.c_x, ts.l())?;
    let cri_y = dod_phases_cri(&factors.c_y, ts.l())?;
    let beta = pathloss_rice(&factors, &omega_r, &cri_x.omega, &cri_y.omega, ts)?;
    Ok(MultipathParams {
        omega_r,
        omega_x: cri_x.omega,
        omega_y: cri_y.omega,
        beta,
    })
}

/// Channel matrix implied by a parameter estimate.
pub fn reconstruct_channel(params: &MultipathParams, geom: &ArrayGeometry) -> CMat {
    crate::channel::synth_channel(params, geom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{random_scenario, received, synth_channel, wrap_dist};
    use crate::mdalg::{adjoint, fro_norm_sq};
    use crate::training::{build_training, full_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn geom(m_r: usize, m_x: usize, m_y: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(m_r, m_x, m_y).unwrap()
    }

    /// Ground-truth projected factors for a scenario.
    fn true_factors(
        p: &MultipathParams,
        g: &ArrayGeometry,
        ts: &TrainingSequence,
    ) -> (CMat, CMat, CMat) {
        let k = p.k();
        let mut b_r = CMat::zeros((g.m_r, k));
        let mut a_x = CMat::zeros((g.m_x, k));
        let mut a_y = CMat::zeros((g.m_y, k));
        for j in 0..k {
            let ar = steering_ula(p.omega_r[j], g.m_r);
            let ax = steering_ula(p.omega_x[j], g.m_x);
            let ay = steering_ula(p.omega_y[j], g.m_y);
            for m in 0..g.m_r {
                b_r[[m, j]] = p.beta[j] * ar[m];
            }
            for m in 0..g.m_x {
                a_x[[m, j]] = ax[m];
            }
            for m in 0..g.m_y {
                a_y[[m, j]] = ay[m];
            }
        }
        let c_x = adjoint(ts.s_x()).dot(&a_x);
        let c_y = adjoint(ts.s_y()).dot(&a_y);
        (b_r, c_x, c_y)
    }

    fn rel_fro(a: &CMat, b: &CMat) -> f64 {
        (fro_norm_sq(&(a - b)) / fro_norm_sq(b)).sqrt()
    }

    /// |<a, b>| / (|a||b|) for matching columns up to scale.
    fn collinearity(a: ndarray::ArrayView1<Complex64>, b: ndarray::ArrayView1<Complex64>) -> f64 {
        let ip: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
        let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        ip.norm() / (na * nb)
    }

    #[test]
    fn snapshot_model_matches_physical_product() {
        // B_r (C_y (.) C_x)^H must equal H S entrywise
        let g = geom(3, 5, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let p = random_scenario(3, &g, 0.2, &mut rng).unwrap();
        let y_phys = synth_channel(&p, &g).dot(&full_matrix(&ts));
        let (b_r, c_x, c_y) = true_factors(&p, &g, &ts);
        let y_fact = b_r.dot(&adjoint(&khatri_rao(&c_y, &c_x).unwrap()));
        assert!(rel_fro(&y_fact, &y_phys) < 1e-12);
    }

    #[test]
    fn smoothing_plans_match_hand_tables() {
        let p = plan_smoothing(3, 4, 4).unwrap();
        assert_eq!((p.p_r, p.q_r, p.k_max), (2, 2, 4));
        let p = plan_smoothing(4, 4, 4).unwrap();
        assert_eq!((p.p_r, p.q_r, p.k_max), (3, 2, 8));
        let p = plan_smoothing(3, 6, 6).unwrap();
        assert_eq!((p.p_r, p.q_r, p.k_max), (2, 2, 6));
        let p = plan_smoothing(2, 6, 6).unwrap();
        assert_eq!((p.p_r, p.q_r, p.k_max), (2, 1, 6));
    }

    #[test]
    fn smoothing_bound_monotone_in_antennas() {
        for (n_x, n_y) in [(4, 4), (6, 6), (4, 8), (10, 2)] {
            let mut prev = 0;
            for m_r in 2..9 {
                let k = plan_smoothing(m_r, n_x, n_y).unwrap().k_max;
                assert!(k >= prev, "k_max dropped at m_r={m_r}");
                prev = k;
            }
        }
        assert!(plan_smoothing(1, 4, 4).is_err());
    }

    #[test]
    fn single_path_factors_are_collinear_with_truth() {
        let g = geom(3, 5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let p = MultipathParams::new(vec![0.9], vec![-1.3], vec![0.4], vec![c(0.7, -0.2)]).unwrap();
        let y = synth_channel(&p, &g).dot(&full_matrix(&ts));
        let plan = plan_smoothing(g.m_r, ts.n_x(), ts.n_y()).unwrap();
        let f = factor_estimate(&y, 1, &plan, ts.n_x(), ts.n_y()).unwrap();
        let (b_r, c_x, c_y) = true_factors(&p, &g, &ts);
        assert!(collinearity(f.b_r.column(0), b_r.column(0)) > 1.0 - 1e-10);
        assert!(collinearity(f.c_x.column(0), c_x.column(0)) > 1.0 - 1e-10);
        assert!(collinearity(f.c_y.column(0), c_y.column(0)) > 1.0 - 1e-10);
    }

    #[test]
    fn multi_path_factors_reconstruct_snapshot() {
        let g = geom(3, 6, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let p = random_scenario(3, &g, 0.3, &mut rng).unwrap();
        let y = synth_channel(&p, &g).dot(&full_matrix(&ts));
        let plan = plan_smoothing(g.m_r, ts.n_x(), ts.n_y()).unwrap();
        let f = factor_estimate(&y, 3, &plan, ts.n_x(), ts.n_y()).unwrap();
        let y_hat = f.b_r.dot(&adjoint(&khatri_rao(&f.c_y, &f.c_x).unwrap()));
        assert!(rel_fro(&y_hat, &y) < 1e-8);
        // each estimated column matches some true column up to scale
        let (b_r, c_x, c_y) = true_factors(&p, &g, &ts);
        for j in 0..3 {
            let best_b = (0..3)
                .map(|t| collinearity(f.b_r.column(j), b_r.column(t)))
                .fold(0.0, f64::max);
            let best_x = (0..3)
                .map(|t| collinearity(f.c_x.column(j), c_x.column(t)))
                .fold(0.0, f64::max);
            let best_y = (0..3)
                .map(|t| collinearity(f.c_y.column(j), c_y.column(t)))
                .fold(0.0, f64::max);
            assert!(best_b > 1.0 - 1e-8 && best_x > 1.0 - 1e-8 && best_y > 1.0 - 1e-8);
        }
    }

    #[test]
    fn eight_paths_on_four_antennas_factor_exactly() {
        // k equals the smoothing bound: (m_r, n_x, n_y) = (4, 4, 4) -> 8
        let g = geom(4, 10, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let omega_r: Vec<f64> = [0.8, 0.4, 0.3, 0.1, 0.5, 0.2, 0.7, 0.6]
            .iter()
            .map(|v| v * PI)
            .collect();
        let omega_x: Vec<f64> = [0.34, 0.49, 0.41, 0.27, 0.56, 0.7, 0.2, 0.63]
            .iter()
            .map(|v| v * PI)
            .collect();
        let omega_y: Vec<f64> = [0.2, 0.3, 0.5, 0.8, 0.1, 0.6, 0.7, 0.4]
            .iter()
            .map(|v| v * PI)
            .collect();
        let beta = crate::channel::rician_gains(8, 10.0, &mut rng);
        let p = MultipathParams::new(omega_r, omega_x, omega_y, beta).unwrap();
        let y = synth_channel(&p, &g).dot(&full_matrix(&ts));
        let plan = plan_smoothing(g.m_r, ts.n_x(), ts.n_y()).unwrap();
        assert_eq!(plan.k_max, 8);
        let f = factor_estimate(&y, 8, &plan, ts.n_x(), ts.n_y()).unwrap();
        let y_hat = f.b_r.dot(&adjoint(&khatri_rao(&f.c_y, &f.c_x).unwrap()));
        assert!(rel_fro(&y_hat, &y) < 1e-8, "rel err {}", rel_fro(&y_hat, &y));
    }

    #[test]
    fn factorization_rejects_overloaded_and_degenerate_inputs() {
        let g = geom(3, 5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let p = MultipathParams::new(vec![0.9], vec![-1.3], vec![0.4], vec![c(1.0, 0.0)]).unwrap();
        let y = synth_channel(&p, &g).dot(&full_matrix(&ts));
        let plan = plan_smoothing(g.m_r, ts.n_x(), ts.n_y()).unwrap();
        // beyond the bound
        assert!(matches!(
            factor_estimate(&y, 5, &plan, 4, 4),
            Err(Error::Identifiability(_))
        ));
        // more paths requested than the snapshot carries
        assert!(matches!(
            factor_estimate(&y, 2, &plan, 4, 4),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn receive_phase_from_scaled_column() {
        let b = CMat::from_shape_fn((3, 1), |(m, _)| {
            c(0.0, -2.5) * Complex64::cis(m as f64 * 0.8 * PI)
        });
        let got = doa_phases(&b).unwrap();
        assert!((got[0] - 0.8 * PI).abs() < 1e-12);
        // wrapped case: increments beyond pi come back wrapped
        let b2 = CMat::from_shape_fn((4, 1), |(m, _)| Complex64::cis(m as f64 * 1.7 * PI));
        let got2 = doa_phases(&b2).unwrap();
        assert!(wrap_dist(got2[0], 1.7 * PI) < 1e-12);
        let zero = CMat::zeros((3, 1));
        assert!(doa_phases(&zero).is_err());
    }

    #[test]
    fn transmit_phase_from_projected_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (m, omega) in [(10, 0.36 * PI), (10, 0.9 * PI), (6, -2.8)] {
            let g = geom(3, m, m);
            let ts = build_training(&g, 2, &mut rng).unwrap();
            let a = steering_ula(omega, m);
            let scale = c(-0.3, 1.9);
            let col = adjoint(ts.s_x()).dot(&a.insert_axis(ndarray::Axis(1))) * scale;
            let got = dod_phases_cri(&col, ts.l()).unwrap();
            assert!(wrap_dist(got.omega[0], omega) < 1e-10);
            assert!(!got.flagged[0]);
        }
    }

    #[test]
    fn transmit_phase_flags_vanishing_window() {
        let mut col = CMat::from_elem((4, 1), c(1.0, 0.0));
        col[[0, 0]] = c(1e-12, 0.0);
        let got = dod_phases_cri(&col, 2).unwrap();
        assert!(got.flagged[0]);
        col[[0, 0]] = Complex64::ZERO;
        assert!(dod_phases_cri(&col, 2).is_err());
    }

    #[test]
    fn pathloss_exact_from_exact_factors() {
        let g = geom(3, 10, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let omega_r: Vec<f64> = [0.8, 0.57, 0.1, 0.33].iter().map(|v| v * PI).collect();
        let omega_x: Vec<f64> = [0.36, 0.7, 0.53, 0.2].iter().map(|v| v * PI).collect();
        let omega_y: Vec<f64> = [0.8, 0.33, 0.57, 0.1].iter().map(|v| v * PI).collect();
        let beta = crate::channel::rician_gains(4, 10.0, &mut rng);
        let p = MultipathParams::new(omega_r.clone(), omega_x.clone(), omega_y.clone(), beta).unwrap();
        let (b_r, c_x, c_y) = true_factors(&p, &g, &ts);
        let f = FactorEstimate { b_r, c_x, c_y };

        // forward and backward reads agree on exact factors
        let reads = pathloss_reads(&f, &omega_r, &omega_x, &omega_y, &ts);
        for r in &reads {
            assert!((r.forward - r.backward).norm() < 1e-8);
        }
        let beta_hat = pathloss_rice(&f, &omega_r, &omega_x, &omega_y, &ts).unwrap();
        for k in 0..4 {
            assert!((beta_hat[k] - p.beta[k]).norm() < 1e-8);
        }
    }

    #[test]
    fn end_to_end_noiseless_recovery() {
        let g = geom(3, 10, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let omega_r: Vec<f64> = [0.8, 0.57, 0.1, 0.33].iter().map(|v| v * PI).collect();
        let omega_x: Vec<f64> = [0.36, 0.7, 0.53, 0.2].iter().map(|v| v * PI).collect();
        let omega_y: Vec<f64> = [0.8, 0.33, 0.57, 0.1].iter().map(|v| v * PI).collect();
        let beta = crate::channel::rician_gains(4, 10.0, &mut rng);
        let p = MultipathParams::new(omega_r, omega_x, omega_y, beta).unwrap();
        let y = synth_channel(&p, &g).dot(&full_matrix(&ts));
        let est = rice_estimate(&y, 4, &ts, &g).unwrap();

        let t = p.sorted_by_omega_r();
        let e = est.sorted_by_omega_r();
        for k in 0..4 {
            assert!(wrap_dist(e.omega_r[k], t.omega_r[k]) < 1e-9);
            assert!(wrap_dist(e.omega_x[k], t.omega_x[k]) < 1e-9);
            assert!(wrap_dist(e.omega_y[k], t.omega_y[k]) < 1e-9);
            assert!((e.beta[k] - t.beta[k]).norm() < 1e-8);
        }
        // reconstruction is exact too
        let h_hat = reconstruct_channel(&est, &g);
        let h = synth_channel(&p, &g);
        assert!(rel_fro(&h_hat, &h) < 1e-8);
    }

    #[test]
    fn estimate_rejects_too_many_paths() {
        let g = geom(3, 5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let y = CMat::zeros((3, 16));
        assert!(matches!(
            rice_estimate(&y, 5, &ts, &g),
            Err(Error::Identifiability(_))
        ));
    }

    #[test]
    fn reconstruction_error_shrinks_with_snr() {
        let g = geom(3, 8, 8);
        let mut med = Vec::new();
        for snr in [5.0, 20.0, 35.0] {
            let mut errs = Vec::new();
            for seed in 0..20u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let ts = build_training(&g, 2, &mut rng).unwrap();
                let p = random_scenario(2, &g, 0.4, &mut rng).unwrap();
                let h = synth_channel(&p, &g);
                let y = received(&h, &full_matrix(&ts), snr, &mut rng).unwrap();
                if let Ok(est) = rice_estimate(&y, 2, &ts, &g) {
                    errs.push(rel_fro(&reconstruct_channel(&est, &g), &h));
                }
            }
            errs.sort_by(f64::total_cmp);
            med.push(errs[errs.len() / 2]);
        }
        assert!(med[0] > med[1] && med[1] > med[2], "medians {med:?}");
    }
}

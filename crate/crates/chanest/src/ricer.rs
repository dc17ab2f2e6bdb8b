//! Root-finding refinement of the algebraic estimates.
//!
//! Each projected factor column pins down its transmit phase as the
//! minimizer of a quadratic form `a(omega)^H P a(omega)` whose matrix
//! [`projector`] deflates the estimated column out of the training range.
//! On the unit circle that form is a conjugate-symmetric polynomial
//! ([`poly_coeffs`]), so the minimizers are roots: they come in
//! conjugate-reciprocal pairs that pinch the circle exactly where a path
//! sits. [`roots_inside`] splits the root set, [`select_root`] picks the
//! candidate nearest the algebraic seed, and a joint least-squares pass
//! ([`pathloss_ls`]) refits the gains against the refined steering vectors.
//!
//! [`ricer_estimate`] wraps the whole refinement; [`single_antenna_estimate`]
//! reuses the same rooting machinery when only one receive antenna exists and
//! the subspace must come from the snapshot itself.

use ndarray::ArrayView1;
use num_complex::Complex64;

use crate::channel::{steering_ula, wrap_dist, ArrayGeometry, MultipathParams};
use crate::error::{Error, Result};
use crate::mdalg::{
    adjoint, khatri_rao, pinv, right_eigenvectors, truncated_svd, vec_cm, CMat, CVec,
};
use crate::rice::{doa_phases, dod_phases_cri, factor_estimate, plan_smoothing};
use crate::training::{full_matrix, TrainingSequence};

/// Deflation matrix `S (I - c c^H / |c|^2) S^H` for one projected column.
///
/// `s` is an axis training matrix (`m x n`), `c` a length-`n` column. The
/// quadratic form `a^H P a` vanishes exactly when `S^H a` is collinear with
/// `c`, so its unit-circle minimizers locate the phase behind `c`. Scaling
/// `c` changes nothing.
pub fn projector(c: ArrayView1<'_, Complex64>, s: &CMat) -> Result<CMat> {
    if s.ncols() != c.len() {
        return Err(Error::Dim(format!(
            "column has {} entries, training matrix has {} columns",
            c.len(),
            s.ncols()
        )));
    }
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Invalid("cannot deflate a zero column".into()));
    }
    let unit: CVec = c.mapv(|z| z / norm);
    let u = unit.view().insert_axis(ndarray::Axis(1)).to_owned();
    let gram = s.dot(&adjoint(s));
    let sw = s.dot(&u);
    Ok(gram - sw.dot(&adjoint(&sw)))
}

/// Deflation matrix `S (I - U U^H) S^H` for an orthonormal basis `U` of the
/// signal subspace (columns length `s.ncols()`).
pub fn subspace_projector(u: &CMat, s: &CMat) -> Result<CMat> {
    if s.ncols() != u.nrows() {
        return Err(Error::Dim(format!(
            "basis has {} rows, training matrix has {} columns",
            u.nrows(),
            s.ncols()
        )));
    }
    let gram = s.dot(&adjoint(s));
    let sw = s.dot(u);
    Ok(gram - sw.dot(&adjoint(&sw)))
}

/// Coefficients of `z^(m-1) a(1/z*)^H P a(z)` as a plain degree `2m-2`
/// polynomial, lowest order first.
///
/// On the unit circle `z = e^(j omega)` the quadratic form equals
/// `e^(-j (m-1) omega)` times this polynomial, so circle roots of the
/// polynomial are exactly the zeros of the form. Hermitian `P` makes the
/// coefficient list conjugate-symmetric about its middle.
pub fn poly_coeffs(p: &CMat) -> Result<Vec<Complex64>> {
    let m = p.nrows();
    if p.ncols() != m || m < 2 {
        return Err(Error::Dim("projector must be square, at least 2 x 2".into()));
    }
    let mut coeffs = vec![Complex64::ZERO; 2 * m - 1];
    for (i, c) in coeffs.iter_mut().enumerate() {
        // entries with q - p = i - (m - 1) share the power z^i
        let d = i as isize - (m as isize - 1);
        for q in 0..m as isize {
            let row = q - d;
            if (0..m as isize).contains(&row) {
                *c += p[[row as usize, q as usize]];
            }
        }
    }
    Ok(coeffs)
}

/// Roots of a conjugate-symmetric polynomial, split by modulus.
#[derive(Debug, Clone)]
pub struct RootSet {
    /// All finite roots, sorted by modulus then angle.
    pub roots: Vec<Complex64>,
    /// The `m - 1` smallest-modulus roots, one per conjugate-reciprocal pair.
    pub inner: Vec<Complex64>,
}

/// Relative floor below which a leading coefficient is treated as zero.
const LEAD_FLOOR: f64 = 1e-14;

/// Finds all roots of the coefficient list (lowest order first, odd length
/// `2m - 1`) via the companion matrix and keeps the `m - 1` closest to the
/// origin as the inner half.
pub fn roots_inside(coeffs: &[Complex64]) -> Result<RootSet> {
    if coeffs.len() < 3 || coeffs.len() % 2 == 0 {
        return Err(Error::Invalid(
            "coefficient list must have odd length at least 3".into(),
        ));
    }
    let m = (coeffs.len() + 1) / 2;
    let scale = coeffs.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return Err(Error::Numerical("zero polynomial has no isolated roots".into()));
    }
    let mut trimmed = coeffs.to_vec();
    while let Some(last) = trimmed.last() {
        if last.norm() <= LEAD_FLOOR * scale && trimmed.len() > 1 {
            trimmed.pop();
        } else {
            break;
        }
    }
    let d = trimmed.len() - 1;
    if d < m - 1 {
        return Err(Error::Numerical(
            "polynomial degenerated below the expected root count".into(),
        ));
    }
    let lead = trimmed[d];
    let companion = CMat::from_shape_fn((d, d), |(i, j)| {
        if j == d - 1 {
            -trimmed[i] / lead
        } else if i == j + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::ZERO
        }
    });
    let (_, vals) = right_eigenvectors(&companion)?;
    let mut roots: Vec<Complex64> = vals.to_vec();
    roots.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });
    let inner = roots[..m - 1].to_vec();
    Ok(RootSet { roots, inner })
}

/// Inner root whose angle is closest (wrapped) to the seed; ties go to the
/// root nearest the unit circle from inside.
pub fn select_root(rs: &RootSet, omega_seed: f64) -> Result<Complex64> {
    rs.inner
        .iter()
        .copied()
        .reduce(|best, z| {
            let db = wrap_dist(best.arg(), omega_seed);
            let dz = wrap_dist(z.arg(), omega_seed);
            match dz.total_cmp(&db) {
                std::cmp::Ordering::Less => z,
                std::cmp::Ordering::Greater => best,
                std::cmp::Ordering::Equal => {
                    if z.norm() > best.norm() {
                        z
                    } else {
                        best
                    }
                }
            }
        })
        .ok_or_else(|| Error::Numerical("no candidate roots".into()))
}

/// Singular value ratio below which the joint steering dictionary is
/// declared unseparable.
const SEP_FLOOR: f64 = 1e-10;

/// Joint least-squares path losses given refined steering matrices.
///
/// Solves `vec(Y) = ((S^T (A_y (.) A_x)^*) (.) A_r) beta` in the least
/// squares sense; fails if two paths are numerically indistinguishable.
pub fn pathloss_ls(
    y: &CMat,
    s_full: &CMat,
    a_r: &CMat,
    a_x: &CMat,
    a_y: &CMat,
) -> Result<Vec<Complex64>> {
    let k = a_r.ncols();
    if a_x.ncols() != k || a_y.ncols() != k {
        return Err(Error::Dim("steering matrices must share a path count".into()));
    }
    let a_t = khatri_rao(a_y, a_x)?;
    if s_full.nrows() != a_t.nrows() || s_full.ncols() != y.ncols() || a_r.nrows() != y.nrows() {
        return Err(Error::Dim("snapshot, training, and steering sizes disagree".into()));
    }
    let proj = s_full.t().dot(&a_t.mapv(|z| z.conj()));
    let d = khatri_rao(&proj, a_r)?;
    let svd = truncated_svd(&d, k)?;
    if svd.s[k - 1] < SEP_FLOOR * svd.s[0] {
        return Err(Error::Numerical(
            "refined paths are not separable in least squares".into(),
        ));
    }
    Ok(pinv(&d)?.dot(&vec_cm(y)).to_vec())
}

fn steering_matrix(omegas: &[f64], m: usize) -> CMat {
    let mut out = CMat::zeros((m, omegas.len()));
    for (j, &w) in omegas.iter().enumerate() {
        let col = steering_ula(w, m);
        for i in 0..m {
            out[[i, j]] = col[i];
        }
    }
    out
}

/// Algebraic estimate with root-refined transmit phases and least-squares
/// path losses.
///
/// Runs the factorization, seeds each transmit phase with its pairing-ratio
/// value, replaces it with the nearest polynomial root, and refits the gains
/// jointly. Receive phases keep their algebraic values.
pub fn ricer_estimate(
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
    let seed_x = dod_phases_cri(&factors.c_x, ts.l())?;
    let seed_y = dod_phases_cri(&factors.c_y, ts.l())?;

    let mut omega_x = Vec::with_capacity(k);
    let mut omega_y = Vec::with_capacity(k);
    for j in 0..k {
        let px = projector(factors.c_x.column(j), ts.s_x())?;
        let rx = roots_inside(&poly_coeffs(&px)?)?;
        omega_x.push(select_root(&rx, seed_x.omega[j])?.arg());
        let py = projector(factors.c_y.column(j), ts.s_y())?;
        let ry = roots_inside(&poly_coeffs(&py)?)?;
        omega_y.push(select_root(&ry, seed_y.omega[j])?.arg());
    }

    let a_r = steering_matrix(&omega_r, geom.m_r);
    let a_x = steering_matrix(&omega_x, geom.m_x);
    let a_y = steering_matrix(&omega_y, geom.m_y);
    let beta = pathloss_ls(y, &full_matrix(ts), &a_r, &a_x, &a_y)?;
    Ok(MultipathParams {
        omega_r,
        omega_x,
        omega_y,
        beta,
    })
}

/// Estimate from a single receive antenna.
///
/// With one antenna there is no receive aperture to smooth, so the x-axis
/// subspace comes from the top singular vectors of the reshaped (conjugated)
/// snapshot, all x phases drop out of one rooting pass, and each y phase is
/// rooted from its own back-projected column. Receive phases are reported as
/// zero. Needs the path count below both axis lengths and both axis antenna
/// counts.
pub fn single_antenna_estimate(
    y: &CMat,
    k: usize,
    ts: &TrainingSequence,
) -> Result<MultipathParams> {
    let (n_x, n_y) = (ts.n_x(), ts.n_y());
    if y.nrows() != 1 || y.ncols() != n_x * n_y {
        return Err(Error::Dim(format!(
            "snapshot is {:?}, expected (1, {})",
            y.dim(),
            n_x * n_y
        )));
    }
    if k == 0 {
        return Err(Error::Invalid("path count must be positive".into()));
    }
    if k >= n_x.min(n_y) {
        return Err(Error::Identifiability(format!(
            "{k} paths need more than {} training columns per axis",
            n_x.min(n_y)
        )));
    }
    if k >= ts.m_x() || k >= ts.m_y() {
        return Err(Error::Identifiability(format!(
            "{k} paths leave no root headroom on a {} x {} array",
            ts.m_x(),
            ts.m_y()
        )));
    }
    // the rooting polynomial separates signal from noise roots only when
    // each axis is observed through fewer symbols than antennas
    if n_x >= ts.m_x() || n_y >= ts.m_y() {
        return Err(Error::Identifiability(format!(
            "training block {n_x} x {n_y} must be strictly shorter than the {} x {} array",
            ts.m_x(),
            ts.m_y()
        )));
    }
    let y_conj: CVec = y.row(0).mapv(|z| z.conj());
    let snap = CMat::from_shape_fn((n_x, n_y), |(ix, iy)| y_conj[iy * n_x + ix]);
    let svd = truncated_svd(&snap, k)?;
    if svd.s[k - 1] < 1e-12 * svd.s[0] {
        return Err(Error::Numerical(format!(
            "snapshot is rank deficient for {k} paths"
        )));
    }

    // one rooting pass yields every x phase at once
    let p = subspace_projector(&svd.u, ts.s_x())?;
    let rs = roots_inside(&poly_coeffs(&p)?)?;
    let mut ranked = rs.inner.clone();
    ranked.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(a.arg().total_cmp(&b.arg()))
    });
    let omega_x: Vec<f64> = ranked[..k].iter().map(|z| z.arg()).collect();

    // back-project to pair each x phase with a y column, then root those
    let a_x = steering_matrix(&omega_x, ts.m_x());
    let c_x = adjoint(ts.s_x()).dot(&a_x);
    let c_y = pinv(&c_x)?.dot(&snap).t().to_owned();
    let mut omega_y = Vec::with_capacity(k);
    for j in 0..k {
        let py = projector(c_y.column(j), ts.s_y())?;
        let ry = roots_inside(&poly_coeffs(&py)?)?;
        let best = ry
            .inner
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())))
            .ok_or_else(|| Error::Numerical("no candidate roots".into()))?;
        omega_y.push(best.arg());
    }

    let a_y = steering_matrix(&omega_y, ts.m_y());
    let d = khatri_rao(&adjoint(ts.s_y()).dot(&a_y), &adjoint(ts.s_x()).dot(&a_x))?;
    let svd_d = truncated_svd(&d, k)?;
    if svd_d.s[k - 1] < SEP_FLOOR * svd_d.s[0] {
        return Err(Error::Numerical(
            "paths are not separable in least squares".into(),
        ));
    }
    let beta: Vec<Complex64> = pinv(&d)?.dot(&y_conj).iter().map(|z| z.conj()).collect();
    Ok(MultipathParams {
        omega_r: vec![0.0; k],
        omega_x,
        omega_y,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{random_scenario, received, synth_channel};
    use crate::mdalg::fro_norm_sq;
    use crate::rice::{reconstruct_channel, rice_estimate};
    use crate::training::build_training;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn geom(m_r: usize, m_x: usize, m_y: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(m_r, m_x, m_y).unwrap()
    }

    fn random_unit_vec(n: usize, rng: &mut ChaCha8Rng) -> CVec {
        let v = CVec::from_shape_fn(n, |_| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.mapv(|z| z / norm)
    }

    fn quadratic_form(p: &CMat, omega: f64) -> Complex64 {
        let a = steering_ula(omega, p.nrows());
        let pa = p.dot(&a);
        a.iter().zip(pa.iter()).map(|(x, y)| x.conj() * y).sum()
    }

    fn eval_poly(coeffs: &[Complex64], z: Complex64) -> Complex64 {
        coeffs.iter().rev().fold(Complex64::ZERO, |acc, &c| acc * z + c)
    }

    #[test]
    fn projector_is_hermitian_psd_and_annihilates_its_column() {
        let g = geom(2, 6, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let omega = 0.7 * PI;
        let a = steering_ula(omega, g.m_x);
        let col = adjoint(ts.s_x()).dot(&a) * c(0.4, -1.1);
        let p = projector(col.view(), ts.s_x()).unwrap();

        let herm_err = fro_norm_sq(&(&p - &adjoint(&p))).sqrt();
        assert!(herm_err < 1e-12);
        let (_, vals) = right_eigenvectors(&p).unwrap();
        for v in vals.iter() {
            assert!(v.re > -1e-10 && v.im.abs() < 1e-10);
        }
        let q = quadratic_form(&p, omega);
        assert!(q.norm() / fro_norm_sq(&p).sqrt() < 1e-12);
        // a mismatched phase is not annihilated
        assert!(quadratic_form(&p, omega + 0.4).norm() > 1e-3);
    }

    #[test]
    fn subspace_projector_matches_rank_one_case() {
        let g = geom(2, 5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let u1 = random_unit_vec(ts.n_x(), &mut rng);
        let u = u1.view().insert_axis(ndarray::Axis(1)).to_owned();
        let p_sub = subspace_projector(&u, ts.s_x()).unwrap();
        let p_col = projector(u1.view(), ts.s_x()).unwrap();
        assert!(fro_norm_sq(&(p_sub - p_col)).sqrt() < 1e-12);
    }

    #[test]
    fn polynomial_evaluates_to_the_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 6;
        let g_mat = CMat::from_shape_fn((m, 3), |_| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let p = g_mat.dot(&adjoint(&g_mat));
        let coeffs = poly_coeffs(&p).unwrap();
        assert_eq!(coeffs.len(), 2 * m - 1);
        for i in 0..coeffs.len() {
            let mirror = coeffs[2 * m - 2 - i].conj();
            assert!((coeffs[i] - mirror).norm() < 1e-12);
        }
        for _ in 0..50 {
            let omega = (rng.random::<f64>() - 0.5) * 2.0 * PI;
            let z = Complex64::cis(omega);
            let via_poly = eval_poly(&coeffs, z) * Complex64::cis(-((m - 1) as f64) * omega);
            let direct = quadratic_form(&p, omega);
            assert!((via_poly - direct).norm() < 1e-9);
            assert!(direct.im.abs() < 1e-9);
        }
    }

    #[test]
    fn roots_pair_up_conjugate_reciprocally() {
        let g = geom(2, 5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let col = random_unit_vec(ts.n_x(), &mut rng);
        let p = projector(col.view(), ts.s_x()).unwrap();
        let rs = roots_inside(&poly_coeffs(&p).unwrap()).unwrap();
        assert_eq!(rs.inner.len(), g.m_x - 1);
        for &z in &rs.roots {
            let mirror = Complex64::new(1.0, 0.0) / z.conj();
            let hit = rs
                .roots
                .iter()
                .any(|&w| (w - mirror).norm() < 1e-6 * mirror.norm().max(1.0));
            assert!(hit, "no reciprocal partner for {z}");
        }
    }

    #[test]
    fn inner_count_invariant_over_random_draws() {
        let g = geom(2, 7, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ts = build_training(&g, 3, &mut rng).unwrap();
        for _ in 0..30 {
            let col = random_unit_vec(ts.n_x(), &mut rng);
            let p = projector(col.view(), ts.s_x()).unwrap();
            let rs = roots_inside(&poly_coeffs(&p).unwrap()).unwrap();
            assert_eq!(rs.inner.len(), g.m_x - 1);
            for &z in &rs.inner {
                assert!(z.norm() <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn matched_column_puts_a_root_on_the_circle() {
        let g = geom(2, 6, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        for omega in [0.36 * PI, -0.9 * PI, 1.2] {
            let a = steering_ula(omega, g.m_x);
            let col = adjoint(ts.s_x()).dot(&a);
            let p = projector(col.view(), ts.s_x()).unwrap();
            let rs = roots_inside(&poly_coeffs(&p).unwrap()).unwrap();
            let z = select_root(&rs, omega + 0.05).unwrap();
            assert!((z.norm() - 1.0).abs() < 1e-5);
            assert!(wrap_dist(z.arg(), omega) < 1e-6);
        }
    }

    #[test]
    fn root_selection_uses_wrapped_distance_and_modulus_ties() {
        let rs = RootSet {
            roots: vec![],
            inner: vec![
                Complex64::from_polar(0.9, 3.1),
                Complex64::from_polar(0.9, -3.1),
                Complex64::from_polar(0.5, 1.0),
            ],
        };
        // seed just past -pi wraps around to the negative-angle root
        let z = select_root(&rs, -3.13).unwrap();
        assert!((z.arg() + 3.1).abs() < 1e-12);
        let rs_tie = RootSet {
            roots: vec![],
            inner: vec![Complex64::from_polar(0.5, 1.0), Complex64::from_polar(0.9, 1.0)],
        };
        let z = select_root(&rs_tie, 1.0).unwrap();
        assert!((z.norm() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn least_squares_gains_are_exact_noiselessly() {
        let g = geom(3, 6, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let p = random_scenario(3, &g, 0.3, &mut rng).unwrap();
        let y = synth_channel(&p, &g).dot(&full_matrix(&ts));
        let a_r = steering_matrix(&p.omega_r, g.m_r);
        let a_x = steering_matrix(&p.omega_x, g.m_x);
        let a_y = steering_matrix(&p.omega_y, g.m_y);
        let beta = pathloss_ls(&y, &full_matrix(&ts), &a_r, &a_x, &a_y).unwrap();
        for k in 0..3 {
            assert!((beta[k] - p.beta[k]).norm() < 1e-10);
        }
        // duplicated path directions cannot be separated
        let dup = [p.omega_r[0], p.omega_r[0]];
        let dup_x = [p.omega_x[0], p.omega_x[0]];
        let dup_y = [p.omega_y[0], p.omega_y[0]];
        let a_r2 = steering_matrix(&dup, g.m_r);
        let a_x2 = steering_matrix(&dup_x, g.m_x);
        let a_y2 = steering_matrix(&dup_y, g.m_y);
        assert!(matches!(
            pathloss_ls(&y, &full_matrix(&ts), &a_r2, &a_x2, &a_y2),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn refinement_reproduces_the_algebraic_answer_noiselessly() {
        let g = geom(3, 10, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let omega_r: Vec<f64> = [0.8, 0.57, 0.1, 0.33].iter().map(|v| v * PI).collect();
        let omega_x: Vec<f64> = [0.36, 0.7, 0.53, 0.2].iter().map(|v| v * PI).collect();
        let omega_y: Vec<f64> = [0.8, 0.33, 0.57, 0.1].iter().map(|v| v * PI).collect();
        let beta = crate::channel::rician_gains(4, 10.0, &mut rng);
        let p = MultipathParams::new(omega_r, omega_x, omega_y, beta).unwrap();
        let y = synth_channel(&p, &g).dot(&full_matrix(&ts));

        let alg = rice_estimate(&y, 4, &ts, &g).unwrap().sorted_by_omega_r();
        let refined = ricer_estimate(&y, 4, &ts, &g).unwrap().sorted_by_omega_r();
        let truth = p.sorted_by_omega_r();
        for k in 0..4 {
            assert!(wrap_dist(refined.omega_x[k], truth.omega_x[k]) < 1e-6);
            assert!(wrap_dist(refined.omega_y[k], truth.omega_y[k]) < 1e-6);
            assert!(wrap_dist(refined.omega_x[k], alg.omega_x[k]) < 1e-6);
            assert!((refined.beta[k] - truth.beta[k]).norm() < 1e-6);
        }
    }

    #[test]
    fn refinement_stays_close_under_noise() {
        let g = geom(3, 8, 8);
        let mut rice_err = Vec::new();
        let mut ricer_err = Vec::new();
        for seed in 0..12u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
            let ts = build_training(&g, 2, &mut rng).unwrap();
            let p = random_scenario(2, &g, 0.4, &mut rng).unwrap();
            let h = synth_channel(&p, &g);
            let y = received(&h, &full_matrix(&ts), 10.0, &mut rng).unwrap();
            let e1 = rice_estimate(&y, 2, &ts, &g).unwrap();
            let e2 = ricer_estimate(&y, 2, &ts, &g).unwrap();
            let err = |est: &MultipathParams| {
                (fro_norm_sq(&(reconstruct_channel(est, &g) - &h)) / fro_norm_sq(&h)).sqrt()
            };
            rice_err.push(err(&e1));
            ricer_err.push(err(&e2));
        }
        rice_err.sort_by(f64::total_cmp);
        ricer_err.sort_by(f64::total_cmp);
        let m1 = rice_err[rice_err.len() / 2];
        let m2 = ricer_err[ricer_err.len() / 2];
        assert!(m2 < m1 * 1.25, "refined median {m2} vs algebraic {m1}");
    }

    #[test]
    fn single_antenna_recovers_one_and_two_paths() {
        let g = geom(1, 6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let s = full_matrix(&ts);

        let p1 = MultipathParams::new(vec![0.0], vec![0.9], vec![-1.4], vec![c(0.6, 0.8)]).unwrap();
        let y1 = synth_channel(&p1, &g).dot(&s);
        let e1 = single_antenna_estimate(&y1, 1, &ts).unwrap();
        assert!(wrap_dist(e1.omega_x[0], 0.9) < 1e-6);
        assert!(wrap_dist(e1.omega_y[0], -1.4) < 1e-6);
        assert!((e1.beta[0] - p1.beta[0]).norm() < 1e-6);
        assert_eq!(e1.omega_r, vec![0.0]);

        // receive phases are meaningless with one antenna, so build literally
        let p2 = MultipathParams {
            omega_r: vec![0.0, 0.0],
            omega_x: vec![0.5, -1.8],
            omega_y: vec![1.1, 2.4],
            beta: vec![c(1.0, -0.3), c(-0.4, 0.7)],
        };
        let y2 = synth_channel(&p2, &g).dot(&s);
        let e2 = single_antenna_estimate(&y2, 2, &ts).unwrap();
        let mut order: Vec<usize> = (0..2).collect();
        order.sort_by(|&a, &b| e2.omega_x[a].total_cmp(&e2.omega_x[b]));
        let truth_order = [1usize, 0]; // -1.8 sorts before 0.5
        for (slot, &j) in order.iter().enumerate() {
            let t = truth_order[slot];
            assert!(wrap_dist(e2.omega_x[j], p2.omega_x[t]) < 1e-6);
            assert!(wrap_dist(e2.omega_y[j], p2.omega_y[t]) < 1e-6);
            assert!((e2.beta[j] - p2.beta[t]).norm() < 1e-5);
        }
    }

    #[test]
    fn single_antenna_rejects_unidentifiable_loads() {
        let g = geom(1, 5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ts = build_training(&g, 2, &mut rng).unwrap();
        let y = CMat::zeros((1, ts.n()));
        assert!(matches!(
            single_antenna_estimate(&y, 4, &ts),
            Err(Error::Identifiability(_))
        ));
        let wide = CMat::zeros((2, ts.n()));
        assert!(single_antenna_estimate(&wide, 1, &ts).is_err());
    }
}

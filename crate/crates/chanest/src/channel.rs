//! Array geometry, multipath channel synthesis, and noisy reception.
//!
//! The base station transmits through an `m_x` x `m_y` uniform rectangular
//! array; the user receives on an `m_r`-element uniform linear array. A
//! K-path channel is `H = A_r diag(beta) A_t^H` where each transmit steering
//! vector factors as `a_y (x) a_x`. Paths are parameterized directly by their
//! spatial phases `(omega_r, omega_x, omega_y)`; physical angles are only a
//! reparameterization, see [`phases_to_angles`].

use std::f64::consts::PI;

use ndarray::Array1;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdalg::{fro_norm_sq, CMat, CVec};

/// Phase grids used by the grid scenario mode, one `(lo, hi)` range per axis.
pub const GRID_RANGE_R: (f64, f64) = (0.4 * PI, 1.6 * PI);
pub const GRID_RANGE_X: (f64, f64) = (0.4 * PI, 1.8 * PI);
pub const GRID_RANGE_Y: (f64, f64) = (0.2 * PI, 1.6 * PI);

/// Wraps a phase to the principal interval `(-pi, pi]`.
pub fn wrap_phase(t: f64) -> f64 {
    let w = t.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Circular distance between two phases, in `[0, pi]`.
pub fn wrap_dist(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// Antenna counts and element spacing of the downlink arrays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// Receive ULA elements.
    pub m_r: usize,
    /// Transmit URA elements along x.
    pub m_x: usize,
    /// Transmit URA elements along y.
    pub m_y: usize,
    /// Element spacing over carrier wavelength; 0.5 is half-wavelength.
    pub spacing_ratio: f64,
}

impl ArrayGeometry {
    pub fn new(m_r: usize, m_x: usize, m_y: usize, spacing_ratio: f64) -> Result<Self> {
        if m_r == 0 || m_x == 0 || m_y == 0 {
            return Err(Error::Invalid("antenna counts must be positive".into()));
        }
        if !(spacing_ratio > 0.0 && spacing_ratio <= 0.5) {
            return Err(Error::Invalid(format!(
                "spacing ratio {spacing_ratio} outside (0, 0.5]"
            )));
        }
        Ok(Self {
            m_r,
            m_x,
            m_y,
            spacing_ratio,
        })
    }

    /// Half-wavelength spacing, the default throughout.
    pub fn half_wavelength(m_r: usize, m_x: usize, m_y: usize) -> Result<Self> {
        Self::new(m_r, m_x, m_y, 0.5)
    }

    /// Total transmit elements.
    pub fn m_t(&self) -> usize {
        self.m_x * self.m_y
    }
}

mod complex_vec_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], ser: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        serde::Serialize::serialize(&pairs, ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<Complex64>, D::Error> {
        let pairs: Vec<[f64; 2]> = serde::Deserialize::deserialize(de)?;
        Ok(pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

/// Per-path spatial phases and complex path losses.
///
/// `omega_r[k]` is the receive phase, `omega_x[k]`/`omega_y[k]` the transmit
/// phases along the two URA axes, `beta[k]` the path loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathParams {
    pub omega_r: Vec<f64>,
    pub omega_x: Vec<f64>,
    pub omega_y: Vec<f64>,
    #[serde(with = "complex_vec_serde")]
    pub beta: Vec<Complex64>,
}

impl MultipathParams {
    /// Validating constructor: equal lengths, at least one path, and phases
    /// pairwise distinct within each list (modulo 2 pi).
    pub fn new(
        omega_r: Vec<f64>,
        omega_x: Vec<f64>,
        omega_y: Vec<f64>,
        beta: Vec<Complex64>,
    ) -> Result<Self> {
        let k = omega_r.len();
        if k == 0 {
            return Err(Error::Invalid("at least one path required".into()));
        }
        if omega_x.len() != k || omega_y.len() != k || beta.len() != k {
            return Err(Error::Invalid("per-path lists must have equal length".into()));
        }
        let p = Self {
            omega_r,
            omega_x,
            omega_y,
            beta,
        };
        if k > 1 && p.min_phase_separation() == 0.0 {
            return Err(Error::Invalid("repeated phase within a list".into()));
        }
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.omega_r.len()
    }

    /// Smallest pairwise circular distance across the three phase lists.
    pub fn min_phase_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for list in [&self.omega_r, &self.omega_x, &self.omega_y] {
            for i in 0..list.len() {
                for j in (i + 1)..list.len() {
                    best = best.min(wrap_dist(list[i], list[j]));
                }
            }
        }
        best
    }

    /// Copy with paths reordered so `omega_r` ascends; canonical form for
    /// comparing parameter sets from different estimators.
    pub fn sorted_by_omega_r(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.k()).collect();
        idx.sort_by(|&a, &b| self.omega_r[a].total_cmp(&self.omega_r[b]));
        Self {
            omega_r: idx.iter().map(|&i| self.omega_r[i]).collect(),
            omega_x: idx.iter().map(|&i| self.omega_x[i]).collect(),
            omega_y: idx.iter().map(|&i| self.omega_y[i]).collect(),
            beta: idx.iter().map(|&i| self.beta[i]).collect(),
        }
    }
}

/// A fully specified random trial: geometry, paths, SNR, and noise seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub params: MultipathParams,
    pub snr_db: f64,
    pub seed: u64,
}

impl Scenario {
    /// True channel matrix for this scenario.
    pub fn channel(&self) -> CMat {
        synth_channel(&self.params, &self.geometry)
    }

    /// Receive snapshot under training `s`; the seed fixes the noise draw.
    pub fn received_snapshot(&self, s: &CMat) -> Result<CMat> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
        received(&self.channel(), s, self.snr_db, &mut rng)
    }
}

/// ULA steering vector `[1, e^{j w}, ..., e^{j (m-1) w}]`.
pub fn steering_ula(omega: f64, m: usize) -> CVec {
    Array1::from_shape_fn(m, |i| Complex64::cis(i as f64 * omega))
}

/// URA steering vector `a_y (x) a_x`; entry `(ly * m_x + lx)` is
/// `e^{j (lx w_x + ly w_y)}`.
pub fn steering_ura(omega_x: f64, omega_y: f64, geom: &ArrayGeometry) -> CVec {
    Array1::from_shape_fn(geom.m_t(), |i| {
        let lx = (i % geom.m_x) as f64;
        let ly = (i / geom.m_x) as f64;
        Complex64::cis(lx * omega_x + ly * omega_y)
    })
}

/// Noise-free channel matrix `A_r diag(beta) A_t^H` (`m_r x m_t`).
pub fn synth_channel(params: &MultipathParams, geom: &ArrayGeometry) -> CMat {
    let mut h = CMat::zeros((geom.m_r, geom.m_t()));
    for k in 0..params.k() {
        let a_r = steering_ula(params.omega_r[k], geom.m_r);
        let a_t = steering_ura(params.omega_x[k], params.omega_y[k], geom);
        let b = params.beta[k];
        for m in 0..geom.m_r {
            let lhs = b * a_r[m];
            for t in 0..geom.m_t() {
                h[[m, t]] += lhs * a_t[t].conj();
            }
        }
    }
    h
}

/// Receive snapshot `Y = H S + N` at the given SNR.
///
/// The SNR convention is `|H|_F^2 / (m_r * m_t * sigma^2)`, i.e. average
/// channel entry power over the noise variance per complex entry. Tying the
/// noise floor to the channel rather than to `H S` keeps the comparison fair
/// across training designs with different column power, and makes a plain
/// least-squares estimate under column-orthonormal training land exactly at
/// NMSE `10^(-snr_db / 10)`. `snr_db = f64::INFINITY` returns the noiseless
/// product.
pub fn received<R: Rng>(h: &CMat, s: &CMat, snr_db: f64, rng: &mut R) -> Result<CMat> {
    if h.ncols() != s.nrows() {
        return Err(Error::Dim(format!(
            "channel has {} transmit elements, training has {} rows",
            h.ncols(),
            s.nrows()
        )));
    }
    let mut y = h.dot(s);
    if snr_db == f64::INFINITY {
        return Ok(y);
    }
    let p_chan = fro_norm_sq(h);
    if p_chan == 0.0 {
        return Err(Error::Numerical("zero channel power, SNR undefined".into()));
    }
    let (m_r, m_t) = h.dim();
    let sigma_sq = p_chan / (m_r as f64 * m_t as f64 * 10f64.powf(snr_db / 10.0));
    let comp = Normal::new(0.0, (sigma_sq / 2.0).sqrt()).expect("valid std dev");
    for v in y.iter_mut() {
        *v += Complex64::new(comp.sample(rng), comp.sample(rng));
    }
    Ok(y)
}

/// Path losses with Rician magnitude (unit mean power) and uniform phase.
///
/// `k_factor_db` is the ratio of specular to scattered power in dB.
pub fn rician_gains<R: Rng>(k: usize, k_factor_db: f64, rng: &mut R) -> Vec<Complex64> {
    let kf = 10f64.powf(k_factor_db / 10.0);
    let nu = (kf / (kf + 1.0)).sqrt();
    let sigma = (0.5 / (kf + 1.0)).sqrt();
    let comp = Normal::new(0.0, sigma).expect("valid std dev");
    (0..k)
        .map(|_| {
            let x = nu + comp.sample(rng);
            let y = comp.sample(rng);
            let mag = (x * x + y * y).sqrt();
            let phase = rng.random_range(-PI..PI);
            Complex64::from_polar(mag, phase)
        })
        .collect()
}

/// `k` evenly spaced phases covering `[lo, hi]` inclusive, wrapped to the
/// principal interval. A single phase sits at the midpoint.
pub fn grid_phases(k: usize, lo: f64, hi: f64) -> Vec<f64> {
    if k == 1 {
        return vec![wrap_phase(0.5 * (lo + hi))];
    }
    let step = (hi - lo) / (k as f64 - 1.0);
    (0..k).map(|i| wrap_phase(lo + i as f64 * step)).collect()
}

/// `k` phases drawn uniformly on `(-pi, pi]` with pairwise circular distance
/// at least `min_sep`, by rejection.
pub fn random_phases<R: Rng>(k: usize, min_sep: f64, rng: &mut R) -> Result<Vec<f64>> {
    if min_sep < 0.0 || k as f64 * min_sep > 2.0 * PI {
        return Err(Error::Invalid(format!(
            "{k} phases with separation {min_sep} cannot fit on the circle"
        )));
    }
    const ATTEMPTS: usize = 100_000;
    for _ in 0..ATTEMPTS {
        let cand: Vec<f64> = (0..k).map(|_| rng.random_range(-PI..PI)).collect();
        let ok = (0..k).all(|i| (i + 1..k).all(|j| wrap_dist(cand[i], cand[j]) >= min_sep));
        if ok {
            return Ok(cand);
        }
    }
    Err(Error::Numerical(format!(
        "separation {min_sep} not reached after {ATTEMPTS} draws"
    )))
}

/// Random multipath scenario: uniform phases with the given minimum
/// separation on every axis, Rician path losses with a 10 dB K-factor.
pub fn random_scenario<R: Rng>(
    k: usize,
    geom: &ArrayGeometry,
    min_sep: f64,
    rng: &mut R,
) -> Result<MultipathParams> {
    let _ = geom; // phases live on the circle regardless of array size
    MultipathParams::new(
        random_phases(k, min_sep, rng)?,
        random_phases(k, min_sep, rng)?,
        random_phases(k, min_sep, rng)?,
        rician_gains(k, 10.0, rng),
    )
}

/// Grid multipath scenario: phases evenly spread over the per-axis ranges
/// [`GRID_RANGE_R`], [`GRID_RANGE_X`], [`GRID_RANGE_Y`]; gains Rician.
pub fn grid_scenario<R: Rng>(k: usize, rng: &mut R) -> Result<MultipathParams> {
    MultipathParams::new(
        grid_phases(k, GRID_RANGE_R.0, GRID_RANGE_R.1),
        grid_phases(k, GRID_RANGE_X.0, GRID_RANGE_X.1),
        grid_phases(k, GRID_RANGE_Y.0, GRID_RANGE_Y.1),
        rician_gains(k, 10.0, rng),
    )
}

/// Physical angles of one path: receive elevation, transmit azimuth and
/// elevation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathAngles {
    pub theta_r: f64,
    pub theta_t: f64,
    pub phi_t: f64,
}

/// Receive phase from the arrival angle: `w = 2 pi d sin(theta) / lambda`.
pub fn doa_to_phase(theta_r: f64, spacing_ratio: f64) -> f64 {
    2.0 * PI * spacing_ratio * theta_r.sin()
}

/// Arrival angle from the receive phase; errors outside the arcsine domain.
pub fn phase_to_doa(omega_r: f64, spacing_ratio: f64) -> Result<f64> {
    let s = wrap_phase(omega_r) / (2.0 * PI * spacing_ratio);
    if s.abs() > 1.0 {
        return Err(Error::Invalid(format!(
            "receive phase {omega_r} maps outside the visible region"
        )));
    }
    Ok(s.asin())
}

/// Transmit phases from departure azimuth `theta_t` and elevation `phi_t`.
pub fn dod_to_phases(theta_t: f64, phi_t: f64, spacing_ratio: f64) -> (f64, f64) {
    let r = 2.0 * PI * spacing_ratio * phi_t.sin();
    (r * theta_t.cos(), r * theta_t.sin())
}

/// Departure `(theta_t, phi_t)` from the transmit phase pair.
///
/// Azimuth uses the quadrant-aware arctangent; elevation requires the phase
/// pair to lie inside the visible disk.
pub fn phases_to_dod(omega_x: f64, omega_y: f64, spacing_ratio: f64) -> Result<(f64, f64)> {
    let (wx, wy) = (wrap_phase(omega_x), wrap_phase(omega_y));
    let scale = 2.0 * PI * spacing_ratio;
    let radial = (wx * wx + wy * wy).sqrt() / scale;
    if radial > 1.0 {
        return Err(Error::Invalid(format!(
            "transmit phases ({omega_x}, {omega_y}) map outside the visible region"
        )));
    }
    Ok((wy.atan2(wx), radial.asin()))
}

/// Per-path physical angles for a parameter set.
pub fn phases_to_angles(params: &MultipathParams, spacing_ratio: f64) -> Result<Vec<PathAngles>> {
    (0..params.k())
        .map(|k| {
            let theta_r = phase_to_doa(params.omega_r[k], spacing_ratio)?;
            let (theta_t, phi_t) = phases_to_dod(params.omega_x[k], params.omega_y[k], spacing_ratio)?;
            Ok(PathAngles {
                theta_r,
                theta_t,
                phi_t,
            })
        })
        .collect()
}

/// Parameter set from physical angles and path losses.
pub fn angles_to_phases(
    angles: &[PathAngles],
    beta: Vec<Complex64>,
    spacing_ratio: f64,
) -> Result<MultipathParams> {
    if angles.is_empty() || angles.len() != beta.len() {
        return Err(Error::Invalid("angle and gain counts must match".into()));
    }
    let mut omega_r = Vec::with_capacity(angles.len());
    let mut omega_x = Vec::with_capacity(angles.len());
    let mut omega_y = Vec::with_capacity(angles.len());
    for a in angles {
        omega_r.push(doa_to_phase(a.theta_r, spacing_ratio));
        let (wx, wy) = dod_to_phases(a.theta_t, a.phi_t, spacing_ratio);
        omega_x.push(wx);
        omega_y.push(wy);
    }
    MultipathParams::new(omega_r, omega_x, omega_y, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdalg::kron;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn geom(m_r: usize, m_x: usize, m_y: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(m_r, m_x, m_y).unwrap()
    }

    #[test]
    fn wrap_phase_principal_interval() {
        assert!((wrap_phase(1.2 * PI) - (-0.8 * PI)).abs() < 1e-12);
        assert!((wrap_phase(-1.2 * PI) - 0.8 * PI).abs() < 1e-12);
        assert!((wrap_phase(PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(5.0 * PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_phase(0.3), 0.3);
    }

    #[test]
    fn steering_quarter_turn() {
        let a = steering_ula(PI / 2.0, 3);
        assert!((a[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((a[1] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((a[2] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn steering_zero_phase_is_ones() {
        let a = steering_ula(0.0, 5);
        assert!(a.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn steering_shift_property() {
        // phase step between adjacent elements equals omega
        let omega = -2.3;
        let a = steering_ula(omega, 6);
        for i in 0..5 {
            let ratio = a[i + 1] * a[i].conj();
            assert!((ratio.arg() - wrap_phase(omega)).abs() < 1e-12);
        }
    }

    #[test]
    fn ura_is_kron_of_axis_vectors() {
        let g = geom(2, 3, 4);
        let (wx, wy) = (0.7, -1.1);
        let a = steering_ura(wx, wy, &g);
        let ax = steering_ula(wx, 3);
        let ay = steering_ula(wy, 4);
        let k = kron(
            &ay.clone().insert_axis(ndarray::Axis(1)),
            &ax.clone().insert_axis(ndarray::Axis(1)),
        );
        for i in 0..12 {
            assert!((a[i] - k[[i, 0]]).norm() < 1e-12);
        }
        // explicit index formula
        for ly in 0..4 {
            for lx in 0..3 {
                let want = Complex64::cis(lx as f64 * wx + ly as f64 * wy);
                assert!((a[ly * 3 + lx] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_zero_path_gives_all_ones_channel() {
        let g = geom(3, 2, 2);
        let p = MultipathParams::new(vec![0.0], vec![0.0], vec![0.0], vec![c(1.0, 0.0)]).unwrap();
        let h = synth_channel(&p, &g);
        assert!(h.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn single_path_channel_is_rank_one() {
        let g = geom(4, 3, 3);
        let p = MultipathParams::new(vec![1.1], vec![-0.4], vec![0.9], vec![c(0.3, -1.2)]).unwrap();
        let h = synth_channel(&p, &g);
        let t = crate::mdalg::truncated_svd(&h, 2).unwrap();
        assert!(t.s[1] < 1e-10 * t.s[0]);
    }

    #[test]
    fn channel_is_sum_of_rank_one_terms() {
        let g = geom(3, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_scenario(3, &g, 0.1, &mut rng).unwrap();
        let h = synth_channel(&p, &g);
        let mut want = CMat::zeros((g.m_r, g.m_t()));
        for k in 0..3 {
            let a_r = steering_ula(p.omega_r[k], g.m_r);
            let a_t = steering_ura(p.omega_x[k], p.omega_y[k], &g);
            for m in 0..g.m_r {
                for t in 0..g.m_t() {
                    want[[m, t]] += p.beta[k] * a_r[m] * a_t[t].conj();
                }
            }
        }
        let diff: f64 = (&h - &want).iter().map(|z| z.norm()).sum();
        assert!(diff < 1e-10);
    }

    #[test]
    fn channel_linear_in_gains() {
        let g = geom(3, 3, 3);
        let p1 = MultipathParams::new(vec![0.5], vec![1.0], vec![-1.0], vec![c(1.0, 1.0)]).unwrap();
        let mut p2 = p1.clone();
        p2.beta[0] = c(2.0, 2.0);
        let h1 = synth_channel(&p1, &g);
        let h2 = synth_channel(&p2, &g);
        let diff: f64 = (&h2 - &h1.mapv(|z| z * 2.0)).iter().map(|z| z.norm()).sum();
        assert!(diff < 1e-10);
    }

    #[test]
    fn received_noiseless_is_exact_product() {
        let g = geom(2, 2, 2);
        let p = MultipathParams::new(vec![0.3], vec![0.6], vec![-0.6], vec![c(1.0, 0.0)]).unwrap();
        let h = synth_channel(&p, &g);
        let s = CMat::eye(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = received(&h, &s, f64::INFINITY, &mut rng).unwrap();
        let diff: f64 = (&y - &h.dot(&s)).iter().map(|z| z.norm()).sum();
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn received_noise_variance_matches_snr() {
        let g = geom(2, 5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_scenario(2, &g, 0.3, &mut rng).unwrap();
        let h = synth_channel(&p, &g);
        let s = CMat::from_shape_fn((25, 4000), |(i, j)| {
            Complex64::cis(((i * 37 + j * 13) % 101) as f64)
        });
        let hs = h.dot(&s);
        let snr_db = 7.0;
        let y = received(&h, &s, snr_db, &mut rng).unwrap();
        let want_var = fro_norm_sq(&h) / (2.0 * 25.0 * 10f64.powf(snr_db / 10.0));
        let got_var = fro_norm_sq(&(&y - &hs)) / (2.0 * 4000.0);
        assert!(
            (got_var / want_var - 1.0).abs() < 0.05,
            "empirical {got_var} vs target {want_var}"
        );
    }

    #[test]
    fn received_deterministic_under_seed() {
        let g = geom(3, 4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let p = random_scenario(2, &g, 0.2, &mut rng).unwrap();
        let sc = Scenario {
            geometry: g,
            params: p,
            snr_db: 10.0,
            seed: 99,
        };
        let s = CMat::eye(16);
        let y1 = sc.received_snapshot(&s).unwrap();
        let y2 = sc.received_snapshot(&s).unwrap();
        assert_eq!(y1, y2);
    }

    #[test]
    fn rician_gains_have_unit_mean_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gains = rician_gains(100_000, 10.0, &mut rng);
        let mean_p: f64 = gains.iter().map(|g| g.norm_sqr()).sum::<f64>() / 1e5;
        assert!((mean_p - 1.0).abs() < 0.02, "mean power {mean_p}");
    }

    #[test]
    fn rician_k_factor_concentrates_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spread = |kf: f64, rng: &mut ChaCha8Rng| {
            let g = rician_gains(20_000, kf, rng);
            let m: f64 = g.iter().map(|z| z.norm()).sum::<f64>() / 2e4;
            g.iter().map(|z| (z.norm() - m).powi(2)).sum::<f64>() / 2e4
        };
        let loose = spread(0.0, &mut rng);
        let tight = spread(20.0, &mut rng);
        assert!(tight < loose / 5.0);
    }

    #[test]
    fn grid_phases_match_even_division() {
        let got = grid_phases(4, GRID_RANGE_R.0, GRID_RANGE_R.1);
        let want = [0.4 * PI, 0.8 * PI, -0.8 * PI, -0.4 * PI]; // 1.2pi, 1.6pi wrap
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-12);
        }
        let single = grid_phases(1, 0.0, PI);
        assert!((single[0] - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn random_phases_respect_separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let ph = random_phases(5, 0.3, &mut rng).unwrap();
            for i in 0..5 {
                for j in (i + 1)..5 {
                    assert!(wrap_dist(ph[i], ph[j]) >= 0.3);
                }
            }
        }
    }

    #[test]
    fn random_phases_reject_impossible_packing() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(random_phases(8, 1.0, &mut rng).is_err());
    }

    #[test]
    fn scenario_draw_is_deterministic() {
        let g = geom(3, 4, 4);
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        let p1 = random_scenario(3, &g, 0.1, &mut r1).unwrap();
        let p2 = random_scenario(3, &g, 0.1, &mut r2).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn params_validate_shapes_and_distinctness() {
        assert!(MultipathParams::new(vec![], vec![], vec![], vec![]).is_err());
        assert!(MultipathParams::new(vec![0.1], vec![0.2], vec![0.3], vec![]).is_err());
        assert!(MultipathParams::new(
            vec![0.1, 0.1],
            vec![0.2, 0.3],
            vec![0.4, 0.5],
            vec![c(1.0, 0.0), c(1.0, 0.0)]
        )
        .is_err());
    }

    #[test]
    fn angle_round_trip() {
        let g = geom(2, 2, 2);
        let p = MultipathParams::new(
            vec![0.8 * PI, -0.3 * PI],
            vec![0.36 * PI, 0.2 * PI],
            vec![0.1 * PI, -0.5 * PI],
            vec![c(1.0, 0.0), c(0.0, 1.0)],
        )
        .unwrap();
        let angles = phases_to_angles(&p, g.spacing_ratio).unwrap();
        let back = angles_to_phases(&angles, p.beta.clone(), g.spacing_ratio).unwrap();
        for k in 0..2 {
            assert!((back.omega_r[k] - p.omega_r[k]).abs() < 1e-12);
            assert!((back.omega_x[k] - p.omega_x[k]).abs() < 1e-12);
            assert!((back.omega_y[k] - p.omega_y[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_mapping_rejects_invisible_phases() {
        // phase pair outside the visible disk for half-wavelength spacing
        assert!(phases_to_dod(0.9 * PI, 0.9 * PI, 0.5).is_err());
        // single-axis phase beyond the region for quarter-wavelength spacing
        assert!(phase_to_doa(0.9 * PI, 0.25).is_err());
        assert!(phase_to_doa(0.9 * PI, 0.5).is_ok());
    }

    #[test]
    fn params_json_round_trip() {
        let p = MultipathParams::new(
            vec![0.1, 0.2],
            vec![0.3, 0.4],
            vec![0.5, 0.6],
            vec![c(1.0, -2.0), c(0.5, 0.25)],
        )
        .unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: MultipathParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        // complex entries serialize as [re, im] pairs
        assert!(s.contains("[1.0,-2.0]"));
    }
}

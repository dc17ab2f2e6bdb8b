//! Complex matrix/tensor primitives shared by the estimators.
//!
//! Everything operates on [`ndarray`] arrays of `Complex64`. The receive
//! snapshot `Y` (antennas x training columns) is treated as a 3-way tensor
//! with modes (receive antenna, x training column, y training column); the
//! unfoldings here fix the mode orderings used across the crate:
//!
//! * column `n` of `Y` corresponds to the pair `(iy, ix)` with
//!   `n = iy * n_x + ix`,
//! * Khatri-Rao products stack the FIRST factor as the major (slow) index.
//!
//! Decompositions (SVD, eigen) are delegated to LAPACK via `ndarray-linalg`.

use ndarray::{s, Array1, Array2, Array3};
use ndarray_linalg::{Eig, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex matrix, row-major.
pub type CMat = Array2<Complex64>;
/// Complex column vector.
pub type CVec = Array1<Complex64>;

/// Relative singular-value cutoff used by [`pinv`].
pub const PINV_CUTOFF: f64 = 1e-10;

/// Conjugate transpose.
pub fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Kronecker product `a (x) b`.
///
/// Row `(ia * b.nrows() + ib)`, column `(ja * b.ncols() + jb)` holds
/// `a[ia, ja] * b[ib, jb]`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = CMat::zeros((ra * rb, ca * cb));
    for ia in 0..ra {
        for ja in 0..ca {
            let av = a[[ia, ja]];
            for ib in 0..rb {
                for jb in 0..cb {
                    out[[ia * rb + ib, ja * cb + jb]] = av * b[[ib, jb]];
                }
            }
        }
    }
    out
}

/// Column-wise Khatri-Rao product `a (.) b`: column `k` is `a_k (x) b_k`.
pub fn khatri_rao(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.ncols() != b.ncols() {
        return Err(Error::Dim(format!(
            "khatri-rao: {} vs {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, k) = a.dim();
    let rb = b.nrows();
    let mut out = CMat::zeros((ra * rb, k));
    for j in 0..k {
        for ia in 0..ra {
            let av = a[[ia, j]];
            for ib in 0..rb {
                out[[ia * rb + ib, j]] = av * b[[ib, j]];
            }
        }
    }
    Ok(out)
}

/// Dense 3-way tensor with modes (receive antenna, x column, y column).
#[derive(Debug, Clone)]
pub struct Tensor3 {
    pub data: Array3<Complex64>,
}

impl Tensor3 {
    /// Builds the tensor whose entry `(m, ix, iy)` is
    /// `sum_k b_r[m,k] * conj(c_x[ix,k]) * conj(c_y[iy,k])`.
    ///
    /// The conjugates mirror how the factors enter the received snapshot.
    pub fn from_factors(b_r: &CMat, c_x: &CMat, c_y: &CMat) -> Result<Self> {
        let k = b_r.ncols();
        if c_x.ncols() != k || c_y.ncols() != k {
            return Err(Error::Dim("tensor factors must share a column count".into()));
        }
        let (m_r, n_x, n_y) = (b_r.nrows(), c_x.nrows(), c_y.nrows());
        let mut data = Array3::zeros((m_r, n_x, n_y));
        for m in 0..m_r {
            for ix in 0..n_x {
                for iy in 0..n_y {
                    let mut acc = Complex64::ZERO;
                    for f in 0..k {
                        acc += b_r[[m, f]] * c_x[[ix, f]].conj() * c_y[[iy, f]].conj();
                    }
                    data[[m, ix, iy]] = acc;
                }
            }
        }
        Ok(Self { data })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn get(&self, m: usize, ix: usize, iy: usize) -> Complex64 {
        self.data[[m, ix, iy]]
    }

    /// Flattens back to the snapshot layout: entry `(m, iy * n_x + ix)`.
    pub fn received_matrix(&self) -> CMat {
        let (m_r, n_x, n_y) = self.dims();
        let mut y = CMat::zeros((m_r, n_x * n_y));
        for m in 0..m_r {
            for iy in 0..n_y {
                for ix in 0..n_x {
                    y[[m, iy * n_x + ix]] = self.data[[m, ix, iy]];
                }
            }
        }
        y
    }
}

/// Mode-3 unfolding of the snapshot `y` (`m_r x n_x*n_y`).
///
/// Output row `(ix * m_r + m)`, column `iy` holds `y[m, iy * n_x + ix]`; for a
/// snapshot with factors `(B_r, C_x, C_y)` this equals
/// `(conj(C_x) (.) B_r) * C_y^H`.
pub fn mode3_unfold(y: &CMat, n_x: usize, n_y: usize) -> Result<CMat> {
    let (m_r, n) = y.dim();
    if n != n_x * n_y {
        return Err(Error::Dim(format!(
            "mode-3 unfold: {n} columns cannot split into {n_x} x {n_y}"
        )));
    }
    let mut out = CMat::zeros((n_x * m_r, n_y));
    for ix in 0..n_x {
        for m in 0..m_r {
            for iy in 0..n_y {
                out[[ix * m_r + m, iy]] = y[[m, iy * n_x + ix]];
            }
        }
    }
    Ok(out)
}

/// Mode-2 unfolding of the snapshot `y` (`m_r x n_x*n_y`).
///
/// Output row `(iy * m_r + m)`, column `ix` holds `y[m, iy * n_x + ix]`; for
/// a snapshot with factors `(B_r, C_x, C_y)` this equals
/// `(conj(C_y) (.) B_r) * C_x^H`.
pub fn mode2_unfold(y: &CMat, n_x: usize, n_y: usize) -> Result<CMat> {
    let (m_r, n) = y.dim();
    if n != n_x * n_y {
        return Err(Error::Dim(format!(
            "mode-2 unfold: {n} columns cannot split into {n_x} x {n_y}"
        )));
    }
    let mut out = CMat::zeros((n_y * m_r, n_x));
    for iy in 0..n_y {
        for m in 0..m_r {
            for ix in 0..n_x {
                out[[iy * m_r + m, ix]] = y[[m, iy * n_x + ix]];
            }
        }
    }
    Ok(out)
}

/// Mode-1 unfolding of the snapshot: `(conj(C_y) (.) conj(C_x)) * B_r^T`.
///
/// With the column convention `n = iy * n_x + ix` this is the plain
/// transpose of `y`; the dimensions are still checked.
pub fn mode1_unfold(y: &CMat, n_x: usize, n_y: usize) -> Result<CMat> {
    let (_, n) = y.dim();
    if n != n_x * n_y {
        return Err(Error::Dim(format!(
            "mode-1 unfold: {n} columns cannot split into {n_x} x {n_y}"
        )));
    }
    Ok(y.t().to_owned())
}

/// Cyclic row-block selection on a mode-3 unfolding.
///
/// Splits the receive aperture into overlapping windows of `p_r` antennas
/// (`p_r + q_r = m_r + 1`) and concatenates the `q_r` shifted copies
/// column-wise. Output row `(ix * p_r + p)`, column `(q * n_y + iy)` holds
/// `y3[ix * m_r + p + q, iy]`, so the result factors as
/// `(conj(C_x) (.) B_1) * (B_2 (.) conj(C_y))^T` where `B_1` keeps the first
/// `p_r` rows of `B_r` and `B_2` is the `q_r`-row Vandermonde matrix with the
/// same generators and unit first row.
pub fn spatial_smooth(y3: &CMat, p_r: usize, q_r: usize, n_x: usize, m_r: usize) -> Result<CMat> {
    if p_r < 1 || q_r < 1 || p_r + q_r != m_r + 1 {
        return Err(Error::Invalid(format!(
            "smoothing split ({p_r}, {q_r}) invalid for {m_r} receive antennas"
        )));
    }
    let (rows, n_y) = y3.dim();
    if rows != n_x * m_r {
        return Err(Error::Dim(format!(
            "smoothing input has {rows} rows, expected {n_x} * {m_r}"
        )));
    }
    let mut z = CMat::zeros((p_r * n_x, q_r * n_y));
    for ix in 0..n_x {
        for p in 0..p_r {
            for q in 0..q_r {
                for iy in 0..n_y {
                    z[[ix * p_r + p, q * n_y + iy]] = y3[[ix * m_r + p + q, iy]];
                }
            }
        }
    }
    Ok(z)
}

/// Leading part of a singular value decomposition.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// Left singular vectors, one column per retained component.
    pub u: CMat,
    /// Singular values, descending.
    pub s: Array1<f64>,
    /// Conjugate-transposed right singular vectors (`k x ncols`).
    pub vh: CMat,
}

/// Top-`k` singular triples of `m`.
pub fn truncated_svd(m: &CMat, k: usize) -> Result<TruncatedSvd> {
    let (rows, cols) = m.dim();
    if k == 0 || k > rows.min(cols) {
        return Err(Error::Invalid(format!(
            "cannot keep {k} singular triples of a {rows}x{cols} matrix"
        )));
    }
    let (u, sv, vh) = m.svd(true, true)?;
    let u = u.ok_or_else(|| Error::Backend("svd returned no U".into()))?;
    let vh = vh.ok_or_else(|| Error::Backend("svd returned no V^H".into()))?;
    Ok(TruncatedSvd {
        u: u.slice(s![.., ..k]).to_owned(),
        s: sv.slice(s![..k]).to_owned(),
        vh: vh.slice(s![..k, ..]).to_owned(),
    })
}

/// Right eigenpairs of a square matrix: columns `t_k` with `m t_k = l_k t_k`.
pub fn right_eigenvectors(m: &CMat) -> Result<(CMat, CVec)> {
    let (vals, vecs) = m.eig()?;
    Ok((vecs, vals))
}

/// Left eigenpairs of a square matrix.
///
/// Returns `(T, lambda)` where each column `t_k` of `T` satisfies
/// `t_k^H m = lambda_k t_k^H`; computed as right eigenpairs of `m^H` with
/// conjugated eigenvalues.
pub fn left_eigenvectors(m: &CMat) -> Result<(CMat, CVec)> {
    let (vecs, vals) = right_eigenvectors(&adjoint(m))?;
    Ok((vecs, vals.mapv(|z| z.conj())))
}

/// Moore-Penrose pseudo-inverse via SVD.
///
/// Singular values below `PINV_CUTOFF * s_max` are treated as zero.
pub fn pinv(m: &CMat) -> Result<CMat> {
    let (rows, cols) = m.dim();
    let (u, sv, vh) = m.svd(true, true)?;
    let u = u.ok_or_else(|| Error::Backend("svd returned no U".into()))?;
    let vh = vh.ok_or_else(|| Error::Backend("svd returned no V^H".into()))?;
    let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
    let mut out = CMat::zeros((cols, rows));
    if smax == 0.0 {
        return Ok(out);
    }
    let cutoff = PINV_CUTOFF * smax;
    // A^+ = sum_i s_i^{-1} v_i u_i^H over retained triples.
    for (i, &si) in sv.iter().enumerate() {
        if si <= cutoff {
            continue;
        }
        let inv = Complex64::new(1.0 / si, 0.0);
        for r in 0..cols {
            let vr = vh[[i, r]].conj() * inv;
            for c in 0..rows {
                out[[r, c]] += vr * u[[c, i]].conj();
            }
        }
    }
    Ok(out)
}

/// Least-squares solve `argmin_x |a x - b|_F` via [`pinv`].
pub fn lstsq(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dim(format!(
            "lstsq: {} equation rows vs {} rhs rows",
            a.nrows(),
            b.nrows()
        )));
    }
    Ok(pinv(a)?.dot(b))
}

/// Squared Frobenius norm.
pub fn fro_norm_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Column-major vectorization (stacks columns).
pub fn vec_cm(m: &CMat) -> CVec {
    let (rows, cols) = m.dim();
    let mut v = CVec::zeros(rows * cols);
    for c in 0..cols {
        for r in 0..rows {
            v[c * rows + r] = m[[r, c]];
        }
    }
    v
}

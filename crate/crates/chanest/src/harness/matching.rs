//! Path association between an estimate and the ground truth.
//!
//! Estimators return paths in arbitrary order, so error metrics first need
//! the cost-minimizing bijection between estimated and true paths. The cost
//! of pairing two paths is the sum of their three wrapped phase distances;
//! the assignment is solved exactly in `O(K^3)`.

use ndarray::Array2;

use crate::channel::{wrap_dist, MultipathParams};
use crate::error::{Error, Result};

/// Exact minimum-cost assignment on a square cost matrix; returns the column
/// chosen for each row.
fn assign_min_cost(cost: &Array2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    // shortest augmenting path formulation with row/column potentials
    let mut u = vec![0.0_f64; n + 1];
    let mut v = vec![0.0_f64; n + 1];
    let mut col_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        col_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_col = vec![0usize; n];
    for j in 1..=n {
        if col_row[j] > 0 {
            row_col[col_row[j] - 1] = j - 1;
        }
    }
    row_col
}

fn pair_cost(est: &MultipathParams, truth: &MultipathParams, t: usize, e: usize) -> f64 {
    wrap_dist(est.omega_r[e], truth.omega_r[t])
        + wrap_dist(est.omega_x[e], truth.omega_x[t])
        + wrap_dist(est.omega_y[e], truth.omega_y[t])
}

/// Minimum-total-phase-distance bijection; entry `t` is the estimated path
/// assigned to true path `t`.
pub fn match_paths(est: &MultipathParams, truth: &MultipathParams) -> Result<Vec<usize>> {
    let k = truth.k();
    if est.k() != k {
        return Err(Error::Dim(format!(
            "cannot match {} estimated paths to {} true paths",
            est.k(),
            k
        )));
    }
    let cost = Array2::from_shape_fn((k, k), |(t, e)| pair_cost(est, truth, t, e));
    Ok(assign_min_cost(&cost))
}

/// All `3K` wrapped phase distances under the optimal matching, in path
/// order (receive, x, y per true path).
pub fn matched_phase_errors(est: &MultipathParams, truth: &MultipathParams) -> Result<Vec<f64>> {
    let assign = match_paths(est, truth)?;
    let mut out = Vec::with_capacity(3 * truth.k());
    for (t, &e) in assign.iter().enumerate() {
        out.push(wrap_dist(est.omega_r[e], truth.omega_r[t]));
        out.push(wrap_dist(est.omega_x[e], truth.omega_x[t]));
        out.push(wrap_dist(est.omega_y[e], truth.omega_y[t]));
    }
    Ok(out)
}

/// Mean wrapped phase distance over all matched phases.
pub fn param_error(est: &MultipathParams, truth: &MultipathParams) -> Result<f64> {
    let errs = matched_phase_errors(est, truth)?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

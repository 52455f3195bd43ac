//! Small dense row-major kernels. Dimensions stay at or below 16, so no
//! blocking or pivoting strategy beyond partial pivoting in `lu_solve`.

/// Failed Cholesky step: the pivot at `index` fell below the acceptance threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PivotFailure {
    pub index: usize,
    pub pivot: f64,
}

/// Lower-triangular Cholesky factor of a symmetric row-major `n × n` matrix.
///
/// A pivot `d_k = a_kk - Σ l_kj²` is accepted when it exceeds
/// `rel_threshold × max_i a_ii`. On success also returns the smallest pivot.
pub(crate) fn cholesky(
    a: &[f64],
    n: usize,
    rel_threshold: f64,
) -> Result<(Vec<f64>, f64), PivotFailure> {
    debug_assert_eq!(a.len(), n * n);
    let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0_f64, f64::max);
    let floor = rel_threshold * max_diag;
    let mut l = vec![0.0; n * n];
    let mut min_pivot = f64::INFINITY;
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > floor) {
            return Err(PivotFailure { index: j, pivot: d });
        }
        min_pivot = min_pivot.min(d);
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok((l, min_pivot))
}

/// Solves `L y = b` in place.
pub(crate) fn forward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `Lᵀ x = y` in place.
pub(crate) fn backward_substitute(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `(L Lᵀ) x = b` in place.
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    forward_substitute(l, n, b);
    backward_substitute(l, n, b);
}

/// Gaussian elimination with partial pivoting. Returns `None` when a pivot is
/// below `rel_tol` times the largest absolute entry of the matrix.
pub(crate) fn lu_solve(
    mut a: Vec<f64>,
    n: usize,
    mut b: Vec<f64>,
    rel_tol: f64,
) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return None;
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
            .unwrap_or(col);
        if a[pivot_row * n + col].abs() <= rel_tol * scale {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let p = a[col * n + col];
        for r in (col + 1)..n {
            let factor = a[r * n + col] / p;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= factor * a[col * n + k];
            }
            b[r] -= factor * b[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(b)
}

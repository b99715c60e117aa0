//! Thin wrappers over the sparse direct solvers.

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

fn matrix(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> Result<SparseColMat<usize, f64>> {
    let trips: Vec<Triplet<usize, usize, f64>> =
        entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    SparseColMat::try_new_from_triplets(rows, cols, &trips)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
}

fn column(b: &[f64]) -> Mat<f64> {
    Mat::from_fn(b.len(), 1, |i, _| b[i])
}

/// Solves a symmetric positive-definite system by sparse Cholesky.
/// Duplicate entries are summed.
pub fn solve_spd(n: usize, entries: &[(usize, usize, f64)], b: &[f64]) -> Result<Vec<f64>> {
    let a = matrix(n, n, entries)?;
    let llt = a
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let x = llt.solve(column(b));
    Ok((0..n).map(|i| x[(i, 0)]).collect())
}

/// Least-squares solution of an overdetermined sparse system by QR.
pub fn lstsq(rows: usize, cols: usize, entries: &[(usize, usize, f64)], b: &[f64]) -> Result<Vec<f64>> {
    if rows < cols {
        return Err(Error::LinearAlgebra(format!(
            "least squares needs rows ≥ cols, got {rows} × {cols}"
        )));
    }
    let a = matrix(rows, cols, entries)?;
    let qr = a.sp_qr().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let x = qr.solve_lstsq(column(b));
    Ok((0..cols).map(|i| x[(i, 0)]).collect())
}

/// `A·x` for a triplet matrix.
pub fn apply(rows: usize, entries: &[(usize, usize, f64)], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; rows];
    for &(r, c, v) in entries {
        y[r] += v * x[c];
    }
    y
}

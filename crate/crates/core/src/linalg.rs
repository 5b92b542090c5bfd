//! Dense linear algebra helpers built on a singular value decomposition.
//!
//! Ranks, kernels and pseudoinverses all share one convention: a singular value
//! counts as nonzero when it exceeds `rank_tol` times the largest singular
//! value of the matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default relative rank tolerance.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

fn check_finite(a: &DenseMatrix, what: &str) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

fn check_tol(rank_tol: f64) -> Result<()> {
    if rank_tol > 0.0 && rank_tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("rank tolerance must be positive, got {rank_tol}")))
    }
}

fn to_faer(a: &DenseMatrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn svd_failed() -> Error {
    Error::NoConvergence("singular value decomposition did not converge".into())
}

/// Thin SVD `a = U diag(σ) Vᵀ`, returned as `(σ, U, V)`.
fn thin_svd(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix, DenseMatrix)> {
    let svd = to_faer(a).thin_svd().map_err(|_| svd_failed())?;
    let sigma = svd.S().column_vector().iter().copied().collect();
    Ok((sigma, from_faer(svd.U()), from_faer(svd.V())))
}

/// Singular values with the full set of right singular vectors; column `i`
/// of `v` pairs with `sigma[i]` for `i < sigma.len()`, the remaining columns
/// span the complement of the row space.
fn full_right_svd(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let svd = to_faer(a).svd().map_err(|_| svd_failed())?;
    let sigma = svd.S().column_vector().iter().copied().collect();
    Ok((sigma, from_faer(svd.V())))
}

fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    to_faer(a).singular_values().map_err(|_| svd_failed())
}

fn cutoff(sigma: &[f64], rank_tol: f64) -> f64 {
    let smax = sigma.iter().copied().fold(0.0_f64, f64::max);
    rank_tol * smax
}

/// Count of singular values above `rank_tol` times the largest one.
pub fn numerical_rank(a: &DenseMatrix, rank_tol: f64) -> Result<usize> {
    check_tol(rank_tol)?;
    check_finite(a, "matrix")?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0);
    }
    let sigma = singular_values(a)?;
    let smax = sigma.iter().copied().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(sigma.iter().filter(|&&s| s > rank_tol * smax).count())
}

/// Moore-Penrose pseudoinverse via SVD.
pub fn pseudoinverse(a: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    check_tol(rank_tol)?;
    check_finite(a, "matrix")?;
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Ok(DenseMatrix::zeros(cols, rows));
    }
    let (sigma, u, v) = thin_svd(a)?;
    let cut = cutoff(&sigma, rank_tol);
    let mut out = DenseMatrix::zeros(cols, rows);
    for (k, &s) in sigma.iter().enumerate() {
        if s > cut && s > 0.0 {
            out += (v.column(k) / s) * u.column(k).transpose();
        }
    }
    Ok(out)
}

/// Flips the sign of each column so that its largest-magnitude entry is
/// positive. Near ties are resolved toward the lowest row index.
pub fn canonicalize_signs(basis: &mut DenseMatrix) {
    for mut col in basis.column_iter_mut() {
        let amax = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if amax == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .position(|v| v.abs() >= amax * (1.0 - 1e-9))
            .unwrap_or(0);
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Orthonormal basis of the kernel of `a`, one basis vector per column.
///
/// The result has `cols(a) - numerical_rank(a)` columns and a deterministic
/// sign convention (see [`canonicalize_signs`]).
pub fn nullspace_basis(a: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    check_tol(rank_tol)?;
    check_finite(a, "matrix")?;
    let (rows, cols) = a.shape();
    if cols == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    if rows == 0 {
        return Ok(DenseMatrix::identity(cols, cols));
    }
    let (sigma, v) = full_right_svd(a)?;
    let cut = cutoff(&sigma, rank_tol);
    let smax = sigma.iter().copied().fold(0.0_f64, f64::max);
    let kernel: Vec<usize> = (0..cols)
        .filter(|&k| smax == 0.0 || sigma.get(k).is_none_or(|&s| s <= cut))
        .collect();
    let mut basis = DenseMatrix::zeros(cols, kernel.len());
    for (j, &k) in kernel.iter().enumerate() {
        basis.set_column(j, &v.column(k));
    }
    canonicalize_signs(&mut basis);
    Ok(basis)
}

/// `Vᵀ K V` for a symmetric weight matrix `K`.
pub fn weighted_gram(v: &DenseMatrix, k: &DenseMatrix) -> Result<DenseMatrix> {
    if k.nrows() != k.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "weight matrix must be square, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    if v.nrows() != k.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows but weight matrix is {}x{}",
            v.nrows(),
            k.nrows(),
            k.ncols()
        )));
    }
    let g = v.transpose() * k * v;
    // symmetrize away rounding
    Ok((&g + g.transpose()) * 0.5)
}

/// Largest absolute entry, 0 for empty matrices.
pub fn max_abs(a: &DenseMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Spectral norm, 0 for empty matrices.
pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    singular_values(a).map(|s| s.iter().copied().fold(0.0_f64, f64::max)).unwrap_or(f64::NAN)
}

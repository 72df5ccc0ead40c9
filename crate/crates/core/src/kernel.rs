//! Dense numerical primitives: thin SVD, spectral norm and square solves.
//!
//! Everything above this module is built from these three operations, so
//! their accuracy contracts are pinned here: orthonormality and
//! reconstruction residuals of a computed SVD stay below `1e-12` relative
//! to the largest singular value, and square solves are backward stable
//! (partial-pivoted LU).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold below which an LU pivot is treated as an exact zero.
pub const SINGULARITY_TOL: f64 = 1e-14;

/// Thin singular value decomposition `M = U * diag(sigma) * V^T`.
///
/// `u` has orthonormal columns (`m x k`), `v` has orthonormal columns
/// (`p x k`), and `singular_values` is sorted nonincreasing, where
/// `k = min(m, p)`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    /// 1-based access matching the usual subscript convention:
    /// `sigma(1)` is the largest singular value.
    pub fn sigma(&self, i: usize) -> f64 {
        self.singular_values[i - 1]
    }

    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.len() == 0
    }

    /// Largest singular value (zero for an all-zero matrix).
    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// Smallest retained singular value.
    pub fn sigma_min(&self) -> f64 {
        self.singular_values[self.len() - 1]
    }

    /// Frobenius norm of the decomposed matrix, `sqrt(sum sigma_i^2)`.
    pub fn frobenius_norm(&self) -> f64 {
        self.singular_values.norm()
    }

    /// `U * diag(sigma) * V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.singular_values) * self.v.transpose()
    }
}

fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} contains non-finite entries")))
    }
}

/// Thin SVD of a tall (or square) dense matrix, singular values sorted
/// nonincreasing. Deterministic for a given input.
pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    ensure_finite(m, "matrix")?;
    if m.nrows() < m.ncols() {
        return Err(Error::InvalidInput(format!(
            "thin_svd expects rows >= cols, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let svd = m.clone().try_svd(true, true, f64::EPSILON, 0).ok_or(Error::SvdFailed)?;
    let u = svd.u.ok_or(Error::SvdFailed)?;
    let v = svd.v_t.ok_or(Error::SvdFailed)?.transpose();
    Ok(ThinSvd { u, singular_values: svd.singular_values, v })
}

/// Spectral norm (largest singular value). Accepts any shape.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    ensure_finite(m, "matrix")?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let svd = m.clone().try_svd(false, false, f64::EPSILON, 0).ok_or(Error::SvdFailed)?;
    Ok(svd.singular_values.max())
}

/// Solve `M * X = RHS` for square `M` by partial-pivoted LU.
///
/// A pivot smaller than [`SINGULARITY_TOL`] relative to the largest pivot
/// is treated as singular.
pub fn solve_square(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_finite(m, "coefficient matrix")?;
    ensure_finite(rhs, "right-hand side")?;
    if !m.is_square() {
        return Err(Error::InvalidInput(format!(
            "solve_square expects a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() != rhs.nrows() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: matrix is {}x{}, rhs has {} rows",
            m.nrows(),
            m.ncols(),
            rhs.nrows()
        )));
    }
    let lu = m.clone().lu();
    let pivots = lu.u().diagonal();
    let max_pivot = pivots.amax();
    let min_pivot = pivots.abs().min();
    if max_pivot == 0.0 || min_pivot <= SINGULARITY_TOL * max_pivot {
        return Err(Error::SingularSystem);
    }
    lu.solve(rhs).ok_or(Error::SingularSystem)
}

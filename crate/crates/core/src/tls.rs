//! Total least squares problem, genericity check and SVD-based solution.
//!
//! For `A` (`m x n`, `m > n`) and `b`, the TLS problem
//! `min ||[E, f]||_F s.t. b + f in range(A + E)` has a unique solution when
//! `A` has full column rank and `b` is not orthogonal to the left singular
//! subspace of `A` belonging to its smallest singular value; equivalently
//! the smallest singular value of `[A, b]` lies strictly below that of `A`.
//! The solution is read off the trailing right singular vector `v` of
//! `[A, b]`: `x(i) = -v(i) / v(n+1)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{solve_square, thin_svd, ThinSvd};

/// Default relative tolerance for the genericity gap.
pub const DEFAULT_TOL_GAP: f64 = 1e-12;

/// Absolute threshold below which the last entry of the trailing right
/// singular vector counts as zero (the vector is unit norm).
const SOLUTION_DIRECTION_TOL: f64 = 1e-14;

/// The raw input: a dense coefficient matrix and right-hand side.
#[derive(Debug, Clone)]
pub struct TlsProblem {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl TlsProblem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        if n < 1 || m <= n {
            return Err(Error::InvalidInput(format!(
                "TLS problem requires m > n >= 1, got A of size {m}x{n}"
            )));
        }
        if b.len() != m {
            return Err(Error::InvalidInput(format!(
                "right-hand side has length {}, expected {m}",
                b.len()
            )));
        }
        if !a.iter().all(|x| x.is_finite()) || !b.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("non-finite entries in A or b".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    /// The augmented matrix `[A, b]`.
    pub fn augmented(&self) -> DMatrix<f64> {
        let (m, n) = (self.nrows(), self.ncols());
        let mut c = DMatrix::zeros(m, n + 1);
        c.view_mut((0, 0), (m, n)).copy_from(&self.a);
        c.set_column(n, &self.b);
        c
    }
}

/// Both thin SVDs plus the quantities every condition-number formula
/// consumes, extracted from one sign-fixed decomposition of `[A, b]`.
///
/// The trailing right singular vector is flipped, if necessary, so that its
/// last entry is strictly negative; then `alpha = -V(n+1, n+1)` is positive
/// and `beta` is the last row of `V` without its final entry.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Thin SVD of `[A, b]`; singular values `sigma_1 >= ... >= sigma_{n+1}`.
    pub svd_augmented: ThinSvd,
    /// Thin SVD of `A`; singular values `sigma_hat_1 >= ... >= sigma_hat_n`.
    pub svd_a: ThinSvd,
    /// Sign-fixed trailing right singular vector of `[A, b]` (length n+1).
    pub v_last: DVector<f64>,
    /// `-V(n+1, n+1)` after the sign fix; lies in (0, 1].
    pub alpha: f64,
    /// First `n` entries of the last row of `V`.
    pub beta: DVector<f64>,
    /// Leading `n x n` block of `V`.
    pub v11: DMatrix<f64>,
    /// `||b||`, kept for the bounds that consume it.
    pub norm_b: f64,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.svd_a.len()
    }

    /// `sigma_i` of `[A, b]`, 1-based.
    pub fn sigma(&self, i: usize) -> f64 {
        self.svd_augmented.sigma(i)
    }

    /// `sigma_hat_i` of `A`, 1-based.
    pub fn sigma_hat(&self, i: usize) -> f64 {
        self.svd_a.sigma(i)
    }

    pub fn sigma_1(&self) -> f64 {
        self.sigma(1)
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma(self.n())
    }

    pub fn sigma_np1(&self) -> f64 {
        self.sigma(self.n() + 1)
    }

    pub fn sigma_hat_n(&self) -> f64 {
        self.sigma_hat(self.n())
    }

    /// Genericity gap `sigma_hat_n - sigma_{n+1}`.
    pub fn gap(&self) -> f64 {
        self.sigma_hat_n() - self.sigma_np1()
    }

    /// `||[A, b]||_F`, evaluated from the singular values.
    pub fn frobenius_augmented(&self) -> f64 {
        self.svd_augmented.frobenius_norm()
    }
}

/// The TLS solution together with the spectral quantities attached to it.
#[derive(Debug, Clone)]
pub struct TlsSolution {
    /// Solution vector `x` of length `n`.
    pub x: DVector<f64>,
    /// Residual `r = A x - b`.
    pub residual: DVector<f64>,
    /// Smallest singular value of `[A, b]`.
    pub sigma_np1: f64,
    /// `1 / sqrt(1 + ||x||^2)`.
    pub alpha: f64,
    /// Genericity gap `sigma_hat_n - sigma_{n+1}`.
    pub gap: f64,
}

impl TlsSolution {
    pub fn norm_x(&self) -> f64 {
        self.x.norm()
    }

    /// True when the residual vanishes (`b` lies in the range of `A`).
    /// The condition-number formulas remain evaluable in this limit, but
    /// the Kronecker-product Jacobian does not.
    pub fn is_consistent(&self, sigma_1: f64) -> bool {
        self.sigma_np1 <= f64::EPSILON * sigma_1
    }
}

/// Compute both thin SVDs and extract `v_last`, `alpha`, `beta`, `V11`
/// from the sign-fixed right singular matrix of `[A, b]`.
pub fn spectral_data(p: &TlsProblem) -> Result<SpectralData> {
    let n = p.ncols();
    let svd_augmented = thin_svd(&p.augmented())?;
    let svd_a = thin_svd(p.a())?;

    let mut v_last: DVector<f64> = svd_augmented.v.column(n).into();
    if v_last[n].abs() <= SOLUTION_DIRECTION_TOL {
        return Err(Error::NoSolutionDirection);
    }
    if v_last[n] > 0.0 {
        v_last.neg_mut();
    }
    let alpha = -v_last[n];

    // The sign fix touches only the last column of V, so the first n
    // entries of the last row and the leading block are taken verbatim.
    let beta = DVector::from_fn(n, |j, _| svd_augmented.v[(n, j)]);
    let v11 = svd_augmented.v.view((0, 0), (n, n)).into_owned();

    Ok(SpectralData { svd_augmented, svd_a, v_last, alpha, beta, v11, norm_b: p.b().norm() })
}

/// Check existence and uniqueness of the TLS solution.
///
/// Requires, all relative to `sigma_1` of `[A, b]`:
/// - `sigma_hat_n > tol_gap * sigma_1` (full column rank),
/// - `sigma_hat_n - sigma_{n+1} > tol_gap * sigma_1` (strict gap),
/// - `||x_TLS|| > tol_gap` (excludes `A^T b = 0`).
///
/// Returns the gap on success.
pub fn check_genericity(sd: &SpectralData, tol_gap: f64) -> Result<f64> {
    let scale = sd.sigma_1();
    if sd.sigma_hat_n() <= tol_gap * scale {
        return Err(Error::RankDeficient);
    }
    let gap = sd.gap();
    if gap <= tol_gap * scale {
        return Err(Error::NonGeneric { gap, tol: tol_gap * scale });
    }
    // ||x|| = sqrt(1 - alpha^2) / alpha from the unit trailing vector.
    let norm_x = (1.0 - sd.alpha * sd.alpha).max(0.0).sqrt() / sd.alpha;
    if norm_x <= tol_gap {
        return Err(Error::DegenerateSolution);
    }
    Ok(gap)
}

/// Extract the TLS solution from already-computed spectral data.
pub fn solve_from_spectral(p: &TlsProblem, sd: &SpectralData, tol_gap: f64) -> Result<TlsSolution> {
    let gap = check_genericity(sd, tol_gap)?;
    let n = p.ncols();
    let x = DVector::from_fn(n, |i, _| -sd.v_last[i] / sd.v_last[n]);
    let residual = p.a() * &x - p.b();
    Ok(TlsSolution { x, residual, sigma_np1: sd.sigma_np1(), alpha: sd.alpha, gap })
}

/// Solve the TLS problem via the SVD of `[A, b]`.
pub fn solve_tls(p: &TlsProblem, tol_gap: f64) -> Result<TlsSolution> {
    let sd = spectral_data(p)?;
    solve_from_spectral(p, &sd, tol_gap)
}

/// Independent solution route through the shifted normal equations
/// `(A^T A - sigma_{n+1}^2 I) x = A^T b`.
///
/// Less accurate than the SVD route when the genericity gap is tiny; used
/// for cross-checking, never as the primary path.
pub fn solve_tls_normal_equations(p: &TlsProblem, sigma_np1: f64) -> Result<DVector<f64>> {
    let shifted = shifted_gram(p, sigma_np1);
    let atb = p.a().transpose() * p.b();
    let rhs = DMatrix::from_column_slice(atb.len(), 1, atb.as_slice());
    let x = solve_square(&shifted, &rhs)?;
    Ok(x.column(0).into())
}

/// `A^T A - sigma^2 I`.
pub(crate) fn shifted_gram(p: &TlsProblem, sigma: f64) -> DMatrix<f64> {
    let n = p.ncols();
    let mut g = p.a().transpose() * p.a();
    for i in 0..n {
        g[(i, i)] -= sigma * sigma;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// 2x1 problem with golden-ratio spectrum: A = [1, 1]^T, b = [1, 0]^T.
    /// [A, b] = [[1,1],[1,0]] is symmetric with eigenvalues (1±sqrt5)/2, so
    /// everything has a closed form in phi = (1+sqrt5)/2.
    pub(crate) fn golden_problem() -> TlsProblem {
        TlsProblem::new(
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn golden_problem_spectral_quantities() {
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let sd = spectral_data(&golden_problem()).unwrap();
        let scale = (1.0 + phi * phi).sqrt();
        assert_relative_eq!(sd.sigma(1), phi, max_relative = 1e-13);
        assert_relative_eq!(sd.sigma(2), phi - 1.0, max_relative = 1e-13);
        assert_relative_eq!(sd.sigma_hat(1), 2.0_f64.sqrt(), max_relative = 1e-13);
        // Eigenvector of [[1,1],[1,0]] for (1-sqrt5)/2 is (1, -phi)/scale.
        assert_relative_eq!(sd.alpha, phi / scale, max_relative = 1e-12);
        assert_relative_eq!(sd.beta[0].abs(), 1.0 / scale, max_relative = 1e-12);
        assert!(sd.v_last[1] < 0.0);
        assert_relative_eq!(sd.v_last[0], 1.0 / scale, max_relative = 1e-12);
    }

    #[test]
    fn golden_problem_solution() {
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let sol = solve_tls(&golden_problem(), DEFAULT_TOL_GAP).unwrap();
        assert_eq!(sol.x.len(), 1);
        // x = 1/phi = (sqrt5 - 1)/2.
        assert_relative_eq!(sol.x[0], 1.0 / phi, max_relative = 1e-12);
        assert_relative_eq!(sol.alpha, 1.0 / (1.0 + sol.x[0] * sol.x[0]).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn diagonal_augmented_is_degenerate() {
        // A = [2, 0]^T, b = [0, 1]^T: b is orthogonal to range(A), A^T b = 0.
        let p = TlsProblem::new(
            DMatrix::from_column_slice(2, 1, &[2.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        let sd = spectral_data(&p).unwrap();
        assert_relative_eq!(sd.alpha, 1.0, max_relative = 1e-14);
        assert!(sd.beta[0].abs() <= 1e-14);
        assert!(matches!(check_genericity(&sd, DEFAULT_TOL_GAP), Err(Error::DegenerateSolution)));
        assert!(matches!(solve_tls(&p, DEFAULT_TOL_GAP), Err(Error::DegenerateSolution)));
    }

    #[test]
    fn coinciding_smallest_singular_values_are_non_generic() {
        // b orthogonal to range(A) with ||b|| = sigma_hat_n makes the two
        // smallest singular values collide.
        let p = TlsProblem::new(
            DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        )
        .unwrap();
        let sd = spectral_data(&p).unwrap();
        match check_genericity(&sd, DEFAULT_TOL_GAP) {
            Err(Error::NonGeneric { .. }) | Err(Error::DegenerateSolution) => {}
            other => panic!("expected non-generic, got {other:?}"),
        }
    }

    #[test]
    fn rank_deficient_detected() {
        // Nearly rank-deficient A (sigma_hat_2 = 1e-9) with a coarse gap
        // tolerance classifies as rank deficient.
        let p = TlsProblem::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1e-9, 0.0, 0.0]),
            DVector::from_vec(vec![0.5, 0.3, 0.2]),
        )
        .unwrap();
        let sd = spectral_data(&p).unwrap();
        assert!(matches!(check_genericity(&sd, 1e-6), Err(Error::RankDeficient)));
    }

    #[test]
    fn exactly_rank_deficient_has_no_solution_direction() {
        // With A exactly rank deficient the trailing right singular vector
        // of [A, b] lies in the null space of A and its last entry is zero.
        let p = TlsProblem::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
            DVector::from_vec(vec![1.0, 2.0, 3.0]),
        )
        .unwrap();
        assert!(matches!(spectral_data(&p), Err(Error::NoSolutionDirection)));
    }

    #[test]
    fn shape_validation() {
        assert!(TlsProblem::new(DMatrix::zeros(2, 2), DVector::zeros(2)).is_err());
        assert!(TlsProblem::new(DMatrix::zeros(3, 1), DVector::zeros(2)).is_err());
        assert!(TlsProblem::new(
            DMatrix::from_column_slice(2, 1, &[f64::INFINITY, 0.0]),
            DVector::zeros(2)
        )
        .is_err());
    }

    #[test]
    fn normal_equation_route_agrees_on_golden_problem() {
        let p = golden_problem();
        let sol = solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
        let x_ne = solve_tls_normal_equations(&p, sol.sigma_np1).unwrap();
        assert!((&x_ne - &sol.x).norm() <= 1e-8 * sol.x.norm());
    }
}

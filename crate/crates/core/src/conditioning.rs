//! Exact absolute and relative TLS condition numbers by three routes.
//!
//! All three evaluate the operator norm of the Jacobian of the data-to-
//! solution map `(A, b) -> x_TLS`:
//!
//! - `kappa_closed`: `sqrt(1 + ||x||^2) * ||V11^{-T} S||` where `V11` is the
//!   leading `n x n` block of the right singular matrix of `[A, b]` and
//!   `s_i = sqrt(sigma_i^2 + sigma_{n+1}^2) / (sigma_i^2 - sigma_{n+1}^2)`.
//!   Needs only the SVD of `[A, b]`; the solve with `V11^T` has condition
//!   number exactly `1/alpha`.
//! - `kappa_kronecker`: materializes the full `n x (mn + m)` Jacobian `K`
//!   and takes its spectral norm. Exact but quadratic in the data size, so
//!   it is gated by an entry cap.
//! - `kappa_bg_closed`: the Baboulin-Gratton formula (SIMAX 2010), which
//!   consumes the SVDs of both `A` and `[A, b]`.
//!
//! The relative condition number scales any of these by
//! `||[A, b]||_F / ||x_TLS||`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{solve_square, spectral_norm};
use crate::tls::{shifted_gram, SpectralData, TlsProblem, TlsSolution};

/// Default cap on `n * (mn + m)`, the entry count of the materialized
/// Jacobian.
pub const DEFAULT_K_ENTRY_CAP: usize = 4_000_000;

/// Ratio `sigma_1(V11)/sigma_n(V11) = sqrt(1 + ||x||^2)` above which the
/// closed-formula solve is flagged as ill-conditioned.
pub const V11_CONDITION_WARN: f64 = 1e8;

/// Which exact route produced a condition number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Closed,
    Kronecker,
    BaboulinGratton,
}

/// Absolute and relative condition number from one route.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    pub route: Route,
    pub kappa_abs: f64,
    pub kappa_rel: f64,
    /// `||[A, b]||_F / ||x_TLS||`.
    pub scale_factor: f64,
    /// Set when `sqrt(1 + ||x||^2)` exceeds [`V11_CONDITION_WARN`], i.e.
    /// the `V11^T` solve itself is ill-conditioned.
    pub ill_conditioned_solve: bool,
}

impl ConditionReport {
    pub fn new(route: Route, kappa_abs: f64, sd: &SpectralData, sol: &TlsSolution) -> Self {
        let scale_factor = sd.frobenius_augmented() / sol.norm_x();
        ConditionReport {
            route,
            kappa_abs,
            kappa_rel: kappa_abs * scale_factor,
            scale_factor,
            ill_conditioned_solve: 1.0 / sd.alpha > V11_CONDITION_WARN,
        }
    }
}

/// The diagonal weights `s_i = sqrt(sigma_i^2 + sigma_{n+1}^2) /
/// (sigma_i^2 - sigma_{n+1}^2)`, ascending in `i` since the singular
/// values descend.
pub fn weight_diagonal(sd: &SpectralData) -> Result<Vec<f64>> {
    let n = sd.n();
    let s2 = sd.sigma_np1() * sd.sigma_np1();
    (1..=n)
        .map(|i| {
            let si2 = sd.sigma(i) * sd.sigma(i);
            let denom = si2 - s2;
            if denom <= 0.0 {
                return Err(Error::NonGeneric { gap: sd.gap(), tol: 0.0 });
            }
            Ok((si2 + s2).sqrt() / denom)
        })
        .collect()
}

/// Condition number from the SVD of `[A, b]` alone:
/// `sqrt(1 + ||x||^2) * ||V11^{-T} S|| = (1/alpha) * ||V11^{-T} S||`.
pub fn kappa_closed(sd: &SpectralData) -> Result<f64> {
    let n = sd.n();
    let s = weight_diagonal(sd)?;
    let rhs = DMatrix::from_fn(n, n, |i, j| if i == j { s[i] } else { 0.0 });
    let x = solve_square(&sd.v11.transpose(), &rhs)?;
    Ok(spectral_norm(&x)? / sd.alpha)
}

/// Materialize the first-order Jacobian `K` of `x_TLS` with respect to
/// `[vec(dA); db]` (columns of `A` stacked first, then `b`):
///
/// `K = (A^T A - sigma_{n+1}^2 I)^{-1} (2 A^T (r r^T / ||r||^2) G - A^T G - [I_n ⊗ r^T, 0])`
///
/// with `G = [x^T, -1] ⊗ I_m` and `r = A x - b`.
pub fn build_k(p: &TlsProblem, sol: &TlsSolution, entry_cap: usize) -> Result<DMatrix<f64>> {
    let (m, n) = (p.nrows(), p.ncols());
    let cols = m * n + m;
    let entries = n
        .checked_mul(cols)
        .ok_or(Error::TooLarge { entries: usize::MAX, cap: entry_cap })?;
    if entries > entry_cap {
        return Err(Error::TooLarge { entries, cap: entry_cap });
    }

    let r = &sol.residual;
    let r_norm2 = r.norm_squared();
    if r_norm2 == 0.0 || sol.sigma_np1 <= f64::EPSILON * p.augmented().norm() {
        return Err(Error::ConsistentSystem);
    }

    // G = [x_1 I_m, ..., x_n I_m, -I_m], applied implicitly:
    //   G^T r    = [x_1 r; ...; x_n r; -r]
    //   A^T G    = [x_1 A^T, ..., x_n A^T, -A^T]
    //   [I_n ⊗ r^T, 0] has r^T in row i, column block i.
    let at = p.a().transpose();
    let atr = &at * r;

    let mut rhs = DMatrix::zeros(n, cols);
    for block in 0..=n {
        let coeff = if block < n { sol.x[block] } else { -1.0 };
        let mut view = rhs.view_mut((0, block * m), (n, m));
        // 2 A^T r r^T G / ||r||^2 - A^T G
        for i in 0..n {
            let w = 2.0 * atr[i] / r_norm2;
            for j in 0..m {
                view[(i, j)] = coeff * (w * r[j] - at[(i, j)]);
            }
        }
        // - [I_n ⊗ r^T, 0]
        if block < n {
            for j in 0..m {
                view[(block, j)] -= r[j];
            }
        }
    }

    let shifted = shifted_gram(p, sol.sigma_np1);
    solve_square(&shifted, &rhs)
}

/// Condition number as the spectral norm of the materialized Jacobian.
pub fn kappa_kronecker(p: &TlsProblem, sol: &TlsSolution, entry_cap: usize) -> Result<f64> {
    let k = build_k(p, sol, entry_cap)?;
    spectral_norm(&k)
}

/// Baboulin-Gratton closed formula:
/// `sqrt(1 + ||x||^2) * ||Dhat * Vhat^T * V11 * D||` with
/// `Dhat = diag(1/(sigma_hat_i^2 - sigma_{n+1}^2))` and
/// `D = diag(sqrt(sigma_i^2 + sigma_{n+1}^2))`, `i = 1..n`.
pub fn kappa_bg_closed(sd: &SpectralData) -> Result<f64> {
    let n = sd.n();
    let s2 = sd.sigma_np1() * sd.sigma_np1();

    let mut core = sd.svd_a.v.transpose() * &sd.v11;
    for i in 0..n {
        let denom = sd.sigma_hat(i + 1) * sd.sigma_hat(i + 1) - s2;
        if denom <= 0.0 {
            return Err(Error::NonGeneric { gap: sd.gap(), tol: 0.0 });
        }
        let row_scale = 1.0 / denom;
        let col_scale = (sd.sigma(i + 1) * sd.sigma(i + 1) + s2).sqrt();
        for j in 0..n {
            core[(i, j)] *= row_scale;
            core[(j, i)] *= col_scale;
        }
    }
    Ok(spectral_norm(&core)? / sd.alpha)
}

/// Relative condition number `kappa_abs * ||[A, b]||_F / ||x_TLS||`.
pub fn kappa_relative(kappa_abs: f64, p: &TlsProblem, sol: &TlsSolution) -> Result<f64> {
    let norm_x = sol.norm_x();
    if norm_x == 0.0 {
        return Err(Error::DegenerateSolution);
    }
    Ok(kappa_abs * p.augmented().norm() / norm_x)
}

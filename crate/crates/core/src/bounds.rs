//! Lower and upper bounds for the TLS condition number.
//!
//! Every bound takes raw scalars (singular values, `alpha`, norms) so that
//! externally computed quantities — e.g. a few extremal singular values from
//! an iterative solver — can be fed in directly; [`bound_report`] assembles
//! the full set from in-memory spectral data.
//!
//! Notation: `sigma_i` are the singular values of `[A, b]`, `sigma_hat_i`
//! those of `A`, `alpha = 1/sqrt(1 + ||x||^2)` is the magnitude of the last
//! entry of the trailing right singular vector of `[A, b]`, and
//! `s_i = sqrt(sigma_i^2 + sigma_{n+1}^2) / (sigma_i^2 - sigma_{n+1}^2)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tls::{SpectralData, TlsSolution};

/// `alpha` beyond this is treated as 1 and `sqrt(1 - alpha^2)` as an
/// underflow in the last-row-weighted bounds.
const ALPHA_ONE_TOL: f64 = 1e-14;

/// The assembled bound ladder for one problem.
///
/// `None` fields are inapplicable rather than failed: `lower1` needs
/// `n >= 2`, `upper2` needs `alpha <= 1/2`, `gvl_rel` needs
/// `||b|| > sigma_{n+1}`. All values are absolute condition-number bounds
/// except `bg_upper_rel` and `gvl_rel`, which bound the relative condition
/// number directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundSet {
    /// Lower bound from the trailing singular pair of `[A, b]`.
    pub tail_lower: f64,
    /// Matching upper bound; `tail_upper / tail_lower = 1/alpha`.
    pub tail_upper: f64,
    /// Sharp lower bound from all `sigma_i` and the last row of `V`.
    pub sharp_lower: f64,
    /// Sharp upper bound; below `4 * sharp_lower` whenever `alpha <= 1/2`.
    pub sharp_upper: f64,
    /// Lower bound from `sigma_hat_{n-1}`; absent when `n = 1`.
    pub lower1: Option<f64>,
    /// Upper bound from `sigma_hat_n`; always at most the Baboulin-Gratton
    /// bound.
    pub upper1: f64,
    /// Gap lower bound `1 / (alpha * sqrt(sigma_hat_n^2 - sigma_{n+1}^2))`.
    pub lower2: f64,
    /// Gap upper bound with the `rho` amplification; absent when
    /// `alpha > 1/2`.
    pub upper2: Option<f64>,
    /// Baboulin-Gratton upper bound (absolute).
    pub bg_upper_abs: f64,
    /// Baboulin-Gratton upper bound for the relative condition number.
    pub bg_upper_rel: f64,
    /// Golub-Van Loan upper bound for the relative condition number;
    /// absent when `||b|| <= sigma_{n+1}`.
    pub gvl_rel: Option<f64>,
    /// `sigma_{n+1} / sigma_n`.
    pub rho: f64,
}

fn require_generic(small: f64, smaller: f64) -> Result<()> {
    if small > smaller && smaller >= 0.0 {
        Ok(())
    } else {
        Err(Error::NonGeneric { gap: small - smaller, tol: 0.0 })
    }
}

fn require_alpha_open_interval(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 1)")))
    }
}

/// Bounds from the trailing singular pair of `[A, b]` only:
///
/// `lower = s_n / alpha`, `upper = s_n / alpha^2`, so the two always
/// bracket the condition number within a factor `1/alpha`.
pub fn tail_bounds(sigma_n: f64, sigma_np1: f64, alpha: f64) -> Result<(f64, f64)> {
    require_generic(sigma_n, sigma_np1)?;
    require_alpha_open_interval(alpha)?;
    let s_n = (sigma_n * sigma_n + sigma_np1 * sigma_np1).sqrt()
        / (sigma_n * sigma_n - sigma_np1 * sigma_np1);
    let lower = s_n / alpha;
    let upper = lower / alpha;
    Ok((lower, upper))
}

/// Core sandwich for `||W11^{-T} diag(sbar)||` where `W` is orthogonal with
/// corner entry `-alpha` and last row `[beta_1, ..., beta_n, -alpha]`, and
/// `sbar` is positive ascending:
///
/// `lower = ((w / alpha) + rem * sbar_n) / (2 sqrt(1 - alpha^2))`
/// `upper =  (w / alpha) / sqrt(1 - alpha^2) + sbar_n`
///
/// with `w = sqrt(sum beta_i^2 sbar_i^2)` and
/// `rem = sqrt(1 - alpha^2 - beta_n^2)`. The upper bound is below four
/// times the lower whenever `alpha <= 1/2`.
fn corner_sandwich(beta: &[f64], sbar: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if alpha >= 1.0 - ALPHA_ONE_TOL {
        return Err(Error::AlphaNearOne(alpha));
    }
    require_alpha_open_interval(alpha)?;
    let n = sbar.len();
    if beta.len() != n || n == 0 {
        return Err(Error::InvalidInput(format!(
            "weight vectors disagree: {} betas, {} diagonal entries",
            beta.len(),
            n
        )));
    }
    let one_minus_a2 = 1.0 - alpha * alpha;
    let root = one_minus_a2.sqrt();
    let weighted: f64 =
        beta.iter().zip(sbar).map(|(b, s)| b * b * s * s).sum::<f64>().sqrt();
    let s_n = sbar[n - 1];
    // The last row of W is unit, so 1 - alpha^2 - beta_n^2 equals the sum
    // of the leading beta squares; the sum form avoids the cancellation
    // that the difference amplifies through the square root.
    let rem = beta[..n - 1].iter().map(|b| b * b).sum::<f64>().sqrt();
    let lower = 0.5 * (weighted / (alpha * root) + rem / root * s_n);
    let upper = weighted / (alpha * root) + s_n;
    Ok((lower, upper))
}

/// Sharp bounds from every singular value of `[A, b]` and the last row of
/// `V`. `sigmas` holds `sigma_1 >= ... >= sigma_{n+1}`, `beta` the first
/// `n` entries of the last row. Ratio of upper to lower stays below 4 for
/// `alpha <= 1/2`.
pub fn sharp_bounds(sigmas: &[f64], beta: &[f64], alpha: f64) -> Result<(f64, f64)> {
    let n = beta.len();
    if sigmas.len() != n + 1 {
        return Err(Error::InvalidInput(format!(
            "expected {} singular values for {} betas, got {}",
            n + 1,
            n,
            sigmas.len()
        )));
    }
    let sigma_np1 = sigmas[n];
    require_generic(sigmas[n - 1], sigma_np1)?;
    let s: Vec<f64> = sigmas[..n]
        .iter()
        .map(|&si| {
            (si * si + sigma_np1 * sigma_np1).sqrt() / (si * si - sigma_np1 * sigma_np1)
        })
        .collect();
    let (c_lower, c_upper) = corner_sandwich(beta, &s, alpha)?;
    Ok((c_lower / alpha, c_upper / alpha))
}

/// Bounds on `||W11^{-T} diag(sbar)||` for an arbitrary orthogonal `W`
/// with `W(n+1, n+1) = -alpha` and ascending positive `sbar`.
pub fn sandwich_bounds(w: &DMatrix<f64>, sbar: &[f64]) -> Result<(f64, f64)> {
    let k = w.nrows();
    if !w.is_square() || k != sbar.len() + 1 {
        return Err(Error::InvalidInput(format!(
            "expected a {}x{} orthogonal matrix for {} diagonal entries",
            sbar.len() + 1,
            sbar.len() + 1,
            sbar.len()
        )));
    }
    let orth_residual = (w.transpose() * w - DMatrix::identity(k, k)).norm();
    if orth_residual > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "matrix is not orthogonal: residual {orth_residual:.3e}"
        )));
    }
    if sbar.iter().any(|&s| s <= 0.0) || sbar.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::InvalidInput(
            "diagonal entries must be positive and ascending".into(),
        ));
    }
    let alpha = -w[(k - 1, k - 1)];
    require_alpha_open_interval(alpha)?;
    let beta: Vec<f64> = (0..k - 1).map(|j| w[(k - 1, j)]).collect();
    corner_sandwich(&beta, sbar, alpha)
}

/// Bounds from the two trailing singular values of `A`:
/// `lower1` uses `sigma_hat_{n-1}` (pass `None` when `n = 1`), `upper1`
/// uses `sigma_hat_n`.
pub fn coefficient_tail_bounds(
    sigma_hat_nm1: Option<f64>,
    sigma_hat_n: f64,
    sigma_np1: f64,
    alpha: f64,
) -> Result<(Option<f64>, f64)> {
    require_generic(sigma_hat_n, sigma_np1)?;
    require_alpha_open_interval(alpha)?;
    let bound = |sigma: f64| {
        (sigma * sigma + sigma_np1 * sigma_np1).sqrt()
            / (sigma * sigma - sigma_np1 * sigma_np1)
            / alpha
    };
    let lower = sigma_hat_nm1.map(bound);
    Ok((lower, bound(sigma_hat_n)))
}

/// Gap lower bound `1 / (alpha * sqrt(sigma_hat_n^2 - sigma_{n+1}^2))`.
pub fn gap_lower_bound(sigma_hat_n: f64, sigma_np1: f64, alpha: f64) -> Result<f64> {
    require_generic(sigma_hat_n, sigma_np1)?;
    require_alpha_open_interval(alpha)?;
    Ok(1.0 / (alpha * (sigma_hat_n * sigma_hat_n - sigma_np1 * sigma_np1).sqrt()))
}

/// Gap upper bound
/// `sqrt((1 + 31 rho^2) / (1 - rho^2)) / (alpha * sqrt(sigma_hat_n^2 - sigma_{n+1}^2))`
/// with `rho = sigma_{n+1} / sigma_n`. Only valid for `alpha <= 1/2`;
/// returns `Ok(None)` otherwise.
pub fn gap_upper_bound(
    sigma_hat_n: f64,
    sigma_n: f64,
    sigma_np1: f64,
    alpha: f64,
) -> Result<Option<f64>> {
    require_generic(sigma_n, sigma_np1)?;
    require_generic(sigma_hat_n, sigma_np1)?;
    require_alpha_open_interval(alpha)?;
    if alpha > 0.5 {
        return Ok(None);
    }
    let rho = sigma_np1 / sigma_n;
    let amplification = ((1.0 + 31.0 * rho * rho) / (1.0 - rho * rho)).sqrt();
    Ok(Some(amplification * gap_lower_bound(sigma_hat_n, sigma_np1, alpha)?))
}

/// Golub-Van Loan upper bound for the relative condition number (1980):
///
/// `9 sigma_1 / (sigma_n - sigma_{n+1}) * (1 + ||b|| / (sigma_hat_n - sigma_{n+1})) * ||[A,b]||_F / (||b|| - sigma_{n+1})`
///
/// Returns `Ok(None)` when `||b|| <= sigma_{n+1}`.
pub fn golub_van_loan_rel(
    sigma_1: f64,
    sigma_n: f64,
    sigma_np1: f64,
    sigma_hat_n: f64,
    norm_b: f64,
    frob_ab: f64,
) -> Result<Option<f64>> {
    require_generic(sigma_n, sigma_np1)?;
    require_generic(sigma_hat_n, sigma_np1)?;
    if norm_b <= sigma_np1 {
        return Ok(None);
    }
    Ok(Some(
        9.0 * sigma_1 / (sigma_n - sigma_np1)
            * (1.0 + norm_b / (sigma_hat_n - sigma_np1))
            * frob_ab
            / (norm_b - sigma_np1),
    ))
}

/// Baboulin-Gratton upper bounds (2010): absolute
/// `sqrt(sigma_1^2 + sigma_{n+1}^2) / (alpha (sigma_hat_n^2 - sigma_{n+1}^2))`
/// and the matching relative bound scaled by `||[A,b]||_F / ||x||`.
pub fn baboulin_gratton_upper(
    sigma_1: f64,
    sigma_np1: f64,
    sigma_hat_n: f64,
    alpha: f64,
    frob_ab: f64,
    norm_x: f64,
) -> Result<(f64, f64)> {
    require_generic(sigma_hat_n, sigma_np1)?;
    require_alpha_open_interval(alpha)?;
    if norm_x <= 0.0 {
        return Err(Error::DegenerateSolution);
    }
    let abs = (sigma_1 * sigma_1 + sigma_np1 * sigma_np1).sqrt()
        / (sigma_hat_n * sigma_hat_n - sigma_np1 * sigma_np1)
        / alpha;
    Ok((abs, abs * frob_ab / norm_x))
}

/// Evaluate the whole ladder for one problem.
pub fn bound_report(sd: &SpectralData, sol: &TlsSolution) -> Result<BoundSet> {
    let n = sd.n();
    let alpha = sd.alpha;
    let sigma_n = sd.sigma_n();
    let sigma_np1 = sd.sigma_np1();
    let sigma_hat_n = sd.sigma_hat_n();
    let frob_ab = sd.frobenius_augmented();
    let norm_x = sol.norm_x();

    let (tail_lower, tail_upper) = tail_bounds(sigma_n, sigma_np1, alpha)?;
    let sigmas: Vec<f64> = (1..=n + 1).map(|i| sd.sigma(i)).collect();
    let (sharp_lower, sharp_upper) = sharp_bounds(&sigmas, sd.beta.as_slice(), alpha)?;
    let sigma_hat_nm1 = (n >= 2).then(|| sd.sigma_hat(n - 1));
    let (lower1, upper1) = coefficient_tail_bounds(sigma_hat_nm1, sigma_hat_n, sigma_np1, alpha)?;
    let lower2 = gap_lower_bound(sigma_hat_n, sigma_np1, alpha)?;
    let upper2 = gap_upper_bound(sigma_hat_n, sigma_n, sigma_np1, alpha)?;
    let (bg_upper_abs, bg_upper_rel) =
        baboulin_gratton_upper(sd.sigma_1(), sigma_np1, sigma_hat_n, alpha, frob_ab, norm_x)?;
    let gvl_rel =
        golub_van_loan_rel(sd.sigma_1(), sigma_n, sigma_np1, sigma_hat_n, sd.norm_b, frob_ab)?;

    Ok(BoundSet {
        tail_lower,
        tail_upper,
        sharp_lower,
        sharp_upper,
        lower1,
        upper1,
        lower2,
        upper2,
        bg_upper_abs,
        bg_upper_rel,
        gvl_rel,
        rho: sigma_np1 / sigma_n,
    })
}

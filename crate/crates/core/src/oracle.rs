//! Model-independent verification of the solution map's first-order
//! behavior: finite-difference Jacobians, a condition-number estimate from
//! them, and a log-log slope check of the quadratic remainder in
//! `x(A + dA, b + db) = x + K [vec(dA); db] + O(||[dA, db]||_F^2)`.
//!
//! Input coordinates are always ordered as the columns of `A` stacked
//! first, then `b`, matching the column layout of the materialized
//! Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::spectral_norm;
use crate::tls::{solve_tls, TlsProblem, DEFAULT_TOL_GAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    Forward,
    Central,
}

#[derive(Debug, Clone)]
pub struct FdConfig {
    /// Differencing step; `None` picks `sqrt(eps) * ||[A, b]||_F`.
    pub step: Option<f64>,
    pub scheme: FdScheme,
    /// Cap on the number of input coordinates `m * (n + 1)`.
    pub max_inputs: usize,
    /// Gap tolerance passed to the perturbed solves.
    pub tol_gap: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            step: None,
            scheme: FdScheme::Central,
            max_inputs: 5000,
            tol_gap: DEFAULT_TOL_GAP,
        }
    }
}

impl FdConfig {
    fn resolved_step(&self, p: &TlsProblem) -> Result<f64> {
        let step = match self.step {
            Some(s) => s,
            None => f64::EPSILON.sqrt() * p.augmented().norm(),
        };
        if step > 0.0 && step.is_finite() {
            Ok(step)
        } else {
            Err(Error::InvalidInput(format!("non-positive finite step required, got {step}")))
        }
    }
}

/// Number of input coordinates of the data-to-solution map.
pub fn input_dim(p: &TlsProblem) -> usize {
    p.nrows() * (p.ncols() + 1)
}

/// `(A, b) + scale * delta` where `delta` is a flat input-coordinate
/// vector.
fn perturbed_problem(p: &TlsProblem, scale: f64, delta: &DVector<f64>) -> Result<TlsProblem> {
    let (m, n) = (p.nrows(), p.ncols());
    let mut a = p.a().clone();
    let mut b = p.b().clone();
    for j in 0..n {
        for i in 0..m {
            a[(i, j)] += scale * delta[j * m + i];
        }
    }
    for i in 0..m {
        b[i] += scale * delta[m * n + i];
    }
    TlsProblem::new(a, b)
}

fn solve_coordinatewise(p: &TlsProblem, coord: usize, offset: f64, tol_gap: f64) -> Result<DVector<f64>> {
    let (m, n) = (p.nrows(), p.ncols());
    let mut a = p.a().clone();
    let mut b = p.b().clone();
    if coord < m * n {
        a[(coord % m, coord / m)] += offset;
    } else {
        b[coord - m * n] += offset;
    }
    let perturbed = TlsProblem::new(a, b)?;
    solve_tls(&perturbed, tol_gap)
        .map(|sol| sol.x)
        .map_err(|_| Error::NonGenericUnderPerturbation)
}

/// Finite-difference Jacobian of `x_TLS` with respect to every entry of
/// `A` (column-major) and `b`. Shape `n x m(n+1)`.
pub fn fd_jacobian(p: &TlsProblem, cfg: &FdConfig) -> Result<DMatrix<f64>> {
    let dim = input_dim(p);
    if dim > cfg.max_inputs {
        return Err(Error::TooLarge { entries: dim, cap: cfg.max_inputs });
    }
    let h = cfg.resolved_step(p)?;
    let n = p.ncols();
    let base = match cfg.scheme {
        FdScheme::Forward => Some(solve_tls(p, cfg.tol_gap)?.x),
        FdScheme::Central => None,
    };

    let mut jac = DMatrix::zeros(n, dim);
    for j in 0..dim {
        let column = match cfg.scheme {
            FdScheme::Central => {
                let plus = solve_coordinatewise(p, j, h, cfg.tol_gap)?;
                let minus = solve_coordinatewise(p, j, -h, cfg.tol_gap)?;
                (plus - minus) / (2.0 * h)
            }
            FdScheme::Forward => {
                let plus = solve_coordinatewise(p, j, h, cfg.tol_gap)?;
                (plus - base.as_ref().unwrap()) / h
            }
        };
        jac.set_column(j, &column);
    }
    Ok(jac)
}

/// Condition number estimate: spectral norm of the finite-difference
/// Jacobian.
pub fn kappa_fd(p: &TlsProblem, cfg: &FdConfig) -> Result<f64> {
    spectral_norm(&fd_jacobian(p, cfg)?)
}

/// Points with remainder below `100 * eps * max(1, ||x||)` sit at the
/// floating-point noise floor and are dropped from the slope fit.
fn noise_floor(norm_x: f64) -> f64 {
    100.0 * f64::EPSILON * norm_x.max(1.0)
}

/// Fit the slope of `log remainder(eps)` against `log eps` where
/// `remainder(eps) = ||x(data + eps * direction) - x - eps * K * direction||`.
///
/// A slope near 2 confirms that `K` captures the full first-order term.
/// Needs at least three epsilons above the noise floor.
pub fn expansion_order_check(
    p: &TlsProblem,
    k: &DMatrix<f64>,
    direction: &DVector<f64>,
    epsilons: &[f64],
) -> Result<f64> {
    let dim = input_dim(p);
    if direction.len() != dim {
        return Err(Error::InvalidInput(format!(
            "direction has length {}, expected {dim}",
            direction.len()
        )));
    }
    if (direction.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput("direction must have unit norm".into()));
    }
    if k.nrows() != p.ncols() || k.ncols() != dim {
        return Err(Error::InvalidInput(format!(
            "Jacobian has shape {}x{}, expected {}x{dim}",
            k.nrows(),
            k.ncols(),
            p.ncols()
        )));
    }

    let base = solve_tls(p, DEFAULT_TOL_GAP)?;
    let k_dir = k * direction;
    let floor = noise_floor(base.norm_x());

    let mut points = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("epsilons must be positive, got {eps}")));
        }
        let perturbed = perturbed_problem(p, eps, direction)?;
        let x_tilde = solve_tls(&perturbed, DEFAULT_TOL_GAP)
            .map_err(|_| Error::NonGenericUnderPerturbation)?
            .x;
        let remainder = (&x_tilde - &base.x - eps * &k_dir).norm();
        if remainder > floor {
            points.push((eps.ln(), remainder.ln()));
        }
    }
    if points.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: points.len() });
    }

    // Least-squares line through (log eps, log remainder).
    let len = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / len;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Ok(sxy / sxx)
}

/// Default epsilon grid for the slope check: resolvable remainders well
/// above the noise floor.
pub fn default_epsilons() -> Vec<f64> {
    vec![1e-3, 3e-4, 1e-4, 3e-5, 1e-5]
}

/// Deterministic unit vector in input space for seeded direction picks.
pub fn seeded_unit_direction(dim: usize, seed: u64) -> DVector<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.gen::<f64>() - 0.5);
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditioning::{build_k, DEFAULT_K_ENTRY_CAP};
    use crate::tls::solve_tls;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn golden_problem() -> TlsProblem {
        TlsProblem::new(
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap()
    }

    fn unit_direction(dim: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(dim, |_, _| rng.gen::<f64>() - 0.5);
        let n = v.norm();
        v / n
    }

    #[test]
    fn fd_matches_materialized_jacobian_on_golden_problem() {
        let p = golden_problem();
        let sol = solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
        let k = build_k(&p, &sol, DEFAULT_K_ENTRY_CAP).unwrap();
        let j = fd_jacobian(&p, &FdConfig::default()).unwrap();
        assert_eq!(j.shape(), (1, 4));
        assert!((&j - &k).norm() <= 1e-6, "difference {:.3e}", (&j - &k).norm());
        let kf = kappa_fd(&p, &FdConfig::default()).unwrap();
        assert!((kf - k.norm()).abs() <= 1e-6 * k.norm());
    }

    #[test]
    fn central_scheme_is_second_order() {
        // With steps large enough that truncation dominates rounding, the
        // central-difference error drops by about 4x when the step halves.
        let p = golden_problem();
        let sol = solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
        let k = build_k(&p, &sol, DEFAULT_K_ENTRY_CAP).unwrap();
        let err = |h: f64| {
            let cfg = FdConfig { step: Some(h), ..FdConfig::default() };
            (fd_jacobian(&p, &cfg).unwrap() - &k).norm()
        };
        let ratio = err(2e-3) / err(1e-3);
        assert!((2.5..6.0).contains(&ratio), "error ratio {ratio}");
    }

    #[test]
    fn forward_scheme_is_first_order() {
        let p = golden_problem();
        let sol = solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
        let k = build_k(&p, &sol, DEFAULT_K_ENTRY_CAP).unwrap();
        let err = |h: f64| {
            let cfg =
                FdConfig { step: Some(h), scheme: FdScheme::Forward, ..FdConfig::default() };
            (fd_jacobian(&p, &cfg).unwrap() - &k).norm()
        };
        let ratio = err(2e-3) / err(1e-3);
        assert!((1.5..3.0).contains(&ratio), "error ratio {ratio}");
    }

    #[test]
    fn expansion_slope_is_quadratic() {
        let p = golden_problem();
        let sol = solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
        let k = build_k(&p, &sol, DEFAULT_K_ENTRY_CAP).unwrap();
        let d = unit_direction(4, 3);
        let slope = expansion_order_check(&p, &k, &d, &default_epsilons()).unwrap();
        assert!((1.8..=2.2).contains(&slope), "slope {slope}");
    }

    #[test]
    fn tiny_epsilons_fall_below_noise_floor() {
        let p = golden_problem();
        let sol = solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
        let k = build_k(&p, &sol, DEFAULT_K_ENTRY_CAP).unwrap();
        let d = unit_direction(4, 3);
        let result = expansion_order_check(&p, &k, &d, &[1e-12, 5e-13, 2e-13]);
        assert!(matches!(result, Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn input_cap_enforced() {
        let p = golden_problem();
        let cfg = FdConfig { max_inputs: 2, ..FdConfig::default() };
        assert!(matches!(fd_jacobian(&p, &cfg), Err(Error::TooLarge { .. })));
    }
}

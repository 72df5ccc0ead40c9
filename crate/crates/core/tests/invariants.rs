//! Structural identities that every generic TLS solution must satisfy,
//! checked across the whole generator battery.

mod common;

use common::{generic_battery, well_gapped_battery};
use tlscond::kernel::thin_svd;
use tlscond::tls::{solve_from_spectral, solve_tls_normal_equations, spectral_data};
use tlscond::{DVector, DEFAULT_TOL_GAP};

#[test]
fn squared_residual_matches_sigma() {
    // sigma_{n+1}^2 = ||r||^2 / (1 + ||x||^2)
    for (id, p) in generic_battery() {
        let sol = tlscond::solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
        let lhs = sol.sigma_np1 * sol.sigma_np1;
        let rhs = sol.residual.norm_squared() / (1.0 + sol.norm_x() * sol.norm_x());
        assert!((lhs - rhs).abs() <= 1e-8 * lhs, "{id}: {lhs} vs {rhs}");
    }
}

#[test]
fn gradient_identity() {
    // A^T r = sigma_{n+1}^2 x
    for (id, p) in generic_battery() {
        let sol = tlscond::solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
        let s2 = sol.sigma_np1 * sol.sigma_np1;
        let lhs = p.a().transpose() * &sol.residual;
        let err = (&lhs - s2 * &sol.x).norm();
        assert!(err <= 1e-8 * s2 * (1.0 + sol.norm_x()), "{id}: residual gradient off by {err}");
    }
}

#[test]
fn trailing_singular_vector_encodes_solution() {
    // v_{n+1} = [x; -1] / sqrt(1 + ||x||^2) after the sign fix.
    for (id, p) in generic_battery() {
        let sd = spectral_data(&p).unwrap();
        let sol = solve_from_spectral(&p, &sd, DEFAULT_TOL_GAP).unwrap();
        let n = p.ncols();
        let scale = 1.0 / (1.0 + sol.norm_x() * sol.norm_x()).sqrt();
        let expected = DVector::from_fn(n + 1, |i, _| {
            if i < n {
                scale * sol.x[i]
            } else {
                -scale
            }
        });
        let err = (&sd.v_last - &expected).norm();
        assert!(err <= 1e-10, "{id}: v_last off by {err}");
    }
}

#[test]
fn leading_block_singular_values_are_ones_and_alpha() {
    // The leading n x n block of V has singular values 1 (n-1 times) and
    // alpha.
    for (id, p) in generic_battery() {
        let sd = spectral_data(&p).unwrap();
        let n = p.ncols();
        let sv = thin_svd(&sd.v11).unwrap();
        for i in 1..n {
            assert!((sv.sigma(i) - 1.0).abs() <= 1e-8, "{id}: sigma_{i}(V11) = {}", sv.sigma(i));
        }
        assert!(
            (sv.sigma(n) - sd.alpha).abs() <= 1e-8 * sd.alpha.max(1e-8),
            "{id}: sigma_n(V11) = {} vs alpha = {}",
            sv.sigma(n),
            sd.alpha
        );
    }
}

#[test]
fn gap_inequality() {
    // |u_hat_n^T b| / (2 ||x||) <= sigma_hat_n - sigma_{n+1} <= ||b|| / ||x||
    for (id, p) in generic_battery() {
        let sd = spectral_data(&p).unwrap();
        let sol = solve_from_spectral(&p, &sd, DEFAULT_TOL_GAP).unwrap();
        let n = p.ncols();
        let u_hat_n = sd.svd_a.u.column(n - 1);
        let proj = u_hat_n.dot(p.b()).abs();
        let gap = sol.gap;
        let norm_x = sol.norm_x();
        assert!(
            proj / (2.0 * norm_x) <= gap * (1.0 + 1e-12) + 1e-15,
            "{id}: lower gap bound violated"
        );
        assert!(
            gap <= p.b().norm() / norm_x * (1.0 + 1e-12),
            "{id}: upper gap bound violated"
        );
    }
}

#[test]
fn svd_and_normal_equation_routes_agree() {
    // On problems with healthy gaps the two solution formulas agree to
    // 1e-8 relative; tiny gaps degrade the shifted normal equations.
    for (id, p) in well_gapped_battery() {
        let sol = tlscond::solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
        let x_ne = solve_tls_normal_equations(&p, sol.sigma_np1).unwrap();
        let err = (&x_ne - &sol.x).norm() / sol.norm_x();
        assert!(err <= 1e-8, "{id}: routes differ by {err:.3e}");
    }
}

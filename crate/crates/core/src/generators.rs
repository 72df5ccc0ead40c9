//! Seeded test-problem generators.
//!
//! Five families:
//! - `bg_example`: a two-Householder construction with a fully prescribed
//!   singular spectrum `diag(n, n-1, ..., 1, 1-e_p)`, so the trailing gap
//!   of `[A, b]` is exactly `e_p`.
//! - `vanhuffel`: the deterministic `m x (m-2)` example of Van Huffel and
//!   Vandewalle with closed-form solution and spectrum.
//! - `toeplitz_blur`: the Kamm-Nagy lower-Toeplitz Gaussian blur matrix
//!   with banded Toeplitz noise.
//! - `controlled_alpha`: replaces the right singular matrix of a random
//!   matrix by an orthogonal matrix with prescribed corner entry `-alpha`,
//!   which dials in the conditioning.
//! - `gaussian`: i.i.d. standard normal entries.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed
//! (ChaCha8 stream), so reruns are bit-identical.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{spectral_norm, thin_svd};
use crate::tls::TlsProblem;

pub const DEFAULT_OMEGA: usize = 8;
pub const DEFAULT_BETA_BLUR: f64 = 1.25;
pub const DEFAULT_GAMMA: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    BgExample,
    Vanhuffel,
    ToeplitzBlur,
    ControlledAlpha,
    Gaussian,
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::BgExample => "bg_example",
            GeneratorKind::Vanhuffel => "vanhuffel",
            GeneratorKind::ToeplitzBlur => "toeplitz_blur",
            GeneratorKind::ControlledAlpha => "controlled_alpha",
            GeneratorKind::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bg_example" => Ok(GeneratorKind::BgExample),
            "vanhuffel" => Ok(GeneratorKind::Vanhuffel),
            "toeplitz_blur" => Ok(GeneratorKind::ToeplitzBlur),
            "controlled_alpha" => Ok(GeneratorKind::ControlledAlpha),
            "gaussian" => Ok(GeneratorKind::Gaussian),
            other => Err(Error::InvalidInput(format!("unknown generator kind '{other}'"))),
        }
    }
}

/// Flat, serializable description of one generator invocation.
///
/// Shape rules: `vanhuffel` forces `n = m - 2` and `toeplitz_blur` forces
/// `n = m - 2*omega`; for those kinds `n` may be left unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_blur: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn bg_example(m: usize, n: usize, e_p: f64, seed: u64) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::BgExample,
            m,
            n: Some(n),
            e_p: Some(e_p),
            alpha: None,
            omega: None,
            beta_blur: None,
            gamma: None,
            seed,
        }
    }

    pub fn vanhuffel(m: usize) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::Vanhuffel,
            m,
            n: None,
            e_p: None,
            alpha: None,
            omega: None,
            beta_blur: None,
            gamma: None,
            seed: 0,
        }
    }

    pub fn toeplitz_blur(m: usize, seed: u64) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::ToeplitzBlur,
            m,
            n: None,
            e_p: None,
            alpha: None,
            omega: None,
            beta_blur: None,
            gamma: None,
            seed,
        }
    }

    pub fn controlled_alpha(m: usize, n: usize, alpha: f64, seed: u64) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::ControlledAlpha,
            m,
            n: Some(n),
            e_p: None,
            alpha: Some(alpha),
            omega: None,
            beta_blur: None,
            gamma: None,
            seed,
        }
    }

    pub fn gaussian(m: usize, n: usize, seed: u64) -> Self {
        GeneratorSpec {
            kind: GeneratorKind::Gaussian,
            m,
            n: Some(n),
            e_p: None,
            alpha: None,
            omega: None,
            beta_blur: None,
            gamma: None,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Seed for the `i`-th sample of a batch based on this spec.
    pub fn derived_seed(&self, index: u64) -> u64 {
        self.seed.wrapping_add(index)
    }

    /// Compact identifier used in result rows, e.g. `vanhuffel(m=200)`.
    /// Deliberately comma-free so it can sit in a CSV field unquoted.
    pub fn id(&self) -> String {
        let mut parts = vec![format!("m={}", self.m)];
        if let Some(n) = self.n {
            parts.push(format!("n={n}"));
        }
        if let Some(e_p) = self.e_p {
            parts.push(format!("e_p={e_p:e}"));
        }
        if let Some(alpha) = self.alpha {
            parts.push(format!("alpha={alpha:e}"));
        }
        if let Some(omega) = self.omega {
            parts.push(format!("omega={omega}"));
        }
        if let Some(beta) = self.beta_blur {
            parts.push(format!("beta={beta}"));
        }
        if let Some(gamma) = self.gamma {
            parts.push(format!("gamma={gamma}"));
        }
        if self.kind != GeneratorKind::Vanhuffel {
            parts.push(format!("seed={}", self.seed));
        }
        format!("{}({})", self.kind.name(), parts.join(" "))
    }

    pub fn generate(&self) -> Result<TlsProblem> {
        match self.kind {
            GeneratorKind::BgExample => {
                let n = self.require_n()?;
                let e_p = self
                    .e_p
                    .ok_or_else(|| Error::InvalidInput("bg_example requires e_p".into()))?;
                gen_bg_example(self.m, n, e_p, self.seed)
            }
            GeneratorKind::Vanhuffel => gen_vanhuffel(self.m),
            GeneratorKind::ToeplitzBlur => gen_toeplitz_blur(
                self.m,
                self.omega.unwrap_or(DEFAULT_OMEGA),
                self.beta_blur.unwrap_or(DEFAULT_BETA_BLUR),
                self.gamma.unwrap_or(DEFAULT_GAMMA),
                self.seed,
            ),
            GeneratorKind::ControlledAlpha => {
                let n = self.require_n()?;
                let alpha = self
                    .alpha
                    .ok_or_else(|| Error::InvalidInput("controlled_alpha requires alpha".into()))?;
                gen_controlled_alpha(self.m, n, alpha, self.seed)
            }
            GeneratorKind::Gaussian => gen_gaussian(self.m, self.require_n()?, self.seed),
        }
    }

    fn require_n(&self) -> Result<usize> {
        self.n.ok_or_else(|| {
            Error::InvalidInput(format!("generator '{}' requires n", self.kind.name()))
        })
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vector(len: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn unit_gaussian_vector(len: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v = gaussian_vector(len, rng);
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Haar-distributed random orthogonal matrix: QR of a Gaussian matrix with
/// the columns of `Q` sign-corrected by the diagonal of `R`.
pub fn haar_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let qr = gaussian_matrix(n, n, rng).qr();
    let r_diag = qr.r().diagonal().into_owned();
    let mut q = qr.q();
    for j in 0..n {
        if r_diag[j] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn split_problem(c: DMatrix<f64>) -> Result<TlsProblem> {
    let n = c.ncols() - 1;
    let a = c.view((0, 0), (c.nrows(), n)).into_owned();
    let b: DVector<f64> = c.column(n).into();
    TlsProblem::new(a, b)
}

/// `[A, b] = Q [Sigma; O] V^T` with Householder `Q = I - 2yy^T`,
/// `V = I - 2zz^T` and `Sigma = diag(n, n-1, ..., 1, 1-e_p)`, so the
/// singular values of `[A, b]` are exactly the diagonal of `Sigma` and
/// `sigma_n - sigma_{n+1} = e_p`.
pub fn gen_bg_example(m: usize, n: usize, e_p: f64, seed: u64) -> Result<TlsProblem> {
    if n < 1 || m <= n {
        return Err(Error::InvalidInput(format!("need m > n >= 1, got m={m}, n={n}")));
    }
    if !(e_p > 0.0 && e_p < 1.0) {
        return Err(Error::InvalidInput(format!("e_p must lie in (0, 1), got {e_p}")));
    }
    let mut rng = rng_for(seed);
    let y = unit_gaussian_vector(m, &mut rng);
    let z = unit_gaussian_vector(n + 1, &mut rng);

    // Q * [Sigma; O] column by column: column j is sigma_j * (e_j - 2 y_j y).
    let mut c = DMatrix::zeros(m, n + 1);
    for j in 0..=n {
        let sigma_j = if j < n { (n - j) as f64 } else { 1.0 - e_p };
        let mut col = c.column_mut(j);
        for i in 0..m {
            let e = if i == j { 1.0 } else { 0.0 };
            col[i] = sigma_j * (e - 2.0 * y[i] * y[j]);
        }
    }
    // Right-multiply by V^T = V = I - 2zz^T.
    let cz = &c * &z;
    let c = c - 2.0 * cz * z.transpose();
    split_problem(c)
}

/// Deterministic Van Huffel-Vandewalle example: `A` is `m x (m-2)` with
/// `m - 1` on the diagonal of the top block and `-1` everywhere else, `b`
/// is `-1` except `b(m-1) = m - 1`. Closed forms: `x = -ones`,
/// `sigma_hat_n = sqrt(2m)`, `sigma_{n+1} = sqrt(m)`,
/// `alpha = 1/sqrt(m-1)`.
pub fn gen_vanhuffel(m: usize) -> Result<TlsProblem> {
    if m < 4 {
        return Err(Error::InvalidInput(format!("vanhuffel requires m >= 4, got {m}")));
    }
    let n = m - 2;
    let a = DMatrix::from_fn(m, n, |i, j| if i == j { (m - 1) as f64 } else { -1.0 });
    let b = DVector::from_fn(m, |i, _| if i == m - 2 { (m - 1) as f64 } else { -1.0 });
    TlsProblem::new(a, b)
}

/// Discrete Gaussian point-spread kernel
/// `t_k = exp(-(omega - k + 1)^2 / (2 beta^2)) / sqrt(2 pi beta^2)`,
/// `k = 1..2*omega+1`.
fn blur_kernel(omega: usize, beta: f64) -> Vec<f64> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * beta * beta).sqrt();
    (1..=2 * omega + 1)
        .map(|k| {
            let d = omega as f64 - k as f64 + 1.0;
            norm * (-d * d / (2.0 * beta * beta)).exp()
        })
        .collect()
}

fn banded_lower_toeplitz(m: usize, n: usize, first_col: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |i, j| {
        if i >= j && i - j < first_col.len() {
            first_col[i - j]
        } else {
            0.0
        }
    })
}

/// Kamm-Nagy blur test problem: `A = Tbar + E`, `b = ones + e` where
/// `Tbar` is the `m x (m - 2*omega)` lower Toeplitz matrix built from the
/// Gaussian kernel, `E` is a random Toeplitz matrix with the same band
/// structure scaled to `||E|| = gamma * ||Tbar||` and `e` is Gaussian
/// noise scaled to `||e|| = gamma * sqrt(m)`.
pub fn gen_toeplitz_blur(
    m: usize,
    omega: usize,
    beta_blur: f64,
    gamma: f64,
    seed: u64,
) -> Result<TlsProblem> {
    if omega == 0 || m <= 2 * omega + 1 {
        return Err(Error::InvalidInput(format!(
            "toeplitz_blur requires m > 2*omega + 1 > 1, got m={m}, omega={omega}"
        )));
    }
    if beta_blur <= 0.0 || gamma < 0.0 {
        return Err(Error::InvalidInput(
            "toeplitz_blur requires beta_blur > 0 and gamma >= 0".into(),
        ));
    }
    let n = m - 2 * omega;
    let kernel = blur_kernel(omega, beta_blur);
    let t_bar = banded_lower_toeplitz(m, n, &kernel);
    let g_bar = DVector::from_element(m, 1.0);

    if gamma == 0.0 {
        return TlsProblem::new(t_bar, g_bar);
    }

    let mut rng = rng_for(seed);
    let noise_col: Vec<f64> = (0..2 * omega + 1).map(|_| rng.sample(StandardNormal)).collect();
    let mut e_mat = banded_lower_toeplitz(m, n, &noise_col);
    let e_norm = spectral_norm(&e_mat)?;
    if e_norm > 0.0 {
        e_mat *= gamma * spectral_norm(&t_bar)? / e_norm;
    }
    let mut e_vec = gaussian_vector(m, &mut rng);
    let ev_norm = e_vec.norm();
    if ev_norm > 0.0 {
        e_vec *= gamma * g_bar.norm() / ev_norm;
    }
    TlsProblem::new(t_bar + e_mat, g_bar + e_vec)
}

fn alpha_orthogonal_from(
    u_bar: &DMatrix<f64>,
    v_bar: &DMatrix<f64>,
    alpha: f64,
) -> DMatrix<f64> {
    let n = u_bar.nrows();
    let u = u_bar.column(n - 1);
    let vt = v_bar.column(n - 1).transpose();
    let mut v11 = alpha * u * &vt;
    if n > 1 {
        v11 += u_bar.columns(0, n - 1) * v_bar.columns(0, n - 1).transpose();
    }
    let t = (1.0 - alpha * alpha).sqrt();
    let mut v = DMatrix::zeros(n + 1, n + 1);
    v.view_mut((0, 0), (n, n)).copy_from(&v11);
    for i in 0..n {
        v[(i, n)] = t * u[i];
        v[(n, i)] = t * vt[(0, i)];
    }
    v[(n, n)] = -alpha;
    v
}

/// Random `(n+1) x (n+1)` orthogonal matrix with corner entry exactly
/// `-alpha`: the leading block is `Ubar(:,1:n-1) Vbar(:,1:n-1)^T +
/// alpha u v^T` for Haar-random `Ubar`, `Vbar` with trailing columns `u`,
/// `v`, and the borders are `sqrt(1 - alpha^2)` times `u` and `v^T`. Its
/// leading block has singular values `1` (n-1 times) and `alpha`.
pub fn build_alpha_orthogonal(n: usize, alpha: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let mut rng = rng_for(seed);
    let u_bar = haar_orthogonal(n, &mut rng);
    let v_bar = haar_orthogonal(n, &mut rng);
    Ok(alpha_orthogonal_from(&u_bar, &v_bar, alpha))
}

/// Generate a random `m x (n+1)` matrix, replace the right singular
/// matrix of its thin SVD by a prescribed-corner orthogonal matrix, and
/// split the product back into `A` and `b`. The augmented SVD of the
/// result has `alpha` as requested.
pub fn gen_controlled_alpha(m: usize, n: usize, alpha: f64, seed: u64) -> Result<TlsProblem> {
    if n < 1 || m <= n {
        return Err(Error::InvalidInput(format!("need m > n >= 1, got m={m}, n={n}")));
    }
    let mut rng = rng_for(seed);
    let c1 = gaussian_matrix(m, n + 1, &mut rng);
    let svd = thin_svd(&c1)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let u_bar = haar_orthogonal(n, &mut rng);
    let v_bar = haar_orthogonal(n, &mut rng);
    let v = alpha_orthogonal_from(&u_bar, &v_bar, alpha);
    let c = &svd.u * DMatrix::from_diagonal(&svd.singular_values) * v.transpose();
    split_problem(c)
}

/// i.i.d. standard normal `A` and `b`.
pub fn gen_gaussian(m: usize, n: usize, seed: u64) -> Result<TlsProblem> {
    if n < 1 || m <= n {
        return Err(Error::InvalidInput(format!("need m > n >= 1, got m={m}, n={n}")));
    }
    let mut rng = rng_for(seed);
    let a = gaussian_matrix(m, n, &mut rng);
    let b = gaussian_vector(m, &mut rng);
    TlsProblem::new(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tls::{solve_tls, spectral_data, DEFAULT_TOL_GAP};
    use approx::assert_relative_eq;

    #[test]
    fn bg_example_spectrum_is_prescribed() {
        let p = gen_bg_example(30, 5, 1e-3, 17).unwrap();
        let sd = spectral_data(&p).unwrap();
        let expected = [5.0, 4.0, 3.0, 2.0, 1.0, 1.0 - 1e-3];
        for (i, &e) in expected.iter().enumerate() {
            assert_relative_eq!(sd.sigma(i + 1), e, max_relative = 1e-10);
        }
        assert!((sd.sigma_n() - sd.sigma_np1() - 1e-3).abs() <= 1e-11);
    }

    #[test]
    fn bg_example_rejects_bad_ep() {
        assert!(gen_bg_example(10, 3, 1.0, 0).is_err());
        assert!(gen_bg_example(10, 3, 0.0, 0).is_err());
    }

    #[test]
    fn vanhuffel_closed_forms() {
        for m in [6usize, 50, 200] {
            let p = gen_vanhuffel(m).unwrap();
            let sd = spectral_data(&p).unwrap();
            let mf = m as f64;
            assert_relative_eq!(sd.sigma_hat_n(), (2.0 * mf).sqrt(), max_relative = 1e-8);
            assert_relative_eq!(sd.sigma_np1(), mf.sqrt(), max_relative = 1e-8);
            assert_relative_eq!(sd.alpha, 1.0 / (mf - 1.0).sqrt(), max_relative = 1e-8);
            let sol = solve_tls(&p, DEFAULT_TOL_GAP).unwrap();
            for i in 0..m - 2 {
                assert_relative_eq!(sol.x[i], -1.0, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn vanhuffel_minimum_size() {
        assert!(gen_vanhuffel(3).is_err());
        assert!(gen_vanhuffel(4).is_ok());
    }

    #[test]
    fn blur_kernel_sums_to_one() {
        // Discrete Gaussian with beta = 1.25 over +-8 captures essentially
        // the whole mass.
        let sum: f64 = blur_kernel(DEFAULT_OMEGA, DEFAULT_BETA_BLUR).iter().sum();
        assert!((sum - 1.0).abs() < 1e-3, "kernel sum {sum}");
    }

    #[test]
    fn toeplitz_blur_zero_noise_is_exact() {
        let p = gen_toeplitz_blur(40, 8, 1.25, 0.0, 3).unwrap();
        assert_eq!(p.nrows(), 40);
        assert_eq!(p.ncols(), 24);
        let kernel = blur_kernel(8, 1.25);
        assert_relative_eq!(p.a()[(0, 0)], kernel[0]);
        assert_relative_eq!(p.a()[(5, 2)], kernel[3]);
        assert_eq!(p.a()[(0, 1)], 0.0);
        assert!(p.b().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn toeplitz_blur_noise_scaling() {
        let p = gen_toeplitz_blur(60, 8, 1.25, 0.01, 3).unwrap();
        let t_bar = gen_toeplitz_blur(60, 8, 1.25, 0.0, 3).unwrap();
        let e = p.a() - t_bar.a();
        let ratio = spectral_norm(&e).unwrap() / spectral_norm(t_bar.a()).unwrap();
        assert_relative_eq!(ratio, 0.01, max_relative = 1e-10);
        let ev = p.b() - t_bar.b();
        assert_relative_eq!(ev.norm(), 0.01 * (60.0_f64).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn alpha_orthogonal_structure() {
        for (n, alpha) in [(1usize, 0.3), (5, 1e-4), (8, 0.49)] {
            let v = build_alpha_orthogonal(n, alpha, 5).unwrap();
            let k = n + 1;
            assert_eq!(v.nrows(), k);
            let orth = (v.transpose() * &v - DMatrix::identity(k, k)).norm();
            assert!(orth <= 1e-12, "orthogonality residual {orth}");
            assert_eq!(v[(n, n)], -alpha);

            let v11 = v.view((0, 0), (n, n)).into_owned();
            let sv = thin_svd(&v11).unwrap();
            for i in 1..n {
                assert_relative_eq!(sv.sigma(i), 1.0, max_relative = 1e-10);
            }
            assert_relative_eq!(sv.sigma(n), alpha, max_relative = 1e-10);
        }
    }

    #[test]
    fn alpha_orthogonal_rejects_bad_alpha() {
        assert!(build_alpha_orthogonal(3, 0.0, 0).is_err());
        assert!(build_alpha_orthogonal(3, 1.0, 0).is_err());
    }

    #[test]
    fn controlled_alpha_round_trip() {
        for alpha in [1e-1, 1e-2, 1e-4] {
            let p = gen_controlled_alpha(20, 6, alpha, 11).unwrap();
            let sd = spectral_data(&p).unwrap();
            assert_relative_eq!(sd.alpha, alpha, max_relative = 1e-10);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let specs = [
            GeneratorSpec::bg_example(12, 4, 1e-2, 42),
            GeneratorSpec::gaussian(10, 3, 42),
            GeneratorSpec::controlled_alpha(12, 4, 0.2, 42),
            GeneratorSpec::toeplitz_blur(40, 42),
        ];
        for spec in &specs {
            let p1 = spec.generate().unwrap();
            let p2 = spec.generate().unwrap();
            assert_eq!(p1.a(), p2.a(), "{}", spec.id());
            assert_eq!(p1.b(), p2.b(), "{}", spec.id());
        }
        let q = GeneratorSpec::gaussian(10, 3, 43).generate().unwrap();
        assert_ne!(GeneratorSpec::gaussian(10, 3, 42).generate().unwrap().a(), q.a());
    }

    #[test]
    fn spec_round_trips_through_key_value_form() {
        let spec = GeneratorSpec::controlled_alpha(500, 350, 1e-2, 9);
        let json = serde_json::to_string(&spec).unwrap();
        let back: GeneratorSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }
}

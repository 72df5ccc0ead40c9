use thiserror::Error;

/// Errors produced by the solver, the condition-number routines and the
/// problem generators.
///
/// Variants map one-to-one onto machine-readable codes (see [`Error::code`])
/// so that batch runs can record failures per sample without aborting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("SVD failed to converge")]
    SvdFailed,

    #[error("coefficient matrix of the linear system is singular within tolerance")]
    SingularSystem,

    /// The last entry of the trailing right singular vector of `[A, b]`
    /// vanishes, so the solution formula `x(i) = -v(i)/v(n+1)` is undefined.
    #[error("TLS solution direction undefined: last entry of the trailing right singular vector is zero")]
    NoSolutionDirection,

    /// The gap between the smallest singular value of `A` and of `[A, b]`
    /// is below tolerance; the TLS solution is not unique.
    #[error("non-generic TLS problem: gap {gap:.3e} below tolerance {tol:.3e}")]
    NonGeneric { gap: f64, tol: f64 },

    #[error("coefficient matrix is rank deficient within tolerance")]
    RankDeficient,

    /// `A^T b = 0` (equivalently `x_TLS = 0`); the sensitivity framework
    /// assumes a nonzero solution.
    #[error("degenerate TLS problem: solution is zero")]
    DegenerateSolution,

    /// `r = 0`, so the normalized residual in the Jacobian formula is
    /// undefined.
    #[error("consistent system (zero residual): Jacobian formula undefined")]
    ConsistentSystem,

    #[error("problem too large: {entries} Jacobian entries exceeds cap {cap}")]
    TooLarge { entries: usize, cap: usize },

    /// `alpha` so close to one that `sqrt(1 - alpha^2)` underflows in the
    /// bound formulas.
    #[error("alpha = {0} too close to one")]
    AlphaNearOne(f64),

    #[error("perturbed problem is non-generic; finite differencing aborted")]
    NonGenericUnderPerturbation,

    #[error("fewer than {needed} usable points above the noise floor ({got} available)")]
    InsufficientData { needed: usize, got: usize },
}

impl Error {
    /// Stable machine-readable code for error rows in batch output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::SvdFailed => "SvdFailed",
            Error::SingularSystem => "SingularSystem",
            Error::NoSolutionDirection => "NoSolutionDirection",
            Error::NonGeneric { .. } => "NonGeneric",
            Error::RankDeficient => "RankDeficient",
            Error::DegenerateSolution => "DegenerateSolution",
            Error::ConsistentSystem => "ConsistentSystem",
            Error::TooLarge { .. } => "TooLarge",
            Error::AlphaNearOne(_) => "AlphaNearOne",
            Error::NonGenericUnderPerturbation => "NonGenericUnderPerturbation",
            Error::InsufficientData { .. } => "InsufficientData",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

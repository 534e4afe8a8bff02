use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate lattice: generator determinant {0:e}")]
    DegenerateLattice(f64),
    #[error("degenerate fluid domain: min(eta) + d = {0:e}")]
    DegenerateDomain(f64),
    #[error("resonance pole: sqrt(alpha^2 - |k|^2) d = {arg} lies within tolerance of {n} pi")]
    ResonancePole { arg: f64, n: u64 },
    #[error("wave vector must be nonzero")]
    ZeroWaveVector,
    #[error("alpha = 0 is not allowed here: {0}")]
    AlphaZero(&'static str),
    #[error("irrotational lines require alpha = 0")]
    AlphaNonZero,
    #[error("outside the analysed regime: {0}")]
    Regime(String),
    #[error("no branch of tan(2 phi) = -alpha / kappa gives nu > 0")]
    NoPositiveNu,
    #[error("wave vectors are linearly dependent")]
    DependentWaveVectors,
    #[error("dispersion mismatch: |rho| / (g + sigma |k|^2) = {0:e}")]
    DispersionMismatch(f64),
    #[error("vertical coordinate {0} lies outside [-d, 0]")]
    OutOfRange(f64),
    #[error("shift system singular: alpha d = {0} is a nonzero multiple of 2 pi")]
    ShiftSingular(f64),
    #[error("right-hand side is not divergence free (relative residual {0:e})")]
    NotDivergenceFree(f64),
    #[error("fixed-point iteration is not contracting (ratio {ratio:.3} at iteration {iteration})")]
    NonContraction { ratio: f64, iteration: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("near-resonant lattice mode ({n1}, {n2}): |rho| / (g + sigma |k|^2) = {ratio:e}")]
    NearResonant { n1: i32, n2: i32, ratio: f64 },
    #[error("transversality determinant {0:e} is degenerate")]
    DegenerateTransversality(f64),
    #[error("kernel mode index outside the truncation")]
    KernelOutsideTruncation,
    #[error("field is not constant along the held direction (leakage {0:e})")]
    NotTwoHalfD(f64),
    #[error("affine relation u_perp = alpha psi + beta violated (residual {0:e})")]
    AffineViolation(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl Error {
    /// Whether the error reports an iterative solver giving up, as opposed to a violated
    /// precondition.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(self, Error::NonContraction { .. } | Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

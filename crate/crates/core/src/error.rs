use thiserror::Error;

/// Every failure the engine can report. Search failures are outcomes, not
/// claims of nonexistence.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("denominator cz+d vanished (|cz+d| = {0:e})")]
    DegenerateDenominator(f64),
    #[error("fundamental-domain reduction did not terminate after {0} steps")]
    NonTermination(usize),
    #[error("requested precision {requested:e} unreachable (best {achievable:e})")]
    PrecisionUnreachable { requested: f64, achievable: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("modular polynomial level {0} unsupported (max 5)")]
    LevelUnsupported(u32),
    #[error("lattice generator matrix ill-conditioned (condition {0:e})")]
    IllConditioned(f64),
    #[error("argument within {0:e} of a lattice point")]
    NearPole(f64),
    #[error("jacobian rank unstable across samples: {0}")]
    DimensionSamplingFailed(String),
    #[error("constraint cycle {cycle:?} composes to a matrix with no fixed point in H")]
    InconsistentCycle { cycle: Vec<usize> },
    #[error("sampling found {found} of {wanted} points")]
    SamplingFailed { found: usize, wanted: usize },
    #[error("no regular point after {0} retries")]
    NoRegularPoint(usize),
    #[error("search exhausted, best residual {best_residual:e}")]
    SearchExhausted { best_residual: f64 },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("predicate failed: {0}")]
    PredicateFailed(String),
    #[error("level set |j'(w)| Im w = const is empty on the sampled rays")]
    LevelSetEmpty,
    #[error("exp(L) closes up in a proper real subtorus; search refused")]
    ClosedSubtorus,
    #[error("exact entries mix discriminants {0} and {1}")]
    MixedDiscriminant(u64, u64),
    #[error("determinant {0} is not 1")]
    NotSl2(String),
    #[error("point {0} is not in the upper half plane")]
    NotInUpperHalfPlane(String),
    #[error("derivative too small ({0:e})")]
    DerivativeTooSmall(f64),
    #[error("iterate left the domain at step {0}")]
    LeftDomain(usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

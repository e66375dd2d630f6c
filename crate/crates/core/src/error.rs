use alloc::boxed::Box;

/// Errors raised anywhere in the fitting, optimization and inference chain.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error(
        "design is rank deficient: {rows} runs cannot identify {cols} coefficients \
         (singular value ratio {ratio:e})"
    )]
    RankDeficient {
        rows: usize,
        cols: usize,
        ratio: f64,
    },
    #[error("residual covariance needs more runs than coefficients ({runs} runs, {coefficients} coefficients)")]
    InsufficientDof { runs: usize, coefficients: usize },
    #[error("index {index} out of range for {len} responses")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{factors} factors exceed the 20-factor limit of the design generator")]
    Overflow { factors: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(&'static str),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("empty input")]
    EmptyInput,
    #[error(
        "global minimizer is not unique: the linear term has no component on the \
         lowest eigenspace of the quadratic term (trust-region hard case)"
    )]
    NonUniqueMinimizer,
    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),
    #[error("bordered KKT matrix is singular (constraint gradient is zero)")]
    SingularBorder,
    #[error("strict complementarity fails at the optimum (margin {margin:e})")]
    DegenerateComplementarity { margin: f64 },
    #[error("finite-difference step is too small for the coefficient magnitudes")]
    StepTooSmall,
    #[error("constraint activity changed under a finite-difference perturbation")]
    ActivityChanged,
    #[error("vec ordering of the Jacobian and the coefficient covariance disagree")]
    OrderingMismatch,
    #[error("critical-point covariance is singular")]
    SingularCovariance,
    #[error("need at least {need} successful replicates, have {have}")]
    TooFewReplicates { have: usize, need: usize },
    #[error("optimum at the true coefficients is unusable: {0}")]
    TruthDegenerate(Box<Error>),
    #[error("{failures} of {replicates} replicates failed (limit is 1%)")]
    ExcessiveFailures { failures: usize, replicates: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

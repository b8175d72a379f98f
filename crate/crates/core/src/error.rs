use thiserror::Error;

/// Failure modes shared by every pipeline.
///
/// Errors fall into three groups, which the command-line front end maps onto
/// exit codes: *model limits* (the finite truncation is too small for the
/// requested construction), *hard failures* (a mathematical invariant was
/// violated) and everything else (bad input).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite coordinate at index {index}")]
    NonFiniteCoordinate { index: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("dimension exhausted: no element of the subspace vanishes on coordinates 1..={prefix} (dim {dim})")]
    DimensionExhausted { prefix: usize, dim: usize },
    #[error("ratio {0} must lie strictly between 0 and 1")]
    RatioOutOfRange(String),
    #[error("duplicate ratio {0}")]
    DuplicateRatio(String),
    #[error("eps out of range: {0}")]
    EpsOutOfRange(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("block windows overlap at coordinate {0}")]
    OverlappingWindows(usize),
    #[error("block {index} is not normalized (norm {norm})")]
    UnnormalizedBlock { index: usize, norm: f64 },
    #[error("zero vector")]
    ZeroVector,
    #[error("insufficient stabilization: {0}")]
    InsufficientStabilization(String),
    #[error("case bound violated at level {level}: |h| = {norm} > {bound}")]
    CaseBoundViolated { level: usize, norm: f64, bound: f64 },
    #[error("norming net too coarse: {0}")]
    NetTooCoarse(String),
    #[error("too few constructed indices: {found} (need at least {needed})")]
    TooFewIndices { found: usize, needed: usize },
    #[error("witness violation: {0}")]
    WitnessViolation(String),
    #[error("missing small-perturbation certificate")]
    MissingPerturbCert,
    #[error("norm of an exact sequence in {0} is not rational; use float mode")]
    InexactNorm(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("linear program failed: {0}")]
    LinearProgram(String),
}

impl Error {
    /// The finite model was too small; not a mathematical failure.
    pub fn is_model_limit(&self) -> bool {
        matches!(
            self,
            Error::DimensionExhausted { .. } | Error::SearchExhausted(_) | Error::InsufficientStabilization(_)
        )
    }

    /// A proof inequality or invariant failed on constructed data.
    pub fn is_hard_failure(&self) -> bool {
        matches!(
            self,
            Error::WitnessViolation(_) | Error::CaseBoundViolated { .. } | Error::NetTooCoarse(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

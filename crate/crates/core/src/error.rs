use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "every candidate explanation has zero weight; the target is unreachable from this space"
    )]
    AllZeroMass,
    #[error("explanation space is not enumerable")]
    NotEnumerable,
    #[error("explanation space has {count} elements, above the limit of {limit}")]
    SpaceTooLarge { count: u128, limit: u128 },
    #[error("teacher posterior is empty")]
    EmptyPosterior,
    #[error("initial chain state has zero weight")]
    ZeroStartMass,
    #[error("all mask weights are zero")]
    ZeroTotalWeight,
    #[error("linear system is singular: {0}")]
    SingularSystem(String),
    #[error("covariance is singular: {0}")]
    SingularCovariance(String),
    #[error("learner returned a non-finite or negative value: {0}")]
    InvalidLikelihood(f64),
    #[error("class {0} has no representative in the example set")]
    MissingClass(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("bad generator spec: {0}")]
    BadSpec(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("non-numeric feature {value:?} at row {row}, column {column}")]
    NonNumericFeature {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("incompatible combination: {0}")]
    IncompatibleCombination(String),
    #[error("strategy does not fit the explanation space: {0}")]
    StrategySpaceMismatch(String),
    #[error(
        "insufficient coverage: decile {decile} has {count} probes (need at least {required})"
    )]
    InsufficientCoverage {
        decile: usize,
        count: usize,
        required: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::AllZeroMass
            | Error::ZeroStartMass
            | Error::ZeroTotalWeight
            | Error::SingularSystem(_)
            | Error::SingularCovariance(_)
            | Error::InvalidLikelihood(_)
            | Error::EmptyPosterior => ErrorClass::Numerical,
            Error::InvalidArgument(_)
            | Error::IncompatibleCombination(_)
            | Error::StrategySpaceMismatch(_)
            | Error::NotEnumerable
            | Error::SpaceTooLarge { .. } => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::AllZeroMass => "AllZeroMass",
            Error::NotEnumerable => "NotEnumerable",
            Error::SpaceTooLarge { .. } => "SpaceTooLarge",
            Error::EmptyPosterior => "EmptyPosterior",
            Error::ZeroStartMass => "ZeroStartMass",
            Error::ZeroTotalWeight => "ZeroTotalWeight",
            Error::SingularSystem(_) => "SingularSystem",
            Error::SingularCovariance(_) => "SingularCovariance",
            Error::InvalidLikelihood(_) => "InvalidLikelihood",
            Error::MissingClass(_) => "MissingClass",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::BadSpec(_) => "BadSpec",
            Error::Parse { .. } => "ParseError",
            Error::NonNumericFeature { .. } => "NonNumericFeature",
            Error::IncompatibleCombination(_) => "IncompatibleCombination",
            Error::StrategySpaceMismatch(_) => "StrategySpaceMismatch",
            Error::InsufficientCoverage { .. } => "InsufficientCoverage",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state description violates one of its invariants. `path` locates the
    /// offending field, e.g. `components[1].state.mean_photons`.
    #[error("invalid state at `{path}`: {reason}")]
    InvalidState { path: String, reason: String },

    #[error("explicit distribution sums to {sum}, more than 1e-6 away from 1")]
    UnnormalizedExplicit { sum: f64 },

    #[error("truncation needs n_max = {required}, above the cap of {cap}")]
    TruncationOverflow { required: usize, cap: usize },

    #[error("invalid detector configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("degenerate mean {mean} (must lie in ({low}, {high}))")]
    DegenerateMean { mean: f64, low: f64, high: f64 },

    #[error("invalid sample: record {index} has value {value}, outside [0, {max}]")]
    InvalidSample { index: usize, value: u64, max: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("all {replicates} bootstrap resamples had a degenerate mean")]
    AllResamplesDegenerate { replicates: usize },
}

impl Error {
    /// Short stable name of the variant, used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidState { .. } => "InvalidState",
            Error::UnnormalizedExplicit { .. } => "UnnormalizedExplicit",
            Error::TruncationOverflow { .. } => "TruncationOverflow",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NumericalInstability(_) => "NumericalInstability",
            Error::DegenerateMean { .. } => "DegenerateMean",
            Error::InvalidSample { .. } => "InvalidSample",
            Error::InsufficientData(_) => "InsufficientData",
            Error::AllResamplesDegenerate { .. } => "AllResamplesDegenerate",
        }
    }
}

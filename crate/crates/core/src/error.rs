use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name} = {value}: expected {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error(
        "series did not reach tolerance after {terms} terms (partial sum {partial}, error bound {bound:e})"
    )]
    NonConvergence {
        partial: f64,
        bound: f64,
        terms: usize,
    },

    #[error("no usable observations")]
    EmptyData,

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("observation {index} is {value}; log-moments need strictly positive data")]
    NonPositiveInput { index: usize, value: f64 },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error(
        "sample log-variance {variance} is too small for the Linnik inversion (needs 12*var > pi^2)"
    )]
    DegenerateVariance { variance: f64 },

    #[error("fitted {name} = {value} lies outside the model support ({support})")]
    OutsideSupport {
        name: &'static str,
        value: f64,
        support: &'static str,
    },

    #[error("moment covariance is not positive semidefinite: {0}")]
    InvalidCovariance(String),

    #[error("{0}")]
    Unsupported(String),

    #[error("{failed} of {total} bootstrap replicates failed (limit is 20%)")]
    ExcessiveFailures { failed: usize, total: usize },

    #[error("malformed CSV header: {0}")]
    MalformedHeader(String),

    #[error("row {row}: cannot parse {column} value {value:?}")]
    ParseCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: dates must be strictly increasing")]
    NonMonotonicDates { row: usize },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            expected,
        })
    }
}

use thiserror::Error;

/// Errors produced anywhere in the steering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("config file: {0}")]
    ConfigParse(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("altitude {altitude_m} m is outside the channel model range [22.5, 300] m")]
    ModelApplicability { altitude_m: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("coincident poles at {first:e} and {second:e}")]
    DegeneratePoles { first: f64, second: f64 },

    #[error("closed-form outage is numerically unstable (raw value {raw:e}, rounding bound {error_bound:e})")]
    NumericalInstability { raw: f64, error_bound: f64 },

    #[error("coalition game did not converge within {passes} passes")]
    NonConvergence { passes: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("field is singular at the origin")]
    Singularity,

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("tail exponent {exponent} is too slow for a convergent kernel integral (need > {required})")]
    DivergentTail { exponent: f64, required: f64 },

    #[error("source has nonzero mean {mean:e} (L1 norm {l1:e}); its potential would not decay like |x|^-2")]
    ZeroMeanViolation { mean: f64, l1: f64 },

    #[error("divergence datum has nonzero mean {mean:e} (L1 norm {l1:e})")]
    IncompatibleDatum { mean: f64, l1: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "no contraction certificate: eps_hat = {eps_hat:.6e}, c_hat = {c_hat:.6e}, |V| = {y_norm:.6e} \
         (need eps_hat < 1 and |V| < (1 - eps_hat)^2 / (4 c_hat))"
    )]
    NoCertificate { eps_hat: f64, c_hat: f64, y_norm: f64 },

    #[error("iteration {iteration} left the uniqueness ball: norm {norm:.6e} > xi2 = {xi2:.6e}")]
    Divergence { iteration: usize, norm: f64, xi2: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SopError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SopError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("secrecy target must be finite and non-negative, got {0}")]
    InvalidTarget(f64),

    #[error("{func} is undefined at x = {x}")]
    Domain { func: &'static str, x: f64 },

    #[error("degenerate hypoexponential coefficients: b[{i}] = {b_i} and b[{j}] = {b_j} are not separated")]
    DegenerateCoefficients {
        i: usize,
        j: usize,
        b_i: f64,
        b_j: f64,
    },

    #[error("scenario has no interferers; use the no-interference baseline")]
    NoInterferers,

    #[error("numerical breakdown in term (i={i}, j={j}): {detail}")]
    NumericalBreakdown { i: usize, j: usize, detail: String },

    #[error("closed form is ill-conditioned: term magnitudes {magnitude:e} leave a rounding error near {error_bound:e}")]
    IllConditioned { magnitude: f64, error_bound: f64 },

    #[error("raw probability {raw} lies outside [0, 1] beyond the sanity band")]
    OutOfRange { raw: f64 },

    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound}")]
    QuadratureNotConverged { estimate: f64, error_bound: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sweep failed at {point}: {source}")]
    Sweep {
        point: String,
        #[source]
        source: Box<SopError>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("series has {len} samples, shorter than one segment of {segment}")]
    SeriesTooShort { len: usize, segment: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("invalid spectral density: {0}")]
    InvalidSpectrum(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency grids do not match")]
    GridMismatch,

    #[error(
        "grid too coarse: spacing {spacing:.4} rad/h exceeds {required:.4} rad/h needed to resolve the ramp weight"
    )]
    GridTooCoarse { spacing: f64, required: f64 },

    #[error("spectrum has {mass_fraction:.3e} of its mass above the synthesis Nyquist frequency {nyquist:.4} rad/h")]
    Aliasing { mass_fraction: f64, nyquist: f64 },

    #[error("time step incompatible: {0}")]
    IncompatibleStep(String),

    #[error("ARMA fit infeasible: {0}")]
    FitInfeasible(String),

    #[error("spectrum infeasible: {0}")]
    Infeasible(String),

    #[error("capacity index undefined: target has zero {0} capacity")]
    UndefinedIndex(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

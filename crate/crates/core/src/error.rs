use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation landed exactly on a pole of a reactive element.
    #[error("singular {element} at {pole_hz:.9e} Hz")]
    Singularity { element: &'static str, pole_hz: f64 },

    #[error("cell {index}: {source}")]
    InCell {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("conversion error: {0}")]
    Conversion(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("frequency grids differ at index {index}: {left} Hz vs {right} Hz")]
    GridMismatch { index: usize, left: f64, right: f64 },

    #[error("integration error: {0}")]
    Integration(String),

    #[error("fit error: {message} (residual rms {residual_rms:.3e})")]
    Fit { message: String, residual_rms: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

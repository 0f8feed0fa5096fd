use thiserror::Error;

/// Errors produced by the tracking toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("fitness of particle {particle} is not finite ({value})")]
    Evaluation { particle: usize, value: f64 },

    #[error("target initialization failed: {0}")]
    Initialization(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("no overlapping frames between tracks and ground truth")]
    EmptyReport,

    #[error("frame {frame} of target {target} has ground truth but no track record")]
    FrameMismatch { frame: usize, target: usize },

    #[error("PPM parse error at byte {offset}: {message}")]
    Ppm { offset: usize, message: String },

    #[error("CSV parse error on line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by bad user input (configuration, specs, usage)
    /// rather than a runtime failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Initialization(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(f64),
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
    #[error("fit window: {0}")]
    FitWindow(String),
    #[error("calibration failed: {0}")]
    CalibrationFailure(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 experiment-level, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_)
            | Error::InvalidArgument(_)
            | Error::InvalidBandwidth(_)
            | Error::UnsupportedSize(_)
            | Error::Serde(_) => 2,
            Error::CalibrationFailure(_)
            | Error::DegenerateConfiguration(_)
            | Error::FitWindow(_)
            | Error::InsufficientData(_)
            | Error::UnsupportedMode(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

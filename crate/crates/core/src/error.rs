use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
///
/// Variants map onto the CLI exit codes: configuration problems exit with 2,
/// geometry the filtering baselines cannot handle exits with 3 and numeric
/// failures exit with 4.
#[derive(Debug, Error)]
pub enum HoloError {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("geometry unsupported by baseline: {0}")]
    UnsupportedGeometry(String),
    #[error("metric undefined: {0}")]
    MetricUndefined(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl HoloError {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            HoloError::Config(_) | HoloError::Parameter(_) => 2,
            HoloError::UnsupportedGeometry(_) => 3,
            HoloError::Numeric(_) | HoloError::MetricUndefined(_) => 4,
            _ => 1,
        }
    }

    /// Short tag recorded in sweep tables for failed cells.
    pub fn tag(&self) -> &'static str {
        match self {
            HoloError::Geometry(_) => "geometry",
            HoloError::Parameter(_) => "parameter",
            HoloError::Data(_) => "data",
            HoloError::Numeric(_) => "numeric",
            HoloError::Config(_) => "config",
            HoloError::UnsupportedGeometry(_) => "geometry-unsupported",
            HoloError::MetricUndefined(_) => "metric-undefined",
            HoloError::Format(_) => "format",
            HoloError::Io(_) => "io",
            HoloError::Image(_) => "image",
        }
    }
}

pub type Result<T> = std::result::Result<T, HoloError>;

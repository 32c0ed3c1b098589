use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or malformed. The first field
    /// names the offending key.
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("malformed NIfTI file {path}: {message}")]
    Nifti { path: PathBuf, message: String },

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path}, row {row}: {message}")]
    Manifest {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("no candidate seed voxels")]
    NoSeedVoxels,

    #[error("no ventricle voxels: cannot fit CSF statistics")]
    NoVentricles,

    #[error("cavity placement failed after {0} attempts")]
    PlacementFailed(usize),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code for this error: 1 for invalid input or
    /// configuration, 2 for failures while running a valid request.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PlacementFailed(_) | Error::Write { .. } => 2,
            _ => 1,
        }
    }
}

use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid action for {env}: {detail}")]
    InvalidAction { env: &'static str, detail: String },

    #[error("pose ({x}, {y}) lies inside map geometry")]
    PoseInsideGeometry { x: f64, y: f64 },

    #[error("replay buffer is empty")]
    EmptyBuffer,

    #[error("batch is empty")]
    EmptyBatch,

    #[error("need at least {needed} trajectories, buffer holds {have}")]
    NotEnoughTrajectories { needed: usize, have: usize },

    #[error("inconsistent trajectory: {0}")]
    InconsistentTrajectory(String),

    #[error("cannot sample pair: {0}")]
    Unsampleable(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("evaluation grids differ: {0}")]
    GridMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

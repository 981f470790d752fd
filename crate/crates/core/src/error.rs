use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file. `location` names the byte offset, line or property.
    #[error("parse error in {context} at {location}: {message}")]
    Parse {
        context: String,
        location: String,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("simulation error at frame {frame}, particle {particle}: {message}")]
    Simulation {
        frame: u32,
        particle: u64,
        message: String,
    },

    #[error("missing frame states for frames {0:?}")]
    MissingFrames(Vec<u32>),

    /// Any other failure while producing a given frame.
    #[error("frame {frame}: {source}")]
    Frame {
        frame: u32,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        context: impl Into<String>,
        location: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            context: context.into(),
            location: location.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable category, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Invalid(_) => "invalid",
            Error::Config(_) => "config",
            Error::Simulation { .. } => "simulation",
            Error::MissingFrames(_) => "missing_frames",
            Error::Frame { source, .. } => source.kind(),
        }
    }

    /// The frame an error is attached to, if any.
    pub fn frame(&self) -> Option<u32> {
        match self {
            Error::Simulation { frame, .. } | Error::Frame { frame, .. } => Some(*frame),
            _ => None,
        }
    }

    pub(crate) fn at_frame(self, frame: u32) -> Self {
        match self {
            e @ (Error::Simulation { .. } | Error::Frame { .. }) => e,
            e => Error::Frame {
                frame,
                source: Box::new(e),
            },
        }
    }
}

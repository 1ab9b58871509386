use std::path::PathBuf;

/// Errors surfaced by the tool, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    /// A file that was read but whose contents are invalid.
    #[error("{}: {source}", path.display())]
    Data {
        path: PathBuf,
        #[source]
        source: tvscm_core::Error,
    },
    #[error(transparent)]
    Core(#[from] tvscm_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICS: i32 = 4;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 usage, 3 input/output, 4 numerics.
    pub fn exit_code(&self) -> i32 {
        use tvscm_core::Error as E;
        match self {
            Error::Usage(_) => EXIT_USAGE,
            Error::Io { .. } | Error::Parse { .. } | Error::Data { .. } => EXIT_IO,
            Error::Core(e) if e.is_numerics() => EXIT_NUMERICS,
            // Malformed input files.
            Error::Core(
                E::BadMagic { .. }
                | E::Truncated { .. }
                | E::CountMismatch { .. }
                | E::EmptyDataset
                | E::Arity { .. }
                | E::NonNumeric { .. }
                | E::InvalidLabel { .. }
                | E::LabelOutOfRange { .. }
                | E::NonFiniteFeature { .. }
                | E::Checkpoint(_),
            ) => EXIT_IO,
            Error::Core(_) => EXIT_USAGE,
        }
    }
}

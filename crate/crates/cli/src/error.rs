use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Data(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for usage or configuration problems, 3 for bad input data, 4 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Data(_) | Self::Io { .. } => 3,
            Self::Numerical(_) => 4,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io { context: context.into(), source }
    }
}

impl From<surecov::Error> for CliError {
    fn from(err: surecov::Error) -> Self {
        use surecov::Error as E;
        let msg = err.to_string();
        match err {
            E::Parameter(_) | E::Config(_) | E::InvalidWeights(_) => Self::Usage(msg),
            E::SampleSize { .. } | E::DimensionMismatch { .. } | E::NotSymmetric { .. } => Self::Data(msg),
            E::NotPositiveDefinite { .. } | E::Infeasible(_) => Self::Numerical(msg),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

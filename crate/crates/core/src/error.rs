use std::path::PathBuf;

use thiserror::Error;

use crate::nmn::NeuronId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad hyperparameters, unknown modality, unknown locality and friends.
    #[error("configuration error: {0}")]
    Config(String),

    /// A config field failed validation. The field path is kept separately
    /// so the CLI can name it.
    #[error("invalid value for `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("storage full in hive `{hive}`: needed {needed} bytes, {available} available after elasticity")]
    StorageFull {
        hive: String,
        needed: u64,
        available: u64,
    },

    #[error("elasticity schedule exhausted for locality {locality} at iteration {iteration}")]
    ElasticityExhausted { locality: usize, iteration: usize },

    #[error("self-edge rejected on neuron {0}")]
    SelfEdge(NeuronId),

    #[error("unknown neuron {0}")]
    UnknownNeuron(NeuronId),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("codec error: {0}")]
    Codec(String),

    #[error("unknown export format `{0}`")]
    UnknownFormat(String),

    #[error("unsupported document version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("malformed record at seq {seq}: {reason}")]
    MalformedRecord { seq: u64, reason: String },

    #[error("replay aborted at seq {seq}: {source}")]
    Replay {
        seq: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("logs come from different traces ({0} vs {1})")]
    MixedTrace(String, String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Strips `Replay` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Replay { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_storage_full(&self) -> bool {
        matches!(self.root(), Error::StorageFull { .. })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

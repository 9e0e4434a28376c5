use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::crf::CrfError;
use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::pipeline::BundleError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error for the crate; each module reports through its own enum.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Crf(#[from] CrfError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

//! Token features for the CRF stage.

mod extract;
mod lexicon;
mod template;

use thiserror::Error;

pub use extract::{extract, featurize_corpus, featurize_sentence, FeatureVector, SequenceExample, TokenView};
pub use lexicon::Lexicon;
pub use template::{BinaryFlag, FeatureTemplate, Indexing};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("token index {index} out of bounds for sequence of length {len}")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("sentence {sentence}, token {token}: no gold {kind} tag")]
    MissingGold {
        sentence: usize,
        token: usize,
        kind: crate::TagsetKind,
    },
    #[error("cannot build a lexicon from an empty corpus")]
    EmptyCorpus,
    #[error("template line {line}: {message}")]
    Template { line: usize, message: String },
    #[error("lexicon line {line}: {message}")]
    LexiconFormat { line: usize, message: String },
}

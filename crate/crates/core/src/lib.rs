//! Part-of-speech tagging for code-mixed social media text.
//!
//! Tagging runs in two stages. A deterministic rule stage ([`rules`]) labels
//! residual tokens (punctuation, symbols, numerals, URLs, emoticons, mentions,
//! hashtags); every other token is passed, in sentence order, to a trained
//! linear-chain CRF ([`crf`]) fed by the feature families in [`features`].
//! [`pipeline`] ties the stages together and [`eval`] scores the output.

pub mod corpus;
pub mod crf;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod rules;
pub mod synthetic;
pub mod text;

mod error;

pub use corpus::{ColumnSpec, Corpus, Platform, Sentence, TagsetKind, Token};
pub use crf::{CrfModel, TrainConfig};
pub use error::{Error, Result};
pub use eval::EvalReport;
pub use features::{FeatureTemplate, Lexicon};
pub use pipeline::{RunRegime, TaggerBundle};
pub use rules::{EmoticonDictionary, RuleDecision};

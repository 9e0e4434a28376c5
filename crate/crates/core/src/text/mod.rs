//! String algorithms used as feature extractors.

mod metaphone;
mod normalize;
mod porter;

pub use metaphone::double_metaphone;
pub use normalize::{normalize_word, word_class};
pub use porter::porter_stem;

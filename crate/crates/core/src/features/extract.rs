use super::template::{BinaryFlag, FeatureTemplate, Indexing};
use super::{FeatureError, Lexicon};
use crate::corpus::{Corpus, Sentence, TagsetKind};
use crate::rules::{apply_rules, Dictionaries};
use crate::text::{double_metaphone, normalize_word, porter_stem, word_class};

/// What the extractor needs to know about one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenView<'a> {
    pub surface: &'a str,
    pub lang: Option<&'a str>,
}

impl<'a> TokenView<'a> {
    pub fn new(surface: &'a str) -> Self {
        TokenView { surface, lang: None }
    }

    pub fn with_lang(surface: &'a str, lang: &'a str) -> Self {
        TokenView {
            surface,
            lang: Some(lang),
        }
    }

    /// Uses the language tag when present, otherwise treats all-ASCII
    /// alphabetic tokens as English.
    fn is_english(&self) -> bool {
        match self.lang {
            Some(lang) => lang.eq_ignore_ascii_case("en"),
            None => !self.surface.is_empty() && self.surface.bytes().all(|b| b.is_ascii_alphabetic()),
        }
    }
}

/// Named `NAME=value` features for one token, without duplicates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureVector(Vec<String>);

impl FeatureVector {
    fn push(&mut self, name: &str, value: impl std::fmt::Display) {
        let feature = format!("{name}={value}");
        if !self.0.contains(&feature) {
            self.0.push(feature);
        }
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.0.iter().any(|f| f == feature)
    }

    /// Value of the first feature called `name`.
    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find_map(|f| {
            f.strip_prefix(name)
                .and_then(|rest| rest.strip_prefix('='))
        })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn two_decimals(x: f64) -> String {
    format!("{x:.2}")
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

fn binary_value(flag: BinaryFlag, word: &str, threshold: usize) -> bool {
    let first = word.chars().next();
    match flag {
        BinaryFlag::SufficientLength => word.chars().count() > threshold,
        BinaryFlag::AllCapital => {
            word.chars().any(char::is_alphabetic) && !word.chars().any(char::is_lowercase)
                && word.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase)
        }
        BinaryFlag::FirstUpper | BinaryFlag::InitCap => first.is_some_and(char::is_uppercase),
        BinaryFlag::InitPunctDigit => {
            first.is_some_and(|c| c.is_ascii_digit() || (c.is_ascii() && !c.is_ascii_alphanumeric() && !c.is_ascii_whitespace()))
        }
        BinaryFlag::Digit => !word.is_empty() && word.chars().all(char::is_numeric),
        BinaryFlag::DigitAlpha => {
            word.chars().all(char::is_alphanumeric)
                && word.chars().any(char::is_numeric)
                && word.chars().any(char::is_alphabetic)
        }
        BinaryFlag::Hashtag => word.starts_with('#'),
    }
}

/// Features of `tokens[index]` in the context of `tokens`.
pub fn extract(
    tokens: &[TokenView<'_>],
    index: usize,
    lex: &Lexicon,
    template: &FeatureTemplate,
) -> Result<FeatureVector, FeatureError> {
    let token = tokens.get(index).ok_or(FeatureError::IndexOutOfBounds {
        index,
        len: tokens.len(),
    })?;
    let word = token.surface;
    let mut fv = FeatureVector::default();

    if let Some((lo, hi)) = template.context {
        for offset in lo..=hi {
            let pos = index as i64 + i64::from(offset);
            let value = if pos < 0 {
                "BOS"
            } else {
                tokens.get(pos as usize).map_or("EOS", |t| t.surface)
            };
            fv.push(&format!("CTX[{offset}]"), value);
        }
    }

    let chars: Vec<char> = word.chars().collect();
    for &n in &template.ngram_orders {
        for gram in chars.windows(n) {
            fv.push(&format!("NGRAM[{n}]"), gram.iter().collect::<String>());
        }
    }
    if template.normalize {
        fv.push("NORM", normalize_word(word));
    }
    if let Some(n) = template.prefix {
        fv.push(&format!("PRE{n}"), chars.iter().take(n).collect::<String>());
    }
    if let Some(n) = template.suffix {
        let start = chars.len().saturating_sub(n);
        fv.push(&format!("SUF{n}"), chars[start..].iter().collect::<String>());
    }
    if template.word_class {
        fv.push("WCLASS", word_class(word));
    }
    if template.position {
        fv.push("POS_REL", two_decimals((index + 1) as f64 / tokens.len() as f64));
    }
    if template.upper_ratio {
        let upper = chars.iter().filter(|c| c.is_uppercase()).count();
        let ratio = if chars.is_empty() { 0.0 } else { upper as f64 / chars.len() as f64 };
        fv.push("UPPER_RATIO", two_decimals(ratio));
    }
    for &k in &template.top_k {
        for (bit, tag) in lex.top_k_bits(word, k).into_iter().zip(lex.tag_inventory()) {
            if bit {
                fv.push(&format!("TOP{k}[{tag}]"), 1);
            }
        }
    }
    for &f in &template.binary {
        fv.push(f.name(), flag(binary_value(f, word, template.length_threshold)));
    }
    if token.is_english() {
        let lower = word.to_lowercase();
        if template.stem {
            fv.push("STEM", porter_stem(&lower));
        }
        if template.phonetic {
            fv.push("PHON", double_metaphone(&lower).0);
        }
    }
    Ok(fv)
}

/// One CRF input sequence built from the deferred tokens of a sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceExample {
    /// Index of the sentence in its corpus.
    pub sentence: usize,
    /// Token indices (within the sentence) of the sequence positions.
    pub positions: Vec<usize>,
    pub features: Vec<Vec<String>>,
    /// Gold labels, empty when featurizing unlabeled input.
    pub labels: Vec<String>,
}

/// Features for the given token positions of one sentence.
pub fn featurize_sentence(
    sentence: &Sentence,
    positions: &[usize],
    lex: &Lexicon,
    template: &FeatureTemplate,
) -> Result<Vec<Vec<String>>, FeatureError> {
    let view = |i: usize| {
        let t = &sentence.tokens[i];
        TokenView {
            surface: &t.surface,
            lang: t.lang.as_deref(),
        }
    };
    match template.indexing {
        Indexing::Cleaned => {
            let cleaned: Vec<TokenView<'_>> = positions.iter().map(|&i| view(i)).collect();
            (0..cleaned.len())
                .map(|i| extract(&cleaned, i, lex, template).map(FeatureVector::into_inner))
                .collect()
        }
        Indexing::Raw => {
            let all: Vec<TokenView<'_>> = (0..sentence.len()).map(view).collect();
            positions
                .iter()
                .map(|&i| extract(&all, i, lex, template).map(FeatureVector::into_inner))
                .collect()
        }
    }
}

/// Applies the rule stage to every sentence and featurizes the deferred
/// tokens with their gold `kind` labels. Sentences with no deferred tokens
/// contribute nothing.
pub fn featurize_corpus(
    corpus: &Corpus,
    lex: &Lexicon,
    template: &FeatureTemplate,
    dicts: &Dictionaries,
    kind: TagsetKind,
) -> Result<Vec<SequenceExample>, FeatureError> {
    let mut out = Vec::new();
    for (si, sentence) in corpus.sentences.iter().enumerate() {
        let positions = apply_rules(sentence, dicts).cleaned;
        if positions.is_empty() {
            continue;
        }
        let labels = positions
            .iter()
            .map(|&ti| {
                sentence.tokens[ti]
                    .tag(kind)
                    .map(str::to_string)
                    .ok_or(FeatureError::MissingGold {
                        sentence: si,
                        token: ti,
                        kind,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let features = featurize_sentence(sentence, &positions, lex, template)?;
        out.push(SequenceExample {
            sentence: si,
            positions,
            features,
            labels,
        });
    }
    Ok(out)
}

//! Rule stage: deterministic tags for residual tokens.
//!
//! Branches are tried in a fixed order and the first match wins:
//!
//! | # | condition                                         | fine      | coarse |
//! |---|---------------------------------------------------|-----------|--------|
//! | 1 | only punctuation (and not an emoticon)            | `RD_PUNC` | `G_X`  |
//! | 2 | contains `~`                                      | `RD_SYM`  | `G_X`  |
//! | 3 | contains a character outside printable ASCII      | `RD_UNK`  | `G_X`  |
//! | 4 | starts with a digit, ends in `st`/`nd`/`rd`/`th`  | `$`       | `$`    |
//! | 5 | only digits                                       | `$`       | `$`    |
//! | 6 | starts with `+91`, or is a number word            | `$`       | `$`    |
//! | 7 | URL suffix or scheme prefix                       | `U`       | `U`    |
//! | 8 | emoticon (dictionary or eye-mouth pattern)        | `E`       | `E`    |
//! | 9 | starts with `@`                                   | `@`       | `@`    |
//! |10 | starts with `#`                                   | `#`       | `#`    |
//!
//! Anything else is deferred to the CRF.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use crate::corpus::{Sentence, TagsetKind};

const DEFAULT_EMOTICONS: &str = include_str!("../data/emoticons.txt");
const DEFAULT_NUMBER_WORDS: &str = include_str!("../data/number_words.txt");

const URL_SUFFIXES: [&str; 4] = [".com", ".org", ".me", ".in"];
const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];
const ORDINAL_SUFFIXES: [&str; 4] = ["st", "nd", "rd", "th"];

/// The closed set of tags the rule stage can emit. Each carries a fixed
/// (fine, coarse) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleTag {
    Punctuation,
    Symbol,
    Unknown,
    Numeral,
    Url,
    Emoticon,
    Mention,
    Hashtag,
}

impl RuleTag {
    pub const ALL: [RuleTag; 8] = [
        RuleTag::Punctuation,
        RuleTag::Symbol,
        RuleTag::Unknown,
        RuleTag::Numeral,
        RuleTag::Url,
        RuleTag::Emoticon,
        RuleTag::Mention,
        RuleTag::Hashtag,
    ];

    pub fn fine(self) -> &'static str {
        match self {
            RuleTag::Punctuation => "RD_PUNC",
            RuleTag::Symbol => "RD_SYM",
            RuleTag::Unknown => "RD_UNK",
            RuleTag::Numeral => "$",
            RuleTag::Url => "U",
            RuleTag::Emoticon => "E",
            RuleTag::Mention => "@",
            RuleTag::Hashtag => "#",
        }
    }

    pub fn coarse(self) -> &'static str {
        match self {
            RuleTag::Punctuation | RuleTag::Symbol | RuleTag::Unknown => "G_X",
            other => other.fine(),
        }
    }

    pub fn tag(self, kind: TagsetKind) -> &'static str {
        match kind {
            TagsetKind::Fine => self.fine(),
            TagsetKind::Coarse => self.coarse(),
        }
    }
}

/// Identifies which branch produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    Punctuation,
    Tilde,
    NonAscii,
    Ordinal,
    Digits,
    PhoneOrNumberWord,
    Url,
    Emoticon,
    Mention,
    Hashtag,
    Fallthrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Tagged(RuleTag),
    Deferred,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleDecision {
    pub outcome: Outcome,
    pub matched_rule: RuleId,
}

impl RuleDecision {
    fn tagged(tag: RuleTag, rule: RuleId) -> Self {
        RuleDecision {
            outcome: Outcome::Tagged(tag),
            matched_rule: rule,
        }
    }

    pub fn rule_tag(&self) -> Option<RuleTag> {
        match self.outcome {
            Outcome::Tagged(tag) => Some(tag),
            Outcome::Deferred => None,
        }
    }

    pub fn is_deferred(&self) -> bool {
        self.outcome == Outcome::Deferred
    }
}

/// Reads a one-entry-per-line list; `#` lines are comments, and a
/// `# version: <id>` comment names the list.
fn parse_word_list(text: &str) -> (Option<String>, Vec<String>) {
    let mut version = None;
    let mut entries = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("version:") {
                version.get_or_insert_with(|| v.trim().to_string());
            }
            continue;
        }
        if !line.is_empty() {
            entries.push(line.to_string());
        }
    }
    (version, entries)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmoticonDictionary {
    entries: BTreeSet<String>,
    version: String,
}

impl EmoticonDictionary {
    /// Builds a dictionary from file text. `:)` and `:(` are always present.
    pub fn from_text(text: &str) -> Self {
        let (version, entries) = parse_word_list(text);
        let mut entries: BTreeSet<String> = entries.into_iter().collect();
        entries.insert(":)".into());
        entries.insert(":(".into());
        EmoticonDictionary {
            entries,
            version: version.unwrap_or_else(|| "unversioned".into()),
        }
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(Self::from_text(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical file form, sorted.
    pub fn to_text(&self) -> String {
        let mut out = format!("# version: {}\n", self.version);
        for e in &self.entries {
            out.push_str(e);
            out.push('\n');
        }
        out
    }
}

impl Default for EmoticonDictionary {
    fn default() -> Self {
        Self::from_text(DEFAULT_EMOTICONS)
    }
}

/// Number words matched case-insensitively (`lakh`, `million`, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberWords {
    entries: BTreeSet<String>,
    version: String,
}

impl NumberWords {
    pub fn from_text(text: &str) -> Self {
        let (version, entries) = parse_word_list(text);
        NumberWords {
            entries: entries.into_iter().map(|e| e.to_lowercase()).collect(),
            version: version.unwrap_or_else(|| "unversioned".into()),
        }
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(Self::from_text(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(&word.to_lowercase())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# version: {}\n", self.version);
        for e in &self.entries {
            out.push_str(e);
            out.push('\n');
        }
        out
    }
}

impl Default for NumberWords {
    fn default() -> Self {
        Self::from_text(DEFAULT_NUMBER_WORDS)
    }
}

/// Dictionaries consulted by the rule stage.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionaries {
    pub emoticons: EmoticonDictionary,
    pub number_words: NumberWords,
}

fn emoticon_pattern() -> &'static Regex {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    PATTERN.get_or_init(|| {
        Regex::new(r"^(?:[:;=8][-^']?[)(DPpO3/\\|]+|[)(/\\|]+[-^']?[:;=]|</?3+)$").unwrap()
    })
}

fn is_punctuation_char(c: char) -> bool {
    c.is_ascii_punctuation() && c != '~'
}

fn is_non_printable_ascii(c: char) -> bool {
    let code = c as u32;
    (code < 0x20 && c != '\t') || code > 0x7e
}

fn ends_with_ignore_case(word: &str, suffix: &str) -> bool {
    word.len() >= suffix.len()
        && word.is_char_boundary(word.len() - suffix.len())
        && word[word.len() - suffix.len()..].eq_ignore_ascii_case(suffix)
}

fn starts_with_ignore_case(word: &str, prefix: &str) -> bool {
    word.len() >= prefix.len()
        && word.is_char_boundary(prefix.len())
        && word[..prefix.len()].eq_ignore_ascii_case(prefix)
}

fn is_emoticon(word: &str, dict: &EmoticonDictionary) -> bool {
    dict.contains(word) || emoticon_pattern().is_match(word)
}

/// Classifies one surface form.
pub fn classify_token(word: &str, dicts: &Dictionaries) -> RuleDecision {
    use RuleTag as T;

    if !word.is_empty() && word.chars().all(is_punctuation_char) && !is_emoticon(word, &dicts.emoticons) {
        return RuleDecision::tagged(T::Punctuation, RuleId::Punctuation);
    }
    if word.contains('~') {
        return RuleDecision::tagged(T::Symbol, RuleId::Tilde);
    }
    if word.chars().any(is_non_printable_ascii) {
        return RuleDecision::tagged(T::Unknown, RuleId::NonAscii);
    }
    let starts_with_digit = word.as_bytes().first().is_some_and(u8::is_ascii_digit);
    if starts_with_digit && ORDINAL_SUFFIXES.iter().any(|s| ends_with_ignore_case(word, s)) {
        return RuleDecision::tagged(T::Numeral, RuleId::Ordinal);
    }
    if !word.is_empty() && word.bytes().all(|b| b.is_ascii_digit()) {
        return RuleDecision::tagged(T::Numeral, RuleId::Digits);
    }
    if word.starts_with("+91") || dicts.number_words.contains(word) {
        return RuleDecision::tagged(T::Numeral, RuleId::PhoneOrNumberWord);
    }
    if URL_SUFFIXES.iter().any(|s| ends_with_ignore_case(word, s))
        || URL_PREFIXES.iter().any(|p| starts_with_ignore_case(word, p))
    {
        return RuleDecision::tagged(T::Url, RuleId::Url);
    }
    if is_emoticon(word, &dicts.emoticons) {
        return RuleDecision::tagged(T::Emoticon, RuleId::Emoticon);
    }
    if word.starts_with('@') {
        return RuleDecision::tagged(T::Mention, RuleId::Mention);
    }
    if word.starts_with('#') {
        return RuleDecision::tagged(T::Hashtag, RuleId::Hashtag);
    }
    RuleDecision {
        outcome: Outcome::Deferred,
        matched_rule: RuleId::Fallthrough,
    }
}

/// Rule decisions for a whole sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleApplication {
    pub decisions: Vec<RuleDecision>,
    /// Indices of deferred tokens, increasing.
    pub cleaned: Vec<usize>,
}

pub fn apply_rules(sentence: &Sentence, dicts: &Dictionaries) -> RuleApplication {
    let decisions: Vec<RuleDecision> = sentence
        .tokens
        .iter()
        .map(|t| classify_token(&t.surface, dicts))
        .collect();
    let cleaned = decisions
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_deferred())
        .map(|(i, _)| i)
        .collect();
    RuleApplication { decisions, cleaned }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tag_of(word: &str) -> Option<(&'static str, &'static str)> {
        classify_token(word, &Dictionaries::default())
            .rule_tag()
            .map(|t| (t.fine(), t.coarse()))
    }

    #[test]
    fn golden_examples() {
        assert_eq!(tag_of("1st"), Some(("$", "$")));
        assert_eq!(tag_of("2nd"), Some(("$", "$")));
        assert_eq!(tag_of("3rd"), Some(("$", "$")));
        assert_eq!(tag_of("100th"), Some(("$", "$")));
        assert_eq!(tag_of("...."), Some(("RD_PUNC", "G_X")));
        assert_eq!(tag_of("!.!."), Some(("RD_PUNC", "G_X")));
        assert_eq!(tag_of(":)"), Some(("E", "E")));
        assert_eq!(tag_of(":("), Some(("E", "E")));
        assert_eq!(tag_of("http://t.co/abc"), Some(("U", "U")));
        assert_eq!(tag_of("https://x.org/a"), Some(("U", "U")));
        assert_eq!(tag_of("www.example"), Some(("U", "U")));
        assert_eq!(tag_of("google.com"), Some(("U", "U")));
        assert_eq!(tag_of("site.in"), Some(("U", "U")));
        assert_eq!(tag_of("@modi"), Some(("@", "@")));
        assert_eq!(tag_of("#win"), Some(("#", "#")));
        assert_eq!(tag_of("lakh"), Some(("$", "$")));
        assert_eq!(tag_of("Million"), Some(("$", "$")));
        assert_eq!(tag_of("+919876543210"), Some(("$", "$")));
        assert_eq!(tag_of("2016"), Some(("$", "$")));
        assert_eq!(tag_of("~"), Some(("RD_SYM", "G_X")));
        assert_eq!(tag_of("hi~~"), Some(("RD_SYM", "G_X")));
        assert_eq!(tag_of("नमस्ते"), Some(("RD_UNK", "G_X")));
        assert_eq!(tag_of("khelega"), None);
        assert_eq!(tag_of("4u"), None);
    }

    #[test]
    fn branch_order_follows_table() {
        let d = Dictionaries::default();
        // non-ASCII emoji is caught before the emoticon branch
        assert_eq!(classify_token("😀", &d).matched_rule, RuleId::NonAscii);
        // tilde before URL
        assert_eq!(classify_token("http://a.com/~x", &d).matched_rule, RuleId::Tilde);
        // ordinal before plain digits
        assert_eq!(classify_token("21st", &d).matched_rule, RuleId::Ordinal);
        assert_eq!(classify_token("21", &d).matched_rule, RuleId::Digits);
        // emoticons made only of punctuation are not punctuation
        assert_eq!(classify_token(":-)", &d).matched_rule, RuleId::Emoticon);
        assert_eq!(classify_token("^_^", &d).matched_rule, RuleId::Emoticon);
        assert_eq!(classify_token("8)", &d).matched_rule, RuleId::Emoticon);
        assert_eq!(classify_token(":D", &d).matched_rule, RuleId::Emoticon);
        // pattern fallback for entries missing from the dictionary
        assert_eq!(classify_token(":-))))", &d).matched_rule, RuleId::Emoticon);
        // bare sigils are punctuation
        assert_eq!(classify_token("@", &d).matched_rule, RuleId::Punctuation);
    }

    #[test]
    fn dictionary_file_format() {
        let dict = EmoticonDictionary::from_text("# version: v7\n# comment\n\n<(o_o)>\n");
        assert_eq!(dict.version(), "v7");
        assert!(dict.contains("<(o_o)>"));
        assert!(dict.contains(":)") && dict.contains(":("));
        assert_eq!(dict.len(), 3);
        assert!(!dict.contains("# comment"));
        assert!(EmoticonDictionary::default().len() >= 100);
        let d = Dictionaries {
            emoticons: dict,
            ..Default::default()
        };
        assert_eq!(classify_token("<(o_o)>", &d).matched_rule, RuleId::Emoticon);
    }

    #[test]
    fn sentence_application() {
        let d = Dictionaries::default();
        let app = apply_rules(&Sentence::from_surfaces(0, &["I", "won", ":)"]), &d);
        assert_eq!(app.cleaned, vec![0, 1]);
        assert_eq!(app.decisions[2].rule_tag(), Some(RuleTag::Emoticon));

        let app = apply_rules(&Sentence::from_surfaces(0, &["!!", "#yay"]), &d);
        assert!(app.cleaned.is_empty());

        let app = apply_rules(&Sentence::from_surfaces(0, &["kab", "aayega", "yaar"]), &d);
        assert_eq!(app.cleaned, vec![0, 1, 2]);
    }

    #[test]
    fn pairs_are_fixed() {
        let pairs: Vec<_> = RuleTag::ALL.iter().map(|t| (t.fine(), t.coarse())).collect();
        assert_eq!(
            pairs,
            vec![
                ("RD_PUNC", "G_X"),
                ("RD_SYM", "G_X"),
                ("RD_UNK", "G_X"),
                ("$", "$"),
                ("U", "U"),
                ("E", "E"),
                ("@", "@"),
                ("#", "#"),
            ]
        );
    }

    proptest! {
        #[test]
        fn decisions_are_deterministic_and_closed(word in "\\PC{1,12}") {
            let d = Dictionaries::default();
            let a = classify_token(&word, &d);
            prop_assert_eq!(a, classify_token(&word, &d));
            prop_assert_eq!(a.is_deferred(), a.matched_rule == RuleId::Fallthrough);
        }

        #[test]
        fn cleaned_indices_increase(words in prop::collection::vec("[!-~]{1,5}", 1..12)) {
            let app = apply_rules(&Sentence::from_surfaces(0, &words), &Dictionaries::default());
            prop_assert_eq!(app.decisions.len(), words.len());
            prop_assert!(app.cleaned.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

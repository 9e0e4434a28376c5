//! Column-formatted corpora: one token per line, tab-separated columns, a
//! blank line after every sentence.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("{source_name}:{line}: expected {expected} columns, found {found}")]
    ColumnCount {
        source_name: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{source_name}:{line}: column {column}: {reason}")]
    InvalidField {
        source_name: String,
        line: usize,
        column: usize,
        reason: &'static str,
    },
    #[error("{0}: no sentences")]
    NoSentences(String),
    #[error("sentence {sentence}, token {token}: missing {what}")]
    MissingField {
        sentence: usize,
        token: usize,
        what: &'static str,
    },
    #[error("invalid column layout {0:?}")]
    BadColumnSpec(String),
    #[error("unknown platform {0:?} (expected facebook, twitter, whatsapp or unknown)")]
    UnknownPlatform(String),
    #[error("unknown tagset {0:?} (expected fine or coarse)")]
    UnknownTagset(String),
    #[error("cannot split {sentences} sentences into {k} folds")]
    BadFoldCount { k: usize, sentences: usize },
}

/// Granularity of a part-of-speech label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TagsetKind {
    Fine,
    Coarse,
}

impl TagsetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TagsetKind::Fine => "fine",
            TagsetKind::Coarse => "coarse",
        }
    }
}

impl fmt::Display for TagsetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TagsetKind {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fine" => Ok(TagsetKind::Fine),
            "coarse" => Ok(TagsetKind::Coarse),
            _ => Err(CorpusError::UnknownTagset(s.to_string())),
        }
    }
}

/// Which gold tag columns a corpus carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagCoverage {
    Untagged,
    Fine,
    Coarse,
    Both,
}

impl TagCoverage {
    pub fn includes(self, kind: TagsetKind) -> bool {
        matches!(
            (self, kind),
            (TagCoverage::Both, _)
                | (TagCoverage::Fine, TagsetKind::Fine)
                | (TagCoverage::Coarse, TagsetKind::Coarse)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Platform {
    Facebook,
    Twitter,
    Whatsapp,
    Unknown,
}

impl Platform {
    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Facebook => "facebook",
            Platform::Twitter => "twitter",
            Platform::Whatsapp => "whatsapp",
            Platform::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Platform {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "facebook" | "fb" => Ok(Platform::Facebook),
            "twitter" | "tw" | "twt" => Ok(Platform::Twitter),
            "whatsapp" | "wa" => Ok(Platform::Whatsapp),
            "unknown" => Ok(Platform::Unknown),
            _ => Err(CorpusError::UnknownPlatform(s.to_string())),
        }
    }
}

/// Which stage produced a predicted tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Rule,
    Crf,
}

/// Attached to a token whose tag slot holds a prediction rather than gold data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub kind: TagsetKind,
    pub stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lang: Option<String>,
    pub fine_tag: Option<String>,
    pub coarse_tag: Option<String>,
    pub prediction: Option<Prediction>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            lang: None,
            fine_tag: None,
            coarse_tag: None,
            prediction: None,
        }
    }

    pub fn with_lang(mut self, lang: impl Into<String>) -> Self {
        self.lang = Some(lang.into());
        self
    }

    pub fn with_tag(mut self, kind: TagsetKind, tag: impl Into<String>) -> Self {
        *self.tag_slot_mut(kind) = Some(tag.into());
        self
    }

    pub fn tag(&self, kind: TagsetKind) -> Option<&str> {
        match kind {
            TagsetKind::Fine => self.fine_tag.as_deref(),
            TagsetKind::Coarse => self.coarse_tag.as_deref(),
        }
    }

    pub fn tag_slot_mut(&mut self, kind: TagsetKind) -> &mut Option<String> {
        match kind {
            TagsetKind::Fine => &mut self.fine_tag,
            TagsetKind::Coarse => &mut self.coarse_tag,
        }
    }

    /// Stores a predicted tag, recording which tagset and stage it came from.
    pub fn set_prediction(&mut self, kind: TagsetKind, stage: Stage, tag: impl Into<String>) {
        *self.tag_slot_mut(kind) = Some(tag.into());
        self.prediction = Some(Prediction { kind, stage });
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: usize,
    pub tokens: Vec<Token>,
    pub platform: Platform,
}

impl Sentence {
    pub fn new(id: usize, tokens: Vec<Token>) -> Self {
        Sentence {
            id,
            tokens,
            platform: Platform::Unknown,
        }
    }

    pub fn from_surfaces<S: AsRef<str>>(id: usize, surfaces: &[S]) -> Self {
        Sentence::new(id, surfaces.iter().map(|s| Token::new(s.as_ref())).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }
}

/// Where a block of sentences came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceInfo {
    pub name: String,
    pub platform: Platform,
}

impl SourceInfo {
    pub fn new(name: impl Into<String>, platform: Platform) -> Self {
        SourceInfo {
            name: name.into(),
            platform,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub sentences: Vec<Sentence>,
    pub tags: TagCoverage,
    /// Set when some gold tag falls outside the known BIS inventory.
    pub open_tagset: bool,
    pub provenance: Vec<SourceInfo>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>, tags: TagCoverage) -> Self {
        let mut corpus = Corpus {
            sentences,
            tags,
            open_tagset: false,
            provenance: Vec::new(),
        };
        corpus.open_tagset = !corpus.within_bis_inventory();
        corpus
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Appends another corpus. Coverage narrows to what both carry.
    pub fn extend(&mut self, other: Corpus) {
        self.tags = match (self.tags, other.tags) {
            (a, b) if a == b => a,
            (TagCoverage::Both, b) => b,
            (a, TagCoverage::Both) => a,
            _ => TagCoverage::Untagged,
        };
        self.open_tagset |= other.open_tagset;
        self.sentences.extend(other.sentences);
        self.provenance.extend(other.provenance);
    }

    /// Same provenance and coverage, different sentences.
    pub fn with_sentences(&self, sentences: Vec<Sentence>) -> Corpus {
        Corpus {
            sentences,
            tags: self.tags,
            open_tagset: self.open_tagset,
            provenance: self.provenance.clone(),
        }
    }

    fn within_bis_inventory(&self) -> bool {
        self.sentences
            .iter()
            .flat_map(|s| &s.tokens)
            .all(|t| {
                t.fine_tag.as_deref().is_none_or(|tag| BIS_FINE.contains(&tag))
                    && t.coarse_tag
                        .as_deref()
                        .is_none_or(|tag| BIS_COARSE.contains(&tag))
            })
    }
}

/// Fine-grained BIS tags seen in the code-mixed shared-task data.
pub const BIS_FINE: &[&str] = &[
    "N_NN", "N_NNP", "N_NNV", "N_NST", "PR_PRP", "PR_PRF", "PR_PRL", "PR_PRC", "PR_PRQ",
    "PR_PRI", "DM_DMD", "DM_DMR", "DM_DMQ", "DM_DMI", "V_VM", "V_VAUX", "JJ", "RB", "RB_AMN",
    "RB_ALC", "PSP", "CC", "CC_CCD", "CC_CCS", "DT", "RP_RPD", "RP_CL", "RP_INJ", "RP_INTF",
    "RP_NEG", "QT_QTF", "QT_QTC", "QT_QTO", "RD_RDF", "RD_SYM", "RD_PUNC", "RD_UNK", "RD_ECH",
    "RD_BUL", "$", "E", "U", "@", "#", "~", "G_X",
];

/// Coarse-grained BIS tags.
pub const BIS_COARSE: &[&str] = &[
    "G_N", "G_V", "G_J", "G_R", "G_PRP", "G_SYM", "G_X", "CC", "DT", "PSP", "E", "U", "@", "#", "$",
    "~",
];

/// Role of one tab-separated column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Surface,
    Lang,
    Tag(TagsetKind),
}

/// Column layout of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    columns: Vec<Column>,
}

impl ColumnSpec {
    pub fn new(columns: Vec<Column>) -> Result<Self, CorpusError> {
        let describe = || format!("{columns:?}");
        let count = |c: Column| columns.iter().filter(|&&x| x == c).count();
        if columns.is_empty() || columns.len() > 4 || columns[0] != Column::Surface {
            return Err(CorpusError::BadColumnSpec(describe()));
        }
        for c in [
            Column::Surface,
            Column::Lang,
            Column::Tag(TagsetKind::Fine),
            Column::Tag(TagsetKind::Coarse),
        ] {
            if count(c) > 1 {
                return Err(CorpusError::BadColumnSpec(describe()));
            }
        }
        Ok(ColumnSpec { columns })
    }

    /// `surface<TAB>lang<TAB>tag`, the usual shared-task layout.
    pub fn with_lang(kind: TagsetKind) -> Self {
        ColumnSpec {
            columns: vec![Column::Surface, Column::Lang, Column::Tag(kind)],
        }
    }

    /// `surface<TAB>tag`.
    pub fn surface_tag(kind: TagsetKind) -> Self {
        ColumnSpec {
            columns: vec![Column::Surface, Column::Tag(kind)],
        }
    }

    /// Parses a comma-separated role list such as `surface,lang,tag`.
    /// The generic role `tag` resolves to `default_kind`.
    pub fn parse(layout: &str, default_kind: TagsetKind) -> Result<Self, CorpusError> {
        let columns = layout
            .split(',')
            .map(|role| match role.trim().to_ascii_lowercase().as_str() {
                "surface" | "word" => Ok(Column::Surface),
                "lang" | "language" => Ok(Column::Lang),
                "tag" => Ok(Column::Tag(default_kind)),
                "fine" => Ok(Column::Tag(TagsetKind::Fine)),
                "coarse" => Ok(Column::Tag(TagsetKind::Coarse)),
                _ => Err(CorpusError::BadColumnSpec(layout.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        ColumnSpec::new(columns)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn has_lang(&self) -> bool {
        self.columns.contains(&Column::Lang)
    }

    /// The same layout with every tag column removed.
    pub fn without_tags(&self) -> ColumnSpec {
        ColumnSpec {
            columns: self
                .columns
                .iter()
                .copied()
                .filter(|c| !matches!(c, Column::Tag(_)))
                .collect(),
        }
    }

    /// Replaces all tag columns by a single column for `kind`.
    pub fn for_output(&self, kind: TagsetKind) -> ColumnSpec {
        let mut columns = self.without_tags().columns;
        columns.push(Column::Tag(kind));
        ColumnSpec { columns }
    }

    pub fn coverage(&self) -> TagCoverage {
        let fine = self.columns.contains(&Column::Tag(TagsetKind::Fine));
        let coarse = self.columns.contains(&Column::Tag(TagsetKind::Coarse));
        match (fine, coarse) {
            (true, true) => TagCoverage::Both,
            (true, false) => TagCoverage::Fine,
            (false, true) => TagCoverage::Coarse,
            (false, false) => TagCoverage::Untagged,
        }
    }
}

/// Parses a corpus from text. Sentences are separated by one or more blank
/// lines; the final sentence may omit its terminating blank line.
pub fn parse_corpus(
    text: &str,
    spec: &ColumnSpec,
    source: &SourceInfo,
) -> Result<Corpus, CorpusError> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    let flush = |current: &mut Vec<Token>, sentences: &mut Vec<Sentence>| {
        if !current.is_empty() {
            let id = sentences.len();
            sentences.push(Sentence {
                id,
                tokens: std::mem::take(current),
                platform: source.platform,
            });
        }
    };

    for (i, line) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            flush(&mut current, &mut sentences);
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != spec.len() {
            return Err(CorpusError::ColumnCount {
                source_name: source.name.clone(),
                line: line_no,
                expected: spec.len(),
                found: fields.len(),
            });
        }
        let mut token = Token::new(String::new());
        for (col, (&role, field)) in spec.columns.iter().zip(&fields).enumerate() {
            let invalid = |reason| CorpusError::InvalidField {
                source_name: source.name.clone(),
                line: line_no,
                column: col + 1,
                reason,
            };
            if field.is_empty() {
                return Err(invalid("empty field"));
            }
            if field.chars().any(char::is_whitespace) {
                return Err(invalid("whitespace inside field"));
            }
            let value = field.to_string();
            match role {
                Column::Surface => token.surface = value,
                Column::Lang => token.lang = Some(value),
                Column::Tag(kind) => *token.tag_slot_mut(kind) = Some(value),
            }
        }
        current.push(token);
    }
    flush(&mut current, &mut sentences);

    if sentences.is_empty() {
        return Err(CorpusError::NoSentences(source.name.clone()));
    }
    let mut corpus = Corpus::new(sentences, spec.coverage());
    corpus.provenance.push(source.clone());
    Ok(corpus)
}

/// Reads and parses a corpus file.
pub fn read_corpus(path: &Path, spec: &ColumnSpec, platform: Platform) -> crate::Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    let source = SourceInfo::new(path.display().to_string(), platform);
    Ok(parse_corpus(&text, spec, &source)?)
}

/// Serializes a corpus. Every column named by `spec` must be populated on
/// every token.
pub fn write_corpus(corpus: &Corpus, spec: &ColumnSpec) -> Result<String, CorpusError> {
    write_columns(corpus, spec, None)
}

/// Like [`write_corpus`], with one extra trailing column per token holding a
/// confidence value (`confidences[sentence][token]`).
pub fn write_corpus_with_confidence(
    corpus: &Corpus,
    spec: &ColumnSpec,
    confidences: &[Vec<f64>],
) -> Result<String, CorpusError> {
    write_columns(corpus, spec, Some(confidences))
}

fn write_columns(
    corpus: &Corpus,
    spec: &ColumnSpec,
    confidences: Option<&[Vec<f64>]>,
) -> Result<String, CorpusError> {
    let mut out = String::new();
    for (si, sentence) in corpus.sentences.iter().enumerate() {
        for (ti, token) in sentence.tokens.iter().enumerate() {
            let missing = |what| CorpusError::MissingField {
                sentence: si,
                token: ti,
                what,
            };
            for (col, &role) in spec.columns.iter().enumerate() {
                if col > 0 {
                    out.push('\t');
                }
                let value = match role {
                    Column::Surface => Some(token.surface.as_str()),
                    Column::Lang => token.lang.as_deref(),
                    Column::Tag(kind) => token.tag(kind),
                };
                let value = value.ok_or_else(|| {
                    missing(match role {
                        Column::Surface => "surface",
                        Column::Lang => "language tag",
                        Column::Tag(TagsetKind::Fine) => "fine tag",
                        Column::Tag(TagsetKind::Coarse) => "coarse tag",
                    })
                })?;
                out.push_str(value);
            }
            if let Some(conf) = confidences {
                let value = conf
                    .get(si)
                    .and_then(|row| row.get(ti))
                    .ok_or_else(|| missing("confidence"))?;
                out.push('\t');
                out.push_str(&format!("{value:.4}"));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

/// One cross-validation fold.
#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub train: Corpus,
    pub held_out: Corpus,
}

/// Partitions the corpus into `k` folds at sentence granularity. Sentences are
/// shuffled with `seed`, then cut into `k` contiguous blocks whose sizes differ
/// by at most one. Within each side of a fold, original order is kept.
pub fn split_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<Fold>, CorpusError> {
    let n = corpus.len();
    if k < 2 || k > n {
        return Err(CorpusError::BadFoldCount { k, sentences: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut fold_of = vec![0usize; n];
    let (base, extra) = (n / k, n % k);
    let mut next = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &idx in &order[next..next + size] {
            fold_of[idx] = fold;
        }
        next += size;
    }

    Ok((0..k)
        .map(|fold| {
            let (held, train): (Vec<_>, Vec<_>) = corpus
                .sentences
                .iter()
                .zip(&fold_of)
                .partition(|(_, &f)| f == fold);
            let strip = |v: Vec<(&Sentence, &usize)>| v.into_iter().map(|(s, _)| s.clone()).collect();
            Fold {
                train: corpus.with_sentences(strip(train)),
                held_out: corpus.with_sentences(strip(held)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn src() -> SourceInfo {
        SourceInfo::new("test.txt", Platform::Twitter)
    }

    #[test]
    fn parses_three_column_sentence() {
        let spec = ColumnSpec::with_lang(TagsetKind::Fine);
        let corpus = parse_corpus("I\ten\tPR_PRP\nwon\ten\tV_VM\n\n", &spec, &src()).unwrap();
        assert_eq!(corpus.len(), 1);
        let s = &corpus.sentences[0];
        assert_eq!(s.len(), 2);
        assert_eq!(s.tokens[0].lang.as_deref(), Some("en"));
        assert_eq!(s.tokens[1].tag(TagsetKind::Fine), Some("V_VM"));
        assert_eq!(s.platform, Platform::Twitter);
        assert_eq!(corpus.tags, TagCoverage::Fine);
        assert!(!corpus.open_tagset);
    }

    #[test]
    fn consecutive_blank_lines_collapse() {
        let spec = ColumnSpec::surface_tag(TagsetKind::Coarse);
        let corpus = parse_corpus("a\tN\n\n\nb\tN\n", &spec, &src()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert!(corpus.sentences.iter().all(|s| s.len() == 1));
        assert_eq!(corpus.sentences[1].id, 1);
        assert!(corpus.open_tagset, "N is not a BIS coarse tag");
    }

    #[test]
    fn space_inside_surface_is_rejected() {
        let spec = ColumnSpec::surface_tag(TagsetKind::Fine);
        let err = parse_corpus("ok\tN_NN\nx y\tN_NN\n", &spec, &src()).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidField { line: 2, column: 1, .. }));
    }

    #[test]
    fn wrong_column_count_names_line() {
        let spec = ColumnSpec::with_lang(TagsetKind::Fine);
        let err = parse_corpus("a\ten\tN_NN\nb\ten\n", &spec, &src()).unwrap_err();
        assert_eq!(
            err,
            CorpusError::ColumnCount {
                source_name: "test.txt".into(),
                line: 2,
                expected: 3,
                found: 2
            }
        );
        assert!(err.to_string().starts_with("test.txt:2:"));
    }

    #[test]
    fn empty_input_has_no_sentences() {
        let spec = ColumnSpec::surface_tag(TagsetKind::Fine);
        assert!(matches!(
            parse_corpus("\n\n", &spec, &src()),
            Err(CorpusError::NoSentences(_))
        ));
    }

    #[test]
    fn minimal_serialization() {
        let mut s = Sentence::from_surfaces(0, &["hi"]);
        s.tokens[0].coarse_tag = Some("G_X".into());
        let corpus = Corpus::new(vec![s], TagCoverage::Coarse);
        let out = write_corpus(&corpus, &ColumnSpec::surface_tag(TagsetKind::Coarse)).unwrap();
        assert_eq!(out, "hi\tG_X\n\n");
    }

    #[test]
    fn untagged_token_cannot_be_written() {
        let corpus = Corpus::new(vec![Sentence::from_surfaces(0, &["a", "b"])], TagCoverage::Untagged);
        let err = write_corpus(&corpus, &ColumnSpec::surface_tag(TagsetKind::Fine)).unwrap_err();
        assert_eq!(
            err,
            CorpusError::MissingField {
                sentence: 0,
                token: 0,
                what: "fine tag"
            }
        );
    }

    #[test]
    fn four_column_layout() {
        let spec = ColumnSpec::parse("surface,lang,fine,coarse", TagsetKind::Fine).unwrap();
        let corpus = parse_corpus("ghar\thi\tN_NN\tG_N\n", &spec, &src()).unwrap();
        assert_eq!(corpus.tags, TagCoverage::Both);
        let t = &corpus.sentences[0].tokens[0];
        assert_eq!((t.tag(TagsetKind::Fine), t.tag(TagsetKind::Coarse)), (Some("N_NN"), Some("G_N")));
        assert!(ColumnSpec::parse("lang,surface", TagsetKind::Fine).is_err());
        assert!(ColumnSpec::parse("surface,tag,fine", TagsetKind::Fine).is_err());
    }

    fn ten_sentences() -> Corpus {
        Corpus::new(
            (0..10).map(|i| Sentence::from_surfaces(i, &[format!("w{i}")])).collect(),
            TagCoverage::Untagged,
        )
    }

    #[test]
    fn folds_partition_sentences() {
        let corpus = ten_sentences();
        let folds = split_folds(&corpus, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen: Vec<usize> = Vec::new();
        for fold in &folds {
            assert_eq!(fold.held_out.len(), 2);
            assert_eq!(fold.train.len(), 8);
            seen.extend(fold.held_out.sentences.iter().map(|s| s.id));
            for s in &fold.held_out.sentences {
                assert!(!fold.train.sentences.contains(s));
            }
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(folds, split_folds(&corpus, 5, 3).unwrap());
    }

    #[test]
    fn too_many_folds() {
        assert_eq!(
            split_folds(&ten_sentences(), 11, 0).unwrap_err(),
            CorpusError::BadFoldCount { k: 11, sentences: 10 }
        );
        assert!(split_folds(&ten_sentences(), 1, 0).is_err());
    }

    fn field() -> impl Strategy<Value = String> {
        "[!-~\u{a1}-\u{17f}]{1,8}"
    }

    fn gold_corpus() -> impl Strategy<Value = Corpus> {
        let token = (field(), field(), field());
        let sentence = prop::collection::vec(token, 1..6);
        prop::collection::vec(sentence, 1..5).prop_map(|sentences| {
            let sentences = sentences
                .into_iter()
                .enumerate()
                .map(|(id, toks)| Sentence {
                    id,
                    tokens: toks
                        .into_iter()
                        .map(|(w, l, t)| Token::new(w).with_lang(l).with_tag(TagsetKind::Fine, t))
                        .collect(),
                    platform: Platform::Twitter,
                })
                .collect();
            let mut c = Corpus::new(sentences, TagCoverage::Fine);
            c.provenance.push(SourceInfo::new("test.txt", Platform::Twitter));
            c
        })
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(corpus in gold_corpus()) {
            let spec = ColumnSpec::with_lang(TagsetKind::Fine);
            let text = write_corpus(&corpus, &spec).unwrap();
            let back = parse_corpus(&text, &spec, &src()).unwrap();
            prop_assert_eq!(&back, &corpus);
            prop_assert_eq!(write_corpus(&back, &spec).unwrap(), text);
        }
    }
}

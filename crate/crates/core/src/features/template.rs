use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::FeatureError;

const MAX_RADIUS: i32 = 4;
const MAX_NGRAM: usize = 5;
const MAX_AFFIX: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinaryFlag {
    SufficientLength,
    AllCapital,
    FirstUpper,
    InitCap,
    InitPunctDigit,
    Digit,
    DigitAlpha,
    Hashtag,
}

impl BinaryFlag {
    pub const ALL: [BinaryFlag; 8] = [
        BinaryFlag::SufficientLength,
        BinaryFlag::AllCapital,
        BinaryFlag::FirstUpper,
        BinaryFlag::InitCap,
        BinaryFlag::InitPunctDigit,
        BinaryFlag::Digit,
        BinaryFlag::DigitAlpha,
        BinaryFlag::Hashtag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinaryFlag::SufficientLength => "SUFFLEN",
            BinaryFlag::AllCapital => "ALLCAP",
            BinaryFlag::FirstUpper => "FIRSTUP",
            BinaryFlag::InitCap => "INITCAP",
            BinaryFlag::InitPunctDigit => "INITPUNDIG",
            BinaryFlag::Digit => "ISDIGIT",
            BinaryFlag::DigitAlpha => "DIGALPHA",
            BinaryFlag::Hashtag => "HASHTAG",
        }
    }
}

impl FromStr for BinaryFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BinaryFlag::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown binary feature {s:?}"))
    }
}

/// Whether context and position features look at the deferred tokens only
/// or at the whole sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indexing {
    Cleaned,
    Raw,
}

/// Which feature families are active, with their parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTemplate {
    /// Inclusive offset range, e.g. `(-2, 2)`.
    pub context: Option<(i32, i32)>,
    pub ngram_orders: BTreeSet<usize>,
    pub normalize: bool,
    pub prefix: Option<usize>,
    pub suffix: Option<usize>,
    pub word_class: bool,
    pub position: bool,
    pub upper_ratio: bool,
    pub top_k: BTreeSet<usize>,
    pub binary: BTreeSet<BinaryFlag>,
    pub length_threshold: usize,
    pub stem: bool,
    pub phonetic: bool,
    pub indexing: Indexing,
}

impl Default for FeatureTemplate {
    /// Every family on: context -2..2, n-grams 1-3, affixes of 3, Top@1 and
    /// Top@2, all binary flags with length threshold 4.
    fn default() -> Self {
        FeatureTemplate {
            context: Some((-2, 2)),
            ngram_orders: [1, 2, 3].into(),
            normalize: true,
            prefix: Some(3),
            suffix: Some(3),
            word_class: true,
            position: true,
            upper_ratio: true,
            top_k: [1, 2].into(),
            binary: BinaryFlag::ALL.into(),
            length_threshold: 4,
            stem: true,
            phonetic: true,
            indexing: Indexing::Cleaned,
        }
    }
}

impl FeatureTemplate {
    /// All families off. Directives in a template file switch them on.
    pub fn empty() -> Self {
        FeatureTemplate {
            context: None,
            ngram_orders: BTreeSet::new(),
            normalize: false,
            prefix: None,
            suffix: None,
            word_class: false,
            position: false,
            upper_ratio: false,
            top_k: BTreeSet::new(),
            binary: BTreeSet::new(),
            length_threshold: 4,
            stem: false,
            phonetic: false,
            indexing: Indexing::Cleaned,
        }
    }

    /// Surface-window features only.
    pub fn context_only() -> Self {
        FeatureTemplate {
            context: Some((-2, 2)),
            ..Self::empty()
        }
    }

    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let mut t = Self::empty();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| FeatureError::Template { line: i + 1, message };
            let mut words = line.split_whitespace();
            let directive = words.next().unwrap_or_default();
            let args: Vec<&str> = words.collect();
            t.apply(directive, &args).map_err(err)?;
        }
        t.validate().map_err(|message| FeatureError::Template { line: 0, message })?;
        Ok(t)
    }

    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(Self::parse(&text)?)
    }

    fn apply(&mut self, directive: &str, args: &[&str]) -> Result<(), String> {
        let off = args == ["off"];
        let switch = |args: &[&str]| match args {
            ["on"] => Ok(true),
            ["off"] => Ok(false),
            _ => Err(format!("{directive}: expected on or off")),
        };
        let number = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| format!("{directive}: {s:?} is not a number"))
        };
        let affix = |args: &[&str]| -> Result<Option<usize>, String> {
            match args {
                ["off"] => Ok(None),
                [n] => Ok(Some(number(n)?)),
                _ => Err(format!("{directive}: expected a length or off")),
            }
        };
        match directive {
            "context" => {
                self.context = if off {
                    None
                } else {
                    let [range] = args else {
                        return Err("context: expected a range like -2..2".into());
                    };
                    let (lo, hi) = range
                        .split_once("..")
                        .ok_or("context: expected a range like -2..2")?;
                    let parse = |s: &str| s.parse::<i32>().map_err(|_| format!("context: bad offset {s:?}"));
                    Some((parse(lo)?, parse(hi)?))
                }
            }
            "ngram" => {
                self.ngram_orders = if off {
                    BTreeSet::new()
                } else {
                    args.iter().map(|a| number(a)).collect::<Result<_, _>>()?
                }
            }
            "normalize" => self.normalize = switch(args)?,
            "prefix" => self.prefix = affix(args)?,
            "suffix" => self.suffix = affix(args)?,
            "wordclass" => self.word_class = switch(args)?,
            "position" => self.position = switch(args)?,
            "upper_ratio" => self.upper_ratio = switch(args)?,
            "topk" => {
                self.top_k = if off {
                    BTreeSet::new()
                } else {
                    args.iter().map(|a| number(a)).collect::<Result<_, _>>()?
                }
            }
            "binary" => {
                self.binary = match args {
                    ["off"] => BTreeSet::new(),
                    ["all"] => BinaryFlag::ALL.into(),
                    names => names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?,
                }
            }
            "length_threshold" => match args {
                [n] => self.length_threshold = number(n)?,
                _ => return Err("length_threshold: expected a number".into()),
            },
            "stem" => self.stem = switch(args)?,
            "phonetic" => self.phonetic = switch(args)?,
            "indexing" => {
                self.indexing = match args {
                    ["cleaned"] => Indexing::Cleaned,
                    ["raw"] => Indexing::Raw,
                    _ => return Err("indexing: expected cleaned or raw".into()),
                }
            }
            other => return Err(format!("unknown directive {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some((lo, hi)) = self.context {
            if lo > hi || lo < -MAX_RADIUS || hi > MAX_RADIUS {
                return Err(format!("context range {lo}..{hi} outside -{MAX_RADIUS}..{MAX_RADIUS}"));
            }
        }
        if let Some(&n) = self.ngram_orders.iter().find(|&&n| n == 0 || n > MAX_NGRAM) {
            return Err(format!("n-gram order {n} outside 1..={MAX_NGRAM}"));
        }
        for len in [self.prefix, self.suffix].into_iter().flatten() {
            if len == 0 || len > MAX_AFFIX {
                return Err(format!("affix length {len} outside 1..={MAX_AFFIX}"));
            }
        }
        if self.top_k.iter().any(|&k| k != 1 && k != 2) {
            return Err("topk accepts only 1 and 2".into());
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical text form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_string().as_bytes()))
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for FeatureTemplate {
    /// Canonical file form; parses back to an equal template.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let on = |b: bool| if b { "on" } else { "off" };
        let opt = |o: Option<usize>| o.map_or("off".to_string(), |n| n.to_string());
        let set = |s: &BTreeSet<usize>| if s.is_empty() { "off".to_string() } else { join(s) };
        match self.context {
            Some((lo, hi)) => writeln!(f, "context {lo}..{hi}")?,
            None => writeln!(f, "context off")?,
        }
        writeln!(f, "ngram {}", set(&self.ngram_orders))?;
        writeln!(f, "normalize {}", on(self.normalize))?;
        writeln!(f, "prefix {}", opt(self.prefix))?;
        writeln!(f, "suffix {}", opt(self.suffix))?;
        writeln!(f, "wordclass {}", on(self.word_class))?;
        writeln!(f, "position {}", on(self.position))?;
        writeln!(f, "upper_ratio {}", on(self.upper_ratio))?;
        writeln!(f, "topk {}", set(&self.top_k))?;
        let binary = if self.binary.is_empty() {
            "off".to_string()
        } else if self.binary.len() == BinaryFlag::ALL.len() {
            "all".to_string()
        } else {
            join(self.binary.iter().map(|b| b.name()))
        };
        writeln!(f, "binary {binary}")?;
        writeln!(f, "length_threshold {}", self.length_threshold)?;
        writeln!(f, "stem {}", on(self.stem))?;
        writeln!(f, "phonetic {}", on(self.phonetic))?;
        let indexing = match self.indexing {
            Indexing::Cleaned => "cleaned",
            Indexing::Raw => "raw",
        };
        writeln!(f, "indexing {indexing}")
    }
}

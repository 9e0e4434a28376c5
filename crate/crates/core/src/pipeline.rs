//! Two-stage tagging: rules first, then the CRF over the deferred tokens of
//! each sentence, merged back in original order.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{read_corpus, split_folds, ColumnSpec, Corpus, Platform, Sentence, Stage, TagCoverage, TagsetKind, Token};
use crate::crf::{self, CrfModel, LabeledSequence, TrainConfig, TrainStats};
use crate::eval::{evaluate, EvalReport};
use crate::features::{featurize_corpus, featurize_sentence, FeatureError, FeatureTemplate, Lexicon};
use crate::rules::{apply_rules, Dictionaries, EmoticonDictionary, NumberWords};
use crate::Error;

pub const BUNDLE_HEADER: &str = "CMPOS-BUNDLE v1";
const MODEL_FILE: &str = "model.txt";
const LEXICON_FILE: &str = "lexicon.tsv";
const TEMPLATE_FILE: &str = "template.tmpl";
const EMOTICONS_FILE: &str = "emoticons.txt";
const NUMBERS_FILE: &str = "number_words.txt";
const MANIFEST_FILE: &str = "manifest.txt";
const TEMPLATE_HASH_KEY: &str = "template_hash";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("no training files given")]
    NoTrainingFiles,
    #[error("per-platform training needs a platform filter")]
    MissingPlatformFilter,
    #[error("no training sentences from platform {0}")]
    NoPlatformMatch(Platform),
    #[error("model was trained with template {model} but the bundle template hashes to {template}")]
    TemplateSkew { model: String, template: String },
    #[error("model tagset {model} does not match bundle tagset {bundle}")]
    TagsetSkew { model: TagsetKind, bundle: TagsetKind },
    #[error("{file}: sha256 {found} does not match manifest {expected}")]
    HashMismatch {
        file: String,
        expected: String,
        found: String,
    },
    #[error("bundle manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    /// All platforms' training data pooled together.
    Run1Augmented,
    /// Only the data of one platform.
    Run2PerPlatform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunRegime {
    pub kind: RegimeKind,
    pub platform_filter: Option<Platform>,
}

impl RunRegime {
    pub fn run1() -> Self {
        RunRegime {
            kind: RegimeKind::Run1Augmented,
            platform_filter: None,
        }
    }

    pub fn run2(platform: Platform) -> Self {
        RunRegime {
            kind: RegimeKind::Run2PerPlatform,
            platform_filter: Some(platform),
        }
    }

    pub fn validate(&self) -> Result<(), BundleError> {
        match (self.kind, self.platform_filter) {
            (RegimeKind::Run2PerPlatform, None) => Err(BundleError::MissingPlatformFilter),
            _ => Ok(()),
        }
    }

    /// Pools `corpora` as this regime prescribes.
    pub fn assemble(&self, corpora: Vec<Corpus>) -> Result<Corpus, BundleError> {
        self.validate()?;
        let mut iter = corpora.into_iter();
        let mut pooled = iter.next().ok_or(BundleError::NoTrainingFiles)?;
        for c in iter {
            pooled.extend(c);
        }
        if let (RegimeKind::Run2PerPlatform, Some(p)) = (self.kind, self.platform_filter) {
            pooled.sentences.retain(|s| s.platform == p);
            pooled.provenance.retain(|src| src.platform == p);
            if pooled.is_empty() {
                return Err(BundleError::NoPlatformMatch(p));
            }
        }
        Ok(pooled)
    }
}

/// Everything training needs besides the data.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub kind: TagsetKind,
    pub template: FeatureTemplate,
    pub dictionaries: Dictionaries,
    pub train: TrainConfig,
}

impl PipelineOptions {
    pub fn new(kind: TagsetKind) -> Self {
        PipelineOptions {
            kind,
            template: FeatureTemplate::default(),
            dictionaries: Dictionaries::default(),
            train: TrainConfig::default(),
        }
    }
}

/// A trained tagger and everything needed to reproduce its features.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerBundle {
    model: CrfModel,
    lexicon: Lexicon,
    template: FeatureTemplate,
    dictionaries: Dictionaries,
    kind: TagsetKind,
}

impl TaggerBundle {
    /// Refuses parts that disagree on the template or the tagset.
    pub fn new(
        model: CrfModel,
        lexicon: Lexicon,
        template: FeatureTemplate,
        dictionaries: Dictionaries,
        kind: TagsetKind,
    ) -> Result<Self, BundleError> {
        let expected = template.hash();
        let recorded = model.metadata().get(TEMPLATE_HASH_KEY).cloned().unwrap_or_default();
        if recorded != expected {
            return Err(BundleError::TemplateSkew {
                model: recorded,
                template: expected,
            });
        }
        if model.tagset() != kind {
            return Err(BundleError::TagsetSkew {
                model: model.tagset(),
                bundle: kind,
            });
        }
        Ok(TaggerBundle {
            model,
            lexicon,
            template,
            dictionaries,
            kind,
        })
    }

    pub fn model(&self) -> &CrfModel {
        &self.model
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn template(&self) -> &FeatureTemplate {
        &self.template
    }

    pub fn dictionaries(&self) -> &Dictionaries {
        &self.dictionaries
    }

    pub fn kind(&self) -> TagsetKind {
        self.kind
    }

    /// File name and contents of every bundle file, manifest last.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        let mut files = vec![
            (MODEL_FILE, crf::save_model(&self.model)),
            (LEXICON_FILE, self.lexicon.to_text()),
            (TEMPLATE_FILE, self.template.to_string()),
            (EMOTICONS_FILE, self.dictionaries.emoticons.to_text()),
            (NUMBERS_FILE, self.dictionaries.number_words.to_text()),
        ];
        let mut manifest = format!("{BUNDLE_HEADER}\ntagset {}\n", self.kind);
        for (name, text) in &files {
            manifest.push_str(&format!("{name} {}\n", sha256_hex(text)));
        }
        files.push((MANIFEST_FILE, manifest));
        files
    }

    /// Writes the bundle directory. Files go to a sibling temporary directory
    /// first, which then replaces `dir`, so a failure never leaves a partial bundle.
    pub fn save(&self, dir: &Path) -> crate::Result<()> {
        let parent = match dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let name = dir
            .file_name()
            .ok_or_else(|| Error::Config(format!("{}: not a directory name", dir.display())))?
            .to_string_lossy()
            .into_owned();
        fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
        let _ = fs::remove_dir_all(&tmp);
        fs::create_dir(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let written = self.files().into_iter().try_for_each(|(file, text)| {
            let path = tmp.join(file);
            fs::write(&path, text).map_err(|e| Error::io(path, e))
        });
        if let Err(e) = written {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e);
        }
        if dir.exists() {
            let old = parent.join(format!(".{name}.old-{}", std::process::id()));
            fs::rename(dir, &old).map_err(|e| Error::io(dir, e))?;
            fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))?;
            let _ = fs::remove_dir_all(&old);
        } else {
            fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> crate::Result<Self> {
        let read = |file: &str| {
            let path = dir.join(file);
            fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        let manifest = read(MANIFEST_FILE)?;
        let mut lines = manifest.lines();
        if lines.next() != Some(BUNDLE_HEADER) {
            return Err(BundleError::Manifest(format!("expected header {BUNDLE_HEADER:?}")).into());
        }
        let kind: TagsetKind = lines
            .next()
            .and_then(|l| l.strip_prefix("tagset "))
            .and_then(|k| k.parse().ok())
            .ok_or_else(|| BundleError::Manifest("missing tagset line".into()))?;
        let mut hashes = Vec::new();
        for line in lines {
            let (file, hash) = line
                .split_once(' ')
                .ok_or_else(|| BundleError::Manifest(format!("bad line {line:?}")))?;
            hashes.push((file.to_string(), hash.to_string()));
        }
        let texts: Vec<(String, String)> = [MODEL_FILE, LEXICON_FILE, TEMPLATE_FILE, EMOTICONS_FILE, NUMBERS_FILE]
            .iter()
            .map(|f| Ok((f.to_string(), read(f)?)))
            .collect::<crate::Result<_>>()?;
        let text_of = |f: &str| texts.iter().find(|(n, _)| n == f).map(|(_, t)| t.as_str()).unwrap_or("");

        let model = crf::load_model(text_of(MODEL_FILE))?;
        let template = FeatureTemplate::parse(text_of(TEMPLATE_FILE))?;
        let lexicon = Lexicon::from_text(text_of(LEXICON_FILE))?;
        let dictionaries = Dictionaries {
            emoticons: EmoticonDictionary::from_text(text_of(EMOTICONS_FILE)),
            number_words: NumberWords::from_text(text_of(NUMBERS_FILE)),
        };
        // skew is the more useful diagnosis, so it is checked before file hashes
        let bundle = TaggerBundle::new(model, lexicon, template, dictionaries, kind)?;
        for (file, text) in &texts {
            let expected = hashes
                .iter()
                .find(|(f, _)| f == file)
                .map(|(_, h)| h.clone())
                .ok_or_else(|| BundleError::Manifest(format!("{file} not listed")))?;
            let found = sha256_hex(text);
            if found != expected {
                return Err(BundleError::HashMismatch {
                    file: file.clone(),
                    expected,
                    found,
                }
                .into());
            }
        }
        Ok(bundle)
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Lexicon over the tokens the rule stage defers, which are the only ones
/// the CRF sees.
fn cleaned_lexicon(corpus: &Corpus, dicts: &Dictionaries, kind: TagsetKind) -> Result<Lexicon, FeatureError> {
    let mut pairs = Vec::new();
    for (si, sentence) in corpus.sentences.iter().enumerate() {
        for ti in apply_rules(sentence, dicts).cleaned {
            let token = &sentence.tokens[ti];
            let tag = token.tag(kind).ok_or(FeatureError::MissingGold {
                sentence: si,
                token: ti,
                kind,
            })?;
            pairs.push((token.surface.as_str(), tag));
        }
    }
    if pairs.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    Ok(Lexicon::from_pairs(pairs))
}

/// Trains a bundle on an already assembled corpus.
pub fn train_corpus(corpus: &Corpus, opts: &PipelineOptions) -> crate::Result<(TaggerBundle, TrainStats)> {
    opts.template.validate().map_err(Error::Config)?;
    let lexicon = cleaned_lexicon(corpus, &opts.dictionaries, opts.kind)?;
    let data: Vec<LabeledSequence> = featurize_corpus(corpus, &lexicon, &opts.template, &opts.dictionaries, opts.kind)?
        .into_iter()
        .map(LabeledSequence::from)
        .collect();
    let (model, stats) = crf::train_with_stats(&data, &opts.train)?;
    let mut model = model.with_tagset(opts.kind);
    model.set_metadata(TEMPLATE_HASH_KEY, opts.template.hash());
    log::info!(
        "trained on {} sentences, {} CRF sequences, {} labels, {} features; objective {:.6}",
        corpus.len(),
        data.len(),
        model.n_labels(),
        model.feature_count(),
        stats.final_objective()
    );
    let bundle = TaggerBundle::new(model, lexicon, opts.template.clone(), opts.dictionaries.clone(), opts.kind)?;
    Ok((bundle, stats))
}

/// Pools `corpora` under `regime`, then trains.
pub fn train_corpora(
    corpora: Vec<Corpus>,
    regime: &RunRegime,
    opts: &PipelineOptions,
) -> crate::Result<(TaggerBundle, TrainStats)> {
    let corpus = regime.assemble(corpora)?;
    train_corpus(&corpus, opts)
}

pub fn read_training_files(files: &[(PathBuf, Platform)], columns: &ColumnSpec) -> crate::Result<Vec<Corpus>> {
    if files.is_empty() {
        return Err(BundleError::NoTrainingFiles.into());
    }
    files.iter().map(|(path, p)| read_corpus(path, columns, *p)).collect()
}

/// Reads the training files and trains one bundle.
pub fn train_pipeline(
    files: &[(PathBuf, Platform)],
    columns: &ColumnSpec,
    regime: &RunRegime,
    opts: &PipelineOptions,
) -> crate::Result<TaggerBundle> {
    regime.validate()?;
    let corpora = read_training_files(files, columns)?;
    Ok(train_corpora(corpora, regime, opts)?.0)
}

/// Tags one sentence; the second value is the confidence of each tag (1 for
/// rule-stage tags, the posterior marginal for CRF tags).
pub fn tag_sentence_with_confidence(bundle: &TaggerBundle, sentence: &Sentence) -> (Sentence, Vec<f64>) {
    let kind = bundle.kind;
    let rules = apply_rules(sentence, &bundle.dictionaries);
    let mut tokens: Vec<Token> = sentence
        .tokens
        .iter()
        .map(|t| Token {
            surface: t.surface.clone(),
            lang: t.lang.clone(),
            fine_tag: None,
            coarse_tag: None,
            prediction: None,
        })
        .collect();
    let mut confidence = vec![1.0; tokens.len()];
    for (token, decision) in tokens.iter_mut().zip(&rules.decisions) {
        if let Some(tag) = decision.rule_tag() {
            token.set_prediction(kind, Stage::Rule, tag.tag(kind));
        }
    }
    if !rules.cleaned.is_empty() {
        let feats = featurize_sentence(sentence, &rules.cleaned, &bundle.lexicon, &bundle.template)
            .expect("cleaned positions index the sentence");
        let (labels, _) = crf::viterbi_decode(&bundle.model, &feats).expect("non-empty sequence");
        let probs = crf::marginals(&bundle.model, &feats).expect("non-empty sequence");
        for (pos, (&ti, label)) in rules.cleaned.iter().zip(labels).enumerate() {
            let y = bundle.model.label_index(&label).expect("decoded label is in the inventory");
            confidence[ti] = probs[pos][y];
            tokens[ti].set_prediction(kind, Stage::Crf, label);
        }
    }
    let mut out = Sentence::new(sentence.id, tokens);
    out.platform = sentence.platform;
    (out, confidence)
}

pub fn tag_sentence(bundle: &TaggerBundle, sentence: &Sentence) -> Sentence {
    tag_sentence_with_confidence(bundle, sentence).0
}

fn coverage(kind: TagsetKind) -> TagCoverage {
    match kind {
        TagsetKind::Fine => TagCoverage::Fine,
        TagsetKind::Coarse => TagCoverage::Coarse,
    }
}

/// Tags every sentence, in parallel; output order follows the input.
pub fn tag_corpus_with_confidence(bundle: &TaggerBundle, corpus: &Corpus) -> (Corpus, Vec<Vec<f64>>) {
    let (sentences, confidence): (Vec<_>, Vec<_>) = corpus
        .sentences
        .par_iter()
        .map(|s| tag_sentence_with_confidence(bundle, s))
        .unzip();
    let mut out = Corpus::new(sentences, coverage(bundle.kind));
    out.provenance = corpus.provenance.clone();
    (out, confidence)
}

pub fn tag_corpus(bundle: &TaggerBundle, corpus: &Corpus) -> Corpus {
    tag_corpus_with_confidence(bundle, corpus).0
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub report: EvalReport,
    /// Lexicon built from this fold's training side only.
    pub lexicon: Lexicon,
    /// Ids of the held-out sentences.
    pub held_out: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    pub mean_macro_f: f64,
    pub mean_rule_stage_share: f64,
}

impl CvReport {
    /// One row per fold plus a mean row.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<6}  {:>8}  {:>8}  {:>8}  {:>10}\n", "fold", "tokens", "accuracy", "macro F", "rule share");
        for (i, f) in self.folds.iter().enumerate() {
            out.push_str(&format!(
                "{:<6}  {:>8}  {:>8.3}  {:>8.3}  {:>10.3}\n",
                i + 1,
                f.report.tokens,
                f.report.token_accuracy,
                f.report.macro_f,
                f.report.rule_stage_share
            ));
        }
        let tokens: u64 = self.folds.iter().map(|f| f.report.tokens).sum();
        out.push_str(&format!(
            "{:<6}  {:>8}  {:>8.3}  {:>8.3}  {:>10.3}\n",
            "mean", tokens, self.mean_accuracy, self.mean_macro_f, self.mean_rule_stage_share
        ));
        out
    }
}

/// k-fold cross-validation at sentence granularity. Each fold rebuilds its
/// lexicon and model from its own training side.
pub fn cross_validate(corpus: &Corpus, opts: &PipelineOptions, k: usize, seed: u64) -> crate::Result<CvReport> {
    let folds = split_folds(corpus, k, seed)?;
    let mut results = Vec::with_capacity(k);
    for (i, fold) in folds.iter().enumerate() {
        let (bundle, _) = train_corpus(&fold.train, opts)?;
        let predicted = tag_corpus(&bundle, &fold.held_out);
        let report = evaluate(&fold.held_out, &predicted, opts.kind)?;
        log::info!("fold {}/{k}: accuracy {:.4}", i + 1, report.token_accuracy);
        results.push(FoldResult {
            report,
            lexicon: bundle.lexicon.clone(),
            held_out: fold.held_out.sentences.iter().map(|s| s.id).collect(),
        });
    }
    let mean = |f: &dyn Fn(&FoldResult) -> f64| results.iter().map(f).sum::<f64>() / results.len() as f64;
    Ok(CvReport {
        mean_accuracy: mean(&|f| f.report.token_accuracy),
        mean_macro_f: mean(&|f| f.report.macro_f),
        mean_rule_stage_share: mean(&|f| f.report.rule_stage_share),
        folds: results,
    })
}

/// Reads the files, pools them under `regime`, then cross-validates.
pub fn cross_validate_files(
    files: &[(PathBuf, Platform)],
    columns: &ColumnSpec,
    regime: &RunRegime,
    opts: &PipelineOptions,
    k: usize,
    seed: u64,
) -> crate::Result<CvReport> {
    regime.validate()?;
    let corpus = regime.assemble(read_training_files(files, columns)?)?;
    cross_validate(&corpus, opts, k, seed)
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use cmpos::corpus::{parse_corpus, write_corpus, write_corpus_with_confidence, SourceInfo, Stage};
use cmpos::crf::Optimizer;
use cmpos::eval::evaluate;
use cmpos::pipeline::{
    cross_validate, sha256_hex, tag_corpus_with_confidence, train_corpus, PipelineOptions,
};
use cmpos::rules::{apply_rules, Dictionaries, NumberWords};
use cmpos::{ColumnSpec, Corpus, EmoticonDictionary, FeatureTemplate, Platform, RunRegime, TaggerBundle, TagsetKind};

use crate::{Cli, Command, CvArgs, DataArgs, EvalArgs, OptimizerArg, Regime, TagArgs, Tagset, TrainArgs};

pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

pub fn dispatch(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return usage("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    log::info!("cmpos {}", env!("CARGO_PKG_VERSION"));
    log::info!("threads: {}", rayon::current_num_threads());
    match cli.command {
        Command::Train(args) => train(args),
        Command::Tag(args) => tag(args),
        Command::Eval(args) => eval(args),
        Command::Cv(args) => cv(args),
    }
}

fn kind_of(t: Tagset) -> TagsetKind {
    match t {
        Tagset::Fine => TagsetKind::Fine,
        Tagset::Coarse => TagsetKind::Coarse,
    }
}

/// Corpus text plus the layout it was read with.
struct Loaded {
    corpus: Corpus,
    columns: ColumnSpec,
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    log::info!("input {} sha256 {}", path.display(), sha256_hex(&text));
    Ok(text)
}

/// Language ids seen in code-mixed corpora; a two-column file whose second
/// column only holds these is read as `surface,lang`.
const LANGUAGE_IDS: &[&str] = &[
    "en", "hi", "bn", "te", "ta", "mr", "gu", "ur", "ne", "univ", "mixed", "acro", "undef", "other", "rest",
];

fn is_confidence(field: &str) -> bool {
    field.parse::<f64>().is_ok_and(|v| (0.0..=1.0).contains(&v))
}

/// Guesses the layout from the first token line. A trailing numeric column
/// (as written by `tag --marginals`) is reported separately so it can be dropped.
fn detect_columns(text: &str, kind: TagsetKind) -> anyhow::Result<(ColumnSpec, bool)> {
    let first = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| anyhow!("no token lines"))?;
    let fields: Vec<&str> = first.trim_end_matches('\r').split('\t').collect();
    let confidence = fields.len() >= 2 && is_confidence(fields[fields.len() - 1]);
    let n = fields.len() - usize::from(confidence);
    let second_is_lang = || {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .all(|l| l.split('\t').nth(1).is_some_and(|f| LANGUAGE_IDS.contains(&f.trim_end_matches('\r'))))
    };
    let layout = match n {
        1 => "surface",
        2 if second_is_lang() => "surface,lang",
        2 => "surface,tag",
        3 => "surface,lang,tag",
        4 => "surface,lang,fine,coarse",
        _ => return Err(anyhow!("cannot guess the layout of {} columns; pass --columns", fields.len())),
    };
    Ok((ColumnSpec::parse(layout, kind)?, confidence))
}

fn drop_last_column(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        match line.rfind('\t') {
            Some(i) if !line.trim().is_empty() => out.push_str(&line[..i]),
            _ => out.push_str(line),
        }
        out.push('\n');
    }
    out
}

fn load_corpus(path: &Path, columns: Option<&str>, kind: TagsetKind, platform: Platform) -> anyhow::Result<Loaded> {
    let text = read_text(path)?;
    let (columns, text) = match columns {
        Some(layout) => (ColumnSpec::parse(layout, kind)?, text),
        None => {
            let (spec, confidence) =
                detect_columns(&text, kind).with_context(|| path.display().to_string())?;
            (spec, if confidence { drop_last_column(&text) } else { text })
        }
    };
    let source = SourceInfo::new(path.display().to_string(), platform);
    let corpus = parse_corpus(&text, &columns, &source)?;
    Ok(Loaded { corpus, columns })
}

/// Splits `path:platform` at the last colon when the suffix names a platform.
fn parse_input(arg: &str) -> Result<(PathBuf, Platform), Failure> {
    if let Some((path, suffix)) = arg.rsplit_once(':') {
        if !path.is_empty() && !suffix.contains('/') {
            return match suffix.parse::<Platform>() {
                Ok(p) => Ok((PathBuf::from(path), p)),
                Err(e) => usage(format!("--in {arg}: {e}")),
            };
        }
    }
    Ok((PathBuf::from(arg), Platform::Unknown))
}

/// Writes through a sibling temporary file so readers never see a partial output.
fn write_atomic(path: &Path, text: &str) -> anyhow::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("{}: not a file name", path.display()))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| {
        let _ = fs::remove_file(&tmp);
        format!("writing {}", path.display())
    })
}

struct Prepared {
    corpus: Corpus,
    opts: PipelineOptions,
}

fn prepare(data: DataArgs, seed: u64) -> Result<Prepared, Failure> {
    let kind = kind_of(data.tagset);
    let regime = match (data.regime, &data.platform) {
        (Regime::Run1, None) => RunRegime::run1(),
        (Regime::Run1, Some(_)) => return usage("--platform only applies to --regime run2"),
        (Regime::Run2, None) => return usage("--regime run2 needs --platform"),
        (Regime::Run2, Some(p)) => match p.parse() {
            Ok(p) if p != Platform::Unknown => RunRegime::run2(p),
            _ => return usage(format!("--platform {p}: expected facebook, twitter or whatsapp")),
        },
    };
    let inputs = data
        .inputs
        .iter()
        .map(|a| parse_input(a))
        .collect::<Result<Vec<_>, _>>()?;
    if !(data.sigma.is_finite() && data.sigma > 0.0) {
        return usage("--sigma must be positive");
    }
    if data.max_iter == 0 {
        return usage("--max-iter must be positive");
    }
    if !(data.tol.is_finite() && data.tol >= 0.0) {
        return usage("--tol must be non-negative");
    }

    let mut opts = PipelineOptions::new(kind);
    if let Some(path) = &data.template {
        opts.template = FeatureTemplate::load(path)?;
        log::info!("template {} sha256 {}", path.display(), opts.template.hash());
    }
    let mut dicts = Dictionaries::default();
    if let Some(path) = &data.emoticons {
        dicts.emoticons = EmoticonDictionary::load(path)?;
        log::info!("emoticons {} ({} entries)", path.display(), dicts.emoticons.len());
    }
    if let Some(path) = &data.number_words {
        dicts.number_words = NumberWords::load(path)?;
        log::info!("number words {}", path.display());
    }
    opts.dictionaries = dicts;
    opts.train.l2_sigma = data.sigma;
    opts.train.max_iterations = data.max_iter;
    opts.train.convergence_tol = data.tol;
    opts.train.optimizer = match data.optimizer {
        OptimizerArg::Lbfgs => Optimizer::BatchQuasiNewton,
        OptimizerArg::Asgd => Optimizer::AveragedStochastic,
    };
    opts.train.seed = seed;
    log::info!(
        "config: tagset {kind}, regime {:?}, platform {}, template hash {}",
        data.regime,
        data.platform.as_deref().unwrap_or("-"),
        opts.template.hash()
    );
    for (k, v) in opts.train.metadata() {
        log::info!("config: {k} = {v}");
    }

    let corpora = inputs
        .iter()
        .map(|(path, platform)| {
            load_corpus(path, data.columns.as_deref(), kind, *platform).map(|l| l.corpus)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let corpus = regime.assemble(corpora)?;
    Ok(Prepared { corpus, opts })
}

fn train(args: TrainArgs) -> Outcome {
    let started = Instant::now();
    let Prepared { corpus, opts } = prepare(args.data, args.seed)?;
    let (bundle, stats) = train_corpus(&corpus, &opts)?;
    bundle.save(&args.out)?;
    let labels = bundle.model().labels();
    println!("sentences: {}", corpus.len());
    println!("tokens: {}", corpus.token_count());
    println!("labels ({}): {}", labels.len(), labels.join(" "));
    println!("iterations: {}", stats.iterations);
    println!("converged: {}", stats.converged);
    println!("final objective: {:.6}", stats.final_objective());
    println!("wall time: {:.2}s", started.elapsed().as_secs_f64());
    log::info!("bundle written to {}", args.out.display());
    Ok(())
}

fn tag(args: TagArgs) -> Outcome {
    let bundle = TaggerBundle::load(&args.bundle)
        .with_context(|| format!("loading bundle {}", args.bundle.display()))?;
    let kind = bundle.kind();
    let loaded = load_corpus(&args.input, args.columns.as_deref(), kind, Platform::Unknown)?;
    let (tagged, confidence) = tag_corpus_with_confidence(&bundle, &loaded.corpus);
    let spec = loaded.columns.for_output(kind);
    let text = if args.marginals {
        write_corpus_with_confidence(&tagged, &spec, &confidence)?
    } else {
        write_corpus(&tagged, &spec)?
    };
    match &args.out {
        Some(path) => write_atomic(path, &text)?,
        None => print!("{text}"),
    }
    log::info!("tagged {} sentences, {} tokens", tagged.len(), tagged.token_count());
    Ok(())
}

/// Marks the predicted tokens the rule stage would have handled, so the
/// report can attribute them.
fn mark_rule_tokens(corpus: &mut Corpus, kind: TagsetKind) {
    let dicts = Dictionaries::default();
    for sentence in &mut corpus.sentences {
        let rules = apply_rules(sentence, &dicts);
        for (token, decision) in sentence.tokens.iter_mut().zip(&rules.decisions) {
            if decision.rule_tag().is_some() {
                if let Some(tag) = token.tag(kind).map(str::to_owned) {
                    token.set_prediction(kind, Stage::Rule, tag);
                }
            }
        }
    }
}

fn eval(args: EvalArgs) -> Outcome {
    let kind = kind_of(args.tagset);
    let gold = load_corpus(&args.gold, args.columns.as_deref(), kind, Platform::Unknown)?;
    let mut pred = load_corpus(&args.pred, args.columns.as_deref(), kind, Platform::Unknown)?;
    mark_rule_tokens(&mut pred.corpus, kind);
    let report = evaluate(&gold.corpus, &pred.corpus, kind)
        .with_context(|| format!("comparing {} with {}", args.gold.display(), args.pred.display()))?;
    print!("{}", report.to_table());
    if let Some(path) = &args.report {
        write_atomic(path, &report.to_kv())?;
    }
    Ok(())
}

fn cv(args: CvArgs) -> Outcome {
    if args.folds < 2 {
        return usage("--folds must be at least 2");
    }
    let Prepared { corpus, opts } = prepare(args.data, args.seed)?;
    if args.folds > corpus.len() {
        return usage(format!("--folds {} exceeds the {} training sentences", args.folds, corpus.len()));
    }
    let report = cross_validate(&corpus, &opts, args.folds, args.seed)?;
    print!("{}", report.to_table());
    if let Some(path) = &args.report {
        let mut text = String::new();
        for (i, fold) in report.folds.iter().enumerate() {
            let _ = writeln!(text, "fold={}", i + 1);
            text.push_str(&fold.report.to_kv());
            text.push('\n');
        }
        write_atomic(path, &text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn platform_suffix() {
        let ok = |a: &str| match parse_input(a) {
            Ok(v) => v,
            Err(_) => panic!("{a}"),
        };
        assert_eq!(ok("fb.txt:facebook"), (PathBuf::from("fb.txt"), Platform::Facebook));
        assert_eq!(ok("a:b/c.txt:wa"), (PathBuf::from("a:b/c.txt"), Platform::Whatsapp));
        assert_eq!(ok("plain.txt"), (PathBuf::from("plain.txt"), Platform::Unknown));
        assert!(matches!(parse_input("x.txt:myspace"), Err(Failure::Usage(_))));
    }

    #[test]
    fn layout_guess() {
        let (spec, conf) = detect_columns("\n\nhi\ten\tNN\n", TagsetKind::Fine).unwrap();
        assert_eq!(spec, ColumnSpec::with_lang(TagsetKind::Fine));
        assert!(!conf);
        let (spec, conf) = detect_columns("hi\ten\tNN\t0.9312\n", TagsetKind::Coarse).unwrap();
        assert_eq!(spec, ColumnSpec::with_lang(TagsetKind::Coarse));
        assert!(conf);
        let (spec, _) = detect_columns("hi\ten\nyaar\thi\n", TagsetKind::Fine).unwrap();
        assert!(spec.has_lang() && spec.coverage() == cmpos::corpus::TagCoverage::Untagged);
        let (spec, _) = detect_columns("hi\tUH\nyaar\thi\n", TagsetKind::Fine).unwrap();
        assert_eq!(spec, ColumnSpec::surface_tag(TagsetKind::Fine));
        assert_eq!(drop_last_column("a\tb\t0.5\n\nc\td\t1.0\n"), "a\tb\n\nc\td\n");
        assert!(detect_columns("", TagsetKind::Fine).is_err());
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const WORDS: &[(&str, &str, &str)] = &[
    ("main", "hi", "PR_PRP"),
    ("ghar", "hi", "N_NN"),
    ("ja", "hi", "V_VM"),
    ("raha", "hi", "V_VAUX"),
    ("hoon", "hi", "V_VAUX"),
    ("the", "en", "DT"),
    ("movie", "en", "N_NN"),
    ("was", "en", "V_VAUX"),
    ("awesome", "en", "JJ"),
    ("bahut", "hi", "RB"),
    ("accha", "hi", "JJ"),
    ("tha", "hi", "V_VAUX"),
];

const PATTERNS: &[&[usize]] = &[&[0, 1, 2, 3, 4], &[5, 6, 7, 8], &[6, 9, 10, 11], &[0, 2, 3, 4]];

/// Sentences in `surface<TAB>lang<TAB>tag` with a mention, a number and punctuation mixed in.
fn corpus_text(sentences: usize, offset: usize) -> String {
    let mut out = String::new();
    for i in 0..sentences {
        let pattern = PATTERNS[(i + offset) % PATTERNS.len()];
        if i % 3 == 0 {
            out.push_str("@dost\tuniv\t@\n");
        }
        for &w in pattern {
            let (s, l, t) = WORDS[w];
            out.push_str(&format!("{s}\t{l}\t{t}\n"));
        }
        if i % 2 == 0 {
            out.push_str("2\tuniv\t$\n");
        }
        out.push_str("!\tuniv\tRD_PUNC\n\n");
    }
    out
}

fn untagged(text: &str) -> String {
    text.lines()
        .map(|l| l.split('\t').take(2).collect::<Vec<_>>().join("\t") + "\n")
        .collect()
}

fn cmpos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmpos"))
        .args(args)
        .env_remove("CMPOS_TEMPLATE")
        .env_remove("CMPOS_EMOTICONS")
        .env_remove("CMPOS_NUMBER_WORDS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\n{}", o.status.code(), stderr(o));
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("fb.txt"), corpus_text(12, 0)).unwrap();
        fs::write(dir.path().join("tw.txt"), corpus_text(12, 1)).unwrap();
        fs::write(dir.path().join("wa.txt"), corpus_text(12, 2)).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn inputs(&self) -> Vec<String> {
        ["fb.txt:facebook", "tw.txt:twitter", "wa.txt:whatsapp"]
            .iter()
            .flat_map(|f| ["--in".to_string(), self.arg(f)])
            .collect()
    }

    fn train(&self, out: &str, extra: &[&str]) -> Output {
        let inputs = self.inputs();
        let out = self.arg(out);
        let mut args = vec!["-q", "train", "--tagset", "fine", "--max-iter", "30"];
        args.extend(inputs.iter().map(String::as_str));
        args.extend(["--out", out.as_str()]);
        args.extend(extra);
        cmpos(&args)
    }
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn train_writes_a_bundle_and_summary() {
    let fx = Fixture::new();
    let out = fx.train("bundle", &[]);
    assert_ok(&out);
    let summary = stdout(&out);
    assert!(summary.contains("sentences: 36"), "{summary}");
    assert!(summary.contains("final objective:"));
    assert!(summary.contains("wall time:"));
    let names: Vec<String> = dir_files(&fx.path("bundle")).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        ["emoticons.txt", "lexicon.tsv", "manifest.txt", "model.txt", "number_words.txt", "template.tmpl"]
    );
    // nothing temporary left next to the bundle
    let stray: Vec<_> = fs::read_dir(fx.dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with('.'))
        .collect();
    assert!(stray.is_empty());
}

#[test]
fn rerun_is_byte_identical() {
    let fx = Fixture::new();
    assert_ok(&fx.train("a", &[]));
    assert_ok(&fx.train("b", &["--threads", "1"]));
    assert_eq!(dir_files(&fx.path("a")), dir_files(&fx.path("b")));
}

#[test]
fn run2_needs_a_platform() {
    let fx = Fixture::new();
    let out = fx.train("bundle", &["--regime", "run2"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(!fx.path("bundle").exists());

    assert_ok(&fx.train("tw", &["--regime", "run2", "--platform", "twitter"]));
    let out = cmpos(&["-q", "train", "--in", &fx.arg("fb.txt"), "--regime", "run2", "--platform", "twitter", "--out", &fx.arg("none")]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_2() {
    let fx = Fixture::new();
    for args in [
        vec!["train", "--out", "x"],
        vec!["tag", "--bundle", "b"],
        vec!["frobnicate"],
        vec!["train", "--in", "x.txt:myspace", "--out", "y"],
        vec!["train", "--in", "x.txt", "--out", "y", "--sigma", "0"],
    ] {
        let out = cmpos(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
    assert!(!fx.path("y").exists());
}

#[test]
fn tag_two_sentences() {
    let fx = Fixture::new();
    assert_ok(&fx.train("bundle", &[]));
    let input = untagged(&corpus_text(2, 0));
    fs::write(fx.path("in.txt"), &input).unwrap();
    let out = cmpos(&["-q", "tag", "--bundle", &fx.arg("bundle"), "--in", &fx.arg("in.txt"), "--out", &fx.arg("out.txt")]);
    assert_ok(&out);
    let tagged = fs::read_to_string(fx.path("out.txt")).unwrap();
    let sentences: Vec<&str> = tagged.split("\n\n").filter(|s| !s.trim().is_empty()).collect();
    assert_eq!(sentences.len(), 2);
    let lines: Vec<Vec<&str>> = tagged.lines().filter(|l| !l.is_empty()).map(|l| l.split('\t').collect()).collect();
    let surfaces: Vec<&str> = input.lines().filter(|l| !l.is_empty()).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(lines.iter().map(|f| f[0]).collect::<Vec<_>>(), surfaces);
    assert!(lines.iter().all(|f| f.len() == 3));
    // rule stage tags come through unchanged
    let mention = lines.iter().find(|f| f[0] == "@dost").unwrap();
    assert_eq!(mention[2], "@");
    // the input file is untouched
    assert_eq!(fs::read_to_string(fx.path("in.txt")).unwrap(), input);
}

#[test]
fn tag_ignores_gold_tags_and_reports_marginals() {
    let fx = Fixture::new();
    assert_ok(&fx.train("bundle", &[]));
    let mut tagged_input = corpus_text(3, 1);
    tagged_input = tagged_input.replace("\tN_NN\n", "\tJJ\n");
    fs::write(fx.path("in.txt"), &tagged_input).unwrap();
    let out = cmpos(&["-q", "tag", "--bundle", &fx.arg("bundle"), "--in", &fx.arg("in.txt"), "--marginals"]);
    assert_ok(&out);
    let text = stdout(&out);
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        assert_eq!(f.len(), 4, "{line}");
        let p: f64 = f[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&p), "{line}");
        rows += 1;
    }
    assert_eq!(rows, tagged_input.lines().filter(|l| !l.is_empty()).count());
    let movie = text.lines().find(|l| l.starts_with("movie\t")).unwrap();
    assert_eq!(movie.split('\t').nth(2), Some("N_NN"));
}

#[test]
fn missing_bundle_names_the_path() {
    let fx = Fixture::new();
    fs::write(fx.path("in.txt"), "hi\n").unwrap();
    let missing = fx.arg("no-such-bundle");
    let out = cmpos(&["-q", "tag", "--bundle", &missing, "--in", &fx.arg("in.txt")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(&missing), "{}", stderr(&out));
}

#[test]
fn template_skew_is_refused() {
    let fx = Fixture::new();
    assert_ok(&fx.train("bundle", &[]));
    fs::write(fx.path("bundle").join("template.tmpl"), "context -1..1\n").unwrap();
    fs::write(fx.path("in.txt"), "hi\n").unwrap();
    let out = cmpos(&["-q", "tag", "--bundle", &fx.arg("bundle"), "--in", &fx.arg("in.txt")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("template"), "{}", stderr(&out));
}

#[test]
fn eval_identical_files() {
    let fx = Fixture::new();
    let report = fx.arg("report.kv");
    let out = cmpos(&["-q", "eval", "--gold", &fx.arg("fb.txt"), "--pred", &fx.arg("fb.txt"), "--report", &report]);
    assert_ok(&out);
    assert!(stdout(&out).contains("1.000"), "{}", stdout(&out));
    let kv = fs::read_to_string(&report).unwrap();
    let parsed = cmpos::eval::EvalReport::from_kv(&kv).unwrap();
    assert_eq!(parsed.token_accuracy, 1.0);
    assert_eq!(parsed.macro_f, 1.0);
    assert!(parsed.rule_tagged > 0);
    assert_eq!(parsed.to_kv(), kv);
}

#[test]
fn eval_misaligned_files() {
    let fx = Fixture::new();
    let pred = corpus_text(12, 0).replacen("ghar", "gharr", 1);
    fs::write(fx.path("pred.txt"), pred).unwrap();
    let out = cmpos(&["-q", "eval", "--gold", &fx.arg("fb.txt"), "--pred", &fx.arg("pred.txt")]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("ghar") && err.contains("sentence"), "{err}");
}

#[test]
fn eval_reads_tagger_output() {
    let fx = Fixture::new();
    assert_ok(&fx.train("bundle", &[]));
    let out = cmpos(&["-q", "tag", "--bundle", &fx.arg("bundle"), "--in", &fx.arg("wa.txt"), "--marginals", "--out", &fx.arg("pred.txt")]);
    assert_ok(&out);
    let out = cmpos(&["-q", "eval", "--gold", &fx.arg("wa.txt"), "--pred", &fx.arg("pred.txt"), "--report", &fx.arg("r.kv")]);
    assert_ok(&out);
    let report = cmpos::eval::EvalReport::from_kv(&fs::read_to_string(fx.path("r.kv")).unwrap()).unwrap();
    assert!(report.token_accuracy > 0.95, "{}", stdout(&out));
}

#[test]
fn cv_is_deterministic() {
    let fx = Fixture::new();
    let inputs = fx.inputs();
    let run = |threads: &str| {
        let mut args = vec!["-q", "--threads", threads, "cv", "--folds", "5", "--seed", "7", "--max-iter", "20"];
        args.extend(inputs.iter().map(String::as_str));
        cmpos(&args)
    };
    let a = run("1");
    let b = run("3");
    assert_ok(&a);
    assert_eq!(stdout(&a), stdout(&b));
    let table = stdout(&a);
    // header, 5 folds, mean
    assert_eq!(table.lines().count(), 1 + 5 + 1, "{table}");
    assert!(table.lines().last().unwrap().starts_with("mean"));
}

#[test]
fn cv_folds_must_be_at_least_two() {
    let fx = Fixture::new();
    let inputs = fx.inputs();
    let mut args = vec!["-q", "cv", "--folds", "1"];
    args.extend(inputs.iter().map(String::as_str));
    let out = cmpos(&args);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn env_overrides_the_template() {
    let fx = Fixture::new();
    fs::write(fx.path("ctx.tmpl"), "context -1..1\n").unwrap();
    let inputs = fx.inputs();
    let mut args = vec!["-q", "train", "--max-iter", "20", "--out"];
    let out_dir = fx.arg("bundle");
    args.push(&out_dir);
    args.extend(inputs.iter().map(String::as_str));
    let out = Command::new(env!("CARGO_BIN_EXE_cmpos"))
        .args(&args)
        .env("CMPOS_TEMPLATE", fx.path("ctx.tmpl"))
        .output()
        .unwrap();
    assert_ok(&out);
    let template = fs::read_to_string(fx.path("bundle").join("template.tmpl")).unwrap();
    let expected = cmpos::FeatureTemplate::parse("context -1..1\n").unwrap().to_string();
    assert_eq!(template, expected);
    assert_ne!(template, cmpos::FeatureTemplate::default().to_string());
}

#[test]
fn logs_version_and_input_hashes() {
    let fx = Fixture::new();
    let text = fs::read_to_string(fx.path("fb.txt")).unwrap();
    let out = cmpos(&["train", "--in", &fx.arg("fb.txt:facebook"), "--max-iter", "5", "--out", &fx.arg("b")]);
    assert_ok(&out);
    let log = stderr(&out);
    assert!(log.contains(env!("CARGO_PKG_VERSION")), "{log}");
    assert!(log.contains(&cmpos::pipeline::sha256_hex(&text)), "{log}");
    assert!(log.contains("l2_sigma"));
}

//! Token-level scoring of predicted tags against gold tags.
//!
//! Every token receives exactly one prediction, so micro-averaged precision,
//! recall and F all equal token accuracy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::{Corpus, Stage, TagsetKind};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("gold has {gold} sentences, prediction has {predicted}")]
    SentenceCount { gold: usize, predicted: usize },
    #[error("sentence {sentence}, token {token}: gold {gold:?} vs predicted {predicted:?}")]
    Misaligned {
        sentence: usize,
        token: usize,
        gold: String,
        predicted: String,
    },
    #[error("sentence {sentence}, token {token}: no {side} {kind} tag")]
    MissingTag {
        sentence: usize,
        token: usize,
        side: &'static str,
        kind: TagsetKind,
    },
    #[error("nothing to evaluate")]
    Empty,
    #[error("report line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// `2pr / (p + r)`, or 0 when both are 0.
pub fn check_harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: u64,
    pub predicted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub kind: TagsetKind,
    pub tokens: u64,
    pub correct: u64,
    pub token_accuracy: f64,
    pub per_label: BTreeMap<String, LabelScores>,
    pub micro_f: f64,
    pub macro_f: f64,
    /// `(gold, predicted) -> count`, zero cells omitted.
    pub confusion: BTreeMap<(String, String), u64>,
    /// Tokens tagged by the rule stage, and their fraction of all tokens.
    pub rule_tagged: u64,
    pub rule_stage_share: f64,
    /// Rule-tagged tokens whose gold tag differs from the rule's tag.
    pub rule_disagreements: u64,
    pub sentences: u64,
    pub sentences_correct: u64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Scores `predicted` against `gold` for one tagset.
pub fn evaluate(gold: &Corpus, predicted: &Corpus, kind: TagsetKind) -> Result<EvalReport, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::SentenceCount {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    let mut confusion: BTreeMap<(String, String), u64> = BTreeMap::new();
    let (mut tokens, mut by_rule, mut disagreements) = (0u64, 0u64, 0u64);
    let mut sentences_correct = 0u64;
    for (si, (gs, ps)) in gold.sentences.iter().zip(&predicted.sentences).enumerate() {
        if gs.len() != ps.len() {
            let token = gs.len().min(ps.len());
            let side = |s: &crate::Sentence| s.tokens.get(token).map_or("<end>".into(), |t| t.surface.clone());
            return Err(EvalError::Misaligned {
                sentence: si,
                token,
                gold: side(gs),
                predicted: side(ps),
            });
        }
        let mut all_right = true;
        for (ti, (gt, pt)) in gs.tokens.iter().zip(&ps.tokens).enumerate() {
            if gt.surface != pt.surface {
                return Err(EvalError::Misaligned {
                    sentence: si,
                    token: ti,
                    gold: gt.surface.clone(),
                    predicted: pt.surface.clone(),
                });
            }
            let missing = |side| EvalError::MissingTag {
                sentence: si,
                token: ti,
                side,
                kind,
            };
            let g = gt.tag(kind).ok_or_else(|| missing("gold"))?;
            let p = pt.tag(kind).ok_or_else(|| missing("predicted"))?;
            tokens += 1;
            all_right &= g == p;
            if pt.prediction.is_some_and(|pr| pr.stage == Stage::Rule) {
                by_rule += 1;
                if g != p {
                    disagreements += 1;
                }
            }
            *confusion.entry((g.to_string(), p.to_string())).or_default() += 1;
        }
        sentences_correct += u64::from(all_right);
    }
    if tokens == 0 {
        return Err(EvalError::Empty);
    }
    Ok(EvalReport::from_counts(
        kind,
        confusion,
        by_rule,
        disagreements,
        gold.len() as u64,
        sentences_correct,
    ))
}

impl EvalReport {
    fn from_counts(
        kind: TagsetKind,
        confusion: BTreeMap<(String, String), u64>,
        by_rule: u64,
        rule_disagreements: u64,
        sentences: u64,
        sentences_correct: u64,
    ) -> Self {
        let labels: BTreeSet<&String> = confusion.keys().flat_map(|(g, p)| [g, p]).collect();
        let mut per_label = BTreeMap::new();
        for label in labels {
            let tp = confusion.get(&(label.clone(), label.clone())).copied().unwrap_or(0);
            let support: u64 = confusion.iter().filter(|((g, _), _)| g == label).map(|(_, c)| c).sum();
            let predicted: u64 = confusion.iter().filter(|((_, p), _)| p == label).map(|(_, c)| c).sum();
            let (precision, recall) = (ratio(tp, predicted), ratio(tp, support));
            per_label.insert(
                label.clone(),
                LabelScores {
                    precision,
                    recall,
                    f1: check_harmonic(precision, recall),
                    support,
                    predicted,
                },
            );
        }
        let tokens: u64 = confusion.values().sum();
        let correct: u64 = confusion.iter().filter(|((g, p), _)| g == p).map(|(_, c)| c).sum();
        let accuracy = ratio(correct, tokens);
        let macro_f = per_label.values().map(|s| s.f1).sum::<f64>() / per_label.len().max(1) as f64;
        EvalReport {
            kind,
            tokens,
            correct,
            token_accuracy: accuracy,
            per_label,
            micro_f: accuracy,
            macro_f,
            confusion,
            rule_tagged: by_rule,
            rule_stage_share: ratio(by_rule, tokens),
            rule_disagreements,
            sentences,
            sentences_correct,
        }
    }

    /// Gold counts per label; equals the confusion row sums.
    pub fn support(&self, label: &str) -> u64 {
        self.per_label.get(label).map_or(0, |s| s.support)
    }

    /// Aligned plain-text table, three decimals.
    pub fn to_table(&self) -> String {
        let width = self.per_label.keys().map(|l| l.chars().count()).max().unwrap_or(0).max(9);
        let mut out = String::new();
        let _ = writeln!(out, "tagset: {}", self.kind);
        let _ = writeln!(out, "tokens: {}  correct: {}", self.tokens, self.correct);
        let _ = writeln!(out, "accuracy: {:.3}", self.token_accuracy);
        let _ = writeln!(out, "micro F: {:.3}  macro F: {:.3}", self.micro_f, self.macro_f);
        let _ = writeln!(
            out,
            "rule stage share: {:.3}  rule disagreements: {}",
            self.rule_stage_share, self.rule_disagreements
        );
        let _ = writeln!(out, "sentences fully correct: {}/{}", self.sentences_correct, self.sentences);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<width$}  {:>5}  {:>5}  {:>5}  {:>7}", "label", "P", "R", "F", "support");
        for (label, s) in &self.per_label {
            let _ = writeln!(
                out,
                "{:<width$}  {:>5.3}  {:>5.3}  {:>5.3}  {:>7}",
                label, s.precision, s.recall, s.f1, s.support
            );
        }
        out
    }

    /// One `key=value` line per metric, values at full precision.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tagset={}", self.kind);
        let _ = writeln!(out, "tokens={}", self.tokens);
        let _ = writeln!(out, "correct={}", self.correct);
        let _ = writeln!(out, "token_accuracy={}", self.token_accuracy);
        let _ = writeln!(out, "micro_f={}", self.micro_f);
        let _ = writeln!(out, "macro_f={}", self.macro_f);
        let _ = writeln!(out, "rule_tagged={}", self.rule_tagged);
        let _ = writeln!(out, "rule_stage_share={}", self.rule_stage_share);
        let _ = writeln!(out, "rule_disagreements={}", self.rule_disagreements);
        let _ = writeln!(out, "sentences={}", self.sentences);
        let _ = writeln!(out, "sentences_correct={}", self.sentences_correct);
        for (label, s) in &self.per_label {
            let _ = writeln!(out, "label.{label}.precision={}", s.precision);
            let _ = writeln!(out, "label.{label}.recall={}", s.recall);
            let _ = writeln!(out, "label.{label}.f1={}", s.f1);
            let _ = writeln!(out, "label.{label}.support={}", s.support);
            let _ = writeln!(out, "label.{label}.predicted={}", s.predicted);
        }
        for ((g, p), c) in &self.confusion {
            let _ = writeln!(out, "confusion={g} {p} {c}");
        }
        out
    }

    /// Rebuilds a report from [`EvalReport::to_kv`] output. Derived metrics
    /// are recomputed from the confusion counts and must agree with the file.
    pub fn from_kv(text: &str) -> Result<Self, EvalError> {
        let bad = |line: usize, message: String| EvalError::Parse { line, message };
        let mut scalars: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        let mut confusion = BTreeMap::new();
        let mut label_lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(n, "expected key=value".into()))?;
            if key == "confusion" {
                let cell: Vec<&str> = value.split(' ').collect();
                let [g, p, c] = cell[..] else {
                    return Err(bad(n, "confusion needs gold, predicted and count".into()));
                };
                let c: u64 = c.parse().map_err(|_| bad(n, format!("bad count {c:?}")))?;
                confusion.insert((g.to_string(), p.to_string()), c);
            } else if key.starts_with("label.") {
                label_lines.push((n, key, value));
            } else {
                scalars.insert(key, (n, value));
            }
        }
        let get = |key: &str| -> Result<(usize, &str), EvalError> {
            scalars
                .get(key)
                .copied()
                .ok_or_else(|| bad(0, format!("missing {key}")))
        };
        let int = |key: &str| -> Result<u64, EvalError> {
            let (n, v) = get(key)?;
            v.parse().map_err(|_| bad(n, format!("{key}: not an integer")))
        };
        let (n, kind) = get("tagset")?;
        let kind: TagsetKind = kind.parse().map_err(|_| bad(n, "unknown tagset".into()))?;
        let tokens = int("tokens")?;
        let report = EvalReport::from_counts(
            kind,
            confusion,
            int("rule_tagged")?,
            int("rule_disagreements")?,
            int("sentences")?,
            int("sentences_correct")?,
        );
        if report.tokens != tokens || report.correct != int("correct")? {
            return Err(bad(0, "token counts disagree with the confusion matrix".into()));
        }
        for key in ["token_accuracy", "micro_f", "macro_f", "rule_stage_share"] {
            let (n, v) = get(key)?;
            let stored: f64 = v.parse().map_err(|_| bad(n, format!("{key}: not a number")))?;
            let derived = match key {
                "token_accuracy" => report.token_accuracy,
                "micro_f" => report.micro_f,
                "macro_f" => report.macro_f,
                _ => report.rule_stage_share,
            };
            if stored != derived {
                return Err(bad(n, format!("{key}={stored} disagrees with counts ({derived})")));
            }
        }
        for (n, key, value) in label_lines {
            let rest = &key["label.".len()..];
            let (label, field) = rest
                .rsplit_once('.')
                .ok_or_else(|| bad(n, format!("bad label key {key:?}")))?;
            let s = report
                .per_label
                .get(label)
                .ok_or_else(|| bad(n, format!("label {label:?} absent from confusion")))?;
            let expected = match field {
                "precision" => s.precision.to_string(),
                "recall" => s.recall.to_string(),
                "f1" => s.f1.to_string(),
                "support" => s.support.to_string(),
                "predicted" => s.predicted.to_string(),
                _ => return Err(bad(n, format!("unknown field {field:?}"))),
            };
            if expected != value {
                return Err(bad(n, format!("{key}={value} disagrees with counts ({expected})")));
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, TagCoverage, Token};

    fn corpus(rows: &[&[(&str, &str)]]) -> Corpus {
        let sentences = rows
            .iter()
            .enumerate()
            .map(|(i, toks)| {
                Sentence::new(
                    i,
                    toks.iter()
                        .map(|(w, t)| Token::new(*w).with_tag(TagsetKind::Fine, *t))
                        .collect(),
                )
            })
            .collect();
        Corpus::new(sentences, TagCoverage::Fine)
    }

    #[test]
    fn hand_computed_two_labels() {
        let gold = corpus(&[&[("x", "A"), ("y", "A"), ("z", "B")]]);
        let pred = corpus(&[&[("x", "A"), ("y", "B"), ("z", "B")]]);
        let r = evaluate(&gold, &pred, TagsetKind::Fine).unwrap();
        let a = r.per_label["A"];
        let b = r.per_label["B"];
        assert_eq!((a.precision, a.recall), (1.0, 0.5));
        assert_eq!((b.precision, b.recall), (0.5, 1.0));
        assert!((a.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((b.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.confusion[&("A".into(), "B".into())], 1);
        assert_eq!(r.sentences_correct, 0);
    }

    #[test]
    fn seven_of_ten() {
        let toks: Vec<(&str, &str)> = (0..10).map(|_| ("w", "N")).collect();
        let mut wrong = toks.clone();
        for t in wrong.iter_mut().take(3) {
            t.1 = "V";
        }
        let r = evaluate(&corpus(&[&toks]), &corpus(&[&wrong]), TagsetKind::Fine).unwrap();
        assert!((r.token_accuracy - 0.7).abs() < 1e-12);
        assert_eq!(r.micro_f, r.token_accuracy);
        assert_eq!(r.support("N"), 10);
        assert_eq!(r.per_label["V"].support, 0);
        assert_eq!(r.per_label["V"].f1, 0.0);
    }

    #[test]
    fn perfect_prediction() {
        let c = corpus(&[&[("a", "N"), ("b", "V")], &[("c", "N")]]);
        let r = evaluate(&c, &c, TagsetKind::Fine).unwrap();
        assert_eq!(r.token_accuracy, 1.0);
        assert!(r.per_label.values().all(|s| s.f1 == 1.0));
        assert!(r.confusion.keys().all(|(g, p)| g == p));
        assert_eq!(r.sentences_correct, 2);
        assert!(r.to_table().contains("accuracy: 1.000"));
    }

    #[test]
    fn misalignment_points_at_first_divergence() {
        let gold = corpus(&[&[("a", "N")], &[("b", "N"), ("c", "V")]]);
        let pred = corpus(&[&[("a", "N")], &[("b", "N"), ("d", "V")]]);
        assert_eq!(
            evaluate(&gold, &pred, TagsetKind::Fine),
            Err(EvalError::Misaligned {
                sentence: 1,
                token: 1,
                gold: "c".into(),
                predicted: "d".into()
            })
        );
        let short = corpus(&[&[("a", "N")]]);
        assert!(matches!(
            evaluate(&gold, &short, TagsetKind::Fine),
            Err(EvalError::SentenceCount { .. })
        ));
    }

    #[test]
    fn rule_stage_is_tracked() {
        let gold = corpus(&[&[("?", "RD_PUNC"), (":)", "N_NN"), ("kab", "RB")]]);
        let mut pred = corpus(&[&[("?", "RD_PUNC"), (":)", "E"), ("kab", "RB")]]);
        for (i, t) in pred.sentences[0].tokens.iter_mut().enumerate() {
            let stage = if i < 2 { Stage::Rule } else { Stage::Crf };
            let tag = t.fine_tag.clone().unwrap();
            t.set_prediction(TagsetKind::Fine, stage, tag);
        }
        let r = evaluate(&gold, &pred, TagsetKind::Fine).unwrap();
        assert!((r.rule_stage_share - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.rule_disagreements, 1);
    }

    #[test]
    fn harmonic_mean() {
        assert_eq!(check_harmonic(0.0, 0.0), 0.0);
        assert!((check_harmonic(0.4, 0.4) - 0.4).abs() < 1e-15);
        assert!((check_harmonic(0.5, 1.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn kv_round_trip() {
        let gold = corpus(&[&[("x", "A"), ("y", "A.b"), ("z", "B")], &[("q", "B")]]);
        let pred = corpus(&[&[("x", "A"), ("y", "B"), ("z", "B")], &[("q", "A.b")]]);
        let r = evaluate(&gold, &pred, TagsetKind::Fine).unwrap();
        let kv = r.to_kv();
        assert_eq!(EvalReport::from_kv(&kv).unwrap(), r);
        let tampered = kv.replace("tokens=4", "tokens=5");
        assert!(EvalReport::from_kv(&tampered).is_err());
    }

    #[test]
    fn table_rounds_ties_to_even() {
        // 0.0625 and 0.3125 are exact in binary, so these are true ties
        assert_eq!(format!("{:.3}", 0.0625), "0.062");
        assert_eq!(format!("{:.3}", 0.3125), "0.312");
        assert_eq!(format!("{:.3}", 0.6875), "0.688");
    }
}

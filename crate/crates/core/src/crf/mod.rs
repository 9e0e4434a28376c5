//! Linear-chain conditional random field over string features.
//!
//! Each position carries a set of feature strings. A feature contributes one
//! weight per label; labels are chained by a dense bigram table plus a start
//! vector. All sequence math is done in log space.

mod io;
mod lattice;
mod train;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::TagsetKind;

pub use io::{load_model, save_model, MODEL_HEADER};
pub use lattice::{log_partition, marginals, score_sequence, viterbi_decode};
pub use train::{nll_and_gradient, train, train_with_stats, TrainStats};

#[derive(Debug, Error, PartialEq)]
pub enum CrfError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("no training sequences")]
    EmptyData,
    #[error("sequence {sentence}: {features} feature rows but {labels} labels")]
    LengthMismatch {
        sentence: usize,
        features: usize,
        labels: usize,
    },
    #[error("label {0:?} is not in the model inventory")]
    UnknownLabel(String),
    #[error("invalid label inventory: {0}")]
    InvalidLabels(String),
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("training produced a non-finite objective")]
    NonFinite,
    #[error("unsupported model version {found:?}")]
    Version { found: String },
    #[error("corrupt model file at byte {offset}: {message}")]
    Corrupt { offset: usize, message: String },
}

/// One labeled training sequence: feature strings per position, gold label per position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSequence {
    pub features: Vec<Vec<String>>,
    pub labels: Vec<String>,
}

impl LabeledSequence {
    pub fn new(features: Vec<Vec<String>>, labels: Vec<String>) -> Self {
        LabeledSequence { features, labels }
    }
}

impl From<crate::features::SequenceExample> for LabeledSequence {
    fn from(ex: crate::features::SequenceExample) -> Self {
        LabeledSequence {
            features: ex.features,
            labels: ex.labels,
        }
    }
}

/// Weight tables indexed by label position in the model inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub start: Vec<f64>,
    /// Row-major `from * n_labels + to`.
    pub transitions: Vec<f64>,
    pub emissions: BTreeMap<String, Vec<f64>>,
}

impl Weights {
    pub fn zeros(n_labels: usize) -> Self {
        Weights {
            start: vec![0.0; n_labels],
            transitions: vec![0.0; n_labels * n_labels],
            emissions: BTreeMap::new(),
        }
    }

    fn all_finite(&self) -> bool {
        self.start
            .iter()
            .chain(&self.transitions)
            .chain(self.emissions.values().flatten())
            .all(|w| w.is_finite())
    }

    pub fn squared_norm(&self) -> f64 {
        self.start
            .iter()
            .chain(&self.transitions)
            .chain(self.emissions.values().flatten())
            .map(|w| w * w)
            .sum()
    }
}

/// Optimizer used by [`train`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Limited-memory quasi-Newton on the full objective.
    BatchQuasiNewton,
    /// Averaged stochastic gradient descent, one pass per iteration.
    AveragedStochastic,
}

impl Optimizer {
    pub fn as_str(self) -> &'static str {
        match self {
            Optimizer::BatchQuasiNewton => "lbfgs",
            Optimizer::AveragedStochastic => "asgd",
        }
    }
}

impl std::str::FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lbfgs" | "batch" => Ok(Optimizer::BatchQuasiNewton),
            "asgd" | "sgd" => Ok(Optimizer::AveragedStochastic),
            other => Err(format!("unknown optimizer {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Standard deviation of the Gaussian prior on every weight.
    pub l2_sigma: f64,
    pub max_iterations: usize,
    /// Stop once the relative objective change falls below this.
    pub convergence_tol: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_sigma: 1.0,
            max_iterations: 200,
            convergence_tol: 1e-5,
            optimizer: Optimizer::BatchQuasiNewton,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), CrfError> {
        let bad = |m: &str| Err(CrfError::BadConfig(m.to_string()));
        if !(self.l2_sigma.is_finite() && self.l2_sigma > 0.0) {
            return bad("l2_sigma must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return bad("convergence_tol must be positive");
        }
        Ok(())
    }

    /// Key/value pairs recorded in model metadata.
    pub fn metadata(&self) -> Vec<(&'static str, String)> {
        vec![
            ("l2_sigma", format!("{}", self.l2_sigma)),
            ("max_iterations", self.max_iterations.to_string()),
            ("convergence_tol", format!("{}", self.convergence_tol)),
            ("optimizer", self.optimizer.as_str().to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    labels: Vec<String>,
    tagset: TagsetKind,
    weights: Weights,
    metadata: BTreeMap<String, String>,
}

impl CrfModel {
    /// A zero-weight model over `labels`.
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self, CrfError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(CrfError::InvalidLabels("no labels".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(CrfError::InvalidLabels(format!("bad label {l:?}")));
            }
            if labels[..i].contains(l) {
                return Err(CrfError::InvalidLabels(format!("duplicate label {l:?}")));
            }
        }
        let n = labels.len();
        Ok(CrfModel {
            labels,
            tagset: TagsetKind::Fine,
            weights: Weights::zeros(n),
            metadata: BTreeMap::new(),
        })
    }

    pub(crate) fn from_parts(
        labels: Vec<String>,
        tagset: TagsetKind,
        weights: Weights,
        metadata: BTreeMap<String, String>,
    ) -> Self {
        CrfModel {
            labels,
            tagset,
            weights,
            metadata,
        }
    }

    pub fn with_tagset(mut self, tagset: TagsetKind) -> Self {
        self.tagset = tagset;
        self
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn tagset(&self) -> TagsetKind {
        self.tagset
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }

    fn index(&self, label: &str) -> Result<usize, CrfError> {
        self.label_index(label)
            .ok_or_else(|| CrfError::UnknownLabel(label.to_string()))
    }

    pub fn emission(&self, feature: &str, label: &str) -> f64 {
        match (self.weights.emissions.get(feature), self.label_index(label)) {
            (Some(row), Some(y)) => row[y],
            _ => 0.0,
        }
    }

    /// Sets one emission weight. A feature whose weights all become zero is dropped.
    pub fn set_emission(&mut self, feature: &str, label: &str, weight: f64) -> Result<(), CrfError> {
        let y = self.index(label)?;
        let n = self.n_labels();
        let row = self
            .weights
            .emissions
            .entry(feature.to_string())
            .or_insert_with(|| vec![0.0; n]);
        row[y] = weight;
        if row.iter().all(|&w| w == 0.0) {
            self.weights.emissions.remove(feature);
        }
        Ok(())
    }

    pub fn transition(&self, from: &str, to: &str) -> f64 {
        match (self.label_index(from), self.label_index(to)) {
            (Some(a), Some(b)) => self.weights.transitions[a * self.n_labels() + b],
            _ => 0.0,
        }
    }

    pub fn set_transition(&mut self, from: &str, to: &str, weight: f64) -> Result<(), CrfError> {
        let (a, b) = (self.index(from)?, self.index(to)?);
        let n = self.n_labels();
        self.weights.transitions[a * n + b] = weight;
        Ok(())
    }

    pub fn start(&self, label: &str) -> f64 {
        self.label_index(label).map_or(0.0, |y| self.weights.start[y])
    }

    pub fn set_start(&mut self, label: &str, weight: f64) -> Result<(), CrfError> {
        let y = self.index(label)?;
        self.weights.start[y] = weight;
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.weights.emissions.len()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.all_finite()
    }
}

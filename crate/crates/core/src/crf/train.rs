use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lattice::Lattice;
use super::{CrfError, CrfModel, LabeledSequence, Optimizer, TrainConfig, Weights};

/// Fixed number of gradient partitions. Partial sums are always combined in
/// partition order, so results do not depend on the size of the thread pool.
const SHARDS: usize = 8;
const LBFGS_MEMORY: usize = 5;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
const ASGD_ETA0: f64 = 0.1;

/// Sequence with interned features and labels.
struct Compiled {
    feats: Vec<Vec<u32>>,
    gold: Vec<usize>,
}

/// Flat parameter layout: start, then transitions, then emissions by feature.
struct Problem {
    n: usize,
    n_feats: usize,
    seqs: Vec<Compiled>,
    inv_var: f64,
}

impl Problem {
    fn dim(&self) -> usize {
        self.n + self.n * self.n + self.n_feats * self.n
    }

    fn emit_offset(&self) -> usize {
        self.n + self.n * self.n
    }

    fn lattice<'a>(&self, theta: &'a [f64], seq: &Compiled) -> Lattice<'a> {
        let n = self.n;
        let off = self.emit_offset();
        let mut emit = vec![0.0; seq.feats.len() * n];
        for (t, row) in seq.feats.iter().enumerate() {
            let cell = &mut emit[t * n..(t + 1) * n];
            for &f in row {
                let w = &theta[off + f as usize * n..off + (f as usize + 1) * n];
                for (c, w) in cell.iter_mut().zip(w) {
                    *c += w;
                }
            }
        }
        Lattice {
            n,
            start: &theta[..n],
            trans: &theta[n..n + n * n],
            emit,
        }
    }

    /// Negative log-likelihood of one sequence; adds its gradient into `grad`.
    fn sequence_term(&self, theta: &[f64], seq: &Compiled, grad: &mut [f64]) -> f64 {
        let n = self.n;
        let off = self.emit_offset();
        let lat = self.lattice(theta, seq);
        let gold_score = lat.score(&seq.gold);
        let log_z = {
            let (head, rest) = grad.split_at_mut(n);
            let (trans, emit) = rest.split_at_mut(n * n);
            lat.expectations(
                |t, y, p| {
                    if t == 0 {
                        head[y] += p;
                    }
                    for &f in &seq.feats[t] {
                        emit[f as usize * n + y] += p;
                    }
                },
                |a, b, p| trans[a * n + b] += p,
            )
        };
        grad[seq.gold[0]] -= 1.0;
        for (t, &y) in seq.gold.iter().enumerate() {
            if t > 0 {
                grad[n + seq.gold[t - 1] * n + y] -= 1.0;
            }
            for &f in &seq.feats[t] {
                grad[off + f as usize * n + y] -= 1.0;
            }
        }
        log_z - gold_score
    }

    /// Data term plus Gaussian prior, and its gradient.
    fn objective(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let chunk = self.seqs.len().div_ceil(SHARDS).max(1);
        let partials: Vec<(f64, Vec<f64>)> = self
            .seqs
            .par_chunks(chunk)
            .map(|shard| {
                let mut g = vec![0.0; self.dim()];
                let mut f = 0.0;
                for seq in shard {
                    f += self.sequence_term(theta, seq, &mut g);
                }
                (f, g)
            })
            .collect();
        let mut f = 0.0;
        let mut grad = vec![0.0; self.dim()];
        for (pf, pg) in partials {
            f += pf;
            for (g, p) in grad.iter_mut().zip(pg) {
                *g += p;
            }
        }
        for (g, &w) in grad.iter_mut().zip(theta) {
            f += 0.5 * w * w * self.inv_var;
            *g += w * self.inv_var;
        }
        (f, grad)
    }
}

/// Interning of features and labels shared by training and gradient queries.
struct Vocab {
    features: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Vocab {
    fn new(features: BTreeSet<String>) -> Self {
        let features: Vec<String> = features.into_iter().collect();
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        Vocab { features, index }
    }
}

fn check_shapes(data: &[LabeledSequence]) -> Result<(), CrfError> {
    if data.is_empty() {
        return Err(CrfError::EmptyData);
    }
    for (i, seq) in data.iter().enumerate() {
        if seq.features.len() != seq.labels.len() {
            return Err(CrfError::LengthMismatch {
                sentence: i,
                features: seq.features.len(),
                labels: seq.labels.len(),
            });
        }
        if seq.labels.is_empty() {
            return Err(CrfError::EmptySequence);
        }
    }
    Ok(())
}

fn compile(
    data: &[LabeledSequence],
    labels: &[String],
    vocab: &Vocab,
    sigma: f64,
) -> Result<Problem, CrfError> {
    let label_ix: BTreeMap<&str, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let seqs = data
        .iter()
        .map(|seq| {
            let gold = seq
                .labels
                .iter()
                .map(|l| {
                    label_ix
                        .get(l.as_str())
                        .copied()
                        .ok_or_else(|| CrfError::UnknownLabel(l.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let feats = seq
                .features
                .iter()
                .map(|row| row.iter().map(|f| vocab.index[f]).collect())
                .collect();
            Ok(Compiled { feats, gold })
        })
        .collect::<Result<Vec<_>, CrfError>>()?;
    Ok(Problem {
        n: labels.len(),
        n_feats: vocab.features.len(),
        seqs,
        inv_var: 1.0 / (sigma * sigma),
    })
}

fn pack(problem: &Problem, vocab: &Vocab, w: &Weights) -> Vec<f64> {
    let n = problem.n;
    let mut theta = vec![0.0; problem.dim()];
    theta[..n].copy_from_slice(&w.start);
    theta[n..n + n * n].copy_from_slice(&w.transitions);
    let off = problem.emit_offset();
    for (f, row) in &w.emissions {
        if let Some(&i) = vocab.index.get(f) {
            theta[off + i as usize * n..off + (i as usize + 1) * n].copy_from_slice(row);
        }
    }
    theta
}

/// Back to named weights. With `prune`, features whose weights are all zero are dropped.
fn unpack(problem: &Problem, vocab: &Vocab, theta: &[f64], prune: bool) -> Weights {
    let n = problem.n;
    let off = problem.emit_offset();
    let emissions = vocab
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| (f.clone(), theta[off + i * n..off + (i + 1) * n].to_vec()))
        .filter(|(_, row)| !prune || row.iter().any(|&w| w != 0.0))
        .collect();
    Weights {
        start: theta[..n].to_vec(),
        transitions: theta[n..n + n * n].to_vec(),
        emissions,
    }
}

fn feature_set<'a>(data: impl IntoIterator<Item = &'a LabeledSequence>) -> BTreeSet<String> {
    data.into_iter()
        .flat_map(|s| s.features.iter().flatten().cloned())
        .collect()
}

/// Regularized negative log-likelihood of `data` under `model`, and its
/// gradient. The gradient covers every model feature plus every feature
/// present in `data`.
pub fn nll_and_gradient(
    model: &CrfModel,
    data: &[LabeledSequence],
    config: &TrainConfig,
) -> Result<(f64, Weights), CrfError> {
    check_shapes(data)?;
    config.validate()?;
    let mut feats = feature_set(data);
    feats.extend(model.weights.emissions.keys().cloned());
    let vocab = Vocab::new(feats);
    let problem = compile(data, &model.labels, &vocab, config.l2_sigma)?;
    let theta = pack(&problem, &vocab, &model.weights);
    let (f, g) = problem.objective(&theta);
    Ok((f, unpack(&problem, &vocab, &g, false)))
}

/// Diagnostics from a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainStats {
    /// Objective at the start and after every accepted step.
    pub objectives: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl TrainStats {
    pub fn final_objective(&self) -> f64 {
        *self.objectives.last().expect("at least the initial objective")
    }
}

pub fn train(data: &[LabeledSequence], config: &TrainConfig) -> Result<CrfModel, CrfError> {
    train_with_stats(data, config).map(|(m, _)| m)
}

/// Trains a model whose label inventory is the sorted set of gold labels.
pub fn train_with_stats(
    data: &[LabeledSequence],
    config: &TrainConfig,
) -> Result<(CrfModel, TrainStats), CrfError> {
    check_shapes(data)?;
    config.validate()?;
    let labels: Vec<String> = data
        .iter()
        .flat_map(|s| s.labels.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let vocab = Vocab::new(feature_set(data));
    let problem = compile(data, &labels, &vocab, config.l2_sigma)?;
    let (theta, stats) = match config.optimizer {
        Optimizer::BatchQuasiNewton => lbfgs(&problem, config),
        Optimizer::AveragedStochastic => asgd(&problem, config),
    };
    if !stats.objectives.iter().all(|f| f.is_finite()) || !theta.iter().all(|w| w.is_finite()) {
        return Err(CrfError::NonFinite);
    }
    let weights = unpack(&problem, &vocab, &theta, true);
    let mut metadata = BTreeMap::new();
    for (k, v) in config.metadata() {
        metadata.insert(k.to_string(), v);
    }
    let model = CrfModel::from_parts(labels, crate::TagsetKind::Fine, weights, metadata);
    log::debug!(
        "crf: {} iterations, objective {:.6} -> {:.6}, converged={}",
        stats.iterations,
        stats.objectives[0],
        stats.final_objective(),
        stats.converged
    );
    Ok((model, stats))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relative_change(old: f64, new: f64) -> f64 {
    (old - new).abs() / old.abs().max(new.abs()).max(1.0)
}

/// Two-loop recursion: `-H g` from the stored curvature pairs.
fn search_direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|x| *x *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|x| *x = -*x);
    q
}

fn lbfgs(problem: &Problem, config: &TrainConfig) -> (Vec<f64>, TrainStats) {
    let mut x = vec![0.0; problem.dim()];
    let (mut f, mut g) = problem.objective(&x);
    let mut stats = TrainStats {
        objectives: vec![f],
        iterations: 0,
        converged: false,
    };
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    while stats.iterations < config.max_iterations {
        let mut d = search_direction(&g, &memory);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            memory.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        if slope == 0.0 {
            stats.converged = true;
            break;
        }
        let mut step = if memory.is_empty() {
            1.0 / dot(&g, &g).sqrt().max(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (fn_, gn) = problem.objective(&xn);
            if fn_.is_finite() && fn_ <= f + ARMIJO_C1 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if memory.is_empty() {
                // no descent possible along the gradient: at the optimum to machine precision
                stats.converged = true;
                break;
            }
            memory.clear();
            continue;
        };
        stats.iterations += 1;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if memory.len() == LBFGS_MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let change = relative_change(f, fn_);
        x = xn;
        f = fn_;
        g = gn;
        stats.objectives.push(f);
        if change < config.convergence_tol {
            stats.converged = true;
            break;
        }
    }
    (x, stats)
}

/// Averaged SGD. Each iteration is one shuffled pass; the averaged iterate
/// of the pass is kept only if it does not raise the full objective,
/// otherwise the pass is discarded and the learning rate halved.
fn asgd(problem: &Problem, config: &TrainConfig) -> (Vec<f64>, TrainStats) {
    let dim = problem.dim();
    let n_seqs = problem.seqs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n_seqs).collect();
    let mut x = vec![0.0; dim];
    let mut f = problem.objective(&x).0;
    let mut stats = TrainStats {
        objectives: vec![f],
        iterations: 0,
        converged: false,
    };
    let mut eta = ASGD_ETA0;
    let decay_per_seq = problem.inv_var / n_seqs as f64;
    let mut grad = vec![0.0; dim];

    while stats.iterations < config.max_iterations && eta > 1e-10 {
        stats.iterations += 1;
        order.shuffle(&mut rng);
        let mut w = x.clone();
        let mut avg = vec![0.0; dim];
        for (k, &i) in order.iter().enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            problem.sequence_term(&w, &problem.seqs[i], &mut grad);
            for (wj, gj) in w.iter_mut().zip(&grad) {
                *wj -= eta * (gj + decay_per_seq * *wj);
            }
            let weight = 1.0 / (k + 1) as f64;
            for (aj, wj) in avg.iter_mut().zip(&w) {
                *aj += (wj - *aj) * weight;
            }
        }
        let fa = problem.objective(&avg).0;
        if fa.is_finite() && fa <= f {
            let change = relative_change(f, fa);
            x = avg;
            f = fa;
            stats.objectives.push(f);
            if change < config.convergence_tol {
                stats.converged = true;
                break;
            }
        } else {
            eta *= 0.5;
        }
    }
    (x, stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crf::{score_sequence, viterbi_decode};

    fn seq(words: &[&str], labels: &[&str]) -> LabeledSequence {
        LabeledSequence::new(
            words.iter().map(|w| vec![format!("W={w}")]).collect(),
            labels.iter().map(|l| l.to_string()).collect(),
        )
    }

    fn toy() -> Vec<LabeledSequence> {
        vec![
            seq(&["the", "dog", "runs"], &["D", "N", "V"]),
            seq(&["a", "cat", "sleeps"], &["D", "N", "V"]),
            seq(&["dog", "runs"], &["N", "V"]),
        ]
    }

    #[test]
    fn separable_toy_is_fit() {
        let data = toy();
        let (model, stats) = train_with_stats(&data, &TrainConfig::default()).unwrap();
        assert_eq!(model.labels(), ["D", "N", "V"]);
        for s in &data {
            assert_eq!(viterbi_decode(&model, &s.features).unwrap().0, s.labels);
        }
        for w in stats.objectives.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn asgd_fits_and_never_accepts_an_increase() {
        let data = toy();
        let config = TrainConfig {
            optimizer: Optimizer::AveragedStochastic,
            max_iterations: 60,
            seed: 3,
            ..TrainConfig::default()
        };
        let (model, stats) = train_with_stats(&data, &config).unwrap();
        for s in &data {
            assert_eq!(viterbi_decode(&model, &s.features).unwrap().0, s.labels);
        }
        for w in stats.objectives.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn single_label_data_trains() {
        let data = vec![seq(&["x", "y"], &["N", "N"])];
        let model = train(&data, &TrainConfig::default()).unwrap();
        assert_eq!(model.labels(), ["N"]);
        let (labels, _) = viterbi_decode(&model, &data[0].features).unwrap();
        assert_eq!(labels, ["N", "N"]);
    }

    #[test]
    fn shape_errors_name_the_sequence() {
        let mut data = toy();
        data[1].labels.pop();
        assert_eq!(
            train(&data, &TrainConfig::default()).unwrap_err(),
            CrfError::LengthMismatch {
                sentence: 1,
                features: 3,
                labels: 2
            }
        );
        assert_eq!(train(&[], &TrainConfig::default()).unwrap_err(), CrfError::EmptyData);
    }

    #[test]
    fn unseen_features_are_dropped() {
        let model = train(&toy(), &TrainConfig::default()).unwrap();
        let x = vec![vec!["W=dog".to_string(), "W=never-seen".to_string()]];
        let only = vec![vec!["W=dog".to_string()]];
        assert_eq!(
            score_sequence(&model, &x, &["N"]).unwrap(),
            score_sequence(&model, &only, &["N"]).unwrap()
        );
    }

    #[test]
    fn duplicated_data_doubles_the_data_term() {
        let data = toy();
        let mut model = CrfModel::new(["D", "N", "V"]).unwrap();
        model.set_emission("W=dog", "N", 0.3).unwrap();
        model.set_transition("D", "N", -0.2).unwrap();
        // a very wide prior leaves essentially only the data term
        let flat = TrainConfig {
            l2_sigma: 1e12,
            ..TrainConfig::default()
        };
        let (once, _) = nll_and_gradient(&model, &data, &flat).unwrap();
        let doubled: Vec<_> = data.iter().chain(&data).cloned().collect();
        let (twice, _) = nll_and_gradient(&model, &doubled, &flat).unwrap();
        assert!((twice - 2.0 * once).abs() < 1e-9 * once.abs());
    }

    #[test]
    fn stronger_prior_shrinks_weights() {
        let data = toy();
        let mut last = f64::INFINITY;
        for sigma in [0.25, 0.5, 1.0, 2.0, 4.0].iter().rev() {
            let config = TrainConfig {
                l2_sigma: *sigma,
                max_iterations: 500,
                convergence_tol: 1e-10,
                ..TrainConfig::default()
            };
            let norm = train(&data, &config).unwrap().weights().squared_norm();
            assert!(norm <= last + 1e-9, "sigma {sigma}: {norm} > {last}");
            last = norm;
        }
    }
}

use super::{CrfError, CrfModel};

/// Log-sum-exp of a slice; `-inf` for an empty or all `-inf` slice.
pub(crate) fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Potentials of one sequence: start and transition tables are shared, the
/// emission table is `len * n_labels`, row-major by position.
pub(crate) struct Lattice<'a> {
    pub n: usize,
    pub start: &'a [f64],
    pub trans: &'a [f64],
    pub emit: Vec<f64>,
}

impl Lattice<'_> {
    pub fn len(&self) -> usize {
        self.emit.len() / self.n
    }

    fn e(&self, t: usize, y: usize) -> f64 {
        self.emit[t * self.n + y]
    }

    fn tr(&self, from: usize, to: usize) -> f64 {
        self.trans[from * self.n + to]
    }

    pub fn score(&self, labels: &[usize]) -> f64 {
        let mut s = self.start[labels[0]] + self.e(0, labels[0]);
        for t in 1..labels.len() {
            s = s + self.tr(labels[t - 1], labels[t]) + self.e(t, labels[t]);
        }
        s
    }

    /// Forward table and `log Z`.
    pub fn forward(&self) -> (Vec<f64>, f64) {
        let (n, len) = (self.n, self.len());
        let mut alpha = vec![0.0; len * n];
        for y in 0..n {
            alpha[y] = self.start[y] + self.e(0, y);
        }
        for t in 1..len {
            for y in 0..n {
                let prev = &alpha[(t - 1) * n..t * n];
                let lse = log_sum_exp((0..n).map(|p| prev[p] + self.tr(p, y)));
                alpha[t * n + y] = lse + self.e(t, y);
            }
        }
        let log_z = log_sum_exp(alpha[(len - 1) * n..].iter().copied());
        (alpha, log_z)
    }

    pub fn backward(&self) -> Vec<f64> {
        let (n, len) = (self.n, self.len());
        let mut beta = vec![0.0; len * n];
        for t in (0..len - 1).rev() {
            for y in 0..n {
                let next = &beta[(t + 1) * n..(t + 2) * n];
                beta[t * n + y] =
                    log_sum_exp((0..n).map(|z| self.tr(y, z) + self.e(t + 1, z) + next[z]));
            }
        }
        beta
    }

    /// Calls `node(t, y, p)` for every position marginal and
    /// `edge(from, to, p)` for every transition marginal. Returns `log Z`.
    pub fn expectations(
        &self,
        mut node: impl FnMut(usize, usize, f64),
        mut edge: impl FnMut(usize, usize, f64),
    ) -> f64 {
        let (n, len) = (self.n, self.len());
        let (alpha, log_z) = self.forward();
        let beta = self.backward();
        for t in 0..len {
            for y in 0..n {
                node(t, y, (alpha[t * n + y] + beta[t * n + y] - log_z).exp());
            }
            if t == 0 {
                continue;
            }
            for p in 0..n {
                let a = alpha[(t - 1) * n + p];
                for y in 0..n {
                    let lp = a + self.tr(p, y) + self.e(t, y) + beta[t * n + y] - log_z;
                    edge(p, y, lp.exp());
                }
            }
        }
        log_z
    }

    /// Best path and its score; at every max the lowest label index wins.
    pub fn viterbi(&self) -> (Vec<usize>, f64) {
        let (n, len) = (self.n, self.len());
        let mut delta: Vec<f64> = (0..n).map(|y| self.start[y] + self.e(0, y)).collect();
        let mut back = vec![0usize; len * n];
        for t in 1..len {
            let mut next = vec![0.0; n];
            for y in 0..n {
                let mut best = 0;
                let mut best_score = delta[0] + self.tr(0, y);
                for p in 1..n {
                    let s = delta[p] + self.tr(p, y);
                    if s > best_score {
                        best = p;
                        best_score = s;
                    }
                }
                back[t * n + y] = best;
                next[y] = best_score + self.e(t, y);
            }
            delta = next;
        }
        let mut last = 0;
        for y in 1..n {
            if delta[y] > delta[last] {
                last = y;
            }
        }
        let score = delta[last];
        let mut path = vec![last; len];
        for t in (1..len).rev() {
            path[t - 1] = back[t * n + path[t]];
        }
        (path, score)
    }
}

/// Emission table for a sequence of feature strings under `model`.
/// Features the model has never seen contribute nothing.
pub(crate) fn lattice<'a>(model: &'a CrfModel, feats: &[Vec<String>]) -> Result<Lattice<'a>, CrfError> {
    if feats.is_empty() {
        return Err(CrfError::EmptySequence);
    }
    let n = model.n_labels();
    let mut emit = vec![0.0; feats.len() * n];
    for (t, row) in feats.iter().enumerate() {
        let cell = &mut emit[t * n..(t + 1) * n];
        for f in row {
            if let Some(w) = model.weights.emissions.get(f) {
                for (c, w) in cell.iter_mut().zip(w) {
                    *c += w;
                }
            }
        }
    }
    Ok(Lattice {
        n,
        start: &model.weights.start,
        trans: &model.weights.transitions,
        emit,
    })
}

/// Unnormalized log score of one labeling.
pub fn score_sequence<S: AsRef<str>>(
    model: &CrfModel,
    feats: &[Vec<String>],
    labels: &[S],
) -> Result<f64, CrfError> {
    if feats.len() != labels.len() {
        return Err(CrfError::LengthMismatch {
            sentence: 0,
            features: feats.len(),
            labels: labels.len(),
        });
    }
    let ids = labels
        .iter()
        .map(|l| model.index(l.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(lattice(model, feats)?.score(&ids))
}

/// Log of the sum of `exp(score)` over every labeling.
pub fn log_partition(model: &CrfModel, feats: &[Vec<String>]) -> Result<f64, CrfError> {
    Ok(lattice(model, feats)?.forward().1)
}

/// Posterior probability of each label at each position.
pub fn marginals(model: &CrfModel, feats: &[Vec<String>]) -> Result<Vec<Vec<f64>>, CrfError> {
    let lat = lattice(model, feats)?;
    let mut out = vec![vec![0.0; lat.n]; lat.len()];
    lat.expectations(|t, y, p| out[t][y] = p, |_, _, _| {});
    Ok(out)
}

/// Highest-scoring labeling and its score.
pub fn viterbi_decode(model: &CrfModel, feats: &[Vec<String>]) -> Result<(Vec<String>, f64), CrfError> {
    let (path, score) = lattice(model, feats)?.viterbi();
    Ok((path.into_iter().map(|y| model.labels[y].clone()).collect(), score))
}

//! Skip-gram with negative sampling over walk corpora.
//!
//! For a center node `u` and a context node `v` within the window, the
//! ascended objective is
//! `log σ(f(u)·f'(v)) + Σ_n log σ(-f(u)·f'(n))`
//! with negatives `n` drawn proportionally to walk frequency^0.75. Self-pairs
//! are ignored: a node is neither its own context nor its own negative.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::walk::WalkCorpus;
use super::EmbeddingMatrix;
use crate::seed;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    /// Initial rate, decayed linearly to near zero over training.
    pub learning_rate: f64,
    #[serde(skip)]
    pub rng_seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 64,
            window: 10,
            negatives_per_positive: 5,
            epochs: 5,
            learning_rate: 0.025,
            rng_seed: 0,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 || self.window == 0 || self.negatives_per_positive == 0 {
            return Err(Error::validation(
                "skipgram dim must be >= 2, window and negatives >= 1",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("skipgram learning_rate must be positive"));
        }
        Ok(())
    }
}

const MIN_LR_FRACTION: f64 = 1e-4;

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// `log σ(x)`, stable for large `|x|`.
fn log_sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Derivative of the pair term with respect to the dot product:
/// `1 - σ(x)` for the positive, `-σ(x)` for a negative.
fn dot_coefficient<T: Scalar>(dot: T, positive: bool) -> T {
    let target = if positive { T::one() } else { T::zero() };
    target - sigmoid(dot)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Negative-sampling objective of one (center, context, negatives) triple.
pub fn sgns_objective<T: Scalar>(center: &[T], positive: &[T], negatives: &[&[T]]) -> T {
    let pos = log_sigmoid(dot(center, positive));
    negatives
        .iter()
        .fold(pos, |acc, n| acc + log_sigmoid(-dot(center, n)))
}

/// Gradient of [`sgns_objective`] with respect to each argument.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient<T> {
    pub center: Vec<T>,
    pub positive: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

pub fn sgns_gradient<T: Scalar>(center: &[T], positive: &[T], negatives: &[&[T]]) -> SgnsGradient<T> {
    let mut g_center = vec![T::zero(); center.len()];
    let mut terms = Vec::with_capacity(negatives.len() + 1);
    terms.push((positive, true));
    terms.extend(negatives.iter().map(|n| (*n, false)));
    let mut grads = Vec::with_capacity(terms.len());
    for (target, is_pos) in terms {
        let c = dot_coefficient(dot(center, target), is_pos);
        for (g, &t) in g_center.iter_mut().zip(target) {
            *g = *g + c * t;
        }
        grads.push(center.iter().map(|&x| c * x).collect::<Vec<T>>());
    }
    let positive = grads.remove(0);
    SgnsGradient {
        center: g_center,
        positive,
        negatives: grads,
    }
}

/// One ascent step on `center` and the context rows `positive` and
/// `negatives` of `context` (row-major, `dim` wide). The context rows are
/// updated from the center vector as it was before the step.
pub(crate) fn ascend<T: Scalar>(
    center: &mut [T],
    context: &mut [T],
    positive: usize,
    negatives: &[usize],
    lr: T,
    scratch: &mut [T],
) {
    let dim = center.len();
    scratch.iter_mut().for_each(|v| *v = T::zero());
    let targets = std::iter::once((positive, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (target, is_pos) in targets {
        let row = &mut context[target * dim..(target + 1) * dim];
        let c = lr * dot_coefficient(dot(center, row), is_pos);
        for ((s, r), &x) in scratch.iter_mut().zip(row.iter_mut()).zip(center.iter()) {
            *s = *s + c * *r;
            *r = *r + c * x;
        }
    }
    for (x, &s) in center.iter_mut().zip(scratch.iter()) {
        *x = *x + s;
    }
}

fn initial_centers<T: Scalar>(n: usize, dim: usize, rng: &mut impl Rng) -> Vec<T> {
    let half = 0.5 / dim as f64;
    (0..n * dim)
        .map(|_| T::from_f64_lossy(rng.random_range(-half..half)))
        .collect()
}

/// Train embeddings single-threaded; the result is a pure function of the
/// corpus and `cfg`. Zero epochs returns the initialization.
pub fn train_skipgram<T: Scalar>(corpus: &WalkCorpus, cfg: &SkipGramConfig) -> Result<EmbeddingMatrix<T>> {
    cfg.validate()?;
    if corpus.walks.is_empty() {
        return Err(Error::validation("skip-gram needs at least one walk"));
    }
    let n = corpus.nodes.len();
    let dim = cfg.dim;
    let mut rng = seed::rng(cfg.rng_seed);
    let mut center: Vec<T> = initial_centers(n, dim, &mut rng);
    let mut context = vec![T::zero(); n * dim];

    let mut freq = vec![0usize; n];
    for w in &corpus.walks {
        for &node in w {
            freq[node] += 1;
        }
    }
    let noise = WeightedIndex::new(freq.iter().map(|&f| (f as f64).powf(0.75)))
        .map_err(|e| Error::validation(format!("negative-sampling table: {e}")))?;

    let tokens: usize = corpus.walks.iter().map(Vec::len).sum();
    let total = (tokens * cfg.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut scratch = vec![T::zero(); dim];
    let mut negatives = Vec::with_capacity(cfg.negatives_per_positive);

    for _ in 0..cfg.epochs {
        for walk in &corpus.walks {
            for (pos, &u) in walk.iter().enumerate() {
                let frac = (1.0 - processed as f64 / total).max(MIN_LR_FRACTION);
                let lr = T::from_f64_lossy(cfg.learning_rate * frac);
                let lo = pos.saturating_sub(cfg.window);
                let hi = (pos + cfg.window + 1).min(walk.len());
                for (cpos, &v) in walk.iter().enumerate().take(hi).skip(lo) {
                    // A node is not its own context.
                    if cpos == pos || v == u {
                        continue;
                    }
                    negatives.clear();
                    for _ in 0..cfg.negatives_per_positive {
                        let neg = noise.sample(&mut rng);
                        if neg != v && neg != u {
                            negatives.push(neg);
                        }
                    }
                    ascend(
                        &mut center[u * dim..(u + 1) * dim],
                        &mut context,
                        v,
                        &negatives,
                        lr,
                        &mut scratch,
                    );
                }
                processed += 1;
            }
        }
    }
    let emb = EmbeddingMatrix::from_parts(corpus.nodes.clone(), dim, center, context);
    if !emb.is_finite() {
        return Err(Error::validation("skip-gram diverged to non-finite values"));
    }
    Ok(emb)
}

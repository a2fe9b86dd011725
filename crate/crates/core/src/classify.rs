//! Gradient-boosted regression trees with logistic loss.
//!
//! Scores start at the training log-odds. Each round fits a tree to the
//! residuals `y - p` using exact greedy splits that maximize the Newton
//! gain `G_L²/H_L + G_R²/H_R - G²/H` (with `H = Σ p(1-p)`), and sets
//! each leaf to the Newton step `G/H`, clamped to `[-4, 4]`.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

pub const LEAF_CLAMP: f64 = 4.0;
const HESS_EPS: f64 = 1e-12;
const MIN_GAIN: f64 = 1e-12;
const FORMAT_TAG: &str = "star-gbdt";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Unused while training has no subsampling; kept for provenance.
    #[serde(skip)]
    pub rng_seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_estimators: 100,
            max_depth: 10,
            learning_rate: 0.1,
            min_samples_leaf: 1,
            rng_seed: 0,
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::validation(
                "gbdt n_estimators, max_depth and min_samples_leaf must be >= 1",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::validation("gbdt learning_rate must be in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node<T> {
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf {
        value: T,
    },
}

/// Rows with `x[feature] <= threshold` go left. The root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> RegressionTree<T> {
    pub fn predict(&self, row: &[T]) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn root_split(&self) -> Option<(usize, T)> {
        match self.nodes.first()? {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbdtModel<T> {
    pub config: GbdtConfig,
    pub n_features: usize,
    /// Training log-odds.
    pub base_score: T,
    pub trees: Vec<RegressionTree<T>>,
}

/// Best split of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split<T> {
    pub feature: usize,
    pub threshold: T,
    pub gain: T,
    pub left_count: usize,
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Mean logistic loss of raw scores.
pub fn log_loss<T: Scalar>(scores: &[T], labels: &[bool]) -> T {
    let sum: T = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| logistic_loss(s, y))
        .sum();
    sum / T::from_count(scores.len().max(1))
}

/// `-log p(y | score)`, stable in `score`.
pub fn logistic_loss<T: Scalar>(score: T, label: bool) -> T {
    let m = if label { -score } else { score };
    // softplus(m)
    if m > T::zero() {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    }
}

/// Negative gradient `y - p` and hessian `p(1-p)` of the loss at `score`.
pub fn residual_and_hessian<T: Scalar>(score: T, label: bool) -> (T, T) {
    let p = sigmoid(score);
    let y = if label { T::one() } else { T::zero() };
    (y - p, p * (T::one() - p))
}

fn split_gain<T: Scalar>(gl: T, hl: T, g: T, h: T) -> T {
    let eps = T::from_f64_lossy(HESS_EPS);
    let (gr, hr) = (g - gl, h - hl);
    gl * gl / (hl + eps) + gr * gr / (hr + eps) - g * g / (h + eps)
}

fn midpoint<T: Scalar>(a: T, b: T) -> T {
    let m = (a + b) / (T::one() + T::one());
    if m >= b {
        a
    } else {
        m
    }
}

/// Scan per-feature sorted row lists of one node for the best split.
/// Ties keep the lowest feature, then the lowest threshold.
fn scan<T: Scalar>(
    columns: &[Vec<T>],
    sorted: &[Vec<u32>],
    grad: &[T],
    hess: &[T],
    min_leaf: usize,
) -> Option<Split<T>> {
    let rows = sorted.first()?;
    let n = rows.len();
    if n < 2 * min_leaf {
        return None;
    }
    let g: T = rows.iter().map(|&r| grad[r as usize]).sum();
    let h: T = rows.iter().map(|&r| hess[r as usize]).sum();
    let mut best: Option<Split<T>> = None;
    let min_gain = T::from_f64_lossy(MIN_GAIN);
    for (f, order) in sorted.iter().enumerate() {
        let col = &columns[f];
        if col[order[0] as usize] == col[order[n - 1] as usize] {
            continue;
        }
        let (mut gl, mut hl) = (T::zero(), T::zero());
        for i in 0..n - 1 {
            let r = order[i] as usize;
            gl = gl + grad[r];
            hl = hl + hess[r];
            let (v, next) = (col[r], col[order[i + 1] as usize]);
            let left = i + 1;
            if v == next || left < min_leaf || n - left < min_leaf {
                continue;
            }
            let gain = split_gain(gl, hl, g, h);
            if gain > min_gain && best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(v, next),
                    gain,
                    left_count: left,
                });
            }
        }
    }
    best
}

fn sort_rows<T: Scalar>(col: &[T], rows: &[usize]) -> Vec<u32> {
    let mut order: Vec<u32> = rows.iter().map(|&r| r as u32).collect();
    order.sort_by(|&a, &b| {
        col[a as usize]
            .partial_cmp(&col[b as usize])
            .expect("features are finite")
            .then(a.cmp(&b))
    });
    order
}

/// Best split over `rows` of a column-major matrix.
pub fn best_split<T: Scalar>(
    columns: &[Vec<T>],
    grad: &[T],
    hess: &[T],
    rows: &[usize],
    min_leaf: usize,
) -> Option<Split<T>> {
    if rows.is_empty() {
        return None;
    }
    let sorted: Vec<Vec<u32>> = columns.iter().map(|c| sort_rows(c, rows)).collect();
    scan(columns, &sorted, grad, hess, min_leaf)
}

struct TreeBuilder<'a, T> {
    columns: &'a [Vec<T>],
    grad: &'a [T],
    hess: &'a [T],
    max_depth: usize,
    min_leaf: usize,
    goes_left: Vec<bool>,
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> TreeBuilder<'_, T> {
    fn leaf_value(&self, rows: &[u32]) -> T {
        let g: T = rows.iter().map(|&r| self.grad[r as usize]).sum();
        let h: T = rows.iter().map(|&r| self.hess[r as usize]).sum();
        let clamp = T::from_f64_lossy(LEAF_CLAMP);
        let v = g / h;
        if v.is_nan() {
            T::zero()
        } else {
            v.max(-clamp).min(clamp)
        }
    }

    fn build(&mut self, sorted: Vec<Vec<u32>>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: T::zero() });
        let split = if depth < self.max_depth && !self.columns.is_empty() {
            scan(self.columns, &sorted, self.grad, self.hess, self.min_leaf)
        } else {
            None
        };
        let Some(split) = split else {
            let rows = sorted.first().map_or(&[][..], Vec::as_slice);
            let value = if rows.is_empty() && self.columns.is_empty() {
                T::zero()
            } else {
                self.leaf_value(rows)
            };
            self.nodes[id] = Node::Leaf { value };
            return id;
        };
        let col = &self.columns[split.feature];
        for &r in &sorted[0] {
            self.goes_left[r as usize] = col[r as usize] <= split.threshold;
        }
        let (mut left, mut right) = (Vec::with_capacity(sorted.len()), Vec::with_capacity(sorted.len()));
        for order in sorted {
            let (l, r): (Vec<u32>, Vec<u32>) =
                order.into_iter().partition(|&row| self.goes_left[row as usize]);
            left.push(l);
            right.push(r);
        }
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }
}

/// Single-column leaf-only fits need one sorted list to carry the rows.
fn root_lists<T: Scalar>(columns: &[Vec<T>], n: usize) -> Vec<Vec<u32>> {
    let all: Vec<usize> = (0..n).collect();
    if columns.is_empty() {
        return vec![(0..n as u32).collect()];
    }
    columns.iter().map(|c| sort_rows(c, &all)).collect()
}

fn validate_rows<T: Scalar>(rows: &[Vec<T>]) -> Result<usize> {
    let width = rows.first().map_or(0, Vec::len);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(Error::validation(format!(
                "row {i} has {} features, expected {width}",
                r.len()
            )));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(width)
}

/// Fit and also return the training log-loss after each round
/// (index 0 is the prior-only model).
pub fn fit_traced<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[bool],
    cfg: &GbdtConfig,
) -> Result<(GbdtModel<T>, Vec<T>)> {
    cfg.validate()?;
    if rows.len() != labels.len() || rows.len() < 2 {
        return Err(Error::validation(format!(
            "gbdt needs >= 2 rows with one label each, got {} rows and {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let width = validate_rows(rows)?;
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::validation("gbdt needs both classes in the training labels"));
    }
    let n = rows.len();
    let columns: Vec<Vec<T>> = (0..width).map(|f| rows.iter().map(|r| r[f]).collect()).collect();
    let base_score = (T::from_count(pos) / T::from_count(neg)).ln();
    let lr = T::from_f64_lossy(cfg.learning_rate);
    let mut scores = vec![base_score; n];
    let mut losses = vec![log_loss(&scores, labels)];
    let mut trees = Vec::with_capacity(cfg.n_estimators);
    let root = root_lists(&columns, n);
    let mut grad = vec![T::zero(); n];
    let mut hess = vec![T::zero(); n];
    let mut goes_left = vec![false; n];
    for _ in 0..cfg.n_estimators {
        for i in 0..n {
            (grad[i], hess[i]) = residual_and_hessian(scores[i], labels[i]);
        }
        let mut builder = TreeBuilder {
            columns: &columns,
            grad: &grad,
            hess: &hess,
            max_depth: cfg.max_depth,
            min_leaf: cfg.min_samples_leaf,
            goes_left: std::mem::take(&mut goes_left),
            nodes: Vec::new(),
        };
        builder.build(root.clone(), 0);
        goes_left = builder.goes_left;
        let tree = RegressionTree {
            nodes: builder.nodes,
        };
        for (s, r) in scores.iter_mut().zip(rows) {
            *s = *s + lr * tree.predict(r);
        }
        losses.push(log_loss(&scores, labels));
        trees.push(tree);
    }
    Ok((
        GbdtModel {
            config: cfg.clone(),
            n_features: width,
            base_score,
            trees,
        },
        losses,
    ))
}

pub fn fit<T: Scalar>(rows: &[Vec<T>], labels: &[bool], cfg: &GbdtConfig) -> Result<GbdtModel<T>> {
    fit_traced(rows, labels, cfg).map(|(m, _)| m)
}

impl<T: Scalar> GbdtModel<T> {
    /// Raw log-odds score of one row.
    pub fn decision(&self, row: &[T]) -> T {
        let lr = T::from_f64_lossy(self.config.learning_rate);
        self.trees
            .iter()
            .fold(self.base_score, |acc, t| acc + lr * t.predict(row))
    }

    pub fn predict_proba(&self, rows: &[Vec<T>]) -> Result<Vec<T>> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| {
                if r.len() != self.n_features {
                    return Err(Error::validation(format!(
                        "row {i} has {} features, model expects {}",
                        r.len(),
                        self.n_features
                    )));
                }
                Ok(sigmoid(self.decision(r)))
            })
            .collect()
    }

    /// Line-oriented text encoding; round-trips exactly.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "{FORMAT_TAG} {FORMAT_VERSION}");
        let _ = writeln!(s, "n_estimators {}", c.n_estimators);
        let _ = writeln!(s, "max_depth {}", c.max_depth);
        let _ = writeln!(s, "learning_rate {}", c.learning_rate);
        let _ = writeln!(s, "min_samples_leaf {}", c.min_samples_leaf);
        let _ = writeln!(s, "rng_seed {}", c.rng_seed);
        let _ = writeln!(s, "n_features {}", self.n_features);
        let _ = writeln!(s, "base_score {}", self.base_score);
        let _ = writeln!(s, "trees {}", self.trees.len());
        for (i, t) in self.trees.iter().enumerate() {
            let _ = writeln!(s, "tree {i} {}", t.nodes.len());
            for node in &t.nodes {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ = writeln!(s, "split {feature} {threshold} {left} {right}");
                    }
                    Node::Leaf { value } => {
                        let _ = writeln!(s, "leaf {value}");
                    }
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = TextReader::new(text);
        let version: u32 = p.field(FORMAT_TAG)?;
        if version != FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported model format version {version}"
            )));
        }
        let config = GbdtConfig {
            n_estimators: p.field("n_estimators")?,
            max_depth: p.field("max_depth")?,
            learning_rate: p.field("learning_rate")?,
            min_samples_leaf: p.field("min_samples_leaf")?,
            rng_seed: p.field("rng_seed")?,
        };
        config.validate()?;
        let n_features: usize = p.field("n_features")?;
        let base_score: T = p.field("base_score")?;
        let n_trees: usize = p.field("trees")?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let (ln, toks) = p.keyed("tree")?;
            let count: usize = parse_tok(ln, toks.get(2))?;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                let (ln, toks) = p.line("tree node")?;
                let node = match toks.first() {
                    Some(&"split") => Node::Split {
                        feature: parse_tok(ln, toks.get(1))?,
                        threshold: parse_tok(ln, toks.get(2))?,
                        left: parse_tok(ln, toks.get(3))?,
                        right: parse_tok(ln, toks.get(4))?,
                    },
                    Some(&"leaf") => Node::Leaf {
                        value: parse_tok(ln, toks.get(1))?,
                    },
                    _ => {
                        return Err(Error::validation(format!(
                            "model text line {ln}: expected split or leaf"
                        )))
                    }
                };
                nodes.push(node);
            }
            for node in &nodes {
                if let Node::Split {
                    feature, left, right, ..
                } = node
                {
                    if *feature >= n_features || *left >= count || *right >= count {
                        return Err(Error::validation("model tree references out of range"));
                    }
                }
            }
            trees.push(RegressionTree { nodes });
        }
        Ok(GbdtModel {
            config,
            n_features,
            base_score,
            trees,
        })
    }
}

fn parse_tok<V: FromStr>(line: usize, tok: Option<&&str>) -> Result<V> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::validation(format!("model text line {line}: bad value")))
}

struct TextReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> TextReader<'a> {
    fn new(text: &'a str) -> Self {
        TextReader {
            lines: text.lines().enumerate(),
        }
    }

    fn line(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        loop {
            let (i, l) = self
                .lines
                .next()
                .ok_or_else(|| Error::validation(format!("model text ends before {what}")))?;
            if !l.trim().is_empty() {
                return Ok((i + 1, l.split_whitespace().collect()));
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (ln, toks) = self.line(key)?;
        if toks.first() != Some(&key) {
            return Err(Error::validation(format!("model text line {ln}: expected {key}")));
        }
        Ok((ln, toks))
    }

    fn field<V: FromStr>(&mut self, key: &str) -> Result<V> {
        let (ln, toks) = self.keyed(key)?;
        parse_tok(ln, toks.get(1))
    }
}

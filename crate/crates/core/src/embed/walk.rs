//! Second-order biased random walks.
//!
//! From `cur`, having arrived from `prev`, the next node `u` is drawn with
//! probability proportional to `alpha(prev, u) · w(cur, u)`, where `alpha`
//! is `1/p` when returning to `prev`, `1` when `u` is also adjacent to
//! `prev`, and `1/q` otherwise. The first step of a walk is weight-proportional.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cograph::CoocGraph;
use crate::model::StudentId;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    #[serde(skip)]
    pub rng_seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 1.0,
            q: 1.0,
            walks_per_node: 10,
            walk_length: 80,
            rng_seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.q > 0.0 && self.p.is_finite() && self.q.is_finite()) {
            return Err(Error::validation("walk p and q must be positive"));
        }
        if self.walks_per_node == 0 || self.walk_length < 2 {
            return Err(Error::validation(
                "walks_per_node must be >= 1 and walk_length >= 2",
            ));
        }
        Ok(())
    }
}

/// Walks over node indices of `nodes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub nodes: Vec<StudentId>,
    pub walks: Vec<Vec<usize>>,
}

fn transition_weights<'g>(
    g: &'g CoocGraph,
    prev: Option<usize>,
    cur: usize,
    cfg: &WalkConfig,
) -> impl Iterator<Item = (usize, f64)> + 'g {
    let (inv_p, inv_q) = (1.0 / cfg.p, 1.0 / cfg.q);
    g.neighbors(cur).iter().map(move |&(u, w)| {
        let alpha = match prev {
            None => 1.0,
            Some(t) if u == t => inv_p,
            Some(t) if g.has_edge(t, u) => 1.0,
            Some(_) => inv_q,
        };
        (u, alpha * f64::from(w))
    })
}

/// Normalized next-step distribution from `cur` given the previous node.
pub fn transition_distribution(
    g: &CoocGraph,
    prev: Option<usize>,
    cur: usize,
    cfg: &WalkConfig,
) -> Result<Vec<(usize, f64)>> {
    let weights: Vec<(usize, f64)> = transition_weights(g, prev, cur, cfg).collect();
    if weights.is_empty() {
        return Err(Error::EmptyDistribution(g.nodes()[cur].to_string()));
    }
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    Ok(weights.into_iter().map(|(u, w)| (u, w / z)).collect())
}

/// Draw the next node, or `None` at a dead end.
pub fn sample_next<R: Rng>(
    g: &CoocGraph,
    prev: Option<usize>,
    cur: usize,
    cfg: &WalkConfig,
    rng: &mut R,
    scratch: &mut Vec<(usize, f64)>,
) -> Option<usize> {
    scratch.clear();
    scratch.extend(transition_weights(g, prev, cur, cfg));
    let total: f64 = scratch.iter().map(|(_, w)| w).sum();
    if scratch.is_empty() {
        return None;
    }
    let mut r = rng.random::<f64>() * total;
    for &(u, w) in scratch.iter() {
        if r < w {
            return Some(u);
        }
        r -= w;
    }
    scratch.last().map(|&(u, _)| u)
}

fn walk_from(g: &CoocGraph, start: usize, cfg: &WalkConfig, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    let mut walk = Vec::with_capacity(cfg.walk_length);
    let mut scratch = Vec::new();
    walk.push(start);
    let mut prev = None;
    let mut cur = start;
    while walk.len() < cfg.walk_length {
        match sample_next(g, prev, cur, cfg, &mut rng, &mut scratch) {
            Some(next) => {
                prev = Some(cur);
                cur = next;
                walk.push(next);
            }
            None => break,
        }
    }
    walk
}

/// `walks_per_node` walks from every node, in rounds over the node order.
/// Each walk has its own RNG stream, so the output does not depend on
/// the thread count.
pub fn generate_walks(g: &CoocGraph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    cfg.validate()?;
    if g.node_count() == 0 {
        return Err(Error::validation("cannot walk an empty graph"));
    }
    let n = g.node_count();
    let walks = (0..cfg.walks_per_node * n)
        .into_par_iter()
        .map(|job| walk_from(g, job % n, cfg, seed::stream_seed(cfg.rng_seed, job as u64)))
        .collect();
    Ok(WalkCorpus {
        nodes: g.nodes().to_vec(),
        walks,
    })
}

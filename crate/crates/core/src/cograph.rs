//! Student co-occurrence network from library check-ins.
//!
//! Two students co-occur when visits of theirs fall within `delta` seconds
//! of each other. An edge keeps the number of such visit pairs and survives
//! only if that count reaches `sigma`.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::model::{csv_err, BehaviorEvent, Stream, StudentId};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoocConfig {
    /// Co-occurrence window in seconds.
    pub delta: i64,
    /// Minimum co-occurrence count for an edge.
    pub sigma: u32,
    /// Re-taps by one student within this many seconds of a visit's first
    /// check-in are the same visit. `None` means `delta`.
    pub visit_collapse: Option<i64>,
}

impl Default for CoocConfig {
    fn default() -> Self {
        CoocConfig {
            delta: 30,
            sigma: 2,
            visit_collapse: None,
        }
    }
}

impl CoocConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta <= 0 {
            return Err(Error::validation("cooc delta must be > 0"));
        }
        if self.sigma == 0 {
            return Err(Error::validation("cooc sigma must be >= 1"));
        }
        if self.visit_collapse.is_some_and(|c| c < 0) {
            return Err(Error::validation("cooc visit_collapse must be >= 0"));
        }
        Ok(())
    }

    pub fn collapse_window(&self) -> i64 {
        self.visit_collapse.unwrap_or(self.delta)
    }
}

/// Merge check-ins within `window` seconds of the current visit's first
/// check-in. Input must be sorted.
pub fn collapse_visits(checkins: &[i64], window: i64) -> Vec<i64> {
    debug_assert!(checkins.windows(2).all(|w| w[0] <= w[1]));
    let mut visits: Vec<i64> = Vec::with_capacity(checkins.len());
    for &t in checkins {
        match visits.last() {
            Some(&start) if t - start <= window => {}
            _ => visits.push(t),
        }
    }
    visits
}

/// Per-student visit times from library check-ins strictly before `cutoff`.
pub fn library_visits(
    events: &[BehaviorEvent],
    cutoff: i64,
    collapse: i64,
) -> BTreeMap<StudentId, Vec<i64>> {
    let mut raw: BTreeMap<StudentId, Vec<i64>> = BTreeMap::new();
    for e in events {
        if e.stream == Stream::LibraryCheckin && e.timestamp < cutoff {
            raw.entry(e.student.clone()).or_default().push(e.timestamp);
        }
    }
    raw.into_iter()
        .map(|(s, mut ts)| {
            ts.sort_unstable();
            (s, collapse_visits(&ts, collapse))
        })
        .collect()
}

/// Weighted undirected graph; nodes are indexed in `StudentId` order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoocGraph {
    nodes: Vec<StudentId>,
    index: HashMap<StudentId, usize>,
    /// Sorted by neighbor index.
    adjacency: Vec<Vec<(usize, u32)>>,
}

impl CoocGraph {
    /// Graph from explicit weighted edges. Self-loops and zero weights are rejected.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = StudentId>,
        edges: impl IntoIterator<Item = (StudentId, StudentId, u32)>,
    ) -> Result<Self> {
        let mut nodes: Vec<StudentId> = nodes.into_iter().collect();
        nodes.sort();
        nodes.dedup();
        let index: HashMap<StudentId, usize> =
            nodes.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut weights: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (u, v, w) in edges {
            let (Some(&a), Some(&b)) = (index.get(&u), index.get(&v)) else {
                return Err(Error::validation(format!("edge {u}-{v} references unknown node")));
            };
            if a == b {
                return Err(Error::validation(format!("self-loop on {u}")));
            }
            if w == 0 {
                return Err(Error::validation(format!("zero-weight edge {u}-{v}")));
            }
            *weights.entry((a.min(b), a.max(b))).or_default() += w;
        }
        Ok(Self::from_index_weights(nodes, index, &weights))
    }

    fn from_index_weights(
        nodes: Vec<StudentId>,
        index: HashMap<StudentId, usize>,
        weights: &BTreeMap<(usize, usize), u32>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (&(a, b), &w) in weights {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        CoocGraph {
            nodes,
            index,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn nodes(&self) -> &[StudentId] {
        &self.nodes
    }

    pub fn node_index(&self, s: &StudentId) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, u32)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<u32> {
        let adj = &self.adjacency[u];
        adj.binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|i| adj[i].1)
    }

    pub fn weight_between(&self, u: &StudentId, v: &StudentId) -> Option<u32> {
        self.weight(self.node_index(u)?, self.node_index(v)?)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v).is_some()
    }

    /// Edges as `(u, v, w)` with `u < v` by node order.
    pub fn edges(&self) -> impl Iterator<Item = (&StudentId, &StudentId, u32)> + '_ {
        self.adjacency.iter().enumerate().flat_map(move |(a, adj)| {
            adj.iter()
                .filter(move |&&(b, _)| b > a)
                .map(move |&(b, w)| (&self.nodes[a], &self.nodes[b], w))
        })
    }

    /// `u,v,w` edge list with a header row.
    pub fn write_edges_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "v", "w"]).map_err(csv_err)?;
        for (u, v, wt) in self.edges() {
            w.write_record([u.as_str(), v.as_str(), &wt.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<edges>", e))
    }
}

/// Raw co-occurrence counts between every pair of students (no `sigma`
/// filter), keyed by node index pair `(a, b)` with `a < b`.
fn pair_counts(
    nodes: &[StudentId],
    visits: &BTreeMap<StudentId, Vec<i64>>,
    delta: i64,
) -> BTreeMap<(usize, usize), u32> {
    let mut timeline: Vec<(i64, usize)> = visits
        .iter()
        .enumerate()
        .flat_map(|(i, (_, ts))| ts.iter().map(move |&t| (t, i)))
        .collect();
    timeline.sort_unstable();
    debug_assert_eq!(nodes.len(), visits.len());
    let mut counts: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for (i, &(t, a)) in timeline.iter().enumerate() {
        for &(t2, b) in &timeline[i + 1..] {
            if t2 - t > delta {
                break;
            }
            if a != b {
                *counts.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
    }
    counts
}

/// Build the network by a sliding window over the time-sorted visits.
///
/// Every student in `visits` becomes a node, including those left without
/// edges after the `sigma` filter.
pub fn build(visits: &BTreeMap<StudentId, Vec<i64>>, cfg: &CoocConfig) -> CoocGraph {
    let nodes: Vec<StudentId> = visits.keys().cloned().collect();
    let index: HashMap<StudentId, usize> =
        nodes.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let mut counts = pair_counts(&nodes, visits, cfg.delta);
    counts.retain(|_, w| *w >= cfg.sigma);
    CoocGraph::from_index_weights(nodes, index, &counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegreeStats {
    pub node_count: usize,
    pub edge_count: usize,
    pub isolated_count: usize,
    pub mean_degree: f64,
    pub max_degree: usize,
    /// Edge weight → number of edges.
    pub weight_histogram: BTreeMap<u32, usize>,
}

pub fn degree_stats(g: &CoocGraph) -> DegreeStats {
    let mut weight_histogram = BTreeMap::new();
    for (_, _, w) in g.edges() {
        *weight_histogram.entry(w).or_insert(0) += 1;
    }
    let degrees: Vec<usize> = (0..g.node_count()).map(|i| g.degree(i)).collect();
    let n = g.node_count();
    DegreeStats {
        node_count: n,
        edge_count: g.edge_count(),
        isolated_count: degrees.iter().filter(|&&d| d == 0).count(),
        mean_degree: if n == 0 {
            0.0
        } else {
            degrees.iter().sum::<usize>() as f64 / n as f64
        },
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        weight_histogram,
    }
}

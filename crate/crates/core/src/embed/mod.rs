//! Student embeddings from the co-occurrence network.
//!
//! Second-order biased random walks ([`walk`]) feed a skip-gram model with
//! negative sampling ([`skipgram`]); the learned center vectors are the
//! embedding.

pub mod skipgram;
pub mod walk;

use std::io::Write;

use crate::model::{csv_err, StudentId};
use crate::{Error, Result, Scalar};

pub use skipgram::{sgns_gradient, sgns_objective, train_skipgram, SgnsGradient, SkipGramConfig};
pub use walk::{generate_walks, transition_distribution, WalkConfig, WalkCorpus};

/// Per-node center vectors, plus the context table used during training.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    nodes: Vec<StudentId>,
    dim: usize,
    center: Vec<T>,
    context: Vec<T>,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub(crate) fn from_parts(nodes: Vec<StudentId>, dim: usize, center: Vec<T>, context: Vec<T>) -> Self {
        debug_assert_eq!(center.len(), nodes.len() * dim);
        debug_assert_eq!(context.len(), nodes.len() * dim);
        EmbeddingMatrix {
            nodes,
            dim,
            center,
            context,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[StudentId] {
        &self.nodes
    }

    pub fn vector_at(&self, node: usize) -> &[T] {
        &self.center[node * self.dim..(node + 1) * self.dim]
    }

    pub fn context_at(&self, node: usize) -> &[T] {
        &self.context[node * self.dim..(node + 1) * self.dim]
    }

    pub fn vector(&self, student: &StudentId) -> Option<&[T]> {
        let i = self.nodes.binary_search(student).ok()?;
        Some(self.vector_at(i))
    }

    /// The student's vector, or zeros for students outside the graph.
    pub fn vector_or_zero(&self, student: &StudentId) -> Vec<T> {
        self.vector(student)
            .map(<[T]>::to_vec)
            .unwrap_or_else(|| vec![T::zero(); self.dim])
    }

    pub fn is_finite(&self) -> bool {
        self.center.iter().chain(&self.context).all(|v| v.is_finite())
    }

    /// `student_id,v0,...,v{dim-1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["student_id".to_string()];
        header.extend((0..self.dim).map(|i| format!("v{i}")));
        w.write_record(&header).map_err(csv_err)?;
        for (i, s) in self.nodes.iter().enumerate() {
            let mut rec = vec![s.to_string()];
            rec.extend(self.vector_at(i).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<embedding>", e))
    }
}

pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> T {
    let dot: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na: T = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let nb: T = b.iter().map(|&x| x * x).sum::<T>().sqrt();
    if na == T::zero() || nb == T::zero() {
        T::zero()
    } else {
        dot / (na * nb)
    }
}

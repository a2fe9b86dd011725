//! Early warning for students at risk (STAR).
//!
//! The pipeline turns per-student event logs (LMS clickstream and library
//! check-ins) into three feature blocks, balances the training folds and
//! fits gradient-boosted trees:
//!
//! - [`ingest`] parses logs and binarizes them into daily activity sequences;
//! - [`regularity`] extracts the multi-scale bag-of-regularity vector;
//! - [`cograph`] and [`embed`] build the library co-occurrence network and
//!   learn per-student embeddings with biased walks and skip-gram training;
//! - [`augment`] balances the training set (SMOTE, random under/oversampling);
//! - [`classify`] holds the boosted-tree classifier;
//! - [`evaluate`] has the metrics, ANOVA screen and cross-validation harness;
//! - [`synthgen`] generates synthetic cohorts with planted signal.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the pipeline uses.

pub mod augment;
pub mod classify;
pub mod cograph;
pub mod embed;
mod error;
pub mod evaluate;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod regularity;
mod scalar;
pub mod seed;
pub mod synthgen;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar used by the end-to-end pipeline.
pub type Real = f64;

pub type FeatureTable64 = model::FeatureTable<f64>;
pub type FeatureTable32 = model::FeatureTable<f32>;
pub type RegularityVector64 = regularity::RegularityVector<f64>;
pub type EmbeddingMatrix64 = embed::EmbeddingMatrix<f64>;
pub type EmbeddingMatrix32 = embed::EmbeddingMatrix<f32>;
pub type GbdtModel64 = classify::GbdtModel<f64>;
pub type GbdtModel32 = classify::GbdtModel<f32>;
pub type Standardizer64 = augment::Standardizer<f64>;

use std::collections::HashMap;

use rand::seq::SliceRandom;

use crate::model::{StarLabel, StudentId};
use crate::seed;
use crate::{Error, Result};

/// Repeated stratified k-fold assignment over students sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub n_repeats: usize,
    pub rng_seed: u64,
    students: Vec<StudentId>,
    labels: Vec<bool>,
    /// `assignments[repeat][i]` is the fold of `students[i]`.
    assignments: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Positives and negatives are each shuffled and dealt round-robin, so
    /// every fold's positive count is within one of its proportional share.
    pub fn stratified(labels: &[StarLabel], n_folds: usize, n_repeats: usize, rng_seed: u64) -> Result<Self> {
        if n_folds < 2 {
            return Err(Error::validation(format!(
                "cross-validation needs >= 2 folds, got {n_folds}"
            )));
        }
        if n_repeats == 0 {
            return Err(Error::validation("cross-validation needs >= 1 repeat"));
        }
        if labels.len() < n_folds {
            return Err(Error::validation(format!(
                "{} students cannot fill {n_folds} folds",
                labels.len()
            )));
        }
        let mut pairs: Vec<(StudentId, bool)> =
            labels.iter().map(|l| (l.student.clone(), l.is_star)).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let (students, flags): (Vec<StudentId>, Vec<bool>) = pairs.into_iter().unzip();
        let mut assignments = Vec::with_capacity(n_repeats);
        for r in 0..n_repeats {
            let mut rng = seed::rng(seed::stream_seed(rng_seed, r as u64));
            let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
                (0..students.len()).partition(|&i| flags[i]);
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            let mut fold = vec![0; students.len()];
            for (k, &i) in pos.iter().chain(&neg).enumerate() {
                fold[i] = k % n_folds;
            }
            assignments.push(fold);
        }
        Ok(FoldPlan {
            n_folds,
            n_repeats,
            rng_seed,
            students,
            labels: flags,
            assignments,
        })
    }

    pub fn students(&self) -> &[StudentId] {
        &self.students
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn fold_of(&self, repeat: usize, i: usize) -> usize {
        self.assignments[repeat][i]
    }

    pub fn assignment_map(&self, repeat: usize) -> HashMap<StudentId, usize> {
        self.students
            .iter()
            .cloned()
            .zip(self.assignments[repeat].iter().copied())
            .collect()
    }

    /// `(train, test)` positions into [`Self::students`].
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.students.len()).partition(|&i| self.assignments[repeat][i] != fold)
    }
}

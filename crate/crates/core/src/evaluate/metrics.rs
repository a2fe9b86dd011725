use crate::{Error, Result, Scalar};

/// Area under the ROC curve: the probability that a random positive
/// outscores a random negative, ties counting one half.
///
/// Computed by sorting; the half-unit numerator is an exact integer.
pub fn auc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::validation("auc: scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::validation("auc: NaN score"));
    }
    let n_pos = labels.iter().filter(|&&y| y).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("no NaN"));
    let mut twice_wins: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        twice_wins += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
        i = j;
    }
    Ok(twice_wins as f64 / (2 * n_pos * n_neg) as f64)
}

/// Recall on the at-risk class: flagged positives over all positives.
pub fn acc_star(predictions: &[bool], labels: &[bool]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::validation("acc_star: length mismatch"));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 {
        return Err(Error::UndefinedMetric("acc_star needs at least one positive".into()));
    }
    let tp = predictions.iter().zip(labels).filter(|(&p, &y)| p && y).count();
    Ok(tp as f64 / positives as f64)
}

pub fn threshold<T: Scalar>(probs: &[T], cut: f64) -> Vec<bool> {
    probs.iter().map(|p| p.as_f64() >= cut).collect()
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

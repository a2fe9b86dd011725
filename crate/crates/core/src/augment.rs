//! Class balancing for training folds: SMOTE and random under/oversampling.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMethod {
    None,
    /// Random undersampling of the majority class.
    Ru,
    /// Random oversampling of the minority class.
    Ro,
    Smote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub method: AugmentMethod,
    pub k_neighbors: usize,
    #[serde(skip)]
    pub rng_seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            method: AugmentMethod::Smote,
            k_neighbors: 10,
            rng_seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::validation("augment k_neighbors must be >= 1"));
        }
        Ok(())
    }
}

/// Per-column z-scoring fit on training rows. Constant columns keep scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(rows: &[Vec<T>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let n = T::from_count(rows.len().max(1));
        let mut mean = vec![T::zero(); width];
        for r in rows {
            for (m, &v) in mean.iter_mut().zip(r) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        let mut var = vec![T::zero(); width];
        for r in rows {
            for ((s, &v), &m) in var.iter_mut().zip(r).zip(&mean) {
                *s = *s + (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > T::epsilon() {
                    sd
                } else {
                    T::one()
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn transform_row(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, rows: &[Vec<T>]) -> Vec<Vec<T>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }

    pub fn inverse_row(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(&v, (&m, &s))| v * s + m)
            .collect()
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest rows to `rows[i]` by Euclidean distance,
/// excluding `i`; ties go to the lower index.
pub fn nearest_neighbors<T: Scalar>(rows: &[Vec<T>], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(T, usize)> = rows
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, r)| (sq_dist(&rows[i], r), j))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
    d.truncate(k);
    d.into_iter().map(|(_, j)| j).collect()
}

/// A synthesized row with the pair and weight it was interpolated from.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic<T> {
    pub row: Vec<T>,
    pub base: usize,
    pub neighbor: usize,
    pub omega: T,
}

/// `x + (x' - x)·ω`.
pub fn interpolate<T: Scalar>(x: &[T], neighbor: &[T], omega: T) -> Vec<T> {
    x.iter()
        .zip(neighbor)
        .map(|(&a, &b)| a + (b - a) * omega)
        .collect()
}

/// SMOTE synthesis with provenance. Base rows are taken in round-robin
/// order; each picks one of its `k` nearest minority neighbors at random
/// and an `ω` uniform in `[0, 1]`.
pub fn smote_detailed<T: Scalar, R: Rng>(
    minority: &[Vec<T>],
    target_count: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Synthetic<T>>> {
    let m = minority.len();
    if m < 2 {
        return Err(Error::Unsupported(format!(
            "SMOTE needs at least 2 minority rows, got {m}"
        )));
    }
    if target_count < m {
        return Err(Error::range(format!(
            "SMOTE target {target_count} is below the minority count {m}"
        )));
    }
    if k == 0 {
        return Err(Error::validation("SMOTE k must be >= 1"));
    }
    let k = if k > m - 1 {
        log::warn!("SMOTE k={k} clipped to {} for {m} minority rows", m - 1);
        m - 1
    } else {
        k
    };
    let neighbors: Vec<Vec<usize>> = (0..m).map(|i| nearest_neighbors(minority, i, k)).collect();
    let out = (0..target_count - m)
        .map(|i| {
            let base = i % m;
            let neighbor = neighbors[base][rng.random_range(0..k)];
            let omega = T::from_f64_lossy(rng.random_range(0.0..=1.0));
            Synthetic {
                row: interpolate(&minority[base], &minority[neighbor], omega),
                base,
                neighbor,
                omega,
            }
        })
        .collect();
    Ok(out)
}

/// `target_count - |minority|` synthesized rows.
pub fn smote<T: Scalar, R: Rng>(
    minority: &[Vec<T>],
    target_count: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Vec<T>>> {
    Ok(smote_detailed(minority, target_count, k, rng)?
        .into_iter()
        .map(|s| s.row)
        .collect())
}

/// Uniform sample without replacement, in original order.
pub fn random_undersample<T: Clone, R: Rng>(
    majority: &[T],
    target_count: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if target_count > majority.len() {
        return Err(Error::range(format!(
            "undersample target {target_count} exceeds {} rows",
            majority.len()
        )));
    }
    let mut picked = index::sample(rng, majority.len(), target_count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| majority[i].clone()).collect())
}

/// The originals followed by uniform resamples up to `target_count`.
pub fn random_oversample<T: Clone, R: Rng>(
    minority: &[T],
    target_count: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if minority.is_empty() {
        return Err(Error::Unsupported("oversampling needs at least one row".into()));
    }
    let mut out: Vec<T> = minority.iter().take(target_count).cloned().collect();
    while out.len() < target_count {
        out.push(minority[rng.random_range(0..minority.len())].clone());
    }
    Ok(out)
}

/// Balance a labeled training set so both classes have equal counts.
/// Positive labels are the minority. Returned rows are positives first
/// for oversampling methods, otherwise in input order.
pub fn balance<T: Scalar, R: Rng>(
    rows: &[Vec<T>],
    labels: &[bool],
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<(Vec<Vec<T>>, Vec<bool>)> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| labels[i]);
    let take = |idx: &[usize]| idx.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>();
    let (minority, majority) = (take(&pos), take(&neg));
    let stack = |a: Vec<Vec<T>>, b: Vec<Vec<T>>| {
        let labels: Vec<bool> = std::iter::repeat_n(true, a.len())
            .chain(std::iter::repeat_n(false, b.len()))
            .collect();
        (a.into_iter().chain(b).collect::<Vec<_>>(), labels)
    };
    Ok(match cfg.method {
        AugmentMethod::None => (rows.to_vec(), labels.to_vec()),
        _ if minority.len() >= majority.len() => (rows.to_vec(), labels.to_vec()),
        AugmentMethod::Ru => {
            let kept = random_undersample(&majority, minority.len(), rng)?;
            stack(minority, kept)
        }
        AugmentMethod::Ro => {
            let grown = random_oversample(&minority, majority.len(), rng)?;
            stack(grown, majority)
        }
        AugmentMethod::Smote => {
            let synth = smote(&minority, majority.len(), cfg.k_neighbors, rng)?;
            let grown: Vec<Vec<T>> = minority.into_iter().chain(synth).collect();
            stack(grown, majority)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn interpolation_endpoints() {
        let x = [0.0, 0.0];
        let y = [1.0, 2.0];
        assert_eq!(interpolate(&x, &y, 0.5), vec![0.5, 1.0]);
        assert_eq!(interpolate(&x, &y, 0.0), x.to_vec());
        assert_eq!(interpolate(&x, &y, 1.0), y.to_vec());
    }

    #[test]
    fn smote_rows_stay_in_bounding_box() {
        let mut rng = seed::rng(3);
        let minority: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64, (i * i) as f64 % 7.0, -(i as f64)])
            .collect();
        let synth = smote_detailed(&minority, 1012, 10, &mut rng).unwrap();
        assert_eq!(synth.len(), 1000);
        for s in &synth {
            let (a, b) = (&minority[s.base], &minority[s.neighbor]);
            assert_ne!(s.base, s.neighbor);
            assert!((0.0..=1.0).contains(&s.omega));
            for d in 0..3 {
                let (lo, hi) = (a[d].min(b[d]), a[d].max(b[d]));
                assert!(s.row[d] >= lo - 1e-12 && s.row[d] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn smote_rejects_tiny_minority() {
        let mut rng = seed::rng(0);
        let one = vec![vec![1.0f64]];
        assert!(matches!(
            smote(&one, 5, 3, &mut rng),
            Err(Error::Unsupported(_))
        ));
        let two = vec![vec![1.0f64], vec![2.0]];
        // k clipped to 1: every synthetic row uses the other point.
        let d = smote_detailed(&two, 6, 10, &mut rng).unwrap();
        assert!(d.iter().all(|s| s.neighbor != s.base));
        assert!(smote(&two, 1, 1, &mut rng).is_err());
    }

    #[test]
    fn neighbors_exclude_self_and_break_ties_by_index() {
        let rows = vec![vec![0.0f64], vec![1.0], vec![-1.0], vec![5.0]];
        assert_eq!(nearest_neighbors(&rows, 0, 2), vec![1, 2]);
        assert_eq!(nearest_neighbors(&rows, 3, 1), vec![1]);
    }

    #[test]
    fn undersample_contract() {
        let mut rng = seed::rng(9);
        let rows: Vec<u32> = (0..10).collect();
        assert_eq!(random_undersample(&rows, 10, &mut rng).unwrap(), rows);
        assert!(random_undersample(&rows, 0, &mut rng).unwrap().is_empty());
        assert!(random_undersample(&rows, 11, &mut rng).is_err());
        let s = random_undersample(&rows, 4, &mut rng).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn oversample_contract() {
        let mut rng = seed::rng(9);
        let rows = vec![1u32, 2, 3];
        assert_eq!(random_oversample(&rows, 3, &mut rng).unwrap(), rows);
        let big = random_oversample(&rows, 50, &mut rng).unwrap();
        assert_eq!(big.len(), 50);
        assert_eq!(&big[..3], &rows[..]);
        assert!(big.iter().all(|r| rows.contains(r)));
        assert!(random_oversample::<u32, _>(&[], 3, &mut rng).is_err());
    }

    #[test]
    fn balance_equalizes_classes() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let labels: Vec<bool> = (0..40).map(|i| i % 8 == 0).collect();
        for method in [AugmentMethod::Ru, AugmentMethod::Ro, AugmentMethod::Smote] {
            let cfg = AugmentConfig {
                method,
                k_neighbors: 10,
                rng_seed: 0,
            };
            let (x, y) = balance(&rows, &labels, &cfg, &mut seed::rng(1)).unwrap();
            let pos = y.iter().filter(|&&b| b).count();
            assert_eq!(pos, y.len() - pos, "{method:?}");
            assert_eq!(x.len(), y.len());
        }
        let none = AugmentConfig {
            method: AugmentMethod::None,
            ..Default::default()
        };
        let (x, _) = balance(&rows, &labels, &none, &mut seed::rng(1)).unwrap();
        assert_eq!(x, rows);
    }

    #[test]
    fn standardizer_round_trip() {
        let rows = vec![vec![1.0f64, 5.0], vec![3.0, 5.0], vec![5.0, 5.0]];
        let s = Standardizer::fit(&rows);
        let t = s.transform(&rows);
        let mean0: f64 = t.iter().map(|r| r[0]).sum::<f64>() / 3.0;
        assert!(mean0.abs() < 1e-12);
        assert_eq!(t[0][1], 0.0);
        assert_eq!(s.scale[1], 1.0);
        let back = s.inverse_row(&t[2]);
        assert!((back[0] - 5.0).abs() < 1e-12);
    }
}

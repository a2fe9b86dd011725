mod oracles;

use proptest::prelude::*;
use rand::Rng;
use star_core::classify::{best_split, fit, fit_traced, GbdtConfig, GbdtModel};
use star_core::seed;

/// Column-major view of row-major data.
fn columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..rows[0].len()).map(|f| rows.iter().map(|r| r[f]).collect()).collect()
}

fn dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (2usize..100, 1usize..5).prop_flat_map(|(n, d)| {
        (
            // Coarse values so that duplicate feature values are common.
            prop::collection::vec(prop::collection::vec((0i32..12).prop_map(|v| f64::from(v) / 2.0), d), n),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(0.01f64..0.25, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn split_finder_matches_exhaustive_search((rows, grad, hess) in dataset(), min_leaf in 1usize..4) {
        let cols = columns(&rows);
        let all: Vec<usize> = (0..rows.len()).collect();
        let got = best_split(&cols, &grad, &hess, &all, min_leaf);
        let want = oracles::exhaustive_split(&rows, &grad, &hess, min_leaf);
        match (got, want) {
            (None, None) => {}
            (Some(s), Some((_, _, gain))) => {
                let tol = 1e-9 * gain.abs().max(1.0);
                prop_assert!((s.gain - gain).abs() <= tol, "gain {} vs {}", s.gain, gain);
                // The chosen split really achieves that gain.
                let left: Vec<usize> = all.iter().copied().filter(|&i| rows[i][s.feature] <= s.threshold).collect();
                prop_assert_eq!(left.len(), s.left_count);
                let (gl, hl): (f64, f64) = left.iter().fold((0.0, 0.0), |a, &i| (a.0 + grad[i], a.1 + hess[i]));
                let (g, h): (f64, f64) = (grad.iter().sum(), hess.iter().sum());
                let sc = |g: f64, h: f64| g * g / (h + 1e-12);
                let achieved = sc(gl, hl) + sc(g - gl, h - hl) - sc(g, h);
                prop_assert!((achieved - gain).abs() <= tol);
            }
            (a, b) => prop_assert!(false, "finder {a:?} vs oracle {b:?}"),
        }
    }

    #[test]
    fn training_loss_never_increases(seed_v in any::<u64>()) {
        let mut rng = seed::rng(seed_v);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<bool> = rows.iter().map(|r| r[0] + 0.3 * r[1] + rng.random_range(-0.4..0.4) > 0.2).collect();
        prop_assume!(labels.iter().any(|&y| y) && labels.iter().any(|&y| !y));
        let cfg = GbdtConfig { n_estimators: 30, max_depth: 3, ..Default::default() };
        let (_, losses) = fit_traced(&rows, &labels, &cfg).unwrap();
        prop_assert_eq!(losses.len(), 31);
        for w in losses.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn root_split_follows_a_column_permutation(seed_v in any::<u64>()) {
        // Ties are broken by column position, so deep nodes and labels
        // that several columns explain equally well are avoided.
        let mut rng = seed::rng(seed_v);
        let rows: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<bool> = rows.iter().map(|r| r[1] + 0.3 * rng.random_range(-1.0..1.0) > 0.0).collect();
        prop_assume!(labels.iter().any(|&y| y) && labels.iter().any(|&y| !y));
        let cfg = GbdtConfig { n_estimators: 1, max_depth: 1, ..Default::default() };
        let perm = [2usize, 0, 1];
        let permuted: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&p| r[p]).collect()).collect();
        let (a, la) = fit_traced(&rows, &labels, &cfg).unwrap();
        let (b, lb) = fit_traced(&permuted, &labels, &cfg).unwrap();
        let (fa, ta) = a.trees[0].root_split().unwrap();
        let (fb, tb) = b.trees[0].root_split().unwrap();
        prop_assert_eq!(perm[fb], fa);
        prop_assert_eq!(ta, tb);
        prop_assert!((la[1] - lb[1]).abs() < 1e-12);
    }
}

#[test]
fn separable_line_is_learned_in_ten_rounds() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![f64::from(i)]).collect();
    let labels: Vec<bool> = (0..40).map(|i| i >= 25).collect();
    let cfg = GbdtConfig { n_estimators: 10, ..Default::default() };
    let m = fit(&rows, &labels, &cfg).unwrap();
    let p = m.predict_proba(&rows).unwrap();
    let correct = p.iter().zip(&labels).filter(|(p, &y)| (**p >= 0.5) == y).count();
    assert_eq!(correct, 40);
    assert_eq!(m.trees[0].root_split(), Some((0, 24.5)));
}

#[test]
fn model_text_round_trip_preserves_predictions() {
    let mut rng = seed::rng(4);
    let rows: Vec<Vec<f64>> = (0..50).map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let labels: Vec<bool> = rows.iter().map(|r| r[0] * r[1] > 0.0).collect();
    let m = fit(&rows, &labels, &GbdtConfig { n_estimators: 12, max_depth: 4, ..Default::default() }).unwrap();
    let back = GbdtModel::<f64>::from_text(&m.to_text()).unwrap();
    assert_eq!(m.predict_proba(&rows).unwrap(), back.predict_proba(&rows).unwrap());
}

//! Slow, obviously-correct reference implementations shared by the
//! integration tests and the acceptance harness.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

/// Pattern histogram for windows of length `len`, built from strings.
pub fn regularity_block(bits: &[u8], len: usize, min_count: usize) -> Vec<f64> {
    let n = bits.len() as i64;
    let mut counts: HashMap<u32, usize> = HashMap::new();
    for (i, &b) in bits.iter().enumerate() {
        if b == 0 {
            continue;
        }
        // Odd lengths are centered; even lengths lean right of the active day.
        let start = i as i64 - (len as i64 - 1) / 2;
        let text: String = (start..start + len as i64)
            .map(|j| if (0..n).contains(&j) && bits[j as usize] == 1 { '1' } else { '0' })
            .collect();
        *counts.entry(u32::from_str_radix(&text, 2).unwrap()).or_default() += 1;
    }
    let mut out = vec![0.0; (1 << len) - 1];
    for (code, c) in counts {
        if c >= min_count {
            out[code as usize - 1] = c as f64;
        }
    }
    out
}

pub fn regularity_vector(bits: &[u8], max_scale: usize, step: usize, min_count: usize, normalize: bool) -> Vec<f64> {
    let ones = bits.iter().filter(|&&b| b == 1).count().max(1) as f64;
    (1..=max_scale)
        .flat_map(|s| regularity_block(bits, 2 + (s - 1) * step, min_count))
        .map(|c| if normalize { c / ones } else { c })
        .collect()
}

/// All cross-student visit pairs within `delta`, kept if at least `sigma`.
pub fn cooc_edges(visits: &BTreeMap<String, Vec<i64>>, delta: i64, sigma: u32) -> BTreeMap<(String, String), u32> {
    let flat: Vec<(&String, i64)> = visits
        .iter()
        .flat_map(|(s, ts)| ts.iter().map(move |&t| (s, t)))
        .collect();
    let mut w: BTreeMap<(String, String), u32> = BTreeMap::new();
    for (i, (a, ta)) in flat.iter().enumerate() {
        for (b, tb) in &flat[i + 1..] {
            if a != b && (ta - tb).abs() <= delta {
                let key = if a < b { ((*a).clone(), (*b).clone()) } else { ((*b).clone(), (*a).clone()) };
                *w.entry(key).or_default() += 1;
            }
        }
    }
    w.retain(|_, v| *v >= sigma);
    w
}

/// P(score_pos > score_neg) + 0.5 P(tie), over all pairs.
pub fn auc_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                pairs += 1;
                twice += if si > sj { 2 } else if si == sj { 1 } else { 0 };
            }
        }
    }
    twice as f64 / (2 * pairs) as f64
}

/// Exact one-way F statistic via rationals, rounded once at the end.
pub fn anova_f_exact(groups: &[&[f64]]) -> Option<f64> {
    use num_rational::BigRational;
    use num_traits::{ToPrimitive, Zero};
    let q = |x: f64| BigRational::from_float(x).unwrap();
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let all: BigRational = groups.iter().flat_map(|g| g.iter()).map(|&x| q(x)).sum();
    let grand = all / BigRational::from_integer(n.into());
    let (mut ssb, mut ssw) = (BigRational::zero(), BigRational::zero());
    for g in groups {
        let m = g.iter().map(|&x| q(x)).sum::<BigRational>() / BigRational::from_integer(g.len().into());
        let d = &m - &grand;
        ssb += &d * &d * BigRational::from_integer(g.len().into());
        for &x in g.iter() {
            let e = q(x) - &m;
            ssw += &e * &e;
        }
    }
    if ssw.is_zero() {
        return None;
    }
    let f = (ssb / BigRational::from_integer((k - 1).into()))
        / (ssw / BigRational::from_integer((n - k).into()));
    f.to_f64()
}

/// Best split by trying every threshold of every feature from scratch.
/// Returns (feature, threshold, gain).
pub fn exhaustive_split(
    rows: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    min_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let score = |g: f64, h: f64| g * g / (h + 1e-12);
    let g: f64 = grad.iter().sum();
    let h: f64 = hess.iter().sum();
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..rows.first()?.len() {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = w[0] + (w[1] - w[0]) / 2.0;
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0);
            for (i, r) in rows.iter().enumerate() {
                if r[f] <= thr {
                    gl += grad[i];
                    hl += hess[i];
                    nl += 1;
                }
            }
            if nl < min_leaf || rows.len() - nl < min_leaf {
                continue;
            }
            let gain = score(gl, hl) + score(g - gl, h - hl) - score(g, h);
            if best.is_none_or(|b| gain > b.2) {
                best = Some((f, thr, gain));
            }
        }
    }
    best.filter(|b| b.2 > 1e-12)
}

/// Distance from `s` to the segment through `x` and `y`, and the
/// interpolation weight of its projection.
pub fn segment_residual(x: &[f64], y: &[f64], s: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let e: Vec<f64> = s.iter().zip(x).map(|(a, b)| a - b).collect();
    let dd: f64 = d.iter().map(|v| v * v).sum();
    let omega = if dd == 0.0 { 0.0 } else { d.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() / dd };
    let res: f64 = e
        .iter()
        .zip(&d)
        .map(|(ei, di)| (ei - omega * di).powi(2))
        .sum::<f64>()
        .sqrt();
    (res, omega)
}

//! One-way ANOVA and the significance screen for statistical features.

use statrs::function::beta::beta_reg;

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaResult {
    pub f: f64,
    pub p: f64,
    /// Set when the within-group variance is zero but group means differ.
    pub infinite: bool,
    pub df_between: f64,
    pub df_within: f64,
    pub group_means: Vec<f64>,
}

/// One-way F test across `groups`; `p` is the upper tail of F(df_b, df_w).
pub fn anova_f<T: Scalar>(groups: &[&[T]]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::validation("anova needs at least two groups"));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::validation(format!(
            "anova groups need >= 2 samples, found {}",
            g.len()
        )));
    }
    let as_f64: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| g.iter().map(|v| v.as_f64()).collect())
        .collect();
    let n: usize = as_f64.iter().map(Vec::len).sum();
    let means: Vec<f64> = as_f64
        .iter()
        .map(|g| g.iter().sum::<f64>() / g.len() as f64)
        .collect();
    let grand = as_f64.iter().flatten().sum::<f64>() / n as f64;
    let ssb: f64 = as_f64
        .iter()
        .zip(&means)
        .map(|(g, m)| g.len() as f64 * (m - grand).powi(2))
        .sum();
    let ssw: f64 = as_f64
        .iter()
        .zip(&means)
        .map(|(g, m)| g.iter().map(|v| (v - m).powi(2)).sum::<f64>())
        .sum();
    let df_between = (groups.len() - 1) as f64;
    let df_within = (n - groups.len()) as f64;
    let (f, p, infinite) = if ssw > 0.0 {
        let f = (ssb / df_between) / (ssw / df_within);
        let x = df_within / (df_within + df_between * f);
        (f, beta_reg(df_within / 2.0, df_between / 2.0, x), false)
    } else if ssb > 0.0 {
        (f64::INFINITY, 0.0, true)
    } else {
        (0.0, 1.0, false)
    };
    Ok(AnovaResult {
        f,
        p,
        infinite,
        df_between,
        df_within,
        group_means: means,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow {
    pub feature: String,
    pub p: f64,
    pub f: f64,
    pub mean_star: f64,
    pub mean_others: f64,
}

/// Per-column two-group ANOVA (at-risk vs others) on `columns` of `rows`.
pub fn anova_table<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[bool],
    columns: &[usize],
    names: &[String],
) -> Result<Vec<AnovaRow>> {
    columns
        .iter()
        .map(|&c| {
            let (star, others): (Vec<T>, Vec<T>) = {
                let mut s = Vec::new();
                let mut o = Vec::new();
                for (r, &y) in rows.iter().zip(labels) {
                    if y {
                        s.push(r[c]);
                    } else {
                        o.push(r[c]);
                    }
                }
                (s, o)
            };
            let res = anova_f(&[&star, &others])?;
            Ok(AnovaRow {
                feature: names[c].clone(),
                p: res.p,
                f: res.f,
                mean_star: res.group_means[0],
                mean_others: res.group_means[1],
            })
        })
        .collect()
}

/// Columns whose two-group ANOVA p-value is below `alpha`.
pub fn screen_features<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[bool],
    columns: &[usize],
    alpha: f64,
) -> Result<Vec<usize>> {
    let names: Vec<String> = (0..rows.first().map_or(0, Vec::len)).map(|i| i.to_string()).collect();
    let table = anova_table(rows, labels, columns, &names)?;
    Ok(columns
        .iter()
        .zip(table)
        .filter(|(_, row)| row.p < alpha)
        .map(|(&c, _)| c)
        .collect())
}

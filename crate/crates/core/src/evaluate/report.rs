//! CSV writers for evaluation results.

use std::io::Write;

use super::ablation::MetricReport;
use super::anova::AnovaRow;
use crate::model::csv_err;
use crate::Result;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

/// One line per fold: `ablation,week,repeat,fold,auc,acc_star`.
/// Undefined metrics are left empty.
pub fn write_folds<W: Write>(reports: &[MetricReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["ablation", "week", "repeat", "fold", "auc", "acc_star"])
        .map_err(csv_err)?;
    for r in reports {
        for f in &r.folds {
            w.write_record([
                r.ablation.as_str().to_string(),
                r.week.to_string(),
                f.repeat.to_string(),
                f.fold.to_string(),
                opt(f.auc),
                opt(f.acc_star),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| csv_err(e.into()))?;
    Ok(())
}

/// One line per (ablation, week) with mean and sample sd across folds.
pub fn write_summary<W: Write>(reports: &[MetricReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "ablation",
        "week",
        "auc_mean",
        "auc_sd",
        "acc_star_mean",
        "acc_star_sd",
        "skipped_folds",
    ])
    .map_err(csv_err)?;
    for r in reports {
        w.write_record([
            r.ablation.as_str().to_string(),
            r.week.to_string(),
            format!("{:.6}", r.auc_mean),
            format!("{:.6}", r.auc_sd),
            format!("{:.6}", r.acc_star_mean),
            format!("{:.6}", r.acc_star_sd),
            r.skipped_folds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))?;
    Ok(())
}

pub fn write_anova<W: Write>(rows: &[AnovaRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["feature", "p", "F", "mean_star", "mean_others"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.feature.clone(),
            format!("{:.6e}", r.p),
            format!("{:.6}", r.f),
            format!("{:.6}", r.mean_star),
            format!("{:.6}", r.mean_others),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))?;
    Ok(())
}

/// Plain-text table in the style of a results table.
pub fn render_summary(reports: &[MetricReport]) -> String {
    let mut out = format!("{:<8} {:>4} {:>15} {:>15}\n", "model", "week", "AUC", "ACC_star");
    for r in reports {
        out.push_str(&format!(
            "{:<8} {:>4} {:>7.3} ± {:<5.3} {:>7.3} ± {:<5.3}\n",
            r.ablation.as_str(),
            r.week,
            r.auc_mean,
            r.auc_sd,
            r.acc_star_mean,
            r.acc_star_sd
        ));
    }
    out
}

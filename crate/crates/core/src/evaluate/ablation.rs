//! Feature-set ablations under repeated stratified cross-validation.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::anova::screen_features;
use super::cv::FoldPlan;
use super::metrics::{acc_star, auc, mean_sd, threshold};
use crate::augment::{balance, AugmentConfig, AugmentMethod, Standardizer};
use crate::classify::{fit, GbdtConfig, GbdtModel};
use crate::model::{BlockKind, FeatureTable};
use crate::{seed, Error, Result};

/// The ablation ladder, from statistical features alone to the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ablation {
    #[serde(rename = "SF")]
    Sf,
    #[serde(rename = "DA")]
    Da,
    #[serde(rename = "DA-Reg")]
    DaReg,
    #[serde(rename = "DA-SoH")]
    DaSoh,
    #[serde(rename = "EPARS")]
    Epars,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Sf,
        Ablation::Da,
        Ablation::DaReg,
        Ablation::DaSoh,
        Ablation::Epars,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Sf => "SF",
            Ablation::Da => "DA",
            Ablation::DaReg => "DA-Reg",
            Ablation::DaSoh => "DA-SoH",
            Ablation::Epars => "EPARS",
        }
    }

    pub fn spec(self) -> AblationSpec {
        use BlockKind::*;
        let (blocks, augment) = match self {
            Ablation::Sf => (vec![Statistical], false),
            Ablation::Da => (vec![Statistical], true),
            Ablation::DaReg => (vec![Statistical, Regularity], true),
            Ablation::DaSoh => (vec![Statistical, Embedding], true),
            Ablation::Epars => (vec![Statistical, Regularity, Embedding], true),
        };
        AblationSpec {
            name: self,
            blocks,
            augment,
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ablation::ALL
            .iter()
            .copied()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::validation(format!("unknown ablation {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AblationSpec {
    pub name: Ablation,
    pub blocks: Vec<BlockKind>,
    /// Balance the training folds with the configured augmentation.
    pub augment: bool,
}

/// Classifier, augmentation and decision settings shared by all folds.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub gbdt: GbdtConfig,
    pub augment: AugmentConfig,
    /// Probability at or above which a student is flagged.
    pub decision_threshold: f64,
    /// Statistical columns enter the model only when their training-fold
    /// ANOVA p-value is below this level.
    pub significance: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            gbdt: GbdtConfig::default(),
            augment: AugmentConfig::default(),
            decision_threshold: 0.5,
            significance: 0.05,
        }
    }
}

/// Everything one fold trains and tests on, in standardized space.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub columns: Vec<usize>,
    pub train_index: Vec<usize>,
    pub test_index: Vec<usize>,
    /// Positions of the training positives handed to the augmenter.
    pub minority_pool: Vec<usize>,
    pub standardizer: Standardizer<f64>,
    pub train_rows: Vec<Vec<f64>>,
    pub train_labels: Vec<bool>,
    pub test_rows: Vec<Vec<f64>>,
    pub test_labels: Vec<bool>,
}

fn select(rows: &[Vec<f64>], index: &[usize], columns: &[usize]) -> Vec<Vec<f64>> {
    index
        .iter()
        .map(|&i| columns.iter().map(|&c| rows[i][c]).collect())
        .collect()
}

fn check_alignment(table: &FeatureTable<f64>, plan: &FoldPlan) -> Result<()> {
    if table.students() != plan.students() {
        return Err(Error::validation(
            "feature table rows must follow the fold plan's student order",
        ));
    }
    Ok(())
}

fn job_seed(cfg: &EvalConfig, ablation: Ablation, job: u64) -> u64 {
    seed::stream_seed(seed::sub_seed(cfg.augment.rng_seed, ablation.as_str()), job)
}

type Prepared = (Vec<usize>, Standardizer<f64>, Vec<Vec<f64>>, Vec<bool>);

/// Column selection, standardization and balancing from the rows in
/// `train_index` only.
fn prepare(
    table: &FeatureTable<f64>,
    labels: &[bool],
    train_index: &[usize],
    spec: &AblationSpec,
    cfg: &EvalConfig,
    job: u64,
) -> Result<Prepared> {
    let rows = table.rows();
    let train_labels: Vec<bool> = train_index.iter().map(|&i| labels[i]).collect();
    let mut columns = Vec::new();
    for &kind in &spec.blocks {
        if table.block(kind).is_none() {
            return Err(Error::validation(format!(
                "{} needs the {} block, which the feature table lacks",
                spec.name,
                kind.prefix()
            )));
        }
        let block = table.columns_of(&[kind]);
        if kind == BlockKind::Statistical {
            let train: Vec<Vec<f64>> = train_index.iter().map(|&i| rows[i].clone()).collect();
            let kept = screen_features(&train, &train_labels, &block, cfg.significance)?;
            columns.extend(if kept.is_empty() { block } else { kept });
        } else {
            columns.extend(block);
        }
    }
    columns.sort_unstable();

    let raw_train = select(rows, train_index, &columns);
    let standardizer = Standardizer::fit(&raw_train);
    let train_std = standardizer.transform(&raw_train);
    let augment = if spec.augment {
        cfg.augment.clone()
    } else {
        AugmentConfig {
            method: AugmentMethod::None,
            ..cfg.augment.clone()
        }
    };
    let mut rng = seed::rng(job_seed(cfg, spec.name, job));
    let (balanced, balanced_labels) = balance(&train_std, &train_labels, &augment, &mut rng)?;
    Ok((columns, standardizer, balanced, balanced_labels))
}

/// Build one fold: screen statistical columns on the training rows,
/// standardize on the training rows, then balance the training rows only.
pub fn fold_data(
    table: &FeatureTable<f64>,
    spec: &AblationSpec,
    plan: &FoldPlan,
    repeat: usize,
    fold: usize,
    cfg: &EvalConfig,
) -> Result<FoldData> {
    check_alignment(table, plan)?;
    let (train_index, test_index) = plan.split(repeat, fold);
    let labels = plan.labels();
    let test_labels: Vec<bool> = test_index.iter().map(|&i| labels[i]).collect();
    let job = (repeat * 1_000 + fold) as u64;
    let (columns, standardizer, train_rows, train_labels) =
        prepare(table, labels, &train_index, spec, cfg, job)?;
    let test_rows = standardizer.transform(&select(table.rows(), &test_index, &columns));
    let minority_pool: Vec<usize> = train_index.iter().copied().filter(|&i| labels[i]).collect();
    Ok(FoldData {
        columns,
        train_index,
        test_index,
        minority_pool,
        standardizer,
        train_rows,
        train_labels,
        test_rows,
        test_labels,
    })
}

/// A model fitted on every labeled row, with what is needed to score new rows.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub ablation: Ablation,
    /// Names of the table columns the model reads, in input order.
    pub columns: Vec<String>,
    pub standardizer: Standardizer<f64>,
    pub model: GbdtModel<f64>,
}

impl TrainedModel {
    /// Probabilities for rows of a table with the same column names.
    pub fn predict(&self, table: &FeatureTable<f64>) -> Result<Vec<f64>> {
        let names = table.column_names();
        let idx = self
            .columns
            .iter()
            .map(|c| {
                names
                    .iter()
                    .position(|n| n == c)
                    .ok_or_else(|| Error::validation(format!("feature table lacks column {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let all: Vec<usize> = (0..table.len()).collect();
        let rows = self.standardizer.transform(&select(table.rows(), &all, &idx));
        self.model.predict_proba(&rows)
    }
}

/// Screen, standardize, balance and fit on all rows of `table`.
pub fn train_full(
    table: &FeatureTable<f64>,
    labels: &[bool],
    spec: &AblationSpec,
    cfg: &EvalConfig,
) -> Result<TrainedModel> {
    if labels.len() != table.len() {
        return Err(Error::validation("one label per table row required"));
    }
    let all: Vec<usize> = (0..table.len()).collect();
    let (columns, standardizer, rows, y) = prepare(table, labels, &all, spec, cfg, u64::MAX)?;
    let model = fit(&rows, &y, &cfg.gbdt)?;
    let names = table.column_names();
    Ok(TrainedModel {
        ablation: spec.name,
        columns: columns.iter().map(|&c| names[c].clone()).collect(),
        standardizer,
        model,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub repeat: usize,
    pub fold: usize,
    /// `None` when the test fold lacks one of the classes.
    pub auc: Option<f64>,
    /// `None` when the test fold has no positives.
    pub acc_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub ablation: Ablation,
    pub week: u32,
    pub folds: Vec<FoldRecord>,
    pub auc_mean: f64,
    pub auc_sd: f64,
    pub acc_star_mean: f64,
    pub acc_star_sd: f64,
    /// Per-repeat means of `(auc, acc_star)` over that repeat's folds.
    pub per_repeat: Vec<(f64, f64)>,
    pub skipped_folds: usize,
}

impl MetricReport {
    fn aggregate(ablation: Ablation, week: u32, n_repeats: usize, folds: Vec<FoldRecord>) -> Self {
        let aucs: Vec<f64> = folds.iter().filter_map(|f| f.auc).collect();
        let accs: Vec<f64> = folds.iter().filter_map(|f| f.acc_star).collect();
        let (auc_mean, auc_sd) = mean_sd(&aucs);
        let (acc_star_mean, acc_star_sd) = mean_sd(&accs);
        let per_repeat = (0..n_repeats)
            .map(|r| {
                let of = |get: fn(&FoldRecord) -> Option<f64>| {
                    let v: Vec<f64> = folds.iter().filter(|f| f.repeat == r).filter_map(get).collect();
                    mean_sd(&v).0
                };
                (of(|f| f.auc), of(|f| f.acc_star))
            })
            .collect();
        let skipped_folds = folds.iter().filter(|f| f.acc_star.is_none()).count();
        for f in folds.iter().filter(|f| f.acc_star.is_none()) {
            log::warn!(
                "{ablation} week {week}: repeat {} fold {} has no test positives; acc_star skipped",
                f.repeat,
                f.fold
            );
        }
        MetricReport {
            ablation,
            week,
            folds,
            auc_mean,
            auc_sd,
            acc_star_mean,
            acc_star_sd,
            per_repeat,
            skipped_folds,
        }
    }
}

fn run_fold(
    table: &FeatureTable<f64>,
    spec: &AblationSpec,
    plan: &FoldPlan,
    repeat: usize,
    fold: usize,
    cfg: &EvalConfig,
) -> Result<FoldRecord> {
    let data = fold_data(table, spec, plan, repeat, fold, cfg)?;
    let model = fit(&data.train_rows, &data.train_labels, &cfg.gbdt)?;
    let probs = model.predict_proba(&data.test_rows)?;
    let auc = match auc(&probs, &data.test_labels) {
        Ok(v) => Some(v),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    let flags = threshold(&probs, cfg.decision_threshold);
    let acc_star = match acc_star(&flags, &data.test_labels) {
        Ok(v) => Some(v),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(FoldRecord {
        repeat,
        fold,
        auc,
        acc_star,
    })
}

/// Cross-validate one ablation on a precomputed feature table. Fold jobs
/// run on the current rayon pool; results are reduced in job order.
pub fn run_ablation(
    table: &FeatureTable<f64>,
    spec: &AblationSpec,
    plan: &FoldPlan,
    cfg: &EvalConfig,
    week: u32,
) -> Result<MetricReport> {
    check_alignment(table, plan)?;
    let jobs: Vec<(usize, usize)> = (0..plan.n_repeats)
        .flat_map(|r| (0..plan.n_folds).map(move |f| (r, f)))
        .collect();
    let folds = jobs
        .par_iter()
        .map(|&(r, f)| run_fold(table, spec, plan, r, f, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::aggregate(spec.name, week, plan.n_repeats, folds))
}

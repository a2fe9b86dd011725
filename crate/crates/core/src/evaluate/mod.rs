//! Metrics, the ANOVA feature screen, stratified folds and the ablation harness.

pub mod ablation;
pub mod anova;
pub mod cv;
pub mod metrics;
pub mod report;

pub use ablation::{
    fold_data, run_ablation, train_full, Ablation, AblationSpec, EvalConfig, FoldData, FoldRecord, MetricReport,
    TrainedModel,
};
pub use anova::{anova_f, anova_table, screen_features, AnovaResult, AnovaRow};
pub use cv::FoldPlan;
pub use metrics::{acc_star, auc, mean_sd};

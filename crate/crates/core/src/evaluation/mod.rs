//! Metrics, ROC/AUROC, stratified folds and repeated cross-validation.

mod crossval;
mod folds;
mod metrics;
mod report;

pub use crossval::{
    cross_validate, AggregateReport, CrossValConfig, FoldMetrics, FoldResult,
    MetricSummary, RunResult, METRIC_NAMES,
};
pub use folds::{stratified_holdout, stratified_kfold};
pub use metrics::{confusion_metrics, f1_score, mean_std, roc_auroc, ConfusionMetrics, Roc};
pub use report::{
    emit_report, roc_points_csv, roc_svg, runs_csv, summary_csv, CONFIG_FILE, ROC_PLOT_FILE,
    ROC_POINTS_FILE, RUNS_FILE, SUMMARY_FILE,
};

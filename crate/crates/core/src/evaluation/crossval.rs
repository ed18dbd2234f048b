//! Repeated stratified k-fold cross-validation.
//!
//! Run `r` uses seed `seed + r` for a fresh fold split. Each fold trains on
//! the other `k - 1` folds minus a stratified validation holdout (used for
//! early stopping) and is scored on the held-out fold. Per-run metrics are
//! fold averages; the report aggregates runs as mean and population std.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{stratified_holdout, stratified_kfold};
use super::metrics::{confusion_metrics, mean_std, roc_auroc};
use crate::error::{Error, Result};
use crate::landmark::{Clip, Label};
use crate::neuralnet::{train, ModelConfig, TrainOptions, DECISION_THRESHOLD};
use crate::seed::derive_path;

pub const METRIC_NAMES: [&str; 5] = ["accuracy", "precision", "recall", "f1", "auroc"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossValConfig {
    /// Template; the seed is replaced per fold.
    pub model: ModelConfig,
    pub train: TrainOptions,
    pub folds: usize,
    pub runs: usize,
    pub seed: u64,
    pub validation_fraction: f64,
    /// Concurrent fold jobs; 0 uses the rayon default.
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auroc: f64,
}

impl FoldMetrics {
    pub fn values(&self) -> [f64; 5] {
        [self.accuracy, self.precision, self.recall, self.f1, self.auroc]
    }

    fn from_values(v: [f64; 5]) -> Self {
        FoldMetrics {
            accuracy: v[0],
            precision: v[1],
            recall: v[2],
            f1: v[3],
            auroc: v[4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub run: usize,
    pub fold: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub best_epoch: usize,
    pub epochs_trained: usize,
    pub metrics: FoldMetrics,
    /// Held-out clip ids with their scores and targets.
    pub predictions: Vec<(String, f64, u8)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    /// Fold-averaged metrics.
    pub metrics: FoldMetrics,
    /// ROC over the pooled held-out predictions of every fold.
    pub roc_points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub config: serde_json::Value,
    pub runs: Vec<RunResult>,
    pub summary: Vec<MetricSummary>,
}

impl AggregateReport {
    /// Builds the run-level aggregate from per-run results.
    pub fn from_runs(config: serde_json::Value, runs: Vec<RunResult>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::InvalidArgument("report has no runs".into()));
        }
        let summary = METRIC_NAMES
            .iter()
            .enumerate()
            .map(|(m, name)| {
                let values: Vec<f64> = runs.iter().map(|r| r.metrics.values()[m]).collect();
                let (mean, std) = mean_std(&values);
                MetricSummary {
                    metric: name.to_string(),
                    mean,
                    std,
                }
            })
            .collect();
        Ok(AggregateReport {
            config,
            runs,
            summary,
        })
    }

    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.summary.iter().find(|s| s.metric == name)
    }
}

fn score_fold(scores: &[f64], targets: &[u8]) -> Result<FoldMetrics> {
    let c = confusion_metrics(scores, targets, DECISION_THRESHOLD)?;
    let roc = roc_auroc(scores, targets)?;
    Ok(FoldMetrics {
        accuracy: c.accuracy,
        precision: c.precision,
        recall: c.recall,
        f1: c.f1,
        auroc: roc.auroc,
    })
}

fn run_fold(
    config: &CrossValConfig,
    clips: &[Clip],
    labels: &[Label],
    run: usize,
    fold: usize,
    folds: &[Vec<usize>],
) -> Result<FoldResult> {
    let run_seed = config.seed.wrapping_add(run as u64);
    let test_idx = &folds[fold];
    let rest: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(f, _)| *f != fold)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect();
    let (train_idx, val_idx) = stratified_holdout(
        labels,
        &rest,
        config.validation_fraction,
        derive_path(run_seed, &[fold as u64, 1]),
    );
    let pick = |idx: &[usize]| idx.iter().map(|&i| clips[i].clone()).collect::<Vec<_>>();
    let (train_set, val_set) = (pick(&train_idx), pick(&val_idx));

    let model_config = ModelConfig {
        seed: derive_path(run_seed, &[fold as u64, 2]),
        ..config.model.clone()
    };
    let (model, history) = train(&model_config, &config.train, &train_set, &val_set)?;

    let features = config.train.features;
    let mut predictions = Vec::with_capacity(test_idx.len());
    for &i in test_idx {
        let clip = &clips[i];
        let p = model.predict(clip, features.selection, features.interpolate)?;
        predictions.push((clip.clip_id.clone(), p, labels[i].target()));
    }
    let scores: Vec<f64> = predictions.iter().map(|p| p.1).collect();
    let targets: Vec<u8> = predictions.iter().map(|p| p.2).collect();
    Ok(FoldResult {
        run,
        fold,
        n_train: train_idx.len(),
        n_validation: val_idx.len(),
        n_test: test_idx.len(),
        best_epoch: history.best_epoch,
        epochs_trained: history.epochs.len(),
        metrics: score_fold(&scores, &targets)?,
        predictions,
    })
}

pub fn cross_validate(config: &CrossValConfig, clips: &[Clip]) -> Result<AggregateReport> {
    if config.runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let labels = clips
        .iter()
        .map(|c| {
            c.label
                .ok_or_else(|| Error::InvalidArgument(format!("clip {} has no label", c.clip_id)))
        })
        .collect::<Result<Vec<_>>>()?;

    let splits = (0..config.runs)
        .map(|run| stratified_kfold(&labels, config.folds, config.seed.wrapping_add(run as u64)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..config.runs)
        .flat_map(|r| (0..config.folds).map(move |f| (r, f)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<FoldResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(run, fold)| run_fold(config, clips, &labels, run, fold, &splits[run]))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut runs = Vec::with_capacity(config.runs);
    let mut results = results.into_iter().peekable();
    for run in 0..config.runs {
        let mut folds = Vec::with_capacity(config.folds);
        while let Some(fold) = results.next_if(|f| f.run == run) {
            folds.push(fold);
        }
        let per_fold: Vec<[f64; 5]> = folds.iter().map(|f| f.metrics.values()).collect();
        let averaged = std::array::from_fn(|m| {
            per_fold.iter().map(|v| v[m]).sum::<f64>() / per_fold.len() as f64
        });
        let scores: Vec<f64> = folds.iter().flat_map(|f| f.predictions.iter().map(|p| p.1)).collect();
        let targets: Vec<u8> = folds.iter().flat_map(|f| f.predictions.iter().map(|p| p.2)).collect();
        runs.push(RunResult {
            run,
            seed: config.seed.wrapping_add(run as u64),
            folds,
            metrics: FoldMetrics::from_values(averaged),
            roc_points: roc_auroc(&scores, &targets)?.points,
        });
    }

    let echo = serde_json::to_value(config).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    AggregateReport::from_runs(echo, runs)
}

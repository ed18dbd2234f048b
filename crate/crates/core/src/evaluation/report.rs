//! CSV/JSON/SVG report files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::crossval::{AggregateReport, METRIC_NAMES};
use crate::error::{Error, Result};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const ROC_POINTS_FILE: &str = "roc_points.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const ROC_PLOT_FILE: &str = "roc.svg";

fn write(path: PathBuf, contents: String) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn summary_csv(report: &AggregateReport) -> String {
    let mut out = String::from("metric,mean,std\n");
    for s in &report.summary {
        let _ = writeln!(out, "{},{},{}", s.metric, s.mean, s.std);
    }
    out
}

pub fn roc_points_csv(report: &AggregateReport) -> String {
    let mut out = String::from("run,fpr,tpr\n");
    for run in &report.runs {
        for (fpr, tpr) in &run.roc_points {
            let _ = writeln!(out, "{},{},{}", run.run, fpr, tpr);
        }
    }
    out
}

pub fn runs_csv(report: &AggregateReport) -> String {
    let mut out = format!("run,fold,n_test,{}\n", METRIC_NAMES.join(","));
    for run in &report.runs {
        for fold in &run.folds {
            let m = fold.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fold.run, fold.fold, fold.n_test, m.accuracy, m.precision, m.recall, m.f1, m.auroc
            );
        }
    }
    out
}

/// Linear interpolation of a monotone ROC polyline at `fpr`, taking the
/// highest TPR at vertical steps.
fn tpr_at(points: &[(f64, f64)], fpr: f64) -> f64 {
    let mut best: f64 = 0.0;
    for pair in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
        if fpr >= x0 && fpr <= x1 {
            let y = if x1 > x0 {
                y0 + (y1 - y0) * (fpr - x0) / (x1 - x0)
            } else {
                y1
            };
            best = best.max(y);
        }
    }
    best
}

/// Every run's ROC curve in grey and their pointwise mean in black.
pub fn roc_svg(report: &AggregateReport) -> String {
    const SIZE: f64 = 400.0;
    const MARGIN: f64 = 40.0;
    let map = |(fpr, tpr): (f64, f64)| (MARGIN + fpr * SIZE, MARGIN + (1.0 - tpr) * SIZE);
    let polyline = |points: &[(f64, f64)], style: &str| {
        let coords: Vec<String> = points
            .iter()
            .map(|&p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        format!("<polyline fill=\"none\" {style} points=\"{}\"/>\n", coords.join(" "))
    };

    let total = SIZE + 2.0 * MARGIN;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\" viewBox=\"0 0 {total} {total}\">\n"
    );
    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"#444\"/>"
    );
    svg.push_str(&polyline(&[(0.0, 0.0), (1.0, 1.0)], "stroke=\"#bbb\" stroke-dasharray=\"4 4\""));
    for run in &report.runs {
        svg.push_str(&polyline(&run.roc_points, "stroke=\"#999\" stroke-width=\"1\""));
    }
    let grid: Vec<(f64, f64)> = (0..=100)
        .map(|i| {
            let fpr = i as f64 / 100.0;
            let mean = report.runs.iter().map(|r| tpr_at(&r.roc_points, fpr)).sum::<f64>()
                / report.runs.len() as f64;
            (fpr, mean)
        })
        .collect();
    svg.push_str(&polyline(&grid, "stroke=\"#000\" stroke-width=\"2\""));
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">False positive rate</text>",
        MARGIN + SIZE / 2.0,
        total - 10.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 14 {})\">True positive rate</text>",
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Writes `summary.csv`, `roc_points.csv`, `runs.csv`, `config.json` and
/// `roc.svg` into `out_dir`, creating it if needed.
pub fn emit_report(report: &AggregateReport, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    if report.runs.is_empty() {
        return Err(Error::InvalidArgument("report has no runs".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let config = serde_json::to_string_pretty(&report.config)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(vec![
        write(out_dir.join(SUMMARY_FILE), summary_csv(report))?,
        write(out_dir.join(ROC_POINTS_FILE), roc_points_csv(report))?,
        write(out_dir.join(RUNS_FILE), runs_csv(report))?,
        write(out_dir.join(CONFIG_FILE), config + "\n")?,
        write(out_dir.join(ROC_PLOT_FILE), roc_svg(report))?,
    ])
}

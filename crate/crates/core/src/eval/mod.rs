//! Evaluation metrics, the baseline-plus-one ablation protocol and report
//! rendering.

mod metrics;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error as ThisError;

pub use metrics::{mae, mse, pearson, rank, spearman};

use crate::corpus::DatasetSplit;
use crate::features::{FeatureConfig, FeatureFamily, FeatureResources, Preset};
use crate::forest::ForestConfig;
use crate::pipeline::{train_and_score, EvalOn};
use crate::Error;

#[derive(Debug, ThisError)]
pub enum EvalError {
    #[error("prediction and gold lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, found {found}")]
    TooShort { needed: usize, found: usize },
    #[error("non-finite value in metric input")]
    NonFinite,
    #[error("nothing to render")]
    EmptyReport,
    #[error("duplicate report label `{0}`")]
    DuplicateLabel(String),
    #[error("candidate {0} is already part of the baseline feature set")]
    CandidateInBaseline(FeatureFamily),
    #[error("unknown report format `{0}` (expected markdown or csv)")]
    UnknownFormat(String),
}

/// The four scores reported for every model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
    /// `None` when either side has zero variance.
    pub pearson_r: Option<f64>,
    pub spearman_rho: Option<f64>,
}

/// MAE, MSE, Pearson and Spearman on the same pair. Correlations need at
/// least two items; with a single item they are reported as undefined.
pub fn evaluate(pred: &[f64], gold: &[f64]) -> Result<MetricsReport, EvalError> {
    let mae = mae(pred, gold)?;
    let mse = mse(pred, gold)?;
    let (pearson_r, spearman_rho) = if pred.len() >= 2 {
        (pearson(pred, gold)?, spearman(pred, gold)?)
    } else {
        (None, None)
    };
    Ok(MetricsReport { n: pred.len(), mae, mse, pearson_r, spearman_rho })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub label: String,
    pub report: MetricsReport,
}

/// Trains and scores one model per labelled feature configuration, all with
/// the same split and forest seed. Rows come back in input order.
pub fn run_comparison(
    split: &DatasetSplit,
    configs: &[(String, FeatureConfig)],
    forest: &ForestConfig,
    resources: &FeatureResources,
    eval_on: EvalOn,
) -> Result<Vec<AblationRow>, Error> {
    let mut seen = BTreeSet::new();
    for (label, _) in configs {
        if !seen.insert(label.as_str()) {
            return Err(EvalError::DuplicateLabel(label.clone()).into());
        }
    }
    configs
        .par_iter()
        .map(|(label, cfg)| {
            let (_, report) = train_and_score(split, cfg, forest, resources, eval_on)?;
            Ok(AblationRow { label: label.clone(), report })
        })
        .collect()
}

/// Row 0 is the baseline; row `i` adds candidate `i` to it.
pub fn run_ablation(
    split: &DatasetSplit,
    baseline: &FeatureConfig,
    candidates: &[FeatureFamily],
    forest: &ForestConfig,
    resources: &FeatureResources,
    eval_on: EvalOn,
) -> Result<Vec<AblationRow>, Error> {
    let mut configs = vec![(Preset::Baseline.label().to_string(), baseline.clone())];
    for &c in candidates {
        if baseline.has(c) {
            return Err(EvalError::CandidateInBaseline(c).into());
        }
        let mut cfg = baseline.clone();
        cfg.enabled.insert(c);
        configs.push((c.label().to_string(), cfg));
    }
    run_comparison(split, &configs, forest, resources, eval_on)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

/// Undefined correlations render as an em dash.
pub const UNDEFINED: &str = "—";

/// Three decimals, never `-0.000`.
pub fn fmt3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), fmt3)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Table with columns label, R, ρ, MAE, MSE.
pub fn render_report(rows: &[AblationRow], format: ReportFormat) -> Result<String, EvalError> {
    render_report_with_header(rows, format, "Features")
}

pub fn render_report_with_header(rows: &[AblationRow], format: ReportFormat, label_header: &str) -> Result<String, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    let mut out = String::new();
    match format {
        ReportFormat::Markdown => {
            let _ = writeln!(out, "| {} | R | ρ | MAE | MSE |", label_header);
            out.push_str("| --- | ---: | ---: | ---: | ---: |\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    r.label.replace('|', "\\|"),
                    fmt_opt(r.report.pearson_r),
                    fmt_opt(r.report.spearman_rho),
                    fmt3(r.report.mae),
                    fmt3(r.report.mse)
                );
            }
        }
        ReportFormat::Csv => {
            out.push_str("label,r,rho,mae,mse\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    csv_field(&r.label),
                    fmt_opt(r.report.pearson_r),
                    fmt_opt(r.report.spearman_rho),
                    fmt3(r.report.mae),
                    fmt3(r.report.mse)
                );
            }
        }
    }
    Ok(out)
}

//! CSV, Markdown, and curve renderings of an [`EvalReport`].

use std::fmt::Write as _;

use super::ablation::{EvalReport, ModelKind};
use super::metrics::Metric;
use crate::corpus::Budget;

fn num(v: f64) -> String {
    v.to_string()
}

/// Long summary: `model,speaker_config,tokens,metric,mean,sd`. The SD field
/// is empty for rows that were not cross-validated.
pub fn summary_csv(report: &EvalReport) -> String {
    let mut out = String::from("model,speaker_config,tokens,metric,mean,sd\n");
    for row in &report.rows {
        for metric in Metric::REPORTED {
            let (mean, sd) = row.summary(metric);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.model,
                row.config,
                row.budget,
                metric.name(),
                num(mean),
                sd.map(num).unwrap_or_default()
            );
        }
    }
    out
}

/// One line per (row, fold, metric); full-dataset rows use fold `all`.
pub fn per_fold_csv(report: &EvalReport) -> String {
    let mut out = String::from("model,speaker_config,tokens,fold,metric,value,excluded\n");
    for row in &report.rows {
        for (i, m) in row.folds.iter().enumerate() {
            let fold = if row.cross_validated {
                i.to_string()
            } else {
                "all".to_string()
            };
            for metric in Metric::ALL {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    row.model,
                    row.config,
                    row.budget,
                    fold,
                    metric.name(),
                    num(metric.of(m)),
                    row.excluded
                );
            }
        }
    }
    out
}

/// AUPRC against token budget: `model,tokens,config,auprc_mean,auprc_sd`.
pub fn curve_csv(report: &EvalReport) -> String {
    let mut rows: Vec<_> = report.rows.iter().collect();
    rows.sort_by_key(|r| (r.model, r.config, r.budget));
    let mut out = String::from("model,tokens,config,auprc_mean,auprc_sd\n");
    for row in rows {
        let (mean, sd) = row.summary(Metric::Auprc);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.model,
            row.budget,
            row.config,
            num(mean),
            sd.map(num).unwrap_or_default()
        );
    }
    out
}

fn cell_text(mean: f64, sd: Option<f64>) -> String {
    match sd {
        Some(sd) => format!("{mean:.3} ± {sd:.3}"),
        None => format!("{mean:.3}"),
    }
}

/// Model x configuration x budget table with `mean ± SD` columns, followed
/// by a footer of resolved settings.
pub fn markdown(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("| Model | Speaker Config | Tokens | AUPRC | AUROC | BA | Precision | Recall |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for row in &report.rows {
        let cells: Vec<String> = Metric::REPORTED
            .iter()
            .map(|&m| {
                let (mean, sd) = row.summary(m);
                cell_text(mean, sd)
            })
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            row.model,
            row.config,
            row.budget,
            cells.join(" | ")
        );
    }
    let supervised = report.rows.iter().any(|r| r.cross_validated);
    let zero_shot = report.rows.iter().any(|r| r.model == ModelKind::ZeroShot);
    out.push('\n');
    if supervised {
        out.push_str("Supervised rows: mean ± SD across cross-validation folds.\n");
    }
    if zero_shot {
        let _ = writeln!(
            out,
            "Zero-shot rows: full dataset at the F1-maximizing threshold; {} failed scores excluded.",
            report.total_excluded()
        );
    }
    out.push_str("\n---\n");
    for (k, v) in &report.footer {
        let _ = writeln!(out, "- {k}: {v}");
    }
    out
}

/// Budgets as they appear in the curve, smallest first, `full` last.
pub fn budgets_in(report: &EvalReport) -> Vec<Budget> {
    let mut b: Vec<Budget> = report.rows.iter().map(|r| r.budget).collect();
    b.sort();
    b.dedup();
    b
}

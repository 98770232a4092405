//! Threshold-free and thresholded binary classification metrics.
//!
//! Equal scores are always treated as one block: they enter the ranking
//! together, and pairs split by a tie earn half credit in AUROC.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub auprc: f64,
    pub auroc: f64,
    pub balanced_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Auprc,
    Auroc,
    BalancedAccuracy,
    Precision,
    Recall,
    F1,
    Threshold,
}

impl Metric {
    /// Metrics reported in summary tables.
    pub const REPORTED: [Metric; 5] = [
        Metric::Auprc,
        Metric::Auroc,
        Metric::BalancedAccuracy,
        Metric::Precision,
        Metric::Recall,
    ];

    pub const ALL: [Metric; 7] = [
        Metric::Auprc,
        Metric::Auroc,
        Metric::BalancedAccuracy,
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
        Metric::Threshold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Auprc => "auprc",
            Metric::Auroc => "auroc",
            Metric::BalancedAccuracy => "balanced_accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Threshold => "threshold",
        }
    }

    pub fn from_name(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn of(self, m: &MetricSet) -> f64 {
        match self {
            Metric::Auprc => m.auprc,
            Metric::Auroc => m.auroc,
            Metric::BalancedAccuracy => m.balanced_accuracy,
            Metric::Precision => m.precision,
            Metric::Recall => m.recall,
            Metric::F1 => m.f1,
            Metric::Threshold => m.threshold,
        }
    }

    pub fn set(self, m: &mut MetricSet, v: f64) {
        match self {
            Metric::Auprc => m.auprc = v,
            Metric::Auroc => m.auroc = v,
            Metric::BalancedAccuracy => m.balanced_accuracy = v,
            Metric::Precision => m.precision = v,
            Metric::Recall => m.recall = v,
            Metric::F1 => m.f1 = v,
            Metric::Threshold => m.threshold = v,
        }
    }
}

/// (score, positives, negatives) for each distinct score, highest first.
fn score_blocks(scores: &[f64], labels: &[Label]) -> Result<Vec<(f64, usize, usize)>, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFiniteScore(i));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut blocks: Vec<(f64, usize, usize)> = Vec::new();
    for i in idx {
        let pos = labels[i].is_positive();
        match blocks.last_mut() {
            Some(last) if last.0 == scores[i] => {
                if pos {
                    last.1 += 1
                } else {
                    last.2 += 1
                }
            }
            _ => blocks.push((scores[i], usize::from(pos), usize::from(!pos))),
        }
    }
    Ok(blocks)
}

fn class_counts(labels: &[Label]) -> (usize, usize) {
    let p = labels.iter().filter(|l| l.is_positive()).count();
    (p, labels.len() - p)
}

/// Probability that a random positive outscores a random negative, ties
/// counted as one half.
pub fn auroc(scores: &[f64], labels: &[Label]) -> Result<f64, EvalError> {
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass { n_pos, n_neg });
    }
    let blocks = score_blocks(scores, labels)?;
    // walk from the lowest score up, counting negatives strictly below
    let mut neg_below = 0usize;
    let mut twice_wins = 0u128;
    for &(_, p, n) in blocks.iter().rev() {
        twice_wins += (2 * p * neg_below + p * n) as u128;
        neg_below += n;
    }
    Ok(twice_wins as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Step-wise average precision: sum over score blocks of
/// (recall gained) * (precision at that block).
pub fn auprc(scores: &[f64], labels: &[Label]) -> Result<f64, EvalError> {
    let (n_pos, _) = class_counts(labels);
    if n_pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let blocks = score_blocks(scores, labels)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut ap = 0.0;
    for (_, p, n) in blocks {
        tp += p;
        fp += n;
        if p > 0 {
            ap += (p as f64 / n_pos as f64) * (tp as f64 / (tp + fp) as f64);
        }
    }
    Ok(ap)
}

/// Threshold over observed scores maximizing F1 of the rule `score >= t`.
/// Ties go to the smallest threshold.
pub fn f1_max_threshold(scores: &[f64], labels: &[Label]) -> Result<(f64, f64), EvalError> {
    let (n_pos, _) = class_counts(labels);
    if n_pos == 0 {
        return Err(EvalError::NoPositives);
    }
    let blocks = score_blocks(scores, labels)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best = (f64::NAN, -1.0);
    for (score, p, n) in blocks {
        tp += p;
        fp += n;
        let f1 = f1_score(tp, fp, n_pos - tp);
        if f1 >= best.1 {
            best = (score, f1);
        }
    }
    Ok(best)
}

fn f1_score(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholded {
    pub balanced_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Confusion-matrix metrics for predictions `score >= threshold`. Precision
/// with no predicted positives is 0.
pub fn thresholded_metrics(
    scores: &[f64],
    labels: &[Label],
    threshold: f64,
) -> Result<Thresholded, EvalError> {
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass { n_pos, n_neg });
    }
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    for (&s, l) in scores.iter().zip(labels) {
        if s >= threshold {
            if l.is_positive() {
                tp += 1
            } else {
                fp += 1
            }
        }
    }
    let tn = n_neg - fp;
    let recall = tp as f64 / n_pos as f64;
    let tnr = tn as f64 / n_neg as f64;
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    Ok(Thresholded {
        balanced_accuracy: (recall + tnr) / 2.0,
        precision,
        recall,
        f1: f1_score(tp, fp, n_pos - tp),
    })
}

/// All reported metrics for one set of scores, thresholded at the F1-max
/// threshold chosen on these same scores.
pub fn evaluate_scores(scores: &[f64], labels: &[Label]) -> Result<MetricSet, EvalError> {
    let auprc = auprc(scores, labels)?;
    let auroc = auroc(scores, labels)?;
    let (threshold, _) = f1_max_threshold(scores, labels)?;
    let t = thresholded_metrics(scores, labels, threshold)?;
    Ok(MetricSet {
        auprc,
        auroc,
        balanced_accuracy: t.balanced_accuracy,
        precision: t.precision,
        recall: t.recall,
        f1: t.f1,
        threshold,
    })
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for n < 2).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

use rayon::prelude::*;

use super::folds::{stratified_folds, FoldAssignment};
use super::metrics::{evaluate_scores, mean_sd, Metric, MetricSet};
use super::EvalError;
use crate::model::{fit, predict_proba, FeatureMatrix, LogRegConfig, TrainedModel};

/// Per-fold results of one cross-validated model.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub folds: Vec<MetricSet>,
    pub models: Vec<TrainedModel>,
}

impl CvOutcome {
    pub fn mean_sd(&self, metric: Metric) -> (f64, f64) {
        let v: Vec<f64> = self.folds.iter().map(|m| metric.of(m)).collect();
        mean_sd(&v)
    }
}

pub fn run_cv(
    data: &FeatureMatrix,
    k: usize,
    seed: u64,
    config: &LogRegConfig,
) -> Result<CvOutcome, EvalError> {
    let folds = stratified_folds(&data.labels, k, seed)?;
    run_cv_with_folds(data, &folds, config)
}

/// For each fold: fit standardizer and model on the training split, score
/// the held-out split, and compute metrics with the F1-max threshold chosen
/// on the held-out scores.
pub fn run_cv_with_folds(
    data: &FeatureMatrix,
    folds: &FoldAssignment,
    config: &LogRegConfig,
) -> Result<CvOutcome, EvalError> {
    if folds.fold_of.len() != data.n_rows() || data.labels.len() != data.n_rows() {
        return Err(EvalError::LengthMismatch {
            scores: data.n_rows(),
            labels: folds.fold_of.len(),
        });
    }
    let results: Vec<(MetricSet, TrainedModel)> = (0..folds.k)
        .into_par_iter()
        .map(|fold| {
            run_fold(data, folds, fold, config).map_err(|e| EvalError::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;
    let (metrics, models) = results.into_iter().unzip();
    Ok(CvOutcome {
        folds: metrics,
        models,
    })
}

fn run_fold(
    data: &FeatureMatrix,
    folds: &FoldAssignment,
    fold: usize,
    config: &LogRegConfig,
) -> Result<(MetricSet, TrainedModel), EvalError> {
    let train = data.subset(&folds.train_indices(fold));
    let test = data.subset(&folds.test_indices(fold));
    let model = fit(&train, config)?;
    let scores = predict_proba(&model, &test.rows)?;
    let metrics = evaluate_scores(&scores, &test.labels)?;
    Ok((metrics, model))
}

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::run_cv_with_folds;
use super::folds::{stratified_folds, FoldAssignment};
use super::metrics::{evaluate_scores, mean_sd, Metric, MetricSet};
use super::EvalError;
use crate::corpus::{Budget, Encounter, SpeakerConfig};
use crate::embedpool::{embedding_feature_matrix, ChunkVectors};
use crate::lexicon::{lexicon_feature_matrix, Lexicon};
use crate::model::LogRegConfig;
use crate::zeroshot::{ScoreRecord, ScoreStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "lexicon-lr")]
    LexiconLr,
    #[serde(rename = "embedding-lr")]
    EmbeddingLr,
    #[serde(rename = "zero-shot")]
    ZeroShot,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LexiconLr => "lexicon-lr",
            ModelKind::EmbeddingLr => "embedding-lr",
            ModelKind::ZeroShot => "zero-shot",
        }
    }

    pub fn is_supervised(self) -> bool {
        self != ModelKind::ZeroShot
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lexicon-lr" | "lexicon" => Ok(ModelKind::LexiconLr),
            "embedding-lr" | "embedding" => Ok(ModelKind::EmbeddingLr),
            "zero-shot" | "zeroshot" => Ok(ModelKind::ZeroShot),
            other => Err(format!(
                "unknown model '{other}' (expected lexicon-lr, embedding-lr or zero-shot)"
            )),
        }
    }
}

/// One (model, speaker configuration, token budget) combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub model: ModelKind,
    pub config: SpeakerConfig,
    pub budget: Budget,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.model, self.config, self.budget)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub models: Vec<ModelKind>,
    pub configs: Vec<SpeakerConfig>,
    pub budgets: Vec<Budget>,
}

impl Grid {
    /// Cells in model-major, then configuration, then budget order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &model in &self.models {
            for &config in &self.configs {
                for &budget in &self.budgets {
                    out.push(Cell {
                        model,
                        config,
                        budget,
                    });
                }
            }
        }
        out
    }
}

/// Everything a grid may need. Embeddings are keyed by speaker configuration
/// and cover untruncated documents; zero-shot scores are keyed per cell.
#[derive(Debug, Clone, Default)]
pub struct AblationInputs<'a> {
    pub encounters: &'a [Encounter],
    pub lexicon: Option<&'a Lexicon>,
    pub embeddings: BTreeMap<SpeakerConfig, ChunkVectors>,
    pub chunk_size: usize,
    pub scores: BTreeMap<(SpeakerConfig, Budget), Vec<ScoreRecord>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationSettings {
    pub k: usize,
    pub seed: u64,
    pub logreg: LogRegConfig,
}

impl Default for AblationSettings {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            logreg: LogRegConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: ModelKind,
    pub config: SpeakerConfig,
    pub budget: Budget,
    /// One entry per fold, or a single full-dataset entry when not
    /// cross-validated.
    pub folds: Vec<MetricSet>,
    pub cross_validated: bool,
    /// Records left out of the metrics (failed zero-shot scores).
    pub excluded: usize,
}

impl ReportRow {
    pub fn cell(&self) -> Cell {
        Cell {
            model: self.model,
            config: self.config,
            budget: self.budget,
        }
    }

    /// Mean over folds and, for cross-validated rows, the sample SD.
    pub fn summary(&self, metric: Metric) -> (f64, Option<f64>) {
        let v: Vec<f64> = self.folds.iter().map(|m| metric.of(m)).collect();
        let (mean, sd) = mean_sd(&v);
        (mean, self.cross_validated.then_some(sd))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    /// Resolved settings, rendered as the report footer.
    pub footer: Vec<(String, String)>,
}

impl EvalReport {
    pub fn row(&self, model: ModelKind, config: SpeakerConfig, budget: Budget) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.config == config && r.budget == budget)
    }

    pub fn total_excluded(&self) -> usize {
        self.rows.iter().map(|r| r.excluded).sum()
    }
}

/// Full-dataset metrics for zero-shot scores. Failed records are excluded
/// and counted; an encounter with no record at all is an error.
pub fn zeroshot_metrics(
    encounters: &[Encounter],
    records: &[ScoreRecord],
) -> Result<(MetricSet, usize), EvalError> {
    let by_id: HashMap<&str, &ScoreRecord> =
        records.iter().map(|r| (r.encounter_id.as_str(), r)).collect();
    let mut scores = Vec::with_capacity(encounters.len());
    let mut labels = Vec::with_capacity(encounters.len());
    let mut excluded = 0;
    for e in encounters {
        let rec = by_id
            .get(e.id.as_str())
            .ok_or_else(|| EvalError::MissingScore(e.id.clone()))?;
        match (rec.status, rec.score) {
            (ScoreStatus::Failed, _) | (_, None) => excluded += 1,
            (_, Some(s)) => {
                scores.push(s);
                labels.push(e.label());
            }
        }
    }
    Ok((evaluate_scores(&scores, &labels)?, excluded))
}

fn run_cell(
    cell: Cell,
    inputs: &AblationInputs<'_>,
    folds: Option<&FoldAssignment>,
    settings: &AblationSettings,
) -> Result<ReportRow, EvalError> {
    let encounters = inputs.encounters;
    let cv_row = |matrix| -> Result<ReportRow, EvalError> {
        let folds = folds.expect("folds exist when a supervised model is in the grid");
        let outcome = run_cv_with_folds(&matrix, folds, &settings.logreg)?;
        Ok(ReportRow {
            model: cell.model,
            config: cell.config,
            budget: cell.budget,
            folds: outcome.folds,
            cross_validated: true,
            excluded: 0,
        })
    };
    match cell.model {
        ModelKind::LexiconLr => {
            let lexicon = inputs.lexicon.ok_or(EvalError::MissingLexicon)?;
            cv_row(lexicon_feature_matrix(
                encounters,
                lexicon,
                cell.config,
                cell.budget,
            ))
        }
        ModelKind::EmbeddingLr => {
            let vectors = inputs
                .embeddings
                .get(&cell.config)
                .ok_or_else(|| EvalError::MissingEmbeddings(cell.to_string()))?;
            let matrix = embedding_feature_matrix(
                encounters,
                vectors,
                cell.config,
                cell.budget,
                inputs.chunk_size,
            )?;
            cv_row(matrix)
        }
        ModelKind::ZeroShot => {
            let records = inputs
                .scores
                .get(&(cell.config, cell.budget))
                .ok_or_else(|| EvalError::MissingScores(cell.to_string()))?;
            let (metrics, excluded) = zeroshot_metrics(encounters, records)?;
            Ok(ReportRow {
                model: cell.model,
                config: cell.config,
                budget: cell.budget,
                folds: vec![metrics],
                cross_validated: false,
                excluded,
            })
        }
    }
}

/// Evaluates every grid cell. Supervised cells share one fold assignment so
/// their results are paired.
pub fn run_ablation(
    inputs: &AblationInputs<'_>,
    grid: &Grid,
    settings: &AblationSettings,
) -> Result<EvalReport, EvalError> {
    let cells = grid.cells();
    let labels: Vec<_> = inputs.encounters.iter().map(|e| e.label()).collect();
    let folds = if cells.iter().any(|c| c.model.is_supervised()) {
        Some(stratified_folds(&labels, settings.k, settings.seed)?)
    } else {
        None
    };
    let rows: Vec<ReportRow> = cells
        .par_iter()
        .map(|&cell| {
            run_cell(cell, inputs, folds.as_ref(), settings).map_err(|e| EvalError::Cell {
                cell: cell.to_string(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_, _>>()?;

    let mut footer = vec![
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("seed".to_string(), settings.seed.to_string()),
        ("k".to_string(), settings.k.to_string()),
        ("C".to_string(), settings.logreg.c.to_string()),
        ("tol".to_string(), settings.logreg.tol.to_string()),
        ("max_iter".to_string(), settings.logreg.max_iter.to_string()),
        ("n_encounters".to_string(), inputs.encounters.len().to_string()),
    ];
    if grid.models.contains(&ModelKind::EmbeddingLr) {
        footer.push(("chunk_size".to_string(), inputs.chunk_size.to_string()));
    }
    if grid.models.contains(&ModelKind::ZeroShot) {
        footer.push((
            "prompt_version".to_string(),
            crate::zeroshot::PROMPT_VERSION.to_string(),
        ));
        let excluded: usize = rows.iter().map(|r| r.excluded).sum();
        footer.push(("zero_shot_excluded".to_string(), format!("{excluded} excluded")));
    }
    footer.push((
        "threshold".to_string(),
        "F1-max threshold chosen on each fold's held-out scores (optimistic)".to_string(),
    ));
    Ok(EvalReport { rows, footer })
}

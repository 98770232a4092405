//! Cross-validation, metrics, and the speaker-configuration x token-budget
//! ablation grid.

mod ablation;
mod cv;
mod folds;
pub mod metrics;
pub mod report;

use thiserror::Error;

pub use ablation::{
    run_ablation, zeroshot_metrics, AblationInputs, AblationSettings, Cell, EvalReport, Grid,
    ModelKind, ReportRow,
};
pub use cv::{run_cv, run_cv_with_folds, CvOutcome};
pub use folds::{stratified_folds, FoldAssignment};
pub use metrics::{
    auprc, auroc, evaluate_scores, f1_max_threshold, mean_sd, thresholded_metrics, Metric,
    MetricSet, Thresholded,
};

use crate::embedpool::EmbedError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("metric needs both classes, got {n_pos} positive and {n_neg} negative")]
    SingleClass { n_pos: usize, n_neg: usize },
    #[error("metric needs at least one positive")]
    NoPositives,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("non-finite score at index {0}")]
    NonFiniteScore(usize),
    #[error("invalid fold count k={k} for n={n} (need 2 <= k <= n)")]
    BadK { k: usize, n: usize },
    #[error("training split for fold {fold} of {k} has a single class; use a smaller k")]
    SingleClassTrainingSplit { fold: usize, k: usize },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<EvalError>,
    },
    #[error("cell {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<EvalError>,
    },
    #[error("no embeddings supplied for cell {0}")]
    MissingEmbeddings(String),
    #[error("no zero-shot scores supplied for cell {0}")]
    MissingScores(String),
    #[error("no zero-shot score record for encounter '{0}'")]
    MissingScore(String),
    #[error("lexicon model requested but no lexicon supplied")]
    MissingLexicon,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

use thiserror::Error;

use crate::{corpus, embedpool, eval, lexicon, model, stats, synth, zeroshot};

/// Crate-level error; every variant names the module that raised it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus: {0}")]
    Corpus(#[from] corpus::CorpusError),
    #[error("lexicon: {0}")]
    Lexicon(#[from] lexicon::LexiconError),
    #[error("embedpool: {0}")]
    Embed(#[from] embedpool::EmbedError),
    #[error("model: {0}")]
    Model(#[from] model::ModelError),
    #[error("eval: {0}")]
    Eval(#[from] eval::EvalError),
    #[error("stats: {0}")]
    Stats(#[from] stats::StatsError),
    #[error("zeroshot: {0}")]
    ZeroShot(#[from] zeroshot::ZeroShotError),
    #[error("synth: {0}")]
    Synth(#[from] synth::SynthError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

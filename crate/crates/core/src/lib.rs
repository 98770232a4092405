//! Depression screening over diarized clinician-patient transcripts.
//!
//! The pipeline runs from transcript JSONL through speaker-filtered,
//! optionally truncated documents to two feature families (lexicon
//! percentages and mean-pooled chunk embeddings). Those features feed a
//! class-weighted logistic regression evaluated under stratified k-fold
//! cross-validation. A zero-shot LLM scorer is evaluated beside it on the
//! full dataset. [`synth`] generates corpora with known effects so the whole
//! path can be checked without access to clinical data.

pub mod corpus;
pub mod embedpool;
pub mod eval;
pub mod lexicon;
pub mod model;
pub mod stats;
pub mod synth;
pub mod zeroshot;

mod error;

pub use error::{Error, Result};

//! Lexical complexity prediction.
//!
//! A feature-engineered random-forest pipeline for scoring how difficult an
//! English target word is in context, on a `[0, 1]` scale:
//!
//! - [`corpus`]: CompLex-style TSV datasets, seeded train/dev splits, Likert bands
//! - [`lexicons`]: word-level psycholinguistic resources and their merging
//! - [`features`]: statistical, n-gram, lexicon and POS feature extraction
//! - [`forest`]: CART regression forest and its text model format
//! - [`eval`]: MAE, MSE, Pearson, Spearman, ablation runs and reports
//! - [`pipeline`]: train/predict/score glue used by the CLI and the ablation

pub mod corpus;
pub mod eval;
pub mod features;
pub mod forest;
pub mod lexicons;
pub mod pipeline;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Lexicon(#[from] lexicons::LexiconError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Forest(#[from] forest::ForestError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
    #[error("instance {0} has no gold complexity")]
    MissingGold(String),
    #[error("no instances to evaluate on")]
    EmptyEvaluation,
}

use std::path::Path;

use lcp_core::corpus::CorpusError;
use lcp_core::eval::EvalError;
use lcp_core::features::FeatureError;
use lcp_core::forest::ForestError;
use thiserror::Error;

/// Command failure, classified by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config values, inconsistent options.
    #[error("{0}")]
    Usage(String),
    /// Problems with the instances being trained on, predicted or scored.
    #[error("{0}")]
    Data(String),
    /// Problems with lexicons, taggers, model files and other artifacts.
    #[error("{0}")]
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Resource(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn data_io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }

    pub fn resource_io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Resource(format!("{}: {err}", path.display()))
    }
}

impl From<lcp_core::Error> for CliError {
    fn from(err: lcp_core::Error) -> Self {
        use lcp_core::Error as E;
        let msg = err.to_string();
        match err {
            E::Corpus(_) | E::MissingGold(_) | E::EmptyEvaluation => CliError::Data(msg),
            E::Lexicon(_) => CliError::Resource(msg),
            E::Feature(e) => e.into(),
            E::Forest(e) => e.into(),
            E::Eval(e) => e.into(),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<lcp_core::lexicons::LexiconError> for CliError {
    fn from(err: lcp_core::lexicons::LexiconError) -> Self {
        CliError::Resource(err.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(err: FeatureError) -> Self {
        use FeatureError as F;
        let msg = err.to_string();
        match err {
            F::MissingResource { .. } | F::ZeroCoverage(_) | F::TagLexicon(_) => CliError::Resource(msg),
            F::EmptyWord | F::EmptyTraining => CliError::Data(msg),
            F::BadNgramOrder(_)
            | F::UnknownFamily(_)
            | F::UnknownPreset(_)
            | F::UnknownFrequencySource(_)
            | F::NothingEnabled
            | F::BadMinCount => CliError::Usage(msg),
        }
    }
}

impl From<ForestError> for CliError {
    fn from(err: ForestError) -> Self {
        use ForestError as F;
        let msg = err.to_string();
        match err {
            F::BadConfig(_) => CliError::Usage(msg),
            F::FingerprintMismatch | F::ColumnCount(..) | F::Format(_) | F::Version { .. } | F::Io(_) => {
                CliError::Resource(msg)
            }
            _ => CliError::Data(msg),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(err: EvalError) -> Self {
        use EvalError as E;
        let msg = err.to_string();
        match err {
            E::UnknownFormat(_) | E::DuplicateLabel(_) | E::CandidateInBaseline(_) => CliError::Usage(msg),
            _ => CliError::Data(msg),
        }
    }
}

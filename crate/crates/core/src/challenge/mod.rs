//! Continuation-prediction challenge: a pluggable sequence-model interface,
//! question construction, scoring, and baseline models.
//!
//! Models work on dense token ids of a [`Vocabulary`](crate::tokenizer::Vocabulary).

pub mod external;
pub mod generate;
pub mod models;
pub mod ngram;
pub mod questions;

use thiserror::Error;

pub use external::ExternalModel;
pub use generate::{generate_tokens, Generation, GenerationConfig};
pub use models::{OracleModel, UniformModel};
pub use ngram::{NGramConfig, NGramModel};
pub use questions::{
    answer_question, build_questions, pick_answer, run_challenge, score_continuation, Answer, ChallengeQuestion,
    ChallengeReport, ScoringMode, BARS_PER_SEGMENT,
};

/// Allowed deviation of a distribution's total from 1.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("distribution has {got} entries, vocabulary has {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("distribution entry {index} is {value}")]
    BadProbability { index: usize, value: f64 },
    #[error("distribution sums to {0}")]
    NotNormalized(f64),
    #[error("token id {id} outside vocabulary of {size}")]
    TokenOutOfRange { id: u32, size: usize },
    #[error("model protocol: {0}")]
    Protocol(String),
    #[error("model io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChallengeError {
    #[error("need at least {needed} pieces with {bars}+ bars, found {found}")]
    TooFewPieces { needed: usize, bars: usize, found: usize },
    #[error("could not draw pairwise distinct candidates for question {0}")]
    NoDistinctCandidates(usize),
    #[error("empty candidate")]
    EmptyCandidate,
    #[error("no questions to answer")]
    NoQuestions,
    #[error("temperature {0} must be positive and finite")]
    BadTemperature(f64),
    #[error("length cap of {0} tokens reached before the first Bar token")]
    CapBeforeFirstBar(usize),
    #[error("n-gram order must be at least 1")]
    BadOrder,
    #[error("smoothing constant {0} must be positive and finite")]
    BadAlpha(f64),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("saved model: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// An autoregressive model over token ids.
pub trait SequenceModel: Sync {
    fn vocab_size(&self) -> usize;

    /// Probability of every id as the next token after `history`.
    fn next_token_distribution(&self, history: &[u32]) -> Result<Vec<f64>, ModelError>;

    /// Probability of one id; models may override with a cheaper lookup.
    fn token_probability(&self, history: &[u32], token: u32) -> Result<f64, ModelError> {
        let dist = checked_distribution(self, history)?;
        dist.get(token as usize).copied().ok_or(ModelError::TokenOutOfRange { id: token, size: dist.len() })
    }
}

/// Calls the model and rejects anything that is not a probability vector
/// over the vocabulary.
pub fn checked_distribution<M: SequenceModel + ?Sized>(model: &M, history: &[u32]) -> Result<Vec<f64>, ModelError> {
    let dist = model.next_token_distribution(history)?;
    check_distribution(&dist, model.vocab_size())?;
    Ok(dist)
}

pub fn check_distribution(dist: &[f64], vocab_size: usize) -> Result<(), ModelError> {
    if dist.len() != vocab_size {
        return Err(ModelError::WrongLength { got: dist.len(), expected: vocab_size });
    }
    if let Some((index, &value)) = dist.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
        return Err(ModelError::BadProbability { index, value });
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(ModelError::NotNormalized(sum));
    }
    Ok(())
}

impl<M: SequenceModel + ?Sized> SequenceModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn next_token_distribution(&self, history: &[u32]) -> Result<Vec<f64>, ModelError> {
        (**self).next_token_distribution(history)
    }

    fn token_probability(&self, history: &[u32], token: u32) -> Result<f64, ModelError> {
        (**self).token_probability(history, token)
    }
}

impl<M: SequenceModel + ?Sized> SequenceModel for Box<M> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn next_token_distribution(&self, history: &[u32]) -> Result<Vec<f64>, ModelError> {
        (**self).next_token_distribution(history)
    }

    fn token_probability(&self, history: &[u32], token: u32) -> Result<f64, ModelError> {
        (**self).token_probability(history, token)
    }
}

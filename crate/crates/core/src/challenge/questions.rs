//! Question construction and scoring by mean token probability.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{checked_distribution, ChallengeError, ModelError, SequenceModel};

/// Length of prompts and continuations, counted in Bar tokens.
pub const BARS_PER_SEGMENT: usize = 8;
pub const CANDIDATES: usize = 4;
const MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeQuestion {
    pub id: usize,
    /// Corpus index of the piece the prompt comes from.
    pub source: usize,
    /// Bar of `source` at which the prompt starts.
    pub start_bar: usize,
    pub prompt: Vec<u32>,
    pub candidates: Vec<Vec<u32>>,
    pub true_index: usize,
}

impl ChallengeQuestion {
    /// Length of the shortest candidate; every candidate is scored on this
    /// many tokens.
    pub fn continuation_length(&self) -> usize {
        self.candidates.iter().map(Vec::len).min().unwrap_or(0)
    }
}

fn bar_starts(piece: &[u32], bar_id: u32) -> Vec<usize> {
    piece.iter().enumerate().filter(|(_, &t)| t == bar_id).map(|(i, _)| i).collect()
}

fn bars_slice<'a>(piece: &'a [u32], starts: &[usize], bar: usize, count: usize) -> &'a [u32] {
    let end = starts.get(bar + count).copied().unwrap_or(piece.len());
    &piece[starts[bar]..end]
}

/// Draws `count` questions: an 8-bar prompt, its true 8-bar continuation,
/// and three 8-bar distractors from three other pieces. Only pieces with at
/// least 16 bars take part. Deterministic in `seed`.
pub fn build_questions(
    corpus: &[Vec<u32>],
    bar_id: u32,
    count: usize,
    seed: u64,
) -> Result<Vec<ChallengeQuestion>, ChallengeError> {
    let needed_bars = 2 * BARS_PER_SEGMENT;
    let starts: Vec<Vec<usize>> = corpus.iter().map(|p| bar_starts(p, bar_id)).collect();
    let eligible: Vec<usize> = (0..corpus.len()).filter(|&i| starts[i].len() >= needed_bars).collect();
    if eligible.len() < CANDIDATES {
        return Err(ChallengeError::TooFewPieces { needed: CANDIDATES, bars: needed_bars, found: eligible.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut questions = Vec::with_capacity(count);
    for id in 0..count {
        let question = (0..MAX_ATTEMPTS).find_map(|_| {
            let source = eligible[rng.random_range(0..eligible.len())];
            let s = &starts[source];
            let start_bar = rng.random_range(0..=s.len() - needed_bars);
            let prompt = bars_slice(&corpus[source], s, start_bar, BARS_PER_SEGMENT).to_vec();
            let truth = bars_slice(&corpus[source], s, start_bar + BARS_PER_SEGMENT, BARS_PER_SEGMENT).to_vec();
            let others: Vec<usize> = eligible.iter().copied().filter(|&p| p != source).collect();
            let mut candidates: Vec<Vec<u32>> = sample(&mut rng, others.len(), CANDIDATES - 1)
                .into_iter()
                .map(|k| {
                    let p = others[k];
                    let bar = rng.random_range(0..=starts[p].len() - BARS_PER_SEGMENT);
                    bars_slice(&corpus[p], &starts[p], bar, BARS_PER_SEGMENT).to_vec()
                })
                .collect();
            let true_index = rng.random_range(0..CANDIDATES);
            candidates.insert(true_index, truth);
            let q = ChallengeQuestion { id, source, start_bar, prompt, candidates, true_index };
            let l = q.continuation_length();
            let distinct =
                (0..CANDIDATES).all(|i| (i + 1..CANDIDATES).all(|j| q.candidates[i][..l] != q.candidates[j][..l]));
            (l > 0 && distinct).then_some(q)
        });
        questions.push(question.ok_or(ChallengeError::NoDistinctCandidates(id))?);
    }
    Ok(questions)
}

/// How earlier continuation tokens are conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoringMode {
    /// Condition on the candidate's own earlier tokens.
    TeacherForced,
    /// Condition on tokens sampled from the model itself.
    Sampled { seed: u64 },
}

/// Mean probability of the first `length` tokens of `candidate` following
/// `prompt`.
pub fn score_continuation<M: SequenceModel + ?Sized>(
    model: &M,
    prompt: &[u32],
    candidate: &[u32],
    length: usize,
    mode: ScoringMode,
) -> Result<f64, ChallengeError> {
    let candidate = &candidate[..length.min(candidate.len())];
    if candidate.is_empty() {
        return Err(ChallengeError::EmptyCandidate);
    }
    let mut history = Vec::with_capacity(prompt.len() + candidate.len());
    history.extend_from_slice(prompt);
    let mut total = 0.0;
    match mode {
        ScoringMode::TeacherForced => {
            for &token in candidate {
                total += model.token_probability(&history, token)?;
                history.push(token);
            }
        }
        ScoringMode::Sampled { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for &token in candidate {
                let dist = checked_distribution(model, &history)?;
                total +=
                    *dist.get(token as usize).ok_or(ModelError::TokenOutOfRange { id: token, size: dist.len() })?;
                let pick = WeightedIndex::new(&dist).map_err(|e| ModelError::Protocol(e.to_string()))?;
                history.push(pick.sample(&mut rng) as u32);
            }
        }
    }
    Ok(total / candidate.len() as f64)
}

/// Index of the largest value; the lowest index wins ties.
pub fn pick_answer(probabilities: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub question_id: usize,
    pub probabilities: Vec<f64>,
    pub chosen: usize,
    pub true_index: usize,
    pub correct: bool,
}

fn candidate_seed(seed: u64, question: usize, candidate: usize) -> u64 {
    seed ^ ((question * CANDIDATES + candidate) as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn answer_question<M: SequenceModel + ?Sized>(
    model: &M,
    question: &ChallengeQuestion,
    mode: ScoringMode,
) -> Result<Answer, ChallengeError> {
    let length = question.continuation_length();
    let probabilities = question
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mode = match mode {
                ScoringMode::Sampled { seed } => ScoringMode::Sampled { seed: candidate_seed(seed, question.id, i) },
                m => m,
            };
            score_continuation(model, &question.prompt, c, length, mode)
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let chosen = pick_answer(&probabilities);
    Ok(Answer {
        question_id: question.id,
        probabilities,
        chosen,
        true_index: question.true_index,
        correct: chosen == question.true_index,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChallengeReport {
    pub accuracy: f64,
    pub correct: usize,
    /// One entry per question, in question order.
    pub answers: Vec<Answer>,
}

/// Answers every question (in parallel) and reports the fraction correct.
pub fn run_challenge<M: SequenceModel + ?Sized>(
    model: &M,
    questions: &[ChallengeQuestion],
    mode: ScoringMode,
) -> Result<ChallengeReport, ChallengeError> {
    if questions.is_empty() {
        return Err(ChallengeError::NoQuestions);
    }
    let answers: Vec<Answer> =
        questions.par_iter().map(|q| answer_question(model, q, mode)).collect::<Result<_, _>>()?;
    let correct = answers.iter().filter(|a| a.correct).count();
    Ok(ChallengeReport { accuracy: correct as f64 / answers.len() as f64, correct, answers })
}

//! Autoregressive sampling of token streams.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{checked_distribution, ChallengeError, ModelError, SequenceModel};
use crate::tokenizer::codec::repair_tokens;
use crate::tokenizer::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationConfig {
    /// Stop before the Bar token that would open bar `target_bars + 1`.
    pub target_bars: usize,
    pub temperature: f64,
    pub seed: u64,
    /// Hard cap on the raw sequence length, primer included.
    pub max_tokens: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self { target_bars: 32, temperature: 1.0, seed: 0, max_tokens: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    /// Grammar-valid ids (primer included).
    pub ids: Vec<u32>,
    /// Ids produced before repair.
    pub raw_len: usize,
    /// Tokens removed by the repair pass.
    pub dropped: usize,
    pub bars: usize,
    /// True if sampling stopped at `max_tokens`.
    pub hit_cap: bool,
}

/// `p^(1/T)` renormalized, computed relative to the largest entry so that
/// small temperatures approach argmax without underflow.
fn temper(dist: &[f64], temperature: f64) -> Vec<f64> {
    let max = dist.iter().copied().fold(0.0, f64::max);
    dist.iter().map(|&p| if p > 0.0 { ((p.ln() - max.ln()) / temperature).exp() } else { 0.0 }).collect()
}

pub fn generate_tokens<M: SequenceModel + ?Sized>(
    model: &M,
    vocab: &Vocabulary,
    primer: &[u32],
    config: &GenerationConfig,
) -> Result<Generation, ChallengeError> {
    if !(config.temperature > 0.0 && config.temperature.is_finite()) {
        return Err(ChallengeError::BadTemperature(config.temperature));
    }
    let bar = vocab.bar_id();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ids = primer.to_vec();
    let mut bars = ids.iter().filter(|&&t| t == bar).count();
    let mut hit_cap = false;
    loop {
        if ids.len() >= config.max_tokens {
            hit_cap = true;
            break;
        }
        let dist = checked_distribution(model, &ids)?;
        let weights = temper(&dist, config.temperature);
        let pick = WeightedIndex::new(&weights).map_err(|e| ModelError::Protocol(e.to_string()))?;
        let token = pick.sample(&mut rng) as u32;
        if token == bar {
            if bars >= config.target_bars {
                break;
            }
            bars += 1;
        }
        ids.push(token);
    }
    if hit_cap && bars == 0 {
        return Err(ChallengeError::CapBeforeFirstBar(config.max_tokens));
    }
    let raw_len = ids.len();
    let tokens = vocab.tokens(&ids).map_err(|id| ModelError::TokenOutOfRange { id, size: vocab.len() })?;
    let repaired = repair_tokens(&tokens);
    let ids = vocab.ids(&repaired).expect("repaired tokens come from the vocabulary");
    Ok(Generation { dropped: raw_len - ids.len(), ids, raw_len, bars, hit_cap })
}

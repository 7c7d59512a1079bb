//! Reference models: uniform (optionally jittered) and an oracle that knows
//! the source pieces.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelError, SequenceModel};

/// `1/V` for every token. With jitter, each history gets a tiny seeded
/// perturbation so that candidate scores never tie exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformModel {
    vocab_size: usize,
    jitter: Option<u64>,
}

/// Relative size of the jitter perturbation.
const JITTER: f64 = 1e-6;

impl UniformModel {
    pub fn new(vocab_size: usize) -> Self {
        Self { vocab_size, jitter: None }
    }

    pub fn with_jitter(vocab_size: usize, seed: u64) -> Self {
        Self { vocab_size, jitter: Some(seed) }
    }
}

/// FNV-1a over the history, mixed with `seed`; stable across platforms.
fn history_hash(seed: u64, history: &[u32]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed;
    for &id in history {
        for b in id.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl SequenceModel for UniformModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_token_distribution(&self, history: &[u32]) -> Result<Vec<f64>, ModelError> {
        let v = self.vocab_size;
        match self.jitter {
            None => Ok(vec![1.0 / v as f64; v]),
            Some(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(history_hash(seed, history));
                let weights: Vec<f64> = (0..v).map(|_| 1.0 + JITTER * rng.random::<f64>()).collect();
                let total: f64 = weights.iter().sum();
                Ok(weights.into_iter().map(|w| w / total).collect())
            }
        }
    }
}

/// Tokens of the context used to index occurrences.
const INDEX_CONTEXT: usize = 4;

/// Puts probability 1 on the token that follows the whole history in the
/// source pieces. Occurrences anchored at a piece start win; otherwise the
/// first occurrence in corpus order is used. Histories that occur nowhere
/// (or only at a piece end) get the uniform distribution.
#[derive(Debug, Clone)]
pub struct OracleModel {
    pieces: Vec<Vec<u32>>,
    vocab_size: usize,
    index: HashMap<[u32; INDEX_CONTEXT], Vec<(usize, usize)>>,
}

impl OracleModel {
    pub fn new(pieces: Vec<Vec<u32>>, vocab_size: usize) -> Self {
        let mut index: HashMap<[u32; INDEX_CONTEXT], Vec<(usize, usize)>> = HashMap::new();
        for (p, piece) in pieces.iter().enumerate() {
            for next in INDEX_CONTEXT..piece.len() {
                let key: [u32; INDEX_CONTEXT] = piece[next - INDEX_CONTEXT..next].try_into().expect("fixed width");
                index.entry(key).or_default().push((p, next));
            }
        }
        Self { pieces, vocab_size, index }
    }

    /// The id that follows `history` in the source, if any.
    pub fn continuation(&self, history: &[u32]) -> Option<u32> {
        let h = history.len();
        let matches = |&(p, next): &(usize, usize)| next >= h && self.pieces[p][next - h..next] == *history;
        let found: Vec<(usize, usize)> = if h >= INDEX_CONTEXT {
            let key: [u32; INDEX_CONTEXT] = history[h - INDEX_CONTEXT..].try_into().expect("fixed width");
            self.index.get(&key).map_or_else(Vec::new, |v| v.iter().copied().filter(matches).collect())
        } else {
            self.pieces
                .iter()
                .enumerate()
                .flat_map(|(p, piece)| (h..piece.len()).map(move |next| (p, next)))
                .filter(matches)
                .collect()
        };
        let chosen = found.iter().find(|&&(_, next)| next == h).or(found.first())?;
        Some(self.pieces[chosen.0][chosen.1])
    }
}

impl SequenceModel for OracleModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_token_distribution(&self, history: &[u32]) -> Result<Vec<f64>, ModelError> {
        match self.continuation(history) {
            Some(id) => {
                let mut d = vec![0.0; self.vocab_size];
                *d.get_mut(id as usize).ok_or(ModelError::TokenOutOfRange { id, size: self.vocab_size })? = 1.0;
                Ok(d)
            }
            None => Ok(vec![1.0 / self.vocab_size as f64; self.vocab_size]),
        }
    }

    fn token_probability(&self, history: &[u32], token: u32) -> Result<f64, ModelError> {
        if token as usize >= self.vocab_size {
            return Err(ModelError::TokenOutOfRange { id: token, size: self.vocab_size });
        }
        Ok(match self.continuation(history) {
            Some(id) => (id == token) as u8 as f64,
            None => 1.0 / self.vocab_size as f64,
        })
    }
}

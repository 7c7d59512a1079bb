//! Interpolated add-alpha n-gram baseline.
//!
//! Order `k` (1..=n) estimates `(c(ctx, w) + alpha) / (c(ctx) + alpha V)`
//! from the `k - 1` preceding ids. Orders whose context was never seen are
//! left out; the remaining ones are mixed with weights proportional to
//! `2^(k-1)`, so longer contexts dominate.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ChallengeError, ModelError, SequenceModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NGramConfig {
    pub order: usize,
    pub alpha: f64,
}

impl Default for NGramConfig {
    fn default() -> Self {
        Self { order: 5, alpha: 0.01 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Continuations {
    total: u64,
    next: BTreeMap<u32, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    config: NGramConfig,
    vocab_size: usize,
    /// `tables[k - 1]` maps a context of `k - 1` ids to its continuations.
    tables: Vec<BTreeMap<Vec<u32>, Continuations>>,
}

const FORMAT: &str = "leadsheet-ngram";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedContext {
    context: Vec<u32>,
    next: Vec<(u32, u64)>,
}

#[derive(Serialize, Deserialize)]
struct SavedModel {
    format: String,
    version: u32,
    vocab_size: usize,
    config: NGramConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    tables: Vec<Vec<SavedContext>>,
}

impl NGramModel {
    pub fn train(corpus: &[Vec<u32>], vocab_size: usize, config: NGramConfig) -> Result<Self, ChallengeError> {
        if config.order < 1 {
            return Err(ChallengeError::BadOrder);
        }
        if !(config.alpha > 0.0 && config.alpha.is_finite()) {
            return Err(ChallengeError::BadAlpha(config.alpha));
        }
        if corpus.iter().all(|s| s.is_empty()) {
            return Err(ChallengeError::EmptyCorpus);
        }
        let mut tables = vec![BTreeMap::<Vec<u32>, Continuations>::new(); config.order];
        for seq in corpus {
            if let Some(&id) = seq.iter().find(|&&id| id as usize >= vocab_size) {
                return Err(ModelError::TokenOutOfRange { id, size: vocab_size }.into());
            }
            for (i, &token) in seq.iter().enumerate() {
                for (k, table) in tables.iter_mut().enumerate() {
                    if k > i {
                        break;
                    }
                    let entry = table.entry(seq[i - k..i].to_vec()).or_default();
                    entry.total += 1;
                    *entry.next.entry(token).or_default() += 1;
                }
            }
        }
        Ok(Self { config, vocab_size, tables })
    }

    pub fn config(&self) -> NGramConfig {
        self.config
    }

    pub fn order(&self) -> usize {
        self.config.order
    }

    fn context(&self, k: usize, history: &[u32]) -> Option<&Continuations> {
        let len = k - 1;
        (history.len() >= len).then(|| self.tables[k - 1].get(&history[history.len() - len..]))?
    }

    /// Smoothed estimate of order `k` alone; `None` when the context is
    /// unavailable or unseen.
    pub fn component_probability(&self, k: usize, history: &[u32], token: u32) -> Option<f64> {
        if k == 0 || k > self.config.order {
            return None;
        }
        let c = self.context(k, history)?;
        let count = c.next.get(&token).copied().unwrap_or(0) as f64;
        Some((count + self.config.alpha) / (c.total as f64 + self.config.alpha * self.vocab_size as f64))
    }

    /// Normalized interpolation weights `(k, lambda_k)` for a history.
    pub fn weights(&self, history: &[u32]) -> Vec<(usize, f64)> {
        let seen: Vec<usize> = (1..=self.config.order).filter(|&k| self.context(k, history).is_some()).collect();
        let total: f64 = seen.iter().map(|&k| 2f64.powi(k as i32 - 1)).sum();
        seen.into_iter().map(|k| (k, 2f64.powi(k as i32 - 1) / total)).collect()
    }

    /// `exp` of the mean negative log-likelihood over every token.
    pub fn perplexity(&self, sequences: &[Vec<u32>]) -> Result<f64, ModelError> {
        let (mut nll, mut n) = (0.0, 0usize);
        for seq in sequences {
            for i in 0..seq.len() {
                nll -= self.token_probability(&seq[..i], seq[i])?.ln();
                n += 1;
            }
        }
        Ok((nll / n.max(1) as f64).exp())
    }

    pub fn save<W: Write>(&self, out: W) -> Result<(), ChallengeError> {
        self.save_with_note(out, None)
    }

    /// Saves with a free-form note (e.g. provenance) stored next to the
    /// counts; `load` ignores it.
    pub fn save_with_note<W: Write>(&self, out: W, note: Option<&str>) -> Result<(), ChallengeError> {
        let saved = SavedModel {
            note: note.map(str::to_string),
            format: FORMAT.to_string(),
            version: FORMAT_VERSION,
            vocab_size: self.vocab_size,
            config: self.config,
            tables: self
                .tables
                .iter()
                .map(|t| {
                    t.iter()
                        .map(|(ctx, c)| SavedContext {
                            context: ctx.clone(),
                            next: c.next.iter().map(|(&k, &v)| (k, v)).collect(),
                        })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_writer(out, &saved).map_err(|e| ChallengeError::Format(e.to_string()))
    }

    pub fn load<R: Read>(input: R) -> Result<Self, ChallengeError> {
        let format = |m: String| ChallengeError::Format(m);
        let saved: SavedModel = serde_json::from_reader(input).map_err(|e| format(e.to_string()))?;
        if saved.format != FORMAT || saved.version != FORMAT_VERSION {
            return Err(format(format!("unsupported model format {} v{}", saved.format, saved.version)));
        }
        if saved.config.order < 1 || saved.tables.len() != saved.config.order {
            return Err(format(format!("{} tables for order {}", saved.tables.len(), saved.config.order)));
        }
        if !(saved.config.alpha > 0.0 && saved.config.alpha.is_finite()) {
            return Err(ChallengeError::BadAlpha(saved.config.alpha));
        }
        let mut tables = Vec::with_capacity(saved.tables.len());
        for (k, table) in saved.tables.into_iter().enumerate() {
            let mut map = BTreeMap::new();
            for entry in table {
                if entry.context.len() != k {
                    return Err(format(format!("context of length {} in order-{} table", entry.context.len(), k + 1)));
                }
                if let Some(&id) = entry
                    .context
                    .iter()
                    .chain(entry.next.iter().map(|(id, _)| id))
                    .find(|&&id| id as usize >= saved.vocab_size)
                {
                    return Err(ModelError::TokenOutOfRange { id, size: saved.vocab_size }.into());
                }
                let next: BTreeMap<u32, u64> = entry.next.into_iter().collect();
                let total = next.values().sum();
                map.insert(entry.context, Continuations { total, next });
            }
            tables.push(map);
        }
        Ok(Self { config: saved.config, vocab_size: saved.vocab_size, tables })
    }
}

impl SequenceModel for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_token_distribution(&self, history: &[u32]) -> Result<Vec<f64>, ModelError> {
        let v = self.vocab_size as f64;
        let mut dist = vec![0.0; self.vocab_size];
        let mut floor = 0.0;
        for (k, w) in self.weights(history) {
            let c = self.context(k, history).expect("weights only list seen contexts");
            let denom = c.total as f64 + self.config.alpha * v;
            floor += w * self.config.alpha / denom;
            for (&id, &count) in &c.next {
                dist[id as usize] += w * count as f64 / denom;
            }
        }
        dist.iter_mut().for_each(|p| *p += floor);
        Ok(dist)
    }

    fn token_probability(&self, history: &[u32], token: u32) -> Result<f64, ModelError> {
        if token as usize >= self.vocab_size {
            return Err(ModelError::TokenOutOfRange { id: token, size: self.vocab_size });
        }
        Ok(self
            .weights(history)
            .into_iter()
            .map(|(k, w)| w * self.component_probability(k, history, token).expect("seen context"))
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::super::checked_distribution;
    use super::*;

    const A: u32 = 0;
    const B: u32 = 1;

    fn abab(order: usize) -> NGramModel {
        NGramModel::train(&[vec![A, B, A, B]], 3, NGramConfig { order, alpha: 0.01 }).unwrap()
    }

    #[test]
    fn bigram_component_by_hand() {
        let m = abab(2);
        let alpha = 0.01;
        // A is followed by B both times it has a successor
        let expected = (2.0 + alpha) / (2.0 + alpha * 3.0);
        assert!((m.component_probability(2, &[A], B).unwrap() - expected).abs() < 1e-15);
        // unigram: B twice out of four tokens
        let uni = (2.0 + alpha) / (4.0 + alpha * 3.0);
        assert!((m.component_probability(1, &[A], B).unwrap() - uni).abs() < 1e-15);
        // weights 1 : 2
        let p = m.token_probability(&[A], B).unwrap();
        assert!((p - (uni / 3.0 + 2.0 * expected / 3.0)).abs() < 1e-15);
        // B is never followed by anything at the end, but once by A
        assert_eq!(m.component_probability(2, &[B], A), Some((1.0 + alpha) / (1.0 + 3.0 * alpha)));
        // unseen context: order 2 drops out
        assert_eq!(m.component_probability(2, &[2], A), None);
        assert_eq!(m.weights(&[2]), vec![(1, 1.0)]);
    }

    #[test]
    fn unigram_is_smoothed_relative_frequency() {
        let m = abab(1);
        let d = checked_distribution(&m, &[B, B]).unwrap();
        assert!((d[A as usize] - 2.01 / 4.03).abs() < 1e-15);
        assert!((d[2] - 0.01 / 4.03).abs() < 1e-15);
    }

    #[test]
    fn distribution_matches_token_probability() {
        let corpus = vec![vec![0, 1, 2, 3, 1, 2, 3, 1, 4], vec![4, 4, 1, 2, 0]];
        let m = NGramModel::train(&corpus, 6, NGramConfig::default()).unwrap();
        for h in [&[][..], &[1], &[1, 2], &[3, 1, 2, 3], &[5, 5, 5, 5, 5]] {
            let d = checked_distribution(&m, h).unwrap();
            for t in 0..6 {
                assert!((d[t as usize] - m.token_probability(h, t).unwrap()).abs() < 1e-15);
                assert!(d[t as usize] > 0.0);
            }
        }
    }

    #[test]
    fn higher_order_fits_structure_better() {
        // a fixed 7-token motif with random-looking fillers between repeats
        let motif = [3u32, 1, 4, 1, 5, 9, 2];
        let make = |seed: u32| -> Vec<u32> {
            (0..40).flat_map(|i| motif.iter().copied().chain([(seed * 7 + i * 3) % 11])).collect()
        };
        let train: Vec<Vec<u32>> = (0..6).map(make).collect();
        let held = vec![make(17)];
        let ppl = |n| {
            NGramModel::train(&train, 12, NGramConfig { order: n, alpha: 0.01 }).unwrap().perplexity(&held).unwrap()
        };
        assert!(ppl(3) <= ppl(1));
    }

    #[test]
    fn save_load_round_trip() {
        let m = NGramModel::train(&[vec![0, 1, 2, 0, 1, 2, 2]], 4, NGramConfig { order: 3, alpha: 0.5 }).unwrap();
        let mut bytes = Vec::new();
        m.save(&mut bytes).unwrap();
        let back = NGramModel::load(bytes.as_slice()).unwrap();
        assert_eq!(back, m);
        let mut again = Vec::new();
        back.save(&mut again).unwrap();
        assert_eq!(bytes, again);
        assert!(NGramModel::load(&b"{}"[..]).is_err());
        let mut noted = Vec::new();
        m.save_with_note(&mut noted, Some("trained on x")).unwrap();
        assert_eq!(NGramModel::load(noted.as_slice()).unwrap(), m);
    }

    #[test]
    fn rejects_bad_configs() {
        let c = [vec![0u32, 1]];
        assert_eq!(NGramModel::train(&c, 2, NGramConfig { order: 0, alpha: 0.01 }), Err(ChallengeError::BadOrder));
        assert!(NGramModel::train(&c, 2, NGramConfig { order: 2, alpha: 0.0 }).is_err());
        assert_eq!(NGramModel::train(&[], 2, NGramConfig::default()), Err(ChallengeError::EmptyCorpus));
        assert!(NGramModel::train(&[vec![5]], 2, NGramConfig::default()).is_err());
    }
}

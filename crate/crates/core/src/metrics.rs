//! Distributional metrics over decoded pieces: pitch-class histogram
//! entropy, grooving-pattern similarity and chord progression irregularity.
//!
//! All piece-level metrics read the bar/position grid of a [`Timeline`],
//! never seconds, so they are tempo invariant.

use std::collections::HashSet;
use std::hash::Hash;

use thiserror::Error;

use crate::tokenizer::chord::ChordSymbol;
use crate::tokenizer::codec::Timeline;
use crate::tokenizer::quantize::POSITIONS_PER_BAR;

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("histogram is not normalized (sum {sum}, min {min})")]
    Unnormalized { sum: f64, min: f64 },
    #[error("window of {0} bars is not allowed; use at least 1")]
    BadWindow(usize),
    #[error("every {window}-bar window is empty")]
    AllWindowsEmpty { window: usize },
    #[error("grooving patterns differ in length ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("grooving similarity needs at least 2 bars, got {0}")]
    TooFewBars(usize),
    #[error("chord progression irregularity needs at least 3 chords, got {0}")]
    TooFewChords(usize),
}

/// Pitch-class distribution of a non-empty set of notes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchClassHistogram {
    pub h: [f64; 12],
}

/// Counts pitches modulo 12 and normalizes. `None` for an empty window,
/// which callers exclude from averages.
pub fn pitch_class_histogram<I: IntoIterator<Item = u8>>(pitches: I) -> Option<PitchClassHistogram> {
    let mut counts = [0usize; 12];
    for p in pitches {
        counts[(p % 12) as usize] += 1;
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return None;
    }
    Some(PitchClassHistogram { h: counts.map(|c| c as f64 / total as f64) })
}

/// Entropy in bits, with `0 log 0 = 0`.
pub fn histogram_entropy(hist: &PitchClassHistogram) -> Result<f64, MetricError> {
    let sum: f64 = hist.h.iter().sum();
    let min = hist.h.iter().copied().fold(f64::INFINITY, f64::min);
    if hist.h.iter().any(|v| v.is_nan()) || min < 0.0 || !sum.is_finite() || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE
    {
        return Err(MetricError::Unnormalized { sum, min });
    }
    let bits = -hist.h.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>();
    // -0.0 for one-hot histograms
    Ok(bits.max(0.0))
}

/// Mean entropy over sliding windows of `window_bars` bars (hop 1 bar),
/// skipping windows without notes. A piece shorter than the window forms a
/// single window.
pub fn piece_entropy(timeline: &Timeline, window_bars: usize) -> Result<f64, MetricError> {
    if window_bars == 0 {
        return Err(MetricError::BadWindow(0));
    }
    let mut per_bar: Vec<Vec<u8>> = vec![Vec::new(); timeline.bars];
    for n in &timeline.notes {
        per_bar[n.bar].push(n.pitch);
    }
    let windows = timeline.bars.saturating_sub(window_bars) + 1;
    let entropies: Vec<f64> = (0..windows)
        .filter_map(|start| {
            let end = (start + window_bars).min(timeline.bars);
            let bars = per_bar.get(start..end).unwrap_or(&[]);
            pitch_class_histogram(bars.iter().flatten().copied())
        })
        .map(|h| histogram_entropy(&h).expect("histograms built here are normalized"))
        .collect();
    if entropies.is_empty() {
        return Err(MetricError::AllWindowsEmpty { window: window_bars });
    }
    Ok(entropies.iter().sum::<f64>() / entropies.len() as f64)
}

/// Onset-presence vector over the positions of one bar.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroovingPattern {
    pub bits: Vec<bool>,
}

impl GroovingPattern {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// 64-position pattern with a 1 wherever at least one note starts.
pub fn grooving_pattern<I: IntoIterator<Item = u8>>(positions: I) -> GroovingPattern {
    let mut bits = vec![false; POSITIONS_PER_BAR as usize];
    for p in positions {
        bits[p as usize] = true;
    }
    GroovingPattern { bits }
}

/// `1 - hamming(a, b) / Q`.
pub fn grooving_similarity(a: &GroovingPattern, b: &GroovingPattern) -> Result<f64, MetricError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(MetricError::DimensionMismatch(a.len(), b.len()));
    }
    let differing = a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count();
    Ok(1.0 - differing as f64 / a.len() as f64)
}

/// Mean similarity over all unordered pairs of bars, empty bars included.
pub fn piece_grooving(timeline: &Timeline) -> Result<f64, MetricError> {
    if timeline.bars < 2 {
        return Err(MetricError::TooFewBars(timeline.bars));
    }
    let patterns: Vec<GroovingPattern> =
        (0..timeline.bars).map(|b| grooving_pattern(timeline.notes_in_bar(b).map(|n| n.position))).collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..patterns.len() {
        for j in i + 1..patterns.len() {
            total += grooving_similarity(&patterns[i], &patterns[j])?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Percentage of distinct trigrams among the `n - 2` consecutive trigrams of
/// `chords`, taken as given (no collapsing).
pub fn chord_progression_irregularity<T: Eq + Hash>(chords: &[T]) -> Result<f64, MetricError> {
    if chords.len() < 3 {
        return Err(MetricError::TooFewChords(chords.len()));
    }
    let trigrams = chords.len() - 2;
    let distinct: HashSet<&[T]> = chords.windows(3).collect();
    Ok(100.0 * distinct.len() as f64 / trigrams as f64)
}

/// Chord changes of a piece: consecutive duplicates collapsed.
pub fn chord_progression(timeline: &Timeline) -> Vec<ChordSymbol> {
    let mut out: Vec<ChordSymbol> = timeline.chords.iter().map(|c| c.symbol).collect();
    out.dedup();
    out
}

/// Irregularity of the collapsed chord progression of a piece.
pub fn piece_cpi(timeline: &Timeline) -> Result<f64, MetricError> {
    chord_progression_irregularity(&chord_progression(timeline))
}

/// The distributional columns of a report row; `None` where a metric is
/// undefined for the piece.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DistributionMetrics {
    pub h1: Option<f64>,
    pub h4: Option<f64>,
    pub gs: Option<f64>,
    pub cpi: Option<f64>,
}

pub fn distribution_metrics(timeline: &Timeline) -> DistributionMetrics {
    DistributionMetrics {
        h1: piece_entropy(timeline, 1).ok(),
        h4: piece_entropy(timeline, 4).ok(),
        gs: piece_grooving(timeline).ok(),
        cpi: piece_cpi(timeline).ok(),
    }
}

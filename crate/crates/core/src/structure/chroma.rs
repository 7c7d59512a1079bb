//! Chroma frames rendered directly from a decoded timeline.

use super::StructureError;
use crate::tokenizer::codec::Timeline;

pub const DEFAULT_FRAME_RATE: f64 = 1.0;
pub const MELODY_WEIGHT: f64 = 1.0;
pub const CHORD_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ChromaSequence {
    pub frames: Vec<[f64; 12]>,
    pub frame_rate: f64,
}

impl ChromaSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Adds `weight * overlap` to pitch class `pc` of every frame that the
/// interval `[start, end)` overlaps.
fn spread(frames: &mut [[f64; 12]], rate: f64, start: f64, end: f64, pc: usize, weight: f64) {
    if end <= start {
        return;
    }
    let first = (start * rate).floor().max(0.0) as usize;
    let last = ((end * rate).ceil() as usize).min(frames.len());
    for (f, frame) in frames.iter_mut().enumerate().take(last).skip(first) {
        let lo = start.max(f as f64 / rate);
        let hi = end.min((f + 1) as f64 / rate);
        if hi > lo {
            frame[pc] += weight * (hi - lo);
        }
    }
}

/// Melody pitch classes weighted by sounding time (weight 1.0) plus the
/// template pitch classes of the active chord (weight 0.5); non-zero frames
/// are scaled to unit L2 norm, silent frames stay zero.
pub fn render_chroma(timeline: &Timeline, frame_rate: f64) -> Result<ChromaSequence, StructureError> {
    if !(frame_rate > 0.0 && frame_rate.is_finite()) {
        return Err(StructureError::BadFrameRate(frame_rate));
    }
    if timeline.is_empty() {
        return Err(StructureError::EmptyTimeline);
    }
    let end = timeline.notes.iter().map(|n| n.onset_sec + n.duration_sec).fold(timeline.end_sec, f64::max);
    // tolerate float noise so that a 16.000000001 s piece is 16 frames
    let n = ((end * frame_rate) - 1e-9).ceil().max(0.0) as usize;
    if n < 2 {
        return Err(StructureError::TooFewFrames(n));
    }
    let mut frames = vec![[0.0; 12]; n];
    for note in &timeline.notes {
        let pc = (note.pitch % 12) as usize;
        spread(&mut frames, frame_rate, note.onset_sec, note.onset_sec + note.duration_sec, pc, MELODY_WEIGHT);
    }
    for (i, chord) in timeline.chords.iter().enumerate() {
        let until = timeline.chords.get(i + 1).map_or(timeline.end_sec, |c| c.onset_sec);
        let mut classes = [false; 12];
        for pc in chord.symbol.pitch_classes() {
            classes[pc.value() as usize] = true;
        }
        for pc in (0..12).filter(|&pc| classes[pc]) {
            spread(&mut frames, frame_rate, chord.onset_sec, until, pc, CHORD_WEIGHT);
        }
    }
    for frame in &mut frames {
        let norm = frame.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            frame.iter_mut().for_each(|x| *x /= norm);
        }
    }
    Ok(ChromaSequence { frames, frame_rate })
}

//! Velocity, duration, onset-position and tempo quantization.

use thiserror::Error;

/// Subdivisions of a bar (64th notes in 4/4).
pub const POSITIONS_PER_BAR: u8 = 64;
/// Subdivisions of a beat.
pub const POSITIONS_PER_BEAT: u8 = 16;
pub const VELOCITY_BINS: u8 = 32;
pub const MAX_DURATION_UNITS: u8 = 32;
/// Tempo class boundaries in bpm; class `c` (1-based) covers
/// `[TEMPO_BOUNDS[c-1], TEMPO_BOUNDS[c])`.
pub const TEMPO_BOUNDS: [f64; 6] = [50.0, 80.0, 110.0, 140.0, 180.0, 320.0];
pub const TEMPO_CLASSES: u8 = 5;
pub const TEMPO_STEPS: u8 = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizeError {
    #[error("loudness {0} dB is not finite")]
    NonFiniteLoudness(f64),
    #[error("velocity bin {0} outside [1, 32]")]
    VelocityOutOfRange(u8),
    #[error("durations must be positive (note {note}, beat {beat})")]
    NonPositiveDuration { note: f64, beat: f64 },
    #[error("beat position {0} is not one of 0, 16, 32, 48")]
    BadBeatPosition(u8),
    #[error("onset {onset} outside beat [{start}, {end})")]
    OnsetOutsideBeat { onset: f64, start: f64, end: f64 },
    #[error("tempo class {class} / value {value} invalid")]
    BadTempo { class: u8, value: u8 },
}

/// Maps loudness to one of 32 velocity bins:
/// `floor((80 + 3 (dB - 65)) / 4)` clipped to `[1, 32]`.
pub fn quantize_velocity(db: f64) -> Result<u8, QuantizeError> {
    if !db.is_finite() {
        return Err(QuantizeError::NonFiniteLoudness(db));
    }
    let raw = ((80.0 + 3.0 * (db - 65.0)) / 4.0).floor();
    Ok(raw.clamp(1.0, VELOCITY_BINS as f64) as u8)
}

/// MIDI velocity of a bin: 3, 7, ..., 127.
pub fn velocity_to_midi(bin: u8) -> Result<u8, QuantizeError> {
    if !(1..=VELOCITY_BINS).contains(&bin) {
        return Err(QuantizeError::VelocityOutOfRange(bin));
    }
    Ok(4 * bin - 1)
}

/// Length in 64th notes relative to the beat the note starts in.
/// `None` means the note rounds to zero units and is dropped; lengths past a
/// half note are clipped to 32.
pub fn quantize_duration(note_sec: f64, beat_sec: f64) -> Result<Option<u8>, QuantizeError> {
    if !(note_sec > 0.0 && beat_sec > 0.0) || !note_sec.is_finite() || !beat_sec.is_finite() {
        return Err(QuantizeError::NonPositiveDuration { note: note_sec, beat: beat_sec });
    }
    let units = (POSITIONS_PER_BEAT as f64 * note_sec / beat_sec).round();
    if units < 1.0 {
        return Ok(None);
    }
    Ok(Some(units.min(MAX_DURATION_UNITS as f64) as u8))
}

/// Onset position on the 64-step bar grid, justified against the beat that
/// contains it: `round(p_b + 16 (t_n - t_b) / d_b)`, clamped to `[0, 63]`.
pub fn justify_position(
    beat_position: u8,
    beat_onset: f64,
    beat_duration: f64,
    note_onset: f64,
) -> Result<u8, QuantizeError> {
    if !beat_position.is_multiple_of(POSITIONS_PER_BEAT) || beat_position >= POSITIONS_PER_BAR {
        return Err(QuantizeError::BadBeatPosition(beat_position));
    }
    if beat_duration.is_nan() || beat_duration <= 0.0 {
        return Err(QuantizeError::NonPositiveDuration { note: note_onset, beat: beat_duration });
    }
    let end = beat_onset + beat_duration;
    if !(note_onset >= beat_onset && note_onset < end) {
        return Err(QuantizeError::OnsetOutsideBeat { onset: note_onset, start: beat_onset, end });
    }
    Ok(justify_unchecked(beat_position, beat_onset, beat_duration, note_onset))
}

pub(crate) fn justify_unchecked(beat_position: u8, beat_onset: f64, beat_duration: f64, note_onset: f64) -> u8 {
    let p = beat_position as f64 + POSITIONS_PER_BEAT as f64 * (note_onset - beat_onset) / beat_duration;
    p.round().clamp(0.0, (POSITIONS_PER_BAR - 1) as f64) as u8
}

/// Tempo class (1-5) and global tempo value (0-59, class-major).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TempoEvent {
    pub class: u8,
    pub value: u8,
}

impl TempoEvent {
    pub fn new(class: u8, value: u8) -> Result<Self, QuantizeError> {
        let lo = (class.wrapping_sub(1)).wrapping_mul(TEMPO_STEPS);
        if !(1..=TEMPO_CLASSES).contains(&class) || !(lo..lo + TEMPO_STEPS).contains(&value) {
            return Err(QuantizeError::BadTempo { class, value });
        }
        Ok(Self { class, value })
    }

    pub fn step(self) -> u8 {
        self.value % TEMPO_STEPS
    }

    /// Quantized tempo in bpm (the lower edge of the step).
    pub fn bpm(self) -> f64 {
        let lo = TEMPO_BOUNDS[self.class as usize - 1];
        let hi = TEMPO_BOUNDS[self.class as usize];
        lo + self.step() as f64 * (hi - lo) / TEMPO_STEPS as f64
    }
}

/// Tempo events for a beat of `beat_sec` seconds (bpm = 60 / beat_sec).
/// Tempos outside [50, 320) are clamped into that range.
pub fn derive_tempo_events(beat_sec: f64) -> Result<TempoEvent, QuantizeError> {
    if !beat_sec.is_finite() || beat_sec <= 0.0 {
        return Err(QuantizeError::NonPositiveDuration { note: beat_sec, beat: beat_sec });
    }
    Ok(tempo_from_bpm(60.0 / beat_sec))
}

pub fn tempo_from_bpm(bpm: f64) -> TempoEvent {
    let bpm = bpm.max(TEMPO_BOUNDS[0]);
    let class = TEMPO_BOUNDS[1..].iter().position(|&hi| bpm < hi).unwrap_or(TEMPO_CLASSES as usize - 1);
    let (lo, hi) = (TEMPO_BOUNDS[class], TEMPO_BOUNDS[class + 1]);
    let step = (TEMPO_STEPS as f64 * (bpm - lo) / (hi - lo)).floor().clamp(0.0, (TEMPO_STEPS - 1) as f64) as u8;
    TempoEvent { class: class as u8 + 1, value: class as u8 * TEMPO_STEPS + step }
}

//! Lead-sheet data model, interchange format and augmentation.
//!
//! A corpus file is JSON Lines: one solo per line, each an object with the
//! keys `id`, `melody`, `beats` and `parts`, in that order.
//!
//! | row      | fields (in order)                                                           |
//! |----------|-----------------------------------------------------------------------------|
//! | `melody` | `onset_sec`, `duration_sec`, `pitch`, `loudness_db`, `phrase_start`, `mlu_label` |
//! | `beats`  | `onset_sec`, `duration_sec`, `bar_index`, `position_in_bar`, `chord`         |
//! | `parts`  | `letter`, `repetition`, `start_bar`, `end_bar`                              |
//!
//! Seconds are written with shortest round-trip decimal formatting, so a
//! save/load cycle reproduces every value bit for bit. `chord` and
//! `mlu_label` may be `null`. A beat's `chord` is the chord annotated at that
//! beat; repeating the previous chord is allowed.
//!
//! Adapting another distribution (for instance a relational dump of a jazz
//! solo database) means implementing [`SoloSource`] and writing the result
//! with [`write_corpus`]. Missing loudness values must be imputed by the
//! adapter since `loudness_db` is required here.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::chord::{parse_chord, transpose_chord_text};

/// Beats per bar. Only 4/4 is supported.
pub const BEATS_PER_BAR: usize = 4;

/// Largest transposition used for augmentation, in semitones.
pub const MAX_TRANSPOSITION: i32 = 3;

/// Default allow-list of midlevel-unit labels.
pub const DEFAULT_MLU_LABELS: [&str; 9] =
    ["line", "lick", "melody", "rhythm", "expressive", "quote", "theme", "void", "fragment"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Note {
    pub onset_sec: f64,
    pub duration_sec: f64,
    pub pitch: i16,
    pub loudness_db: f64,
    pub phrase_start: bool,
    pub mlu_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Beat {
    pub onset_sec: f64,
    pub duration_sec: f64,
    pub bar_index: u32,
    pub position_in_bar: u8,
    pub chord: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormPart {
    pub letter: String,
    pub repetition: u32,
    pub start_bar: u32,
    pub end_bar: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solo {
    pub id: String,
    #[serde(rename = "melody")]
    pub notes: Vec<Note>,
    pub beats: Vec<Beat>,
    pub parts: Vec<FormPart>,
}

impl Solo {
    /// Start of the first beat to the end of the last beat, in seconds.
    pub fn beat_span(&self) -> Option<(f64, f64)> {
        let first = self.beats.first()?;
        let last = self.beats.last()?;
        Some((first.onset_sec, last.onset_sec + last.duration_sec))
    }

    pub fn bar_count(&self) -> usize {
        self.beats.chunk_by(|a, b| a.bar_index == b.bar_index).count()
    }
}

/// One broken invariant, located by a field path such as `melody[3].pitch`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}{}: {message}", solo_id.as_ref().map(|id| format!(" (solo {id})")).unwrap_or_default())]
    Parse { line: usize, solo_id: Option<String>, message: String },
    #[error("solo {solo_id}: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { solo_id: String, violations: Vec<Violation> },
    #[error("corpus contains no solos")]
    Empty,
    #[error("transposition by {0} semitones is outside [-3, 3]")]
    ShiftOutOfRange(i32),
    #[error("solo {solo_id}: melody[{note}] pitch {pitch} leaves [0, 127] after transposition")]
    PitchOverflow { solo_id: String, note: usize, pitch: i32 },
    #[error("solo {solo_id}: beats[{beat}].chord: {message}")]
    Chord { solo_id: String, beat: usize, message: String },
}

/// Load-time validation settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusOptions {
    /// Accepted MLU labels; `None` accepts any label.
    pub mlu_allow_list: Option<Vec<String>>,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self { mlu_allow_list: Some(DEFAULT_MLU_LABELS.iter().map(|s| s.to_string()).collect()) }
    }
}

/// Producer of solos from some external distribution.
pub trait SoloSource {
    type Error: std::error::Error;

    fn solos(&mut self) -> Result<Vec<Solo>, Self::Error>;
}

pub fn validate_solo(solo: &Solo) -> Vec<Violation> {
    validate_solo_with(solo, &CorpusOptions::default())
}

/// Collects every invariant violation of `solo`.
pub fn validate_solo_with(solo: &Solo, options: &CorpusOptions) -> Vec<Violation> {
    let mut out = Vec::new();
    if solo.id.trim().is_empty() {
        out.push(Violation::new("id", "empty solo id"));
    }
    validate_notes(solo, options, &mut out);
    validate_beats(solo, &mut out);
    validate_parts(solo, &mut out);
    out
}

fn validate_notes(solo: &Solo, options: &CorpusOptions, out: &mut Vec<Violation>) {
    let span = solo.beat_span();
    for (i, note) in solo.notes.iter().enumerate() {
        let field = |name: &str| format!("melody[{i}].{name}");
        if !note.onset_sec.is_finite() || note.onset_sec < 0.0 {
            out.push(Violation::new(
                field("onset_sec"),
                format!("onset {} is not a finite non-negative time", note.onset_sec),
            ));
        }
        if !note.duration_sec.is_finite() || note.duration_sec <= 0.0 {
            out.push(Violation::new(field("duration_sec"), format!("duration {} must be positive", note.duration_sec)));
        }
        if !(0..=127).contains(&note.pitch) {
            out.push(Violation::new(field("pitch"), format!("pitch {} outside [0, 127]", note.pitch)));
        }
        if !note.loudness_db.is_finite() {
            out.push(Violation::new(field("loudness_db"), "loudness is not finite"));
        }
        if let (Some(label), Some(allowed)) = (&note.mlu_label, &options.mlu_allow_list) {
            if !allowed.iter().any(|a| a == label) {
                out.push(Violation::new(field("mlu_label"), format!("MLU label {label:?} is not in the allow-list")));
            }
        }
        if let Some((start, end)) = span {
            if note.onset_sec.is_finite() && (note.onset_sec < start || note.onset_sec > end) {
                out.push(Violation::new(
                    field("onset_sec"),
                    format!("onset {} outside the beat track [{start}, {end}]", note.onset_sec),
                ));
            }
        }
    }
    if solo.notes.windows(2).any(|w| w[1].onset_sec < w[0].onset_sec) {
        out.push(Violation::new("melody", "notes not sorted"));
    }
}

fn validate_beats(solo: &Solo, out: &mut Vec<Violation>) {
    if solo.beats.is_empty() {
        out.push(Violation::new("beats", "solo has no beats"));
        return;
    }
    for (i, beat) in solo.beats.iter().enumerate() {
        if !beat.onset_sec.is_finite() {
            out.push(Violation::new(format!("beats[{i}].onset_sec"), "onset is not finite"));
        }
        if !beat.duration_sec.is_finite() || beat.duration_sec <= 0.0 {
            out.push(Violation::new(
                format!("beats[{i}].duration_sec"),
                format!("duration {} must be positive", beat.duration_sec),
            ));
        }
        if beat.position_in_bar as usize >= BEATS_PER_BAR {
            out.push(Violation::new(
                format!("beats[{i}].position_in_bar"),
                format!("position {} outside [0, 3]", beat.position_in_bar),
            ));
        }
        if let Some(chord) = &beat.chord {
            if let Err(e) = parse_chord(chord) {
                out.push(Violation::new(format!("beats[{i}].chord"), e.to_string()));
            }
        }
    }
    if solo.beats.windows(2).any(|w| w[1].onset_sec <= w[0].onset_sec) {
        out.push(Violation::new("beats", "beat onsets not strictly increasing"));
    }
    let mut previous_bar: Option<u32> = None;
    for bar in solo.beats.chunk_by(|a, b| a.bar_index == b.bar_index) {
        let index = bar[0].bar_index;
        let positions: Vec<u8> = bar.iter().map(|b| b.position_in_bar).collect();
        if positions != [0, 1, 2, 3] {
            out.push(Violation::new(
                format!("bar {index}"),
                format!("beat positions {positions:?}; only 4/4 bars with 4 beats are supported"),
            ));
        }
        if previous_bar.is_some_and(|p| index <= p) {
            out.push(Violation::new(format!("bar {index}"), "bar indices not increasing"));
        }
        previous_bar = Some(index);
    }
}

fn validate_parts(solo: &Solo, out: &mut Vec<Violation>) {
    let bars = solo.beats.first().zip(solo.beats.last()).map(|(a, b)| (a.bar_index, b.bar_index));
    for (i, part) in solo.parts.iter().enumerate() {
        if part.letter.trim().is_empty() {
            out.push(Violation::new(format!("parts[{i}].letter"), "empty part letter"));
        }
        if part.repetition == 0 {
            out.push(Violation::new(format!("parts[{i}].repetition"), "repetition must be at least 1"));
        }
        if part.start_bar > part.end_bar {
            out.push(Violation::new(
                format!("parts[{i}]"),
                format!("start bar {} after end bar {}", part.start_bar, part.end_bar),
            ));
        }
        if let Some((first, last)) = bars {
            if part.start_bar < first || part.end_bar > last {
                out.push(Violation::new(
                    format!("parts[{i}]"),
                    format!("bars {}..={} outside the beat track {first}..={last}", part.start_bar, part.end_bar),
                ));
            }
        }
    }
    if solo.parts.windows(2).any(|w| w[1].start_bar < w[0].start_bar) {
        out.push(Violation::new("parts", "parts not ordered by start bar"));
    }
    for (i, a) in solo.parts.iter().enumerate() {
        for (j, b) in solo.parts.iter().enumerate().skip(i + 1) {
            if a.start_bar <= b.end_bar && b.start_bar <= a.end_bar {
                out.push(Violation::new(format!("parts[{i}]"), format!("overlaps parts[{j}]")));
            }
        }
    }
}

/// Reads and validates a JSON Lines corpus. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R, options: &CorpusOptions) -> Result<Vec<Solo>, CorpusError> {
    let mut solos = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io { path: "<stream>".into(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let solo: Solo = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: n + 1,
            solo_id: serde_json::from_str::<serde_json::Value>(&line)
                .ok()
                .and_then(|v| v.get("id")?.as_str().map(str::to_string)),
            message: e.to_string(),
        })?;
        let violations = validate_solo_with(&solo, options);
        if !violations.is_empty() {
            return Err(CorpusError::Invalid { solo_id: solo.id, violations });
        }
        solos.push(solo);
    }
    if solos.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(solos)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Solo>, CorpusError> {
    load_corpus_with(path, &CorpusOptions::default())
}

pub fn load_corpus_with(path: &Path, options: &CorpusOptions) -> Result<Vec<Solo>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    read_corpus(BufReader::new(file), options)
}

pub fn write_corpus<W: Write>(mut writer: W, solos: &[Solo]) -> io::Result<()> {
    for solo in solos {
        serde_json::to_writer(&mut writer, solo)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(path: &Path, solos: &[Solo]) -> io::Result<()> {
    write_corpus(BufWriter::new(File::create(path)?), solos)
}

/// Per-solo counts reported after loading.
#[derive(Debug, Clone, PartialEq)]
pub struct SoloStats {
    pub id: String,
    pub notes: usize,
    pub beats: usize,
    pub bars: usize,
    pub duration_sec: f64,
}

pub fn solo_stats(solo: &Solo) -> SoloStats {
    SoloStats {
        id: solo.id.clone(),
        notes: solo.notes.len(),
        beats: solo.beats.len(),
        bars: solo.bar_count(),
        duration_sec: solo.beat_span().map_or(0.0, |(a, b)| b - a),
    }
}

/// Shifts every pitch, chord root and chord bass by `semitones` in [-3, 3].
/// Chord qualities keep their spelling; roots are respelled with flats for
/// black keys.
pub fn transpose_solo(solo: &Solo, semitones: i32) -> Result<Solo, CorpusError> {
    if semitones.abs() > MAX_TRANSPOSITION {
        return Err(CorpusError::ShiftOutOfRange(semitones));
    }
    if semitones == 0 {
        return Ok(solo.clone());
    }
    let mut out = solo.clone();
    for (i, note) in out.notes.iter_mut().enumerate() {
        let pitch = note.pitch as i32 + semitones;
        if !(0..=127).contains(&pitch) {
            return Err(CorpusError::PitchOverflow { solo_id: solo.id.clone(), note: i, pitch });
        }
        note.pitch = pitch as i16;
    }
    for (i, beat) in out.beats.iter_mut().enumerate() {
        if let Some(chord) = &beat.chord {
            let shifted = transpose_chord_text(chord, semitones).map_err(|e| CorpusError::Chord {
                solo_id: solo.id.clone(),
                beat: i,
                message: e.to_string(),
            })?;
            beat.chord = Some(shifted);
        }
    }
    Ok(out)
}

/// Transposes by a shift drawn uniformly from the shifts in [-3, 3] that keep
/// every pitch in range. Returns the shift used.
pub fn random_transposition<R: Rng + ?Sized>(solo: &Solo, rng: &mut R) -> Result<(Solo, i32), CorpusError> {
    let (lo, hi) =
        solo.notes.iter().fold((i32::MAX, i32::MIN), |(lo, hi), n| (lo.min(n.pitch as i32), hi.max(n.pitch as i32)));
    let valid: Vec<i32> = (-MAX_TRANSPOSITION..=MAX_TRANSPOSITION)
        .filter(|k| solo.notes.is_empty() || (lo + k >= 0 && hi + k <= 127))
        .collect();
    let k = valid[rng.random_range(0..valid.len())];
    Ok((transpose_solo(solo, k)?, k))
}

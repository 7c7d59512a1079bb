//! Solo <-> event-token codec.
//!
//! Within a bar, occupied positions are emitted in ascending order. At each
//! position the order is: `Position`, `TempoClass Tempo` (at beats), the
//! chord triple (on chord change), `PartStart RepStart` (first beat of a
//! form part), then each note as `[Phrase] [MLU] NoteVelocity NoteOn
//! NoteDuration`. `RepEnd PartEnd` close the last bar of a form part.

use std::collections::BTreeMap;

use thiserror::Error;

use super::chord::{chord_to_pitches, parse_chord, ChordSymbol, ChordType, PitchClass};
use super::quantize::{
    justify_unchecked, quantize_duration, quantize_velocity, velocity_to_midi, QuantizeError, TempoEvent,
    POSITIONS_PER_BAR, POSITIONS_PER_BEAT, TEMPO_STEPS,
};
use super::vocab::{Category, EventToken, Vocabulary};
use crate::corpus::Solo;

/// MIDI octave base used when voicing decoded chords (C4).
pub const CHORD_REGISTER: i32 = 60;
/// Tempo assumed before the first tempo event of a stream.
pub const DEFAULT_BPM: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodeError {
    #[error("solo {solo_id}: melody[{note}]: {source}")]
    Note {
        solo_id: String,
        note: usize,
        #[source]
        source: QuantizeError,
    },
    #[error("solo {solo_id}: melody[{note}]: pitch {pitch} outside [0, 127]")]
    Pitch { solo_id: String, note: usize, pitch: i16 },
    #[error("solo {solo_id}: beats[{beat}]: {message}")]
    Beat { solo_id: String, beat: usize, message: String },
    #[error("solo {solo_id}: melody[{note}]: MLU label {label:?} is not in the vocabulary")]
    UnknownMlu { solo_id: String, note: usize, label: String },
    #[error("solo {solo_id}: parts[{part}]: {message}")]
    Part { solo_id: String, part: usize, message: String },
    #[error("solo {solo_id} has no beats")]
    NoBeats { solo_id: String },
}

/// Token sequence of one solo plus the indices of notes dropped for being
/// shorter than a 64th note.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub tokens: Vec<EventToken>,
    pub dropped_notes: Vec<usize>,
}

#[derive(Default)]
struct Slot {
    tempo: Option<TempoEvent>,
    chord: Option<ChordSymbol>,
    part_start: Option<(u16, u16)>,
    notes: Vec<[EventToken; 3]>,
    prefixes: Vec<Vec<EventToken>>,
}

pub fn encode_solo(solo: &Solo, vocab: &Vocabulary, include_structure: bool) -> Result<Encoding, EncodeError> {
    let id = || solo.id.clone();
    if solo.beats.is_empty() {
        return Err(EncodeError::NoBeats { solo_id: id() });
    }
    let bars: Vec<&[crate::corpus::Beat]> = solo.beats.chunk_by(|a, b| a.bar_index == b.bar_index).collect();
    let bar_of_beat: Vec<usize> = bars.iter().enumerate().flat_map(|(i, b)| std::iter::repeat_n(i, b.len())).collect();
    let mut slots: Vec<BTreeMap<u8, Slot>> = (0..bars.len()).map(|_| BTreeMap::new()).collect();

    let mut current_chord: Option<ChordSymbol> = None;
    for (i, beat) in solo.beats.iter().enumerate() {
        let beat_err = |message: String| EncodeError::Beat { solo_id: id(), beat: i, message };
        let position = beat.position_in_bar * POSITIONS_PER_BEAT;
        let slot = slots[bar_of_beat[i]].entry(position).or_default();
        slot.tempo =
            Some(super::quantize::derive_tempo_events(beat.duration_sec).map_err(|e| beat_err(e.to_string()))?);
        if let Some(text) = &beat.chord {
            let chord = parse_chord(text).map_err(|e| beat_err(e.to_string()))?;
            if current_chord != Some(chord) {
                slot.chord = Some(chord);
                current_chord = Some(chord);
            }
        }
    }

    let mut part_ends: BTreeMap<usize, (u16, u16)> = BTreeMap::new();
    if include_structure {
        for (p, part) in solo.parts.iter().enumerate() {
            let part_err = |message: String| EncodeError::Part { solo_id: id(), part: p, message };
            let letter = vocab
                .part_index(&part.letter)
                .ok_or_else(|| part_err(format!("part letter {:?} is not in the vocabulary", part.letter)))?;
            let (lo, hi) = vocab.value_range(Category::RepStart);
            let rep = u16::try_from(part.repetition).ok().filter(|r| (lo..=hi).contains(r)).ok_or_else(|| {
                part_err(format!("repetition {} outside the vocabulary range [{lo}, {hi}]", part.repetition))
            })?;
            if let Some(b) = bars.iter().position(|b| b[0].bar_index == part.start_bar) {
                slots[b].entry(0).or_default().part_start = Some((letter, rep));
            }
            if let Some(b) = bars.iter().position(|b| b[0].bar_index == part.end_bar) {
                part_ends.insert(b, (letter, rep));
            }
        }
    }

    let mut dropped = Vec::new();
    for (n, note) in solo.notes.iter().enumerate() {
        let note_err = |source| EncodeError::Note { solo_id: id(), note: n, source };
        let beat_idx = solo.beats.partition_point(|b| b.onset_sec <= note.onset_sec).saturating_sub(1);
        let beat = &solo.beats[beat_idx];
        let Some(units) = quantize_duration(note.duration_sec, beat.duration_sec).map_err(note_err)? else {
            dropped.push(n);
            continue;
        };
        let velocity = quantize_velocity(note.loudness_db).map_err(note_err)?;
        if !(0..=127).contains(&note.pitch) {
            return Err(EncodeError::Pitch { solo_id: id(), note: n, pitch: note.pitch });
        }
        let onset = note.onset_sec.max(beat.onset_sec);
        let position =
            justify_unchecked(beat.position_in_bar * POSITIONS_PER_BEAT, beat.onset_sec, beat.duration_sec, onset);
        let mut prefix = Vec::new();
        if include_structure {
            if note.phrase_start {
                prefix.push(EventToken::PHRASE);
            }
            if let Some(label) = &note.mlu_label {
                let index = vocab.mlu_index(label).ok_or_else(|| EncodeError::UnknownMlu {
                    solo_id: id(),
                    note: n,
                    label: label.clone(),
                })?;
                prefix.push(EventToken::new(Category::Mlu, index));
            }
        }
        let slot = slots[bar_of_beat[beat_idx]].entry(position).or_default();
        slot.prefixes.push(prefix);
        slot.notes.push([
            EventToken::new(Category::NoteVelocity, velocity as u16),
            EventToken::new(Category::NoteOn, note.pitch as u16),
            EventToken::new(Category::NoteDuration, units as u16),
        ]);
    }

    let mut tokens = Vec::new();
    for (b, bar) in slots.into_iter().enumerate() {
        tokens.push(EventToken::BAR);
        for (position, slot) in bar {
            tokens.push(EventToken::new(Category::Position, position as u16));
            if let Some(t) = slot.tempo {
                tokens.push(EventToken::new(Category::TempoClass, t.class as u16));
                tokens.push(EventToken::new(Category::Tempo, t.value as u16));
            }
            if let Some(c) = slot.chord {
                tokens.extend(chord_tokens(&c));
            }
            if let Some((letter, rep)) = slot.part_start {
                tokens.push(EventToken::new(Category::PartStart, letter));
                tokens.push(EventToken::new(Category::RepStart, rep));
            }
            for (prefix, note) in slot.prefixes.into_iter().zip(slot.notes) {
                tokens.extend(prefix);
                tokens.extend(note);
            }
        }
        if let Some(&(letter, rep)) = part_ends.get(&b) {
            tokens.push(EventToken::new(Category::RepEnd, rep));
            tokens.push(EventToken::new(Category::PartEnd, letter));
        }
    }
    Ok(Encoding { tokens, dropped_notes: dropped })
}

pub fn chord_tokens(chord: &ChordSymbol) -> [EventToken; 3] {
    [
        EventToken::new(Category::ChordTone, chord.tone.value() as u16),
        EventToken::new(Category::ChordType, chord.kind.index() as u16),
        EventToken::new(Category::ChordSlash, chord.slash.value() as u16),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("token {index} ({found}): expected one of [{}]", expected.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "))]
    Grammar { index: usize, found: EventToken, expected: Vec<Category> },
    #[error("token {index} ({found}): position does not increase within the bar")]
    PositionOrder { index: usize, found: EventToken },
    #[error("token {index} ({found}): value out of range")]
    ValueOutOfRange { index: usize, found: EventToken },
    #[error("stream ends inside a token group; expected one of [{}]", expected.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "))]
    Truncated { expected: Vec<Category> },
}

impl DecodeError {
    pub fn index(&self) -> Option<usize> {
        match self {
            DecodeError::Grammar { index, .. }
            | DecodeError::PositionOrder { index, .. }
            | DecodeError::ValueOutOfRange { index, .. } => Some(*index),
            DecodeError::Truncated { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pending {
    Free,
    Category(Category),
    AfterPhrase,
}

/// Token-stream grammar as an incremental checker.
#[derive(Debug, Clone, Copy)]
pub struct Grammar {
    seen_bar: bool,
    last_position: Option<u16>,
    pending: Pending,
    tempo_class: u16,
}

impl Default for Grammar {
    fn default() -> Self {
        Self { seen_bar: false, last_position: None, pending: Pending::Free, tempo_class: 0 }
    }
}

impl Grammar {
    /// True when no token group is open.
    pub fn is_free(&self) -> bool {
        self.pending == Pending::Free
    }

    fn expected(&self) -> Vec<Category> {
        match self.pending {
            Pending::Free => vec![],
            Pending::Category(c) => vec![c],
            Pending::AfterPhrase => vec![Category::Mlu, Category::NoteVelocity],
        }
    }

    /// Checks one token; the state is left untouched on error.
    pub fn accept(&mut self, index: usize, token: EventToken) -> Result<(), DecodeError> {
        use Category::*;
        let grammar = |expected: Vec<Category>| DecodeError::Grammar { index, found: token, expected };
        if let Some((lo, hi)) = token.category.fixed_range() {
            if !(lo..=hi).contains(&token.value) {
                return Err(DecodeError::ValueOutOfRange { index, found: token });
            }
        }
        let mut next = *self;
        match self.pending {
            Pending::Category(expected) if expected != token.category => return Err(grammar(vec![expected])),
            Pending::AfterPhrase if !matches!(token.category, Mlu | NoteVelocity) => {
                return Err(grammar(self.expected()))
            }
            Pending::Category(_) | Pending::AfterPhrase => {}
            Pending::Free => {
                if !self.seen_bar && token.category != Bar {
                    return Err(grammar(vec![Bar]));
                }
                match token.category {
                    NoteOn => return Err(grammar(vec![NoteVelocity])),
                    NoteDuration => return Err(grammar(vec![NoteOn])),
                    ChordType => return Err(grammar(vec![ChordTone])),
                    ChordSlash => return Err(grammar(vec![ChordType])),
                    Tempo => return Err(grammar(vec![TempoClass])),
                    TempoClass | ChordTone | NoteVelocity | Phrase | Mlu if self.last_position.is_none() => {
                        return Err(grammar(vec![Position]))
                    }
                    _ => {}
                }
            }
        }
        next.pending = match token.category {
            Bar => {
                next.seen_bar = true;
                next.last_position = None;
                Pending::Free
            }
            Position => {
                if self.last_position.is_some_and(|p| token.value <= p) {
                    return Err(DecodeError::PositionOrder { index, found: token });
                }
                next.last_position = Some(token.value);
                Pending::Free
            }
            TempoClass => {
                next.tempo_class = token.value;
                Pending::Category(Tempo)
            }
            Tempo => {
                if token.value / TEMPO_STEPS as u16 + 1 != self.tempo_class {
                    return Err(DecodeError::ValueOutOfRange { index, found: token });
                }
                Pending::Free
            }
            ChordTone => Pending::Category(ChordType),
            ChordType => Pending::Category(ChordSlash),
            NoteVelocity => Pending::Category(NoteOn),
            NoteOn => Pending::Category(NoteDuration),
            Phrase => Pending::AfterPhrase,
            Mlu => Pending::Category(NoteVelocity),
            ChordSlash | NoteDuration | PartStart | PartEnd | RepStart | RepEnd => Pending::Free,
        };
        *self = next;
        Ok(())
    }

    pub fn finish(&self) -> Result<(), DecodeError> {
        if self.is_free() {
            Ok(())
        } else {
            Err(DecodeError::Truncated { expected: self.expected() })
        }
    }
}

/// Checks the whole stream against the grammar.
pub fn validate_tokens(tokens: &[EventToken]) -> Result<(), DecodeError> {
    let mut g = Grammar::default();
    for (i, &t) in tokens.iter().enumerate() {
        g.accept(i, t)?;
    }
    g.finish()
}

/// Drops tokens (and partial token groups) that break the grammar, so the
/// result always decodes.
pub fn repair_tokens(tokens: &[EventToken]) -> Vec<EventToken> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut group: Vec<EventToken> = Vec::new();
    let mut committed = Grammar::default();
    let mut g = committed;
    for (i, &t) in tokens.iter().enumerate() {
        if g.accept(i, t).is_err() {
            group.clear();
            g = committed;
            if g.accept(i, t).is_err() {
                continue;
            }
        }
        group.push(t);
        if g.is_free() {
            out.append(&mut group);
            committed = g;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedNote {
    pub bar: usize,
    pub position: u8,
    pub duration_units: u8,
    pub velocity_bin: u8,
    pub velocity: u8,
    pub pitch: u8,
    pub onset_sec: f64,
    pub duration_sec: f64,
    pub phrase_start: bool,
    pub mlu: Option<u16>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedChord {
    pub bar: usize,
    pub position: u8,
    pub symbol: ChordSymbol,
    pub pitches: Vec<u8>,
    pub onset_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempoPoint {
    pub bar: usize,
    pub position: u8,
    pub tempo: TempoEvent,
    pub onset_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureMarker {
    pub bar: usize,
    pub token: EventToken,
}

/// Decoded lead sheet on the bar/position grid with times in seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Timeline {
    pub bars: usize,
    pub notes: Vec<TimedNote>,
    pub chords: Vec<TimedChord>,
    pub tempo: Vec<TempoPoint>,
    pub markers: Vec<StructureMarker>,
    pub end_sec: f64,
}

impl Timeline {
    pub fn notes_in_bar(&self, bar: usize) -> impl Iterator<Item = &TimedNote> {
        self.notes.iter().filter(move |n| n.bar == bar)
    }

    pub fn is_empty(&self) -> bool {
        self.notes.is_empty() && self.chords.is_empty()
    }
}

fn unit_sec(bpm: f64) -> f64 {
    60.0 / bpm / POSITIONS_PER_BEAT as f64
}

/// Decodes a grammar-valid stream into a timeline.
pub fn decode_tokens(tokens: &[EventToken]) -> Result<Timeline, DecodeError> {
    let mut grammar = Grammar::default();
    let mut tl = Timeline::default();
    let mut bpm = DEFAULT_BPM;
    let (mut cursor_pos, mut cursor_sec) = (0u16, 0.0f64);
    let mut bar: Option<usize> = None;
    let mut position = 0u8;
    let mut group: Vec<EventToken> = Vec::new();
    let (mut phrase, mut mlu) = (false, None);

    for (i, &t) in tokens.iter().enumerate() {
        grammar.accept(i, t)?;
        match t.category {
            Category::Bar => {
                if bar.is_some() {
                    cursor_sec += (POSITIONS_PER_BAR as u16 - cursor_pos) as f64 * unit_sec(bpm);
                }
                bar = Some(bar.map_or(0, |b| b + 1));
                cursor_pos = 0;
                position = 0;
            }
            Category::Position => {
                cursor_sec += (t.value - cursor_pos) as f64 * unit_sec(bpm);
                cursor_pos = t.value;
                position = t.value as u8;
            }
            Category::Phrase => phrase = true,
            Category::Mlu => mlu = Some(t.value),
            Category::PartStart | Category::PartEnd | Category::RepStart | Category::RepEnd => {
                tl.markers.push(StructureMarker { bar: bar.unwrap_or(0), token: t });
            }
            _ => group.push(t),
        }
        if !grammar.is_free() || group.is_empty() {
            continue;
        }
        let bar_idx = bar.unwrap_or(0);
        match group[0].category {
            Category::TempoClass => {
                let tempo = TempoEvent::new(group[0].value as u8, group[1].value as u8)
                    .map_err(|_| DecodeError::ValueOutOfRange { index: i, found: t })?;
                bpm = tempo.bpm();
                tl.tempo.push(TempoPoint { bar: bar_idx, position, tempo, onset_sec: cursor_sec });
            }
            Category::ChordTone => {
                let kind = ChordType::new(group[1].value as u8)
                    .ok_or(DecodeError::ValueOutOfRange { index: i - 1, found: group[1] })?;
                let symbol = ChordSymbol {
                    tone: PitchClass::new(group[0].value as u8).expect("range checked"),
                    kind,
                    slash: PitchClass::new(group[2].value as u8).expect("range checked"),
                };
                let pitches = chord_to_pitches(&symbol, CHORD_REGISTER).expect("register 60 fits every template");
                tl.chords.push(TimedChord { bar: bar_idx, position, symbol, pitches, onset_sec: cursor_sec });
            }
            Category::NoteVelocity => {
                let velocity_bin = group[0].value as u8;
                let duration_units = group[2].value as u8;
                tl.notes.push(TimedNote {
                    bar: bar_idx,
                    position,
                    duration_units,
                    velocity_bin,
                    velocity: velocity_to_midi(velocity_bin).expect("range checked"),
                    pitch: group[1].value as u8,
                    onset_sec: cursor_sec,
                    duration_sec: duration_units as f64 * unit_sec(bpm),
                    phrase_start: std::mem::take(&mut phrase),
                    mlu: mlu.take(),
                });
            }
            _ => {}
        }
        group.clear();
    }
    grammar.finish()?;
    if let Some(b) = bar {
        tl.bars = b + 1;
        tl.end_sec = cursor_sec + (POSITIONS_PER_BAR as u16 - cursor_pos) as f64 * unit_sec(bpm);
    }
    Ok(tl)
}

/// Shifts `NoteOn` by `semitones` and chord roots/basses modulo 12.
/// Returns `None` if a pitch leaves [0, 127].
pub fn shift_tokens(tokens: &[EventToken], semitones: i32) -> Option<Vec<EventToken>> {
    tokens
        .iter()
        .map(|t| match t.category {
            Category::NoteOn => {
                let p = t.value as i32 + semitones;
                (0..=127).contains(&p).then(|| EventToken::new(Category::NoteOn, p as u16))
            }
            Category::ChordTone | Category::ChordSlash => {
                Some(EventToken::new(t.category, PitchClass::from_semitones(t.value as i32 + semitones).value() as u16))
            }
            _ => Some(*t),
        })
        .collect()
}

/// Convenience: encode then decode.
pub fn solo_timeline(solo: &Solo, vocab: &Vocabulary) -> Result<Timeline, EncodeError> {
    let encoding = encode_solo(solo, vocab, false)?;
    Ok(decode_tokens(&encoding.tokens).expect("encoder output satisfies the grammar"))
}

//! Event vocabulary and the lead-sheet codec.

pub mod chord;
pub mod codec;
pub mod midi;
pub mod quantize;
pub mod stream;
pub mod vocab;

pub use chord::{
    chord_to_pitches, parse_chord, ChordError, ChordSymbol, ChordType, KeyTemplate, PitchClass, CHORD_TYPES,
};
pub use codec::{
    decode_tokens, encode_solo, repair_tokens, shift_tokens, solo_timeline, validate_tokens, DecodeError, EncodeError,
    Encoding, TimedChord, TimedNote, Timeline,
};
pub use quantize::{
    derive_tempo_events, justify_position, quantize_duration, quantize_velocity, velocity_to_midi, QuantizeError,
    TempoEvent,
};
pub use vocab::{Category, EventToken, VocabConfig, Vocabulary};

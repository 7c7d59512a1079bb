//! Synthetic lead sheets: random solos, AABA tunes and key-cycled corpora.
//! Used by the test suites and handy for trying the CLI without a dataset.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Beat, FormPart, Note, Solo, BEATS_PER_BAR};
use crate::tokenizer::chord::PITCH_CLASS_NAMES;

/// A note placed on the 64-step bar grid. `length` is in 64ths and may be
/// fractional (below 0.5 the note quantizes to nothing).
#[derive(Debug, Clone, PartialEq)]
pub struct SketchNote {
    pub position: u8,
    pub length: f64,
    pub pitch: u8,
    pub loudness_db: f64,
    pub phrase_start: bool,
    pub mlu_label: Option<String>,
}

impl SketchNote {
    pub fn new(position: u8, length: f64, pitch: u8, loudness_db: f64) -> Self {
        Self { position, length, pitch, loudness_db, phrase_start: false, mlu_label: None }
    }
}

/// One 4/4 bar: a chord annotation per beat and the melody notes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SketchBar {
    pub chords: [Option<String>; BEATS_PER_BAR],
    pub notes: Vec<SketchNote>,
}

/// Renders bars at a constant tempo into a solo. Notes must be sorted by
/// position within each bar.
pub fn render_solo(id: &str, bpm: f64, bars: &[SketchBar], parts: Vec<FormPart>) -> Solo {
    let beat = 60.0 / bpm;
    let bar_sec = beat * BEATS_PER_BAR as f64;
    let mut beats = Vec::with_capacity(bars.len() * BEATS_PER_BAR);
    let mut notes = Vec::new();
    for (b, bar) in bars.iter().enumerate() {
        let start = b as f64 * bar_sec;
        for (p, chord) in bar.chords.iter().enumerate() {
            beats.push(Beat {
                onset_sec: start + p as f64 * beat,
                duration_sec: beat,
                bar_index: b as u32,
                position_in_bar: p as u8,
                chord: chord.clone(),
            });
        }
        for n in &bar.notes {
            notes.push(Note {
                onset_sec: start + n.position as f64 / 16.0 * beat,
                duration_sec: n.length / 16.0 * beat,
                pitch: n.pitch as i16,
                loudness_db: n.loudness_db,
                phrase_start: n.phrase_start,
                mlu_label: n.mlu_label.clone(),
            });
        }
    }
    Solo { id: id.to_string(), notes, beats, parts }
}

const QUALITIES: [&str; 10] = ["", "m", "7", "maj7", "m7", "m7b5", "dim7", "7b9", "6", "9"];

pub fn random_chord<R: Rng + ?Sized>(rng: &mut R) -> String {
    let root = PITCH_CLASS_NAMES.choose(rng).expect("non-empty");
    let quality = QUALITIES.choose(rng).expect("non-empty");
    if rng.random_bool(0.1) {
        let bass = PITCH_CLASS_NAMES.choose(rng).expect("non-empty");
        format!("{root}{quality}/{bass}")
    } else {
        format!("{root}{quality}")
    }
}

/// A bar of 2-10 notes at distinct grid positions with a chord change on
/// beat 1 and sometimes beat 3. About one note in twenty is shorter than a
/// 64th; some notes run past the 32-unit duration cap.
pub fn random_bar<R: Rng + ?Sized>(rng: &mut R) -> SketchBar {
    let first = random_chord(rng);
    let third = if rng.random_bool(0.5) { random_chord(rng) } else { first.clone() };
    let count = rng.random_range(2..=10);
    let mut positions = rand::seq::index::sample(rng, 64, count).into_vec();
    positions.sort_unstable();
    let notes = positions
        .into_iter()
        .map(|p| {
            let length =
                if rng.random_bool(0.05) { rng.random_range(0.05..0.45) } else { rng.random_range(1..=40) as f64 };
            let mut n = SketchNote::new(p as u8, length, rng.random_range(48..=88), rng.random_range(35.0..95.0));
            n.phrase_start = rng.random_bool(0.1);
            if n.phrase_start {
                n.mlu_label = Some(["line", "lick", "melody"].choose(rng).expect("non-empty").to_string());
            }
            n
        })
        .collect();
    SketchBar { chords: [Some(first.clone()), Some(first), Some(third.clone()), Some(third)], notes }
}

/// Random solo with one form part per 8 bars.
pub fn random_solo<R: Rng + ?Sized>(rng: &mut R, id: &str, bars: usize) -> Solo {
    let sketch: Vec<SketchBar> = (0..bars).map(|_| random_bar(rng)).collect();
    let parts = (0..bars.div_ceil(8))
        .map(|i| FormPart {
            letter: "A".into(),
            repetition: i as u32 + 1,
            start_bar: (i * 8) as u32,
            end_bar: ((i * 8 + 7).min(bars - 1)) as u32,
        })
        .collect();
    render_solo(id, rng.random_range(60.0..260.0), &sketch, parts)
}

/// Seeded corpus of `count` random solos with 8 to `max_bars` bars.
pub fn random_corpus(seed: u64, count: usize, max_bars: usize) -> Vec<Solo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let bars = rng.random_range(8..=max_bars.max(8));
            random_solo(&mut rng, &format!("synth{i:03}"), bars)
        })
        .collect()
}

/// Two half notes from the octave above middle C and no chord symbols. At
/// 120 bpm and 1 Hz framing every chroma frame holds one pitch class, so
/// unrelated frames rarely look alike.
pub fn half_note_bar<R: Rng + ?Sized>(rng: &mut R) -> SketchBar {
    let notes = [0, 32].map(|p| SketchNote::new(p, 32.0, 60 + rng.random_range(0..12), 65.0)).to_vec();
    SketchBar { chords: Default::default(), notes }
}

/// AABA tune: two sections of `section_bars` bars from `bar`, the A section
/// repeated exactly.
pub fn aaba_solo<R, F>(rng: &mut R, id: &str, section_bars: usize, bpm: f64, mut bar: F) -> Solo
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> SketchBar,
{
    let a: Vec<SketchBar> = (0..section_bars).map(|_| bar(rng)).collect();
    let b: Vec<SketchBar> = (0..section_bars).map(|_| bar(rng)).collect();
    let bars: Vec<SketchBar> = [&a, &a, &b, &a].into_iter().flatten().cloned().collect();
    let parts = ["A", "A", "B", "A"]
        .iter()
        .enumerate()
        .map(|(i, letter)| FormPart {
            letter: letter.to_string(),
            repetition: [1, 2, 1, 3][i],
            start_bar: (i * section_bars) as u32,
            end_bar: ((i + 1) * section_bars - 1) as u32,
        })
        .collect();
    render_solo(id, bpm, &bars, parts)
}

/// `bars` fresh bars from `bar` at a fixed tempo, nothing repeated on purpose.
pub fn through_composed_solo<R, F>(rng: &mut R, id: &str, bars: usize, bpm: f64, mut bar: F) -> Solo
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> SketchBar,
{
    let sketch: Vec<SketchBar> = (0..bars).map(|_| bar(rng)).collect();
    render_solo(id, bpm, &sketch, vec![])
}

/// Tempo (bpm) at the centre of step `step` of the 110-140 bpm class.
pub fn class3_tempo(step: u8) -> f64 {
    110.0 + 2.5 * step as f64 + 1.25
}

const CYCLE_CHORDS: [(u8, &str); 4] = [(0, "maj7"), (9, "m7"), (2, "m7"), (7, "7")];
const CYCLE_STEPS: [[u8; 5]; 4] = [[0, 4, 7, 11, 2], [9, 0, 4, 7, 5], [2, 5, 9, 0, 10], [7, 11, 2, 5, 3]];

/// Bar `phase` (mod 4) of a four-bar turnaround transposed to `key`.
/// Every bar ends the same way: its last note sits at position 40 and
/// nothing sounds after beat 4 begins.
pub fn cycle_bar(key: u8, phase: usize) -> SketchBar {
    let (root, quality) = CYCLE_CHORDS[phase % 4];
    let chord = format!("{}{quality}", PITCH_CLASS_NAMES[((root + key) % 12) as usize]);
    let notes = CYCLE_STEPS[phase % 4]
        .iter()
        .enumerate()
        .map(|(i, &pc)| SketchNote::new(i as u8 * 8 + 8, 4.0, 60 + (pc + key) % 12, 65.0))
        .collect();
    SketchBar { chords: [Some(chord.clone()), Some(chord.clone()), Some(chord.clone()), Some(chord)], notes }
}

/// Twelve keys x `per_key` pieces of `bars` bars cycling through
/// [`cycle_bar`]. Piece `j` of a key starts at phase `j`, and key `k` is
/// played at tempo step `k`, so the only cue tying a continuation to its
/// prompt is key and tempo.
pub fn key_cycle_corpus(per_key: usize, bars: usize) -> Vec<Solo> {
    let mut out = Vec::new();
    for key in 0..12u8 {
        for j in 0..per_key {
            let sketch: Vec<SketchBar> = (0..bars).map(|b| cycle_bar(key, j + b)).collect();
            out.push(render_solo(&format!("k{key:02}_{j}"), class3_tempo(key), &sketch, vec![]));
        }
    }
    out
}

//! Lead-sheet chord grammar.
//!
//! A chord symbol is decomposed into a root pitch class, a quality (an index
//! into [`CHORD_TYPES`], which carries the key template) and a bass pitch class.
//! The grammar is `ROOT QUALITY [/ BASS]` where `ROOT` and `BASS` are a letter
//! `A`-`G` followed by an optional `#` or `b`. Qualities are matched against a
//! table of canonical names and common spellings (including the compact
//! `-7`, `j7`, `79b` style used in jazz transcription databases).

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

/// Number of pitch classes per octave.
pub const PITCH_CLASSES: u8 = 12;

/// Canonical spelling of each pitch class. Black keys use flats.
pub const PITCH_CLASS_NAMES: [&str; 12] = ["C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B"];

/// A chord quality with its key template (semitone offsets from the root).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyTemplate {
    pub name: &'static str,
    pub intervals: &'static [u8],
    aliases: &'static [&'static str],
}

impl KeyTemplate {
    const fn new(name: &'static str, intervals: &'static [u8], aliases: &'static [&'static str]) -> Self {
        Self { name, intervals, aliases }
    }

    /// All spellings accepted for this quality, canonical name first.
    pub fn spellings(&self) -> impl Iterator<Item = &'static str> + '_ {
        std::iter::once(self.name).chain(self.aliases.iter().copied())
    }
}

/// The chord-type table: 47 qualities covering triads, sevenths, extensions,
/// suspensions and altered dominants.
pub static CHORD_TYPES: [KeyTemplate; 47] = [
    KeyTemplate::new("maj", &[0, 4, 7], &["", "M", "major"]),
    KeyTemplate::new("m", &[0, 3, 7], &["-", "min", "mi"]),
    KeyTemplate::new("dim", &[0, 3, 6], &["o", "°"]),
    KeyTemplate::new("aug", &[0, 4, 8], &["+", "#5", "+5"]),
    KeyTemplate::new("sus4", &[0, 5, 7], &["sus"]),
    KeyTemplate::new("sus2", &[0, 2, 7], &[]),
    KeyTemplate::new("6", &[0, 4, 7, 9], &["maj6", "M6", "j6"]),
    KeyTemplate::new("m6", &[0, 3, 7, 9], &["-6", "min6"]),
    KeyTemplate::new("7", &[0, 4, 7, 10], &["dom7"]),
    KeyTemplate::new("maj7", &[0, 4, 7, 11], &["j7", "M7", "Δ", "Δ7", "^7", "^", "j"]),
    KeyTemplate::new("m7", &[0, 3, 7, 10], &["-7", "min7", "mi7"]),
    KeyTemplate::new("mmaj7", &[0, 3, 7, 11], &["-j7", "mj7", "mM7", "-maj7", "minmaj7", "-Δ7", "-j"]),
    KeyTemplate::new("m7b5", &[0, 3, 6, 10], &["ø", "ø7", "-7b5", "min7b5", "h7"]),
    KeyTemplate::new("dim7", &[0, 3, 6, 9], &["o7", "°7"]),
    KeyTemplate::new("7sus4", &[0, 5, 7, 10], &["7sus", "sus7"]),
    KeyTemplate::new("7#5", &[0, 4, 8, 10], &["+7", "aug7", "7+"]),
    KeyTemplate::new("maj7#5", &[0, 4, 8, 11], &["j7#5", "+j7", "augmaj7", "+maj7"]),
    KeyTemplate::new("7b5", &[0, 4, 6, 10], &[]),
    KeyTemplate::new("9", &[0, 4, 7, 10, 14], &["79"]),
    KeyTemplate::new("maj9", &[0, 4, 7, 11, 14], &["j79", "M9", "Δ9", "j9"]),
    KeyTemplate::new("m9", &[0, 3, 7, 10, 14], &["-9", "-79", "m79", "min9"]),
    KeyTemplate::new("7b9", &[0, 4, 7, 10, 13], &["79b"]),
    KeyTemplate::new("7#9", &[0, 4, 7, 10, 15], &["79#"]),
    KeyTemplate::new("7#11", &[0, 4, 7, 10, 18], &["711#"]),
    KeyTemplate::new("7b13", &[0, 4, 7, 10, 20], &["713b"]),
    KeyTemplate::new("13", &[0, 4, 7, 10, 14, 21], &["7913", "713"]),
    KeyTemplate::new("11", &[0, 4, 7, 10, 14, 17], &["7911"]),
    KeyTemplate::new("m11", &[0, 3, 7, 10, 14, 17], &["-11", "-7911", "m7911", "min11"]),
    KeyTemplate::new("maj7#11", &[0, 4, 7, 11, 18], &["j7#11", "j711#", "Δ#11"]),
    KeyTemplate::new("69", &[0, 4, 7, 9, 14], &["6/9", "6add9"]),
    KeyTemplate::new("m69", &[0, 3, 7, 9, 14], &["-69", "-6/9", "m6/9"]),
    KeyTemplate::new("add9", &[0, 4, 7, 14], &["add2", "2"]),
    KeyTemplate::new("madd9", &[0, 3, 7, 14], &["-add9", "m2"]),
    KeyTemplate::new("7alt", &[0, 4, 10, 13, 15, 20], &["alt"]),
    KeyTemplate::new("7b9b13", &[0, 4, 7, 10, 13, 20], &["79b13b"]),
    KeyTemplate::new("7#9b13", &[0, 4, 7, 10, 15, 20], &["79#13b"]),
    KeyTemplate::new("7b9#11", &[0, 4, 7, 10, 13, 18], &["79b11#"]),
    KeyTemplate::new("9sus4", &[0, 5, 7, 10, 14], &["9sus", "79sus"]),
    KeyTemplate::new("7sus4b9", &[0, 5, 7, 10, 13], &["7susb9", "79bsus"]),
    KeyTemplate::new("13sus4", &[0, 5, 7, 10, 14, 21], &["13sus"]),
    KeyTemplate::new("9#11", &[0, 4, 7, 10, 14, 18], &["7911#"]),
    KeyTemplate::new("13#11", &[0, 4, 7, 10, 14, 18, 21], &["7911#13"]),
    KeyTemplate::new("13b9", &[0, 4, 7, 10, 13, 21], &["79b13"]),
    KeyTemplate::new("m9b5", &[0, 3, 6, 10, 14], &["-79b5", "ø9"]),
    KeyTemplate::new("mmaj9", &[0, 3, 7, 11, 14], &["-j79", "mM9"]),
    KeyTemplate::new("maj13", &[0, 4, 7, 11, 14, 21], &["j7913", "M13", "j13"]),
    KeyTemplate::new("m13", &[0, 3, 7, 10, 14, 21], &["-13", "-7913", "min13"]),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChordError {
    #[error("cannot parse chord symbol {symbol:?}")]
    Syntax { symbol: String },
    #[error("unknown chord quality {quality:?} in {symbol:?}; nearest known: {}", suggestions.join(", "))]
    UnknownQuality { symbol: String, quality: String, suggestions: Vec<String> },
    #[error("chord type index {0} is not in the template table")]
    UnknownType(u8),
    #[error("chord voicing at register {register} leaves the MIDI range")]
    RegisterOverflow { register: i32 },
}

/// Pitch class 0-11 (C = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PitchClass(u8);

impl PitchClass {
    pub fn new(value: u8) -> Option<Self> {
        (value < PITCH_CLASSES).then_some(Self(value))
    }

    pub fn from_semitones(semitones: i32) -> Self {
        Self(semitones.rem_euclid(PITCH_CLASSES as i32) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn shift(self, semitones: i32) -> Self {
        Self::from_semitones(self.0 as i32 + semitones)
    }

    pub fn name(self) -> &'static str {
        PITCH_CLASS_NAMES[self.0 as usize]
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Index into [`CHORD_TYPES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChordType(u8);

impl ChordType {
    pub fn new(index: u8) -> Option<Self> {
        ((index as usize) < CHORD_TYPES.len()).then_some(Self(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn template(self) -> &'static KeyTemplate {
        &CHORD_TYPES[self.0 as usize]
    }

    pub fn by_name(name: &str) -> Option<Self> {
        quality_index().get(name).map(|&i| Self(i))
    }
}

/// A chord decomposed into root, quality and bass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChordSymbol {
    pub tone: PitchClass,
    pub kind: ChordType,
    pub slash: PitchClass,
}

impl ChordSymbol {
    pub fn new(tone: PitchClass, kind: ChordType, slash: Option<PitchClass>) -> Self {
        Self { tone, kind, slash: slash.unwrap_or(tone) }
    }

    pub fn transpose(self, semitones: i32) -> Self {
        Self { tone: self.tone.shift(semitones), kind: self.kind, slash: self.slash.shift(semitones) }
    }

    /// Pitch classes of the key template rooted at `tone` (bass excluded).
    pub fn pitch_classes(&self) -> impl Iterator<Item = PitchClass> + '_ {
        self.kind.template().intervals.iter().map(move |&i| self.tone.shift(i as i32))
    }
}

impl fmt::Display for ChordSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let quality = self.kind.template().name;
        let quality = if quality == "maj" { "" } else { quality };
        write!(f, "{}{}", self.tone, quality)?;
        if self.slash != self.tone {
            write!(f, "/{}", self.slash)?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ChordSymbol {
    type Err = ChordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_chord(s)
    }
}

fn chord_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^([A-G])([#b]?)(.*?)(?:/([A-G])([#b]?))?$").expect("chord grammar regex"))
}

fn quality_index() -> &'static HashMap<&'static str, u8> {
    static INDEX: OnceLock<HashMap<&'static str, u8>> = OnceLock::new();
    INDEX.get_or_init(|| {
        let mut map = HashMap::new();
        for (i, t) in CHORD_TYPES.iter().enumerate() {
            for spelling in t.spellings() {
                let previous = map.insert(spelling, i as u8);
                debug_assert!(previous.is_none(), "duplicate quality spelling {spelling:?}");
            }
        }
        map
    })
}

fn letter_pitch(letter: &str, accidental: &str) -> PitchClass {
    let base = match letter {
        "C" => 0,
        "D" => 2,
        "E" => 4,
        "F" => 5,
        "G" => 7,
        "A" => 9,
        "B" => 11,
        _ => unreachable!("regex restricts letters to A-G"),
    };
    let shift = match accidental {
        "#" => 1,
        "b" => -1,
        _ => 0,
    };
    PitchClass::from_semitones(base + shift)
}

/// Rewrites alternative spellings onto the table's vocabulary.
fn normalize_quality(quality: &str) -> String {
    let stripped: String = quality.chars().filter(|c| !matches!(c, '(' | ')' | ',' | ' ')).collect();
    if quality_index().contains_key(stripped.as_str()) {
        return stripped;
    }
    let mut q = stripped;
    for (from, to) in [("min", "m"), ("mi", "m"), ("-", "m"), ("Δ", "maj"), ("^", "maj"), ("j", "maj")] {
        if let Some(rest) = q.strip_prefix(from) {
            q = format!("{to}{rest}");
            break;
        }
    }
    q
}

fn lookup_quality(symbol: &str, quality: &str) -> Result<ChordType, ChordError> {
    let normalized = normalize_quality(quality);
    if let Some(&i) = quality_index().get(normalized.as_str()) {
        return Ok(ChordType(i));
    }
    let mut ranked: Vec<(usize, &str)> =
        CHORD_TYPES.iter().map(|t| (strsim::levenshtein(&normalized, t.name), t.name)).collect();
    ranked.sort();
    Err(ChordError::UnknownQuality {
        symbol: symbol.to_string(),
        quality: quality.to_string(),
        suggestions: ranked.iter().take(3).map(|(_, n)| n.to_string()).collect(),
    })
}

/// Chord symbol split into its textual parts, kept for spelling-preserving
/// transposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedChord {
    pub symbol: ChordSymbol,
    pub quality_text: String,
    pub has_slash: bool,
}

pub fn parse_chord_parts(symbol: &str) -> Result<ParsedChord, ChordError> {
    let trimmed = symbol.trim();
    let caps = chord_regex().captures(trimmed).ok_or_else(|| ChordError::Syntax { symbol: symbol.to_string() })?;
    let mut tone = letter_pitch(&caps[1], &caps[2]);
    let mut quality_text = caps.get(3).map_or("", |m| m.as_str());
    let kind = match lookup_quality(symbol, quality_text) {
        Ok(kind) => kind,
        // "D#5" is D with a raised fifth, not D# with an unknown "5"
        Err(err) if !caps[2].is_empty() => {
            let start = caps.get(2).map_or(0, |m| m.start());
            let end = caps.get(3).map_or(start, |m| m.end());
            match lookup_quality(symbol, &trimmed[start..end]) {
                Ok(kind) => {
                    tone = letter_pitch(&caps[1], "");
                    quality_text = &trimmed[start..end];
                    kind
                }
                Err(_) => return Err(err),
            }
        }
        Err(err) => return Err(err),
    };
    let slash = caps.get(4).map(|m| letter_pitch(m.as_str(), caps.get(5).map_or("", |a| a.as_str())));
    Ok(ParsedChord {
        symbol: ChordSymbol::new(tone, kind, slash),
        quality_text: quality_text.to_string(),
        has_slash: slash.is_some(),
    })
}

/// Parses a lead-sheet chord symbol such as `C7/G`, `Dm7`, `Bb-7` or `F#j7`.
pub fn parse_chord(symbol: &str) -> Result<ChordSymbol, ChordError> {
    parse_chord_parts(symbol).map(|p| p.symbol)
}

/// Transposes a chord string, keeping its quality spelling verbatim. Roots
/// and basses are respelled with [`PITCH_CLASS_NAMES`].
pub fn transpose_chord_text(symbol: &str, semitones: i32) -> Result<String, ChordError> {
    let parsed = parse_chord_parts(symbol)?;
    let shifted = parsed.symbol.transpose(semitones);
    let mut out = format!("{}{}", shifted.tone, parsed.quality_text);
    if parsed.has_slash {
        out.push('/');
        out.push_str(shifted.slash.name());
    }
    Ok(out)
}

/// MIDI voicing of a chord: the bass note (from the slash) one octave below
/// `register`, followed by the key template stacked on the root in the
/// octave starting at `register` (e.g. 60 for C4).
pub fn chord_to_pitches(chord: &ChordSymbol, register: i32) -> Result<Vec<u8>, ChordError> {
    let template = CHORD_TYPES.get(chord.kind.index() as usize).ok_or(ChordError::UnknownType(chord.kind.index()))?;
    let overflow = ChordError::RegisterOverflow { register };
    let midi = |p: i32| u8::try_from(p).ok().filter(|&p| p <= 127);
    let mut pitches = Vec::with_capacity(template.intervals.len() + 1);
    pitches.push(midi(register - 12 + chord.slash.value() as i32).ok_or(overflow.clone())?);
    for &interval in template.intervals {
        let p = register + chord.tone.value() as i32 + interval as i32;
        pitches.push(midi(p).ok_or(overflow.clone())?);
    }
    Ok(pitches)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pc(v: u8) -> PitchClass {
        PitchClass::new(v).unwrap()
    }

    #[test]
    fn table_has_47_strictly_increasing_templates() {
        assert_eq!(CHORD_TYPES.len(), 47);
        for t in &CHORD_TYPES {
            assert_eq!(t.intervals[0], 0, "{}", t.name);
            assert!(t.intervals.windows(2).all(|w| w[0] < w[1]), "{}", t.name);
            assert!(t.intervals.iter().all(|&i| i <= 21), "{}", t.name);
        }
        // building the index asserts there are no duplicate spellings
        assert!(quality_index().len() > 47);
    }

    #[test]
    fn dominant_seventh_template() {
        assert_eq!(ChordType::by_name("7").unwrap().template().intervals, &[0, 4, 7, 10]);
    }

    #[test]
    fn slash_chord() {
        let c = parse_chord("C7/G").unwrap();
        assert_eq!(c.tone, pc(0));
        assert_eq!(c.kind.template().name, "7");
        assert_eq!(c.slash, pc(7));
    }

    #[test]
    fn slash_defaults_to_tone() {
        let c = parse_chord("Dm7").unwrap();
        assert_eq!(c.tone, pc(2));
        assert_eq!(c.kind.template().name, "m7");
        assert_eq!(c.slash, pc(2));
    }

    #[test]
    fn invalid_root() {
        assert!(matches!(parse_chord("H7"), Err(ChordError::Syntax { .. })));
        assert!(matches!(parse_chord(""), Err(ChordError::Syntax { .. })));
        assert!(matches!(parse_chord("C7/X"), Err(ChordError::UnknownQuality { .. })));
    }

    #[test]
    fn unknown_quality_suggests_neighbours() {
        match parse_chord("Cmaj8") {
            Err(ChordError::UnknownQuality { suggestions, .. }) => {
                assert_eq!(suggestions.len(), 3);
                assert!(suggestions.iter().any(|s| s == "maj7" || s == "maj9"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn database_style_spellings() {
        let cases = [
            ("Bb-7", 10, "m7"),
            ("Ebj7", 3, "maj7"),
            ("F#o7", 6, "dim7"),
            ("G79b", 7, "7b9"),
            ("A-7b5", 9, "m7b5"),
            ("Db+", 1, "aug"),
            ("E7(#9)", 4, "7#9"),
            ("C6/9", 0, "69"),
            ("Cb", 11, "maj"),
            ("D#5", 2, "aug"),
            ("Eb#5", 3, "aug"),
            ("Fminmaj7", 5, "mmaj7"),
            ("Gsus", 7, "sus4"),
        ];
        for (s, tone, q) in cases {
            let c = parse_chord(s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert_eq!((c.tone.value(), c.kind.template().name), (tone, q), "{s}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["C7/G", "Dbm7", "F#maj7", "Bb", "E7alt/Ab"] {
            let c = parse_chord(s).unwrap();
            assert_eq!(parse_chord(&c.to_string()).unwrap(), c);
        }
    }

    #[test]
    fn transpose_text() {
        assert_eq!(transpose_chord_text("C7/G", 2).unwrap(), "D7/A");
        assert_eq!(transpose_chord_text("Bb-7", 3).unwrap(), "Db-7");
        assert_eq!(transpose_chord_text("C#j7", -1).unwrap(), "Cj7");
    }

    #[test]
    fn voicing_at_c4() {
        let c7 = parse_chord("C7").unwrap();
        assert_eq!(chord_to_pitches(&c7, 60).unwrap(), vec![48, 60, 64, 67, 70]);
        let c7g = parse_chord("C7/G").unwrap();
        assert_eq!(chord_to_pitches(&c7g, 60).unwrap(), vec![55, 60, 64, 67, 70]);
        assert!(chord_to_pitches(&c7, 120).is_err());
        assert!(chord_to_pitches(&c7, 5).is_err());
    }
}

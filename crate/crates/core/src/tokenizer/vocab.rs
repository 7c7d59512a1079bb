//! Event categories, tokens, and the token <-> id bijection.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use super::chord::CHORD_TYPES;
use super::quantize::{MAX_DURATION_UNITS, POSITIONS_PER_BAR, TEMPO_CLASSES, TEMPO_STEPS, VELOCITY_BINS};
use crate::corpus::DEFAULT_MLU_LABELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    NoteVelocity,
    NoteOn,
    NoteDuration,
    Bar,
    Position,
    TempoClass,
    Tempo,
    ChordTone,
    ChordType,
    ChordSlash,
    Phrase,
    Mlu,
    PartStart,
    PartEnd,
    RepStart,
    RepEnd,
}

impl Category {
    pub const ALL: [Category; 16] = [
        Category::NoteVelocity,
        Category::NoteOn,
        Category::NoteDuration,
        Category::Bar,
        Category::Position,
        Category::TempoClass,
        Category::Tempo,
        Category::ChordTone,
        Category::ChordType,
        Category::ChordSlash,
        Category::Phrase,
        Category::Mlu,
        Category::PartStart,
        Category::PartEnd,
        Category::RepStart,
        Category::RepEnd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::NoteVelocity => "NoteVelocity",
            Category::NoteOn => "NoteOn",
            Category::NoteDuration => "NoteDuration",
            Category::Bar => "Bar",
            Category::Position => "Position",
            Category::TempoClass => "TempoClass",
            Category::Tempo => "Tempo",
            Category::ChordTone => "ChordTone",
            Category::ChordType => "ChordType",
            Category::ChordSlash => "ChordSlash",
            Category::Phrase => "Phrase",
            Category::Mlu => "MLU",
            Category::PartStart => "PartStart",
            Category::PartEnd => "PartEnd",
            Category::RepStart => "RepStart",
            Category::RepEnd => "RepEnd",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Structure markers, omitted when encoding without structure.
    pub fn is_structure(self) -> bool {
        matches!(
            self,
            Category::Phrase
                | Category::Mlu
                | Category::PartStart
                | Category::PartEnd
                | Category::RepStart
                | Category::RepEnd
        )
    }

    pub fn is_chord(self) -> bool {
        matches!(self, Category::ChordTone | Category::ChordType | Category::ChordSlash)
    }

    /// Value range that does not depend on vocabulary configuration.
    pub fn fixed_range(self) -> Option<(u16, u16)> {
        let r = match self {
            Category::NoteVelocity => (1, VELOCITY_BINS as u16),
            Category::NoteOn => (0, 127),
            Category::NoteDuration => (1, MAX_DURATION_UNITS as u16),
            Category::Bar | Category::Phrase => (0, 0),
            Category::Position => (0, POSITIONS_PER_BAR as u16 - 1),
            Category::TempoClass => (1, TEMPO_CLASSES as u16),
            Category::Tempo => (0, (TEMPO_CLASSES * TEMPO_STEPS) as u16 - 1),
            Category::ChordTone | Category::ChordSlash => (0, 11),
            Category::ChordType => (0, CHORD_TYPES.len() as u16 - 1),
            Category::Mlu | Category::PartStart | Category::PartEnd | Category::RepStart | Category::RepEnd => {
                return None
            }
        };
        Some(r)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventToken {
    pub category: Category,
    pub value: u16,
}

impl EventToken {
    pub const BAR: EventToken = EventToken { category: Category::Bar, value: 0 };
    pub const PHRASE: EventToken = EventToken { category: Category::Phrase, value: 0 };

    pub fn new(category: Category, value: u16) -> Self {
        Self { category, value }
    }
}

impl fmt::Display for EventToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.category, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenParseError {
    #[error("malformed token {0:?}; expected CATEGORY(value)")]
    Syntax(String),
    #[error("unknown token category {0:?}")]
    UnknownCategory(String),
}

impl FromStr for EventToken {
    type Err = TokenParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let syntax = || TokenParseError::Syntax(s.to_string());
        let open = s.find('(').ok_or_else(syntax)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(syntax)?;
        let category =
            Category::from_name(&s[..open]).ok_or_else(|| TokenParseError::UnknownCategory(s[..open].to_string()))?;
        let value = inner.parse().map_err(|_| syntax())?;
        Ok(EventToken { category, value })
    }
}

/// Configurable parts of the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabConfig {
    pub mlu_labels: Vec<String>,
    pub part_letters: Vec<String>,
    pub max_repetition: u16,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            mlu_labels: DEFAULT_MLU_LABELS.iter().map(|s| s.to_string()).collect(),
            part_letters: ('A'..='Z').map(|c| c.to_string()).collect(),
            max_repetition: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Block {
    category: Category,
    first_id: u32,
    min_value: u16,
    len: u16,
}

/// Dense bijection between tokens and ids, ordered by category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    config: VocabConfig,
    blocks: Vec<Block>,
    size: u32,
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("vocabulary io: {0}")]
    Io(#[from] io::Error),
    #[error("vocabulary line {line}: {message}")]
    Format { line: usize, message: String },
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new(VocabConfig::default())
    }
}

impl Vocabulary {
    pub fn new(config: VocabConfig) -> Self {
        let mut blocks = Vec::with_capacity(Category::ALL.len());
        let mut next = 0u32;
        for category in Category::ALL {
            let (min_value, len) = match category.fixed_range() {
                Some((lo, hi)) => (lo, hi - lo + 1),
                None => match category {
                    Category::Mlu => (0, config.mlu_labels.len() as u16),
                    Category::PartStart | Category::PartEnd => (0, config.part_letters.len() as u16),
                    _ => (1, config.max_repetition),
                },
            };
            blocks.push(Block { category, first_id: next, min_value, len });
            next += len as u32;
        }
        Self { config, blocks, size: next }
    }

    pub fn config(&self) -> &VocabConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.size as usize
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    fn block(&self, category: Category) -> &Block {
        &self.blocks[category as usize]
    }

    /// Number of distinct tokens in a category.
    pub fn category_size(&self, category: Category) -> usize {
        self.block(category).len as usize
    }

    pub fn value_range(&self, category: Category) -> (u16, u16) {
        let b = self.block(category);
        (b.min_value, b.min_value + b.len.saturating_sub(1))
    }

    pub fn contains(&self, token: &EventToken) -> bool {
        self.id(token).is_some()
    }

    pub fn id(&self, token: &EventToken) -> Option<u32> {
        let b = self.block(token.category);
        let offset = token.value.checked_sub(b.min_value)?;
        (offset < b.len).then(|| b.first_id + offset as u32)
    }

    pub fn token(&self, id: u32) -> Option<EventToken> {
        let b = self.blocks.iter().rev().find(|b| b.first_id <= id && b.len > 0)?;
        let offset = id - b.first_id;
        (offset < b.len as u32).then(|| EventToken::new(b.category, b.min_value + offset as u16))
    }

    pub fn bar_id(&self) -> u32 {
        self.block(Category::Bar).first_id
    }

    pub fn ids(&self, tokens: &[EventToken]) -> Result<Vec<u32>, EventToken> {
        tokens.iter().map(|t| self.id(t).ok_or(*t)).collect()
    }

    pub fn tokens(&self, ids: &[u32]) -> Result<Vec<EventToken>, u32> {
        ids.iter().map(|&i| self.token(i).ok_or(i)).collect()
    }

    pub fn mlu_index(&self, label: &str) -> Option<u16> {
        self.config.mlu_labels.iter().position(|l| l == label).map(|i| i as u16)
    }

    pub fn part_index(&self, letter: &str) -> Option<u16> {
        self.config.part_letters.iter().position(|l| l == letter).map(|i| i as u16)
    }

    /// Size of the chord-related part of the vocabulary.
    pub fn chord_token_count(&self) -> usize {
        [Category::ChordTone, Category::ChordType, Category::ChordSlash]
            .into_iter()
            .map(|c| self.category_size(c))
            .sum()
    }

    fn label(&self, token: &EventToken) -> Option<&str> {
        match token.category {
            Category::Mlu => self.config.mlu_labels.get(token.value as usize).map(String::as_str),
            Category::PartStart | Category::PartEnd => {
                self.config.part_letters.get(token.value as usize).map(String::as_str)
            }
            Category::ChordType => CHORD_TYPES.get(token.value as usize).map(|t| t.name),
            _ => None,
        }
    }

    /// Writes the sidecar: one `id<TAB>TOKEN[<TAB>label]` line per id.
    pub fn write_sidecar<W: Write>(&self, mut out: W) -> io::Result<()> {
        for id in 0..self.size {
            let token = self.token(id).expect("dense ids");
            match self.label(&token) {
                Some(label) => writeln!(out, "{id}\t{token}\t{label}")?,
                None => writeln!(out, "{id}\t{token}")?,
            }
        }
        out.flush()
    }

    /// Rebuilds a vocabulary from its sidecar, checking every id. Blank
    /// lines and `#` comments are skipped.
    pub fn read_sidecar<R: BufRead>(reader: R) -> Result<Self, VocabError> {
        let mut rows = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| VocabError::Format { line: n + 1, message };
            let mut fields = line.split('\t');
            let id: u32 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(|| err("missing id".into()))?;
            let token: EventToken = fields
                .next()
                .ok_or_else(|| err("missing token".into()))?
                .parse()
                .map_err(|e: TokenParseError| err(e.to_string()))?;
            rows.push((n + 1, id, token, fields.next().map(str::to_string)));
        }
        let labels = |category: Category| -> Vec<String> {
            rows.iter().filter(|r| r.2.category == category).map(|r| r.3.clone().unwrap_or_default()).collect()
        };
        let config = VocabConfig {
            mlu_labels: labels(Category::Mlu),
            part_letters: labels(Category::PartStart),
            max_repetition: rows.iter().filter(|r| r.2.category == Category::RepStart).count() as u16,
        };
        let vocab = Self::new(config);
        if rows.len() != vocab.len() {
            return Err(VocabError::Format {
                line: rows.len(),
                message: format!("{} entries, expected {}", rows.len(), vocab.len()),
            });
        }
        for (line, id, token, _) in &rows {
            if vocab.id(token) != Some(*id) {
                return Err(VocabError::Format { line: *line, message: format!("id {id} does not match {token}") });
            }
        }
        Ok(vocab)
    }
}

//! Loading pieces from a corpus file or from token files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use leadsheet_core::corpus::{read_corpus, CorpusOptions, Solo};
use leadsheet_core::tokenizer::stream::read_tokens;
use leadsheet_core::tokenizer::{encode_solo, EventToken, VocabConfig, Vocabulary};

use crate::provenance::{InputDigest, RunConfig};

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Corpus file (JSON Lines, one solo per line).
    #[arg(long, conflicts_with = "tokens")]
    pub corpus: Option<PathBuf>,
    /// Token files, or directories holding `*.tokens` files.
    #[arg(long, num_args = 1..)]
    pub tokens: Vec<PathBuf>,
    /// Vocabulary sidecar; defaults to the built-in vocabulary.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Comma-separated MLU labels (corpus validation and vocabulary).
    #[arg(long, value_delimiter = ',')]
    pub mlu_labels: Option<Vec<String>>,
    /// Encode corpus input without phrase/MLU/part/repetition events.
    #[arg(long)]
    pub no_structure: bool,
}

pub struct Piece {
    pub id: String,
    pub tokens: Vec<EventToken>,
}

impl InputArgs {
    pub fn record(&self, config: &mut RunConfig) {
        config.set("corpus", self.corpus.as_ref().map_or("-".into(), |p| p.display().to_string()));
        let tokens: Vec<String> = self.tokens.iter().map(|p| p.display().to_string()).collect();
        config.set("tokens", if tokens.is_empty() { "-".into() } else { tokens.join(",") });
        config.set("vocab", self.vocab.as_ref().map_or("builtin".into(), |p| p.display().to_string()));
        config.set("mlu_labels", self.mlu_labels.as_ref().map_or("default".into(), |l| l.join(",")));
        config.set("include_structure", !self.no_structure);
    }

    pub fn corpus_options(&self) -> CorpusOptions {
        match &self.mlu_labels {
            Some(labels) => CorpusOptions { mlu_allow_list: Some(labels.clone()) },
            None => CorpusOptions::default(),
        }
    }

    pub fn vocabulary(&self, digest: &mut InputDigest) -> Result<Vocabulary> {
        if let Some(path) = &self.vocab {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            digest.add(&bytes);
            return Vocabulary::read_sidecar(bytes.as_slice()).with_context(|| format!("parsing {}", path.display()));
        }
        let mut config = VocabConfig::default();
        if let Some(labels) = &self.mlu_labels {
            config.mlu_labels = labels.clone();
        }
        Ok(Vocabulary::new(config))
    }

    /// Loads and validates the corpus file.
    pub fn solos(&self, digest: &mut InputDigest) -> Result<Vec<Solo>> {
        let path = self.corpus.as_ref().context("--corpus is required")?;
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        digest.add(&bytes);
        read_corpus(bytes.as_slice(), &self.corpus_options()).with_context(|| format!("loading {}", path.display()))
    }

    /// Pieces as token sequences, in input order.
    pub fn pieces(&self, vocab: &Vocabulary, digest: &mut InputDigest) -> Result<Vec<Piece>> {
        if self.corpus.is_some() {
            return self
                .solos(digest)?
                .iter()
                .map(|s| {
                    let enc = encode_solo(s, vocab, !self.no_structure)?;
                    Ok(Piece { id: s.id.clone(), tokens: enc.tokens })
                })
                .collect();
        }
        if self.tokens.is_empty() {
            bail!("give either --corpus or --tokens");
        }
        let files = token_files(&self.tokens)?;
        if files.is_empty() {
            bail!("no token files found");
        }
        files
            .iter()
            .map(|path| {
                let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                digest.add(&bytes);
                let tokens = read_tokens(bytes.as_slice()).with_context(|| format!("parsing {}", path.display()))?;
                let id = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into());
                Ok(Piece { id, tokens })
            })
            .collect()
    }
}

/// Expands directories to their `*.tokens` files, sorted by name.
pub fn token_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .with_context(|| format!("listing {}", path.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            found.retain(|p| p.extension().is_some_and(|e| e == "tokens"));
            found.sort();
            out.extend(found);
        } else {
            out.push(path.clone());
        }
    }
    Ok(out)
}

/// File-system friendly version of a piece id.
pub fn file_name(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect()
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

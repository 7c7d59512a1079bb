//! Lead-sheet event codec and objective evaluation battery for symbolic
//! jazz generation.
//!
//! * [`corpus`]: solos, the JSON Lines interchange format, transposition.
//! * [`tokenizer`]: event vocabulary, quantizers, chord grammar, codec.
//! * [`metrics`]: pitch-class entropy, grooving similarity, chord
//!   progression irregularity.
//! * [`structure`]: chroma, self-similarity, fitness scape plots and
//!   structureness indicators.
//! * [`challenge`]: continuation-prediction harness and an n-gram baseline.
//! * [`synth`]: synthetic lead sheets for tests and demos.

pub mod challenge;
pub mod corpus;
pub mod metrics;
pub mod structure;
pub mod synth;
pub mod tokenizer;

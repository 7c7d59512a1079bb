//! Structureness analysis: symbolic chroma, self-similarity, fitness scape
//! plots and structureness indicators.
//!
//! Frames are sampled at 1 Hz by default so that durations in frames are
//! durations in seconds.

pub mod chroma;
pub mod fitness;
pub mod scape;
pub mod ssm;

use thiserror::Error;

pub use chroma::{render_chroma, ChromaSequence, CHORD_WEIGHT, DEFAULT_FRAME_RATE, MELODY_WEIGHT};
pub use fitness::{segment_fitness, segment_fitness_detail, FitnessDetail};
pub use scape::{
    default_stride, scape_plot, scape_plot_with, structureness_indicator, write_pgm, write_pgm_annotated,
    write_text_matrix, ScapePlot,
};
pub use ssm::{compute_ssm, Ssm, SsmParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("timeline has no notes or chords")]
    EmptyTimeline,
    #[error("frame rate {0} must be positive and finite")]
    BadFrameRate(f64),
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("segment [{start}, {end}] is not inside 0..{n}")]
    BadSegment { start: usize, end: usize, n: usize },
    #[error("duration band [{lower}, {upper}] is invalid for a plot of {n} frames")]
    BadBand { lower: usize, upper: usize, n: usize },
    #[error("stride must be at least 1")]
    BadStride,
}

/// Frames, SSM and scape plot of one piece with the given parameters.
pub fn analyze(
    timeline: &crate::tokenizer::codec::Timeline,
    frame_rate: f64,
    params: &SsmParams,
    stride: Option<usize>,
) -> Result<ScapePlot, StructureError> {
    let chroma = render_chroma(timeline, frame_rate)?;
    let ssm = compute_ssm(&chroma, params)?;
    scape_plot_with(&ssm, stride.unwrap_or_else(|| scape::default_stride(ssm.len())))
}

//! Multilingual corpus-production pipeline: segmentation, truncation
//! screening, cross-validated transcript selection, punctuation adjustment
//! from word alignments, volume standardization, and length-ratio filtering.
//! External neural stages (denoising, ASR, forced alignment) plug in as
//! subprocess adapters or as precomputed manifest fields.

mod audio;
mod manifest;
mod punct;
mod run;
mod transcript;
mod vad;

use serde::{Deserialize, Serialize};

pub use audio::{normalize_volume, read_wav, write_wav, AudioBuffer};
pub use manifest::{
    filter_length_ratio, percentile_trim_indices, read_manifest, write_manifest, UtteranceRecord,
};
pub use punct::{
    adjust_punctuation, is_pause_punctuation, read_alignment_tsv, render_tokens,
    tokenize_with_punct, validate_timings, WordTiming, PAUSE_PUNCTUATION,
};
pub use run::{run_pipeline, write_stats, Adapters, CommandAdapter, PipelineStats, SEED_ENV_VAR};
pub use transcript::{select_transcript, symmetric_wer, SelectionOutcome, TranscriptHypothesis};
pub use vad::{detect_segments, extract_segment, screen_truncation};

use crate::error::{Error, Result};

/// A detected speech span, at most 30 seconds long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    start_s: f64,
    end_s: f64,
    speaker_id: Option<String>,
}

/// Hard cap on segment duration in seconds.
pub const MAX_SEGMENT_S: f64 = 30.0;

impl Segment {
    pub fn new(start_s: f64, end_s: f64, speaker_id: Option<String>) -> Result<Self> {
        if !(start_s >= 0.0 && end_s > start_s) {
            return Err(Error::InvalidInput(format!(
                "segment bounds must satisfy 0 <= start < end, got [{start_s}, {end_s}]"
            )));
        }
        if end_s - start_s > MAX_SEGMENT_S + 1e-9 {
            return Err(Error::InvalidInput(format!(
                "segment longer than {MAX_SEGMENT_S} s: [{start_s}, {end_s}]"
            )));
        }
        Ok(Self {
            start_s,
            end_s,
            speaker_id,
        })
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn end_s(&self) -> f64 {
        self.end_s
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn speaker_id(&self) -> Option<&str> {
        self.speaker_id.as_deref()
    }
}

/// Stage thresholds. Defaults carry the production gates: the 15% pairwise
/// WER gate, the 300 ms / 50 ms punctuation rules, the 0.6 volume peak, and
/// the 1% / 5% length-ratio trim.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub vad_energy_threshold_db: f64,
    pub frame_ms: u32,
    pub merge_gap_ms: u32,
    pub max_segment_s: f64,
    pub comma_gap_ms: u32,
    pub remove_punct_gap_ms: u32,
    pub pairwise_wer_gate: f64,
    pub peak_target: f64,
    pub low_trim_frac: f64,
    pub high_trim_frac: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            vad_energy_threshold_db: -40.0,
            frame_ms: 25,
            merge_gap_ms: 200,
            max_segment_s: MAX_SEGMENT_S,
            comma_gap_ms: 300,
            remove_punct_gap_ms: 50,
            pairwise_wer_gate: 0.15,
            peak_target: 0.6,
            low_trim_frac: 0.01,
            high_trim_frac: 0.05,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frame_ms == 0 {
            return Err(Error::InvalidConfig("frame_ms must be positive".into()));
        }
        if !(self.max_segment_s > 0.0 && self.max_segment_s <= MAX_SEGMENT_S) {
            return Err(Error::InvalidConfig(format!(
                "max_segment_s must be in (0, {MAX_SEGMENT_S}]"
            )));
        }
        if !(self.pairwise_wer_gate > 0.0 && self.pairwise_wer_gate < 1.0) {
            return Err(Error::InvalidConfig("pairwise_wer_gate must be in (0, 1)".into()));
        }
        if !(self.peak_target > 0.0 && self.peak_target <= 1.0) {
            return Err(Error::InvalidConfig("peak_target must be in (0, 1]".into()));
        }
        if self.low_trim_frac < 0.0
            || self.high_trim_frac < 0.0
            || self.low_trim_frac + self.high_trim_frac >= 1.0
        {
            return Err(Error::InvalidConfig(
                "trim fractions must be nonnegative and sum below 1".into(),
            ));
        }
        Ok(())
    }
}

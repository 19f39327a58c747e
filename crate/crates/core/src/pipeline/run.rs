//! Pipeline driver: segment, screen/trim, external denoise, transcript
//! selection, punctuation adjustment, volume standardization, and the
//! length-ratio filter, with per-stage drop accounting.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::audio::{normalize_volume, read_wav, write_wav, AudioBuffer};
use super::manifest::{percentile_trim_indices, UtteranceRecord};
use super::punct::{adjust_punctuation, render_tokens, tokenize_with_punct, WordTiming};
use super::transcript::{select_transcript, SelectionOutcome, TranscriptHypothesis};
use super::vad::{detect_segments, extract_segment, screen_truncation};
use super::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{granularity_for_language, tokenize};
use crate::fsq::token_count_for_duration;
use crate::real::Real;

/// Adapters receive the process seed through this environment variable.
pub const SEED_ENV_VAR: &str = "TOKENFORGE_SEED";

/// External stage command. The input audio path is appended to the argv and
/// the adapter must print its JSON result on stdout; a nonzero exit marks
/// the stage as failed for that utterance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommandAdapter {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl CommandAdapter {
    pub fn from_argv(argv: &[String]) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::InvalidConfig("adapter command must not be empty".into()))?;
        Ok(Self {
            program: program.clone(),
            args: args.to_vec(),
        })
    }

    pub fn run(&self, input: &Path, seed: u64) -> Result<serde_json::Value> {
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(input)
            .env(SEED_ENV_VAR, seed.to_string())
            .output()
            .map_err(|e| Error::AdapterFailed(format!("{}: {e}", self.program)))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(Error::AdapterFailed(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                stderr.trim()
            )));
        }
        serde_json::from_slice(&output.stdout)
            .map_err(|e| Error::AdapterFailed(format!("{}: bad JSON on stdout: {e}", self.program)))
    }
}

/// External stages. Denoising is optional (skipped when absent); ASR and
/// alignment fall back to precomputed manifest fields and are required when
/// a record reaches their stage without either.
#[derive(Debug, Clone, Default)]
pub struct Adapters {
    pub denoise: Option<CommandAdapter>,
    pub asr: Option<CommandAdapter>,
    pub align: Option<CommandAdapter>,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub input_records: u64,
    pub passthrough_records: u64,
    pub segments_detected: u64,
    pub output_records: u64,
    pub drops: BTreeMap<String, u64>,
}

impl PipelineStats {
    fn add_drop(&mut self, reason: &str) {
        *self.drops.entry(reason.to_owned()).or_insert(0) += 1;
    }

    pub fn total_drops(&self) -> u64 {
        self.drops.values().sum()
    }
}

const DROP_MISSING_AUDIO: &str = "missing-audio";
const DROP_AUDIO_UNREADABLE: &str = "audio-unreadable";
const DROP_NO_SPEECH: &str = "no-speech";
const DROP_TRUNCATED: &str = "truncated";
const DROP_ADAPTER_FAILURE: &str = "adapter-failure";
const DROP_NOT_ENOUGH_HYPOTHESES: &str = "not-enough-hypotheses";
const DROP_TRANSCRIPT_DISAGREEMENT: &str = "transcript-disagreement";
const DROP_TIMING_MISMATCH: &str = "timing-mismatch";
const DROP_DEGENERATE_AUDIO: &str = "degenerate-audio";
const DROP_TOO_SHORT: &str = "too-short";
const DROP_EMPTY_TEXT: &str = "empty-text";
const DROP_RATIO_OUTLIER: &str = "ratio-outlier";

enum SegmentOutcome {
    Keep(Box<UtteranceRecord>),
    Drop(&'static str),
}

struct ProcessedRecord {
    passthrough: Option<UtteranceRecord>,
    outcomes: Vec<SegmentOutcome>,
    segments_detected: u64,
}

#[derive(Deserialize)]
struct DenoiseResponse {
    audio_path: String,
}

#[derive(Deserialize)]
struct AsrResponse {
    transcripts: Vec<TranscriptHypothesis>,
}

#[derive(Deserialize)]
struct AlignResponse {
    word_timings: Vec<(String, f64, f64)>,
}

fn timing_tuples_to_words(tuples: &[(String, f64, f64)]) -> Vec<WordTiming> {
    tuples
        .iter()
        .map(|(word, start_ms, end_ms)| WordTiming {
            word: word.clone(),
            start_ms: *start_ms,
            end_ms: *end_ms,
        })
        .collect()
}

fn process_segment<T: Real>(
    record: &UtteranceRecord,
    out_id: String,
    segment_audio: &AudioBuffer<T>,
    speaker: Option<String>,
    cfg: &PipelineConfig,
    adapters: &Adapters,
    audio_dir: &Path,
) -> Result<SegmentOutcome> {
    let (keep, trimmed) = screen_truncation(segment_audio, cfg)?;
    if !keep {
        return Ok(SegmentOutcome::Drop(DROP_TRUNCATED));
    }
    if trimmed.is_empty() {
        return Ok(SegmentOutcome::Drop(DROP_NO_SPEECH));
    }

    let staging = audio_dir.join(format!("{out_id}.stage.wav"));
    let needs_staging =
        adapters.denoise.is_some() || adapters.asr.is_some() || adapters.align.is_some();
    if needs_staging {
        write_wav(&staging, &trimmed)?;
    }
    let cleanup = |result: Result<SegmentOutcome>| {
        if needs_staging {
            let _ = std::fs::remove_file(&staging);
        }
        result
    };

    // external denoise; the screen ran on the raw cut, the remaining stages
    // see the cleaned audio
    let mut audio = trimmed;
    if let Some(denoise) = &adapters.denoise {
        let response = match denoise.run(&staging, adapters.seed) {
            Ok(v) => v,
            Err(Error::AdapterFailed(_)) => {
                return cleanup(Ok(SegmentOutcome::Drop(DROP_ADAPTER_FAILURE)))
            }
            Err(e) => return cleanup(Err(e)),
        };
        let response: DenoiseResponse = match serde_json::from_value(response) {
            Ok(r) => r,
            Err(_) => return cleanup(Ok(SegmentOutcome::Drop(DROP_ADAPTER_FAILURE))),
        };
        audio = match read_wav::<T>(Path::new(&response.audio_path)) {
            Ok(a) => a,
            Err(_) => return cleanup(Ok(SegmentOutcome::Drop(DROP_ADAPTER_FAILURE))),
        };
        if adapters.asr.is_some() || adapters.align.is_some() {
            write_wav(&staging, &audio)?;
        }
    }

    // cross-validated transcript selection
    let hypotheses: Vec<TranscriptHypothesis> = if let Some(h) = &record.transcripts {
        h.clone()
    } else if let Some(asr) = &adapters.asr {
        let response = match asr.run(&staging, adapters.seed) {
            Ok(v) => v,
            Err(Error::AdapterFailed(_)) => {
                return cleanup(Ok(SegmentOutcome::Drop(DROP_ADAPTER_FAILURE)))
            }
            Err(e) => return cleanup(Err(e)),
        };
        match serde_json::from_value::<AsrResponse>(response) {
            Ok(r) => r.transcripts,
            Err(_) => return cleanup(Ok(SegmentOutcome::Drop(DROP_ADAPTER_FAILURE))),
        }
    } else {
        return cleanup(Err(Error::MissingAdapter(format!(
            "record {:?} has no transcripts and no asr adapter is configured",
            record.id
        ))));
    };
    let language = record.language().to_owned();
    let selected = match select_transcript(&hypotheses, cfg.pairwise_wer_gate, &language) {
        Ok(SelectionOutcome::Accepted { hypothesis, .. }) => hypothesis,
        Ok(SelectionOutcome::Rejected { .. }) => {
            return cleanup(Ok(SegmentOutcome::Drop(DROP_TRANSCRIPT_DISAGREEMENT)))
        }
        Err(Error::NotEnoughEvidence(_)) => {
            return cleanup(Ok(SegmentOutcome::Drop(DROP_NOT_ENOUGH_HYPOTHESES)))
        }
        Err(e) => return cleanup(Err(e)),
    };

    // word timings: record field, then the selected hypothesis, then adapter
    let timings: Vec<WordTiming> = if let Some(t) = &record.word_timings {
        timing_tuples_to_words(t)
    } else if let Some(t) = &selected.word_timings {
        t.clone()
    } else if let Some(align) = &adapters.align {
        let response = match align.run(&staging, adapters.seed) {
            Ok(v) => v,
            Err(Error::AdapterFailed(_)) => {
                return cleanup(Ok(SegmentOutcome::Drop(DROP_ADAPTER_FAILURE)))
            }
            Err(e) => return cleanup(Err(e)),
        };
        match serde_json::from_value::<AlignResponse>(response) {
            Ok(r) => timing_tuples_to_words(&r.word_timings),
            Err(_) => return cleanup(Ok(SegmentOutcome::Drop(DROP_ADAPTER_FAILURE))),
        }
    } else {
        return cleanup(Err(Error::MissingAdapter(format!(
            "record {:?} has no word timings and no align adapter is configured",
            record.id
        ))));
    };

    let tokens = tokenize_with_punct(&selected.text);
    let adjusted = match adjust_punctuation(
        &tokens,
        &timings,
        cfg.comma_gap_ms,
        cfg.remove_punct_gap_ms,
    ) {
        Ok(t) => t,
        Err(Error::TimingMismatch(_)) => {
            return cleanup(Ok(SegmentOutcome::Drop(DROP_TIMING_MISMATCH)))
        }
        Err(e) => return cleanup(Err(e)),
    };
    let text = render_tokens(&adjusted);

    let normalized = match normalize_volume(&audio, cfg.peak_target) {
        Ok(a) => a,
        Err(Error::DegenerateInput(_)) => {
            return cleanup(Ok(SegmentOutcome::Drop(DROP_DEGENERATE_AUDIO)))
        }
        Err(e) => return cleanup(Err(e)),
    };

    let speech_token_count = token_count_for_duration(normalized.duration_s())?;
    if speech_token_count == 0 {
        return cleanup(Ok(SegmentOutcome::Drop(DROP_TOO_SHORT)));
    }
    let text_token_count =
        tokenize(&text, granularity_for_language(&language)).len() as u64;
    if text_token_count == 0 {
        return cleanup(Ok(SegmentOutcome::Drop(DROP_EMPTY_TEXT)));
    }

    let out_path = audio_dir.join(format!("{out_id}.wav"));
    write_wav(&out_path, &normalized)?;

    let out = UtteranceRecord {
        id: out_id,
        audio_path: Some(out_path.to_string_lossy().into_owned()),
        sample_rate: Some(normalized.sample_rate()),
        language: record.language.clone(),
        speaker: speaker.or_else(|| record.speaker.clone()),
        text: Some(text),
        raw_text: record.raw_text.clone(),
        speech_token_count: Some(speech_token_count),
        text_token_count: Some(text_token_count),
        length_ratio: Some(speech_token_count as f64 / text_token_count as f64),
        transcripts: record.transcripts.clone(),
        word_timings: Some(
            timings
                .iter()
                .map(|t| (t.word.clone(), t.start_ms, t.end_ms))
                .collect(),
        ),
        ratio_filtered: None,
        extra: record.extra.clone(),
    };
    cleanup(Ok(SegmentOutcome::Keep(Box::new(out))))
}

fn process_record<T: Real>(
    record: UtteranceRecord,
    cfg: &PipelineConfig,
    adapters: &Adapters,
    audio_dir: &Path,
) -> Result<ProcessedRecord> {
    if record.ratio_filtered == Some(true) {
        return Ok(ProcessedRecord {
            passthrough: Some(record),
            outcomes: Vec::new(),
            segments_detected: 0,
        });
    }
    let Some(audio_path) = record.audio_path.clone() else {
        return Ok(ProcessedRecord {
            passthrough: None,
            outcomes: vec![SegmentOutcome::Drop(DROP_MISSING_AUDIO)],
            segments_detected: 0,
        });
    };
    let Ok(audio) = read_wav::<T>(Path::new(&audio_path)) else {
        return Ok(ProcessedRecord {
            passthrough: None,
            outcomes: vec![SegmentOutcome::Drop(DROP_AUDIO_UNREADABLE)],
            segments_detected: 0,
        });
    };
    let segments = detect_segments(&audio, cfg)?;
    if segments.is_empty() {
        return Ok(ProcessedRecord {
            passthrough: None,
            outcomes: vec![SegmentOutcome::Drop(DROP_NO_SPEECH)],
            segments_detected: 0,
        });
    }
    let multi = segments.len() > 1;
    let mut outcomes = Vec::with_capacity(segments.len());
    for (idx, segment) in segments.iter().enumerate() {
        let out_id = if multi {
            format!("{}_{idx:03}", record.id)
        } else {
            record.id.clone()
        };
        let segment_audio = extract_segment(&audio, segment);
        let speaker = segment.speaker_id().map(str::to_owned);
        outcomes.push(process_segment(
            &record,
            out_id,
            &segment_audio,
            speaker,
            cfg,
            adapters,
            audio_dir,
        )?);
    }
    Ok(ProcessedRecord {
        passthrough: None,
        outcomes,
        segments_detected: segments.len() as u64,
    })
}

/// Run the full pipeline over a manifest.
///
/// Processed audio is written under `audio_dir`. Records that already carry
/// the `ratio_filtered` stamp pass through untouched, which makes the
/// pipeline idempotent on its own output. Output order follows input order
/// regardless of `jobs`.
pub fn run_pipeline<T: Real>(
    cfg: &PipelineConfig,
    records: Vec<UtteranceRecord>,
    adapters: &Adapters,
    audio_dir: &Path,
    jobs: usize,
) -> Result<(Vec<UtteranceRecord>, PipelineStats)> {
    cfg.validate()?;
    std::fs::create_dir_all(audio_dir)?;

    let mut stats = PipelineStats {
        input_records: records.len() as u64,
        ..PipelineStats::default()
    };

    let process = |record: UtteranceRecord| process_record::<T>(record, cfg, adapters, audio_dir);
    let processed: Vec<ProcessedRecord> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
        pool.install(|| records.into_par_iter().map(process).collect::<Result<Vec<_>>>())?
    } else {
        records.into_iter().map(process).collect::<Result<Vec<_>>>()?
    };

    // assemble candidates for the global ratio filter
    enum Slot {
        Pass(Box<UtteranceRecord>),
        Candidates(usize), // count, in candidate order
    }
    let mut slots = Vec::with_capacity(processed.len());
    let mut candidates: Vec<UtteranceRecord> = Vec::new();
    for p in processed {
        stats.segments_detected += p.segments_detected;
        if let Some(record) = p.passthrough {
            stats.passthrough_records += 1;
            slots.push(Slot::Pass(Box::new(record)));
            continue;
        }
        let mut count = 0usize;
        for outcome in p.outcomes {
            match outcome {
                SegmentOutcome::Keep(record) => {
                    candidates.push(*record);
                    count += 1;
                }
                SegmentOutcome::Drop(reason) => stats.add_drop(reason),
            }
        }
        slots.push(Slot::Candidates(count));
    }

    let ratios: Vec<f64> = candidates
        .iter()
        .map(|r| r.computed_length_ratio().expect("candidates carry positive counts"))
        .collect();
    let (kept_idx, dropped_idx) =
        percentile_trim_indices(&ratios, cfg.low_trim_frac, cfg.high_trim_frac)?;
    let keep_set: std::collections::BTreeSet<usize> = kept_idx.into_iter().collect();
    for _ in &dropped_idx {
        stats.add_drop(DROP_RATIO_OUTLIER);
    }

    let mut output = Vec::new();
    let mut cand_iter = candidates.into_iter().enumerate();
    for slot in slots {
        match slot {
            Slot::Pass(record) => output.push(*record),
            Slot::Candidates(count) => {
                for _ in 0..count {
                    let (idx, mut record) =
                        cand_iter.next().expect("candidate counts match slots");
                    if keep_set.contains(&idx) {
                        record.ratio_filtered = Some(true);
                        output.push(record);
                    }
                }
            }
        }
    }
    stats.output_records = output.len() as u64;
    Ok((output, stats))
}

/// Convenience path-based wrapper used by the command-line driver.
pub fn write_stats<W: std::io::Write>(mut w: W, stats: &PipelineStats) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, stats)?;
    w.write_all(b"\n")?;
    Ok(())
}

//! Energy-based voice activity detection, segmentation, and truncation
//! screening.

use super::audio::AudioBuffer;
use super::{PipelineConfig, Segment};
use crate::error::{Error, Result};
use crate::real::Real;

pub(crate) fn frame_len(sample_rate: u32, frame_ms: u32) -> usize {
    ((u64::from(sample_rate) * u64::from(frame_ms)) / 1000).max(1) as usize
}

fn frame_rms_dbfs<T: Real>(frame: &[T]) -> f64 {
    let sum: f64 = frame.iter().map(|s| s.widen().powi(2)).sum();
    let rms = (sum / frame.len() as f64).sqrt();
    20.0 * rms.log10()
}

/// Per-frame dBFS energies (the final partial frame is included).
fn frame_energies<T: Real>(audio: &AudioBuffer<T>, flen: usize) -> Vec<f64> {
    audio
        .samples()
        .chunks(flen)
        .map(frame_rms_dbfs)
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Run {
    start: usize, // frame index, inclusive
    end: usize,   // frame index, exclusive
}

fn speech_runs(speech: &[bool]) -> Vec<Run> {
    let mut runs = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &s) in speech.iter().enumerate() {
        match (s, open) {
            (true, None) => open = Some(i),
            (false, Some(start)) => {
                runs.push(Run { start, end: i });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        runs.push(Run {
            start,
            end: speech.len(),
        });
    }
    runs
}

fn merge_runs(runs: Vec<Run>, max_gap_frames: usize) -> Vec<Run> {
    let mut merged: Vec<Run> = Vec::with_capacity(runs.len());
    for run in runs {
        match merged.last_mut() {
            Some(prev) if run.start - prev.end < max_gap_frames => prev.end = run.end,
            _ => merged.push(run),
        }
    }
    merged
}

/// Split a run at its lowest-energy interior frame until every piece fits.
fn split_long_runs(run: Run, energies: &[f64], max_frames: usize, out: &mut Vec<Run>) {
    if run.end - run.start <= max_frames || run.end - run.start < 2 {
        out.push(run);
        return;
    }
    let mut split = run.start + 1;
    for idx in run.start + 1..run.end {
        if energies[idx] < energies[split] {
            split = idx;
        }
    }
    split_long_runs(Run { start: run.start, end: split }, energies, max_frames, out);
    split_long_runs(Run { start: split, end: run.end }, energies, max_frames, out);
}

/// Detect speech segments: frames whose RMS exceeds the energy threshold
/// form runs, runs are merged across short gaps, padded by one frame of
/// context where available, and split so no segment exceeds the maximum
/// duration.
pub fn detect_segments<T: Real>(
    audio: &AudioBuffer<T>,
    cfg: &PipelineConfig,
) -> Result<Vec<Segment>> {
    cfg.validate()?;
    if audio.is_empty() {
        return Err(Error::EmptyInput("cannot segment empty audio"));
    }
    let rate = audio.sample_rate();
    let flen = frame_len(rate, cfg.frame_ms);
    let energies = frame_energies(audio, flen);
    let speech: Vec<bool> = energies
        .iter()
        .map(|&db| db > cfg.vad_energy_threshold_db)
        .collect();

    let frame_s = flen as f64 / f64::from(rate);
    let merge_frames = ((cfg.merge_gap_ms as f64 / 1000.0) / frame_s).ceil() as usize;
    let max_frames = ((cfg.max_segment_s / frame_s).floor() as usize).max(1);

    let mut runs = merge_runs(speech_runs(&speech), merge_frames.max(1));

    // pad one frame of context on each side, without crossing neighbours
    let n_frames = energies.len();
    for i in 0..runs.len() {
        let lower = if i == 0 { 0 } else { runs[i - 1].end };
        let upper = if i + 1 == runs.len() { n_frames } else { runs[i + 1].start };
        if runs[i].start > lower {
            runs[i].start -= 1;
        }
        if runs[i].end < upper {
            runs[i].end += 1;
        }
    }

    let mut bounded = Vec::new();
    for run in runs {
        split_long_runs(run, &energies, max_frames, &mut bounded);
    }

    bounded
        .into_iter()
        .map(|run| {
            let start_s = (run.start * flen) as f64 / f64::from(rate);
            let end_s = (run.end * flen).min(audio.len()) as f64 / f64::from(rate);
            Segment::new(start_s, end_s, None)
        })
        .collect()
}

/// Extract a segment's samples from the source buffer.
pub fn extract_segment<T: Real>(audio: &AudioBuffer<T>, segment: &Segment) -> AudioBuffer<T> {
    let rate = f64::from(audio.sample_rate());
    let start = (segment.start_s() * rate).round() as usize;
    let end = (segment.end_s() * rate).round() as usize;
    audio.slice(start, end)
}

/// Screen for abnormal truncation and trim silence.
///
/// If the first or last frame already carries speech energy the utterance
/// likely starts or ends mid-word and is flagged `keep = false`. Otherwise
/// leading and trailing sub-threshold frames are removed, keeping one quiet
/// frame of margin on each side; an all-silence input trims to empty.
pub fn screen_truncation<T: Real>(
    audio: &AudioBuffer<T>,
    cfg: &PipelineConfig,
) -> Result<(bool, AudioBuffer<T>)> {
    if audio.is_empty() {
        return Err(Error::EmptyInput("cannot screen empty audio"));
    }
    let flen = frame_len(audio.sample_rate(), cfg.frame_ms);
    let energies = frame_energies(audio, flen);
    let speech: Vec<bool> = energies
        .iter()
        .map(|&db| db > cfg.vad_energy_threshold_db)
        .collect();

    if speech[0] || *speech.last().expect("at least one frame") {
        return Ok((false, audio.clone()));
    }
    let Some(first) = speech.iter().position(|&s| s) else {
        return Ok((true, audio.slice(0, 0)));
    };
    let last = speech.iter().rposition(|&s| s).expect("found above");
    let start = (first - 1) * flen;
    let end = ((last + 2) * flen).min(audio.len());
    Ok((true, audio.slice(start, end)))
}

//! JSONL utterance manifests and the audio/text length-ratio filter.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::transcript::TranscriptHypothesis;
use crate::error::{Error, Result};

/// One manifest row. Unknown fields are preserved across a read/write cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct UtteranceRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Un-normalized source text, carried through untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speech_token_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_token_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcripts: Option<Vec<TranscriptHypothesis>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_timings: Option<Vec<(String, f64, f64)>>,
    /// Stamped once the record has passed the length-ratio stage; stamped
    /// records pass through untouched on a rerun.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_filtered: Option<bool>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl UtteranceRecord {
    pub fn language(&self) -> &str {
        self.language.as_deref().unwrap_or("en")
    }

    /// speech tokens / text tokens, when both counts are positive.
    pub fn computed_length_ratio(&self) -> Option<f64> {
        match (self.speech_token_count, self.text_token_count) {
            (Some(s), Some(t)) if s > 0 && t > 0 => Some(s as f64 / t as f64),
            _ => None,
        }
    }
}

pub fn read_manifest<R: BufRead>(reader: R) -> Result<Vec<UtteranceRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: UtteranceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("manifest line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_manifest<W: Write>(mut writer: W, records: &[UtteranceRecord]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Indices kept and dropped by percentile trimming: after a stable ascending
/// sort, the `floor(low_frac * n)` smallest and `floor(high_frac * n)`
/// largest values drop. Kept indices come back in their original order.
pub fn percentile_trim_indices(
    values: &[f64],
    low_frac: f64,
    high_frac: f64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if low_frac < 0.0 || high_frac < 0.0 || low_frac + high_frac >= 1.0 {
        return Err(Error::InvalidConfig(
            "trim fractions must be nonnegative and sum below 1".into(),
        ));
    }
    let n = values.len();
    let drop_low = (low_frac * n as f64).floor() as usize;
    let drop_high = (high_frac * n as f64).floor() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("ratios are finite")
            .then(a.cmp(&b))
    });
    let dropped_set: std::collections::BTreeSet<usize> = order[..drop_low]
        .iter()
        .chain(order[n - drop_high..].iter())
        .copied()
        .collect();
    let kept = (0..n).filter(|i| !dropped_set.contains(i)).collect();
    Ok((kept, dropped_set.into_iter().collect()))
}

/// Partition records by their length ratio. Every record must carry
/// positive speech and text token counts.
pub fn filter_length_ratio(
    records: Vec<UtteranceRecord>,
    low_frac: f64,
    high_frac: f64,
) -> Result<(Vec<UtteranceRecord>, Vec<UtteranceRecord>)> {
    let ratios: Vec<f64> = records
        .iter()
        .map(|r| {
            r.computed_length_ratio().ok_or_else(|| {
                Error::InvalidInput(format!(
                    "record {:?} lacks positive speech/text token counts",
                    r.id
                ))
            })
        })
        .collect::<Result<_>>()?;
    let (kept_idx, dropped_idx) = percentile_trim_indices(&ratios, low_frac, high_frac)?;
    let keep_set: std::collections::BTreeSet<usize> = kept_idx.into_iter().collect();
    let mut kept = Vec::with_capacity(keep_set.len());
    let mut dropped = Vec::with_capacity(dropped_idx.len());
    for (i, mut record) in records.into_iter().enumerate() {
        record.length_ratio = Some(ratios[i]);
        if keep_set.contains(&i) {
            kept.push(record);
        } else {
            dropped.push(record);
        }
    }
    Ok((kept, dropped))
}

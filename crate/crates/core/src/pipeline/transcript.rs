//! Cross-validated transcript selection.
//!
//! An utterance is transcribed by several systems; it is kept only when the
//! transcriptions agree (average pairwise WER below the gate), and the
//! accepted text is the medoid hypothesis.

use serde::{Deserialize, Serialize};

use super::punct::WordTiming;
use crate::error::{Error, Result};
use crate::eval::{edit_distance, granularity_for_language, tokenize};

/// One ASR system's transcription of an utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHypothesis {
    pub system_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_timings: Option<Vec<WordTiming>>,
}

/// Symmetric word error rate: edit distance over the longer length.
/// Two empty sequences are identical (rate 0).
pub fn symmetric_wer(a: &[String], b: &[String]) -> f64 {
    let denom = a.len().max(b.len());
    if denom == 0 {
        return 0.0;
    }
    edit_distance(a, b).distance as f64 / denom as f64
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionOutcome {
    Accepted {
        hypothesis: TranscriptHypothesis,
        average_wer: f64,
    },
    Rejected {
        average_wer: f64,
    },
}

impl SelectionOutcome {
    pub fn average_wer(&self) -> f64 {
        match self {
            SelectionOutcome::Accepted { average_wer, .. }
            | SelectionOutcome::Rejected { average_wer } => *average_wer,
        }
    }

    pub fn accepted(&self) -> Option<&TranscriptHypothesis> {
        match self {
            SelectionOutcome::Accepted { hypothesis, .. } => Some(hypothesis),
            SelectionOutcome::Rejected { .. } => None,
        }
    }
}

/// Average the symmetric WER over all unordered hypothesis pairs; accept the
/// utterance when the average is below `gate` and return the medoid (the
/// hypothesis with the lowest mean WER against the others, ties broken by
/// the lexicographically smallest `system_id`).
///
/// Tokenization follows the language: whitespace words for space-delimited
/// languages, single characters for Chinese/Japanese tags.
pub fn select_transcript(
    hypotheses: &[TranscriptHypothesis],
    gate: f64,
    language: &str,
) -> Result<SelectionOutcome> {
    if hypotheses.len() < 2 {
        return Err(Error::NotEnoughEvidence(format!(
            "transcript selection needs at least 2 hypotheses, got {}",
            hypotheses.len()
        )));
    }
    let granularity = granularity_for_language(language);
    let token_seqs: Vec<Vec<String>> = hypotheses
        .iter()
        .map(|h| tokenize(&h.text, granularity))
        .collect();

    let n = hypotheses.len();
    let mut pair = vec![vec![0.0f64; n]; n];
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let w = symmetric_wer(&token_seqs[i], &token_seqs[j]);
            pair[i][j] = w;
            pair[j][i] = w;
            total += w;
        }
    }
    let average_wer = total / (n * (n - 1) / 2) as f64;
    if average_wer >= gate {
        return Ok(SelectionOutcome::Rejected { average_wer });
    }

    let mut best = 0usize;
    let mut best_mean = f64::INFINITY;
    for i in 0..n {
        let mean: f64 = (0..n).filter(|&j| j != i).map(|j| pair[i][j]).sum::<f64>()
            / (n - 1) as f64;
        let better = mean < best_mean
            || (mean == best_mean && hypotheses[i].system_id < hypotheses[best].system_id);
        if better {
            best = i;
            best_mean = mean;
        }
    }
    Ok(SelectionOutcome::Accepted {
        hypothesis: hypotheses[best].clone(),
        average_wer,
    })
}

//! Punctuation adjustment driven by forced-alignment word timings: long
//! silences gain a comma, pause punctuation across negligible gaps is
//! removed.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Punctuation marks that indicate a pause.
pub const PAUSE_PUNCTUATION: [&str; 6] = [",", ";", ":", ".", "?", "!"];

/// One aligned word with millisecond boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordTiming {
    pub word: String,
    pub start_ms: f64,
    pub end_ms: f64,
}

pub fn is_pause_punctuation(token: &str) -> bool {
    PAUSE_PUNCTUATION.contains(&token)
}

/// A token carrying no alphanumeric character is punctuation and has no
/// timing entry.
fn is_punctuation_token(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(char::is_alphanumeric)
}

/// Timings must be increasing and non-overlapping.
pub fn validate_timings(timings: &[WordTiming]) -> Result<()> {
    for (i, t) in timings.iter().enumerate() {
        if !(t.end_ms >= t.start_ms) {
            return Err(Error::TimingMismatch(format!(
                "word {:?} ends before it starts",
                t.word
            )));
        }
        if i > 0 && t.start_ms < timings[i - 1].end_ms {
            return Err(Error::TimingMismatch(format!(
                "word {:?} overlaps its predecessor",
                t.word
            )));
        }
    }
    Ok(())
}

/// Split text into word and punctuation tokens; pause punctuation attached
/// to a word is peeled off into its own token.
pub fn tokenize_with_punct(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut rest = chunk;
        let mut trailing: Vec<String> = Vec::new();
        loop {
            let mut chars = rest.chars();
            match chars.next_back() {
                Some(c) if !c.is_alphanumeric() && rest.chars().any(char::is_alphanumeric) => {
                    trailing.push(c.to_string());
                    rest = chars.as_str();
                }
                _ => break,
            }
        }
        if !rest.is_empty() {
            out.push(rest.to_owned());
        }
        out.extend(trailing.into_iter().rev());
    }
    out
}

/// Join tokens back into text; punctuation attaches to the preceding token.
pub fn render_tokens(tokens: &[String]) -> String {
    let mut out = String::new();
    for token in tokens {
        if !out.is_empty() && !is_punctuation_token(token) {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Adjust punctuation from word timings.
///
/// For each adjacent word pair with gap `next.start - prev.end`:
/// a gap of at least 300 ms with no pause punctuation between the words
/// inserts a comma; a gap of at most 50 ms removes any pause punctuation
/// between them; gaps in between leave the text unchanged. Word tokens must
/// match the timing entries one for one (case-insensitive).
pub fn adjust_punctuation(
    tokens: &[String],
    timings: &[WordTiming],
    comma_gap_ms: u32,
    remove_punct_gap_ms: u32,
) -> Result<Vec<String>> {
    validate_timings(timings)?;
    let word_positions: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !is_punctuation_token(t))
        .map(|(i, _)| i)
        .collect();
    if word_positions.len() != timings.len() {
        return Err(Error::TimingMismatch(format!(
            "{} words in text but {} timing entries",
            word_positions.len(),
            timings.len()
        )));
    }
    for (&pos, timing) in word_positions.iter().zip(timings) {
        if !tokens[pos].eq_ignore_ascii_case(&timing.word) {
            return Err(Error::TimingMismatch(format!(
                "text word {:?} does not match aligned word {:?}",
                tokens[pos], timing.word
            )));
        }
    }

    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    if word_positions.is_empty() {
        return Ok(tokens.to_vec());
    }
    // leading punctuation plus the first word
    out.extend(tokens[..=word_positions[0]].iter().cloned());
    for w in 1..word_positions.len() {
        let between = &tokens[word_positions[w - 1] + 1..word_positions[w]];
        let gap_ms = timings[w].start_ms - timings[w - 1].end_ms;
        if gap_ms <= f64::from(remove_punct_gap_ms) {
            out.extend(
                between
                    .iter()
                    .filter(|t| !is_pause_punctuation(t))
                    .cloned(),
            );
        } else if gap_ms >= f64::from(comma_gap_ms)
            && !between.iter().any(|t| is_pause_punctuation(t))
        {
            out.push(",".to_owned());
            out.extend(between.iter().cloned());
        } else {
            out.extend(between.iter().cloned());
        }
        out.push(tokens[word_positions[w]].clone());
    }
    // trailing punctuation
    out.extend(tokens[word_positions[word_positions.len() - 1] + 1..].iter().cloned());
    Ok(out)
}

/// Parse a 3-column alignment TSV: word, start_ms, end_ms.
pub fn read_alignment_tsv<R: BufRead>(reader: R) -> Result<Vec<WordTiming>> {
    let mut timings = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut cols = trimmed.split('\t');
        let (Some(word), Some(start), Some(end)) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::Parse(format!(
                "alignment line {} needs 3 tab-separated columns",
                lineno + 1
            )));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("alignment line {}: {e}", lineno + 1)))
        };
        timings.push(WordTiming {
            word: word.to_owned(),
            start_ms: parse(start)?,
            end_ms: parse(end)?,
        });
    }
    validate_timings(&timings)?;
    Ok(timings)
}

//! CMU-format pronunciation dictionary parsing.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use crate::error::Result;

/// Word to pronunciation-variant list. Keys are case-insensitive and stored
/// uppercase; `WORD(2)`-style variant lines fold into the base entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PronDict {
    entries: BTreeMap<String, Vec<Vec<String>>>,
}

impl PronDict {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, pronunciation: Vec<String>) {
        self.entries
            .entry(word.to_uppercase())
            .or_default()
            .push(pronunciation);
    }

    pub fn get(&self, word: &str) -> Option<&[Vec<String>]> {
        self.entries.get(&word.to_uppercase()).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&word.to_uppercase())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Words with exactly one pronunciation.
    pub fn monophones(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|(_, prons)| prons.len() == 1)
            .map(|(w, _)| w.clone())
            .collect()
    }
}

/// Parse a CMU-format stream. Comment lines start with `;;;`. Malformed
/// lines are skipped and reported as warnings.
pub fn parse_pron_dict<R: BufRead>(reader: R) -> Result<(PronDict, Vec<String>)> {
    let mut dict = PronDict::new();
    let mut warnings = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(";;;") {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let head = parts.next().expect("non-empty line has a first token");
        let phonemes: Vec<String> = parts.map(str::to_owned).collect();
        if phonemes.is_empty() {
            warnings.push(format!("line {}: no phonemes for {head:?}", lineno + 1));
            continue;
        }
        let word = strip_variant_suffix(head);
        if word.is_empty() {
            warnings.push(format!("line {}: empty word", lineno + 1));
            continue;
        }
        dict.insert(word, phonemes);
    }
    Ok((dict, warnings))
}

/// `READ(2)` -> `READ`; anything without a trailing `(digits)` is untouched.
fn strip_variant_suffix(word: &str) -> &str {
    if let Some(open) = word.rfind('(') {
        if word.ends_with(')') {
            let inner = &word[open + 1..word.len() - 1];
            if !inner.is_empty() && inner.chars().all(|c| c.is_ascii_digit()) {
                return &word[..open];
            }
        }
    }
    word
}

//! Scoring harness: edit-distance error rates, embedding similarity,
//! emotion accuracy, and per-language report tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Token granularity for error rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Word,
    Char,
}

/// Unit-cost Levenshtein distance with its operation decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub distance: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
}

/// Levenshtein distance between token sequences with a canonical
/// substitution/insertion/deletion decomposition (ties in the backtrace
/// prefer deletions, then insertions).
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditCounts {
    let m = reference.len();
    let n = hypothesis.len();
    let mut d = vec![vec![0usize; n + 1]; m + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=n {
        d[0][j] = j;
    }
    for i in 1..=m {
        for j in 1..=n {
            let cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            d[i][j] = (d[i - 1][j] + 1)
                .min(d[i][j - 1] + 1)
                .min(d[i - 1][j - 1] + cost);
        }
    }

    let mut counts = EditCounts {
        distance: d[m][n],
        ..EditCounts::default()
    };
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            counts.deletions += 1;
            i -= 1;
        } else if j > 0 && d[i][j] == d[i][j - 1] + 1 {
            counts.insertions += 1;
            j -= 1;
        } else {
            if reference[i - 1] != hypothesis[j - 1] {
                counts.substitutions += 1;
            }
            i -= 1;
            j -= 1;
        }
    }
    counts
}

/// Split text into scoring tokens. Char granularity drops all whitespace.
pub fn tokenize(text: &str, granularity: Granularity) -> Vec<String> {
    match granularity {
        Granularity::Word => text.split_whitespace().map(str::to_owned).collect(),
        Granularity::Char => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    }
}

/// Lowercase, strip punctuation, collapse whitespace.
pub fn normalize_for_scoring(text: &str) -> String {
    let kept: String = text
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c
            } else {
                ' '
            }
        })
        .collect();
    kept.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Edit distance divided by reference length.
pub fn error_rate(reference: &str, hypothesis: &str, granularity: Granularity) -> Result<f64> {
    let r = tokenize(reference, granularity);
    let h = tokenize(hypothesis, granularity);
    if r.is_empty() {
        return Err(Error::EmptyInput("error_rate requires a non-empty reference"));
    }
    Ok(edit_distance(&r, &h).distance as f64 / r.len() as f64)
}

/// Cosine similarity, clamped into `[-1, 1]` against rounding.
pub fn cosine_similarity<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let mut dot = T::zero();
    let mut na = T::zero();
    let mut nb = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == T::zero() || nb == T::zero() {
        return Err(Error::DegenerateInput("zero vector has no direction".into()));
    }
    let sim = dot / (na.sqrt() * nb.sqrt());
    Ok(sim.min(T::one()).max(-T::one()))
}

/// Percent improvement of `new` over `old`: `100 * (old - new) / old`.
pub fn relative_improvement(old: f64, new: f64) -> Result<f64> {
    if !(old > 0.0) {
        return Err(Error::InvalidInput(
            "relative improvement needs a positive baseline".into(),
        ));
    }
    Ok(100.0 * (old - new) / old)
}

/// One scored utterance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalItem {
    pub id: String,
    pub language: String,
    pub reference: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_embedding_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis_embedding_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_emotion: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_emotion: Option<String>,
}

/// Aggregates for one language (and for the overall row).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LanguageReport {
    pub n: usize,
    /// Corpus-level rate: total edits over total reference tokens.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wer_or_cer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_similarity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emotion_accuracy: Option<f64>,
    pub edits: usize,
    pub reference_tokens: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub per_language: BTreeMap<String, LanguageReport>,
    pub overall: LanguageReport,
}

/// Whether hypothesis/reference text is normalized before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextPrep {
    #[default]
    Normalized,
    Raw,
}

/// Languages scored at character granularity (Chinese/Japanese style tags).
pub fn granularity_for_language(language: &str) -> Granularity {
    let lower = language.to_ascii_lowercase();
    if lower.starts_with("zh") || lower.starts_with("ja") || lower.starts_with("yue") {
        Granularity::Char
    } else {
        Granularity::Word
    }
}

#[derive(Default)]
struct Accum {
    n: usize,
    edits: usize,
    ref_tokens: usize,
    sim_sum: f64,
    sim_n: usize,
    emo_correct: usize,
    emo_n: usize,
}

impl Accum {
    fn add_item(&mut self, item: &EvalItem, prep: TextPrep) -> Result<()> {
        self.n += 1;
        let (reference, hypothesis) = match prep {
            TextPrep::Normalized => (
                normalize_for_scoring(&item.reference),
                normalize_for_scoring(&item.hypothesis),
            ),
            TextPrep::Raw => (item.reference.clone(), item.hypothesis.clone()),
        };
        let granularity = granularity_for_language(&item.language);
        let r = tokenize(&reference, granularity);
        let h = tokenize(&hypothesis, granularity);
        // items with an empty reference contribute nothing to the rate
        if !r.is_empty() {
            self.edits += edit_distance(&r, &h).distance;
            self.ref_tokens += r.len();
        }
        if let (Some(a), Some(b)) = (&item.reference_embedding, &item.hypothesis_embedding) {
            self.sim_sum += cosine_similarity(a, b)?.widen();
            self.sim_n += 1;
        }
        if let (Some(t), Some(p)) = (&item.target_emotion, &item.predicted_emotion) {
            self.emo_n += 1;
            if t == p {
                self.emo_correct += 1;
            }
        }
        Ok(())
    }

    fn report(&self) -> LanguageReport {
        LanguageReport {
            n: self.n,
            wer_or_cer: (self.ref_tokens > 0)
                .then(|| self.edits as f64 / self.ref_tokens as f64),
            mean_similarity: (self.sim_n > 0).then(|| self.sim_sum / self.sim_n as f64),
            emotion_accuracy: (self.emo_n > 0)
                .then(|| self.emo_correct as f64 / self.emo_n as f64),
            edits: self.edits,
            reference_tokens: self.ref_tokens,
        }
    }
}

/// Group items by language and aggregate rates, similarities, and
/// emotion accuracy; languages are emitted in sorted order.
pub fn aggregate(items: &[EvalItem], prep: TextPrep) -> Result<EvalReport> {
    let mut by_lang: BTreeMap<String, Accum> = BTreeMap::new();
    let mut overall = Accum::default();
    for item in items {
        by_lang
            .entry(item.language.clone())
            .or_default()
            .add_item(item, prep)?;
        overall.add_item(item, prep)?;
    }
    Ok(EvalReport {
        per_language: by_lang.into_iter().map(|(k, v)| (k, v.report())).collect(),
        overall: overall.report(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "-".to_owned(),
    }
}

/// Plain-text table with one row per language plus the overall row.
pub fn render_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>6} {:>12} {:>12} {:>12}",
        "language", "n", "wer_or_cer", "similarity", "emo_acc"
    );
    for (lang, row) in &report.per_language {
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>12} {:>12} {:>12}",
            lang,
            row.n,
            fmt_opt(row.wer_or_cer),
            fmt_opt(row.mean_similarity),
            fmt_opt(row.emotion_accuracy)
        );
    }
    let _ = writeln!(
        out,
        "{:<12} {:>6} {:>12} {:>12} {:>12}",
        "overall",
        report.overall.n,
        fmt_opt(report.overall.wer_or_cer),
        fmt_opt(report.overall.mean_similarity),
        fmt_opt(report.overall.emotion_accuracy)
    );
    out
}

/// Read an embedding side file: little-endian u32 dimension header followed
/// by that many little-endian f32 values.
pub fn read_embedding_file<R: Read>(mut r: R) -> Result<Vec<f64>> {
    let mut header = [0u8; 4];
    r.read_exact(&mut header)?;
    let dim = u32::from_le_bytes(header) as usize;
    let mut body = vec![0u8; dim * 4];
    r.read_exact(&mut body)?;
    Ok(body
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect())
}

/// Read items from JSONL, resolving embedding side files relative to
/// `base_dir`.
pub fn read_items<R: BufRead>(r: R, base_dir: &Path) -> Result<Vec<EvalItem>> {
    let mut items = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut item: EvalItem = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("items line {}: {e}", lineno + 1)))?;
        if item.reference_embedding.is_none() {
            if let Some(path) = &item.reference_embedding_path {
                let f = std::fs::File::open(base_dir.join(path))?;
                item.reference_embedding = Some(read_embedding_file(f)?);
            }
        }
        if item.hypothesis_embedding.is_none() {
            if let Some(path) = &item.hypothesis_embedding_path {
                let f = std::fs::File::open(base_dir.join(path))?;
                item.hypothesis_embedding = Some(read_embedding_file(f)?);
            }
        }
        items.push(item);
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s, Granularity::Word)
    }

    #[test]
    fn edit_distance_identical() {
        let c = edit_distance(&toks("a b c"), &toks("a b c"));
        assert_eq!(
            (c.distance, c.substitutions, c.insertions, c.deletions),
            (0, 0, 0, 0)
        );
    }

    #[test]
    fn edit_distance_one_substitution() {
        let c = edit_distance(&toks("a b c"), &toks("a x c"));
        assert_eq!(
            (c.distance, c.substitutions, c.insertions, c.deletions),
            (1, 1, 0, 0)
        );
    }

    #[test]
    fn edit_distance_empty_reference() {
        let c = edit_distance(&toks(""), &toks("x y z w"));
        assert_eq!((c.distance, c.insertions), (4, 4));
        let c = edit_distance(&toks("x y"), &toks(""));
        assert_eq!((c.distance, c.deletions), (2, 2));
    }

    #[test]
    fn decomposition_sums_to_distance() {
        let c = edit_distance(&toks("the quick brown fox"), &toks("quick brown foxes jump"));
        assert_eq!(c.distance, c.substitutions + c.insertions + c.deletions);
    }

    #[test]
    fn error_rate_examples() {
        assert!((error_rate("a b c", "a x c", Granularity::Word).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(error_rate("a b c", "a b c", Granularity::Word).unwrap(), 0.0);
        assert_eq!(error_rate("ab", "abcd", Granularity::Char).unwrap(), 1.0);
        assert!(error_rate("", "x", Granularity::Word).is_err());
    }

    #[test]
    fn char_granularity_strips_whitespace() {
        assert_eq!(tokenize("a b", Granularity::Char), vec!["a", "b"]);
        assert_eq!(error_rate("你 好", "你好", Granularity::Char).unwrap(), 0.0);
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&[1.0f64, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_similarity(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cosine_matches_scalar_oracle() {
        let a = [0.3, -1.2, 0.7, 2.0];
        let b = [1.1, 0.2, -0.5, 0.9];
        // independent scalar dot/norm computation
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let got = cosine_similarity(&a, &b).unwrap();
        assert!((got - dot / (na * nb)).abs() < 1e-12);
    }

    #[test]
    fn cosine_scale_invariance() {
        let a = [0.4, -0.9, 1.3];
        let scaled: Vec<f64> = a.iter().map(|x| 3.7 * x).collect();
        assert!((cosine_similarity(&a, &scaled).unwrap() - 1.0).abs() < 1e-12);
        let negated: Vec<f64> = a.iter().map(|x| -0.5 * x).collect();
        assert!((cosine_similarity(&a, &negated).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_improvement_examples() {
        let v = relative_improvement(6.83, 5.09).unwrap();
        assert!((v - 25.48).abs() < 0.005, "got {v}");
        let v = relative_improvement(1.45, 0.81).unwrap();
        assert!((v - 44.14).abs() < 0.005, "got {v}");
        assert_eq!(relative_improvement(3.0, 3.0).unwrap(), 0.0);
        assert!(relative_improvement(0.0, 1.0).is_err());
    }

    #[test]
    fn aggregate_single_perfect_item() {
        let item = EvalItem {
            id: "1".into(),
            language: "en".into(),
            reference: "hello world".into(),
            hypothesis: "hello world".into(),
            reference_embedding: Some(vec![1.0, 0.0]),
            hypothesis_embedding: Some(vec![2.0, 0.0]),
            reference_embedding_path: None,
            hypothesis_embedding_path: None,
            target_emotion: Some("happy".into()),
            predicted_emotion: Some("happy".into()),
        };
        let report = aggregate(&[item], TextPrep::Normalized).unwrap();
        let en = &report.per_language["en"];
        assert_eq!(en.wer_or_cer, Some(0.0));
        assert_eq!(en.mean_similarity, Some(1.0));
        assert_eq!(en.emotion_accuracy, Some(1.0));
    }

    #[test]
    fn aggregate_emotion_accuracy_fraction() {
        let mut items = Vec::new();
        for i in 0..50 {
            items.push(EvalItem {
                id: format!("{i}"),
                language: "zh".into(),
                reference: "好".into(),
                hypothesis: "好".into(),
                reference_embedding: None,
                hypothesis_embedding: None,
                reference_embedding_path: None,
                hypothesis_embedding_path: None,
                target_emotion: Some("happy".into()),
                predicted_emotion: Some(if i < 49 { "happy" } else { "sad" }.into()),
            });
        }
        let report = aggregate(&items, TextPrep::Normalized).unwrap();
        assert_eq!(report.per_language["zh"].emotion_accuracy, Some(0.98));
    }

    #[test]
    fn aggregate_totals_sum_over_languages() {
        let mk = |lang: &str, r: &str, h: &str| EvalItem {
            id: "x".into(),
            language: lang.into(),
            reference: r.into(),
            hypothesis: h.into(),
            reference_embedding: None,
            hypothesis_embedding: None,
            reference_embedding_path: None,
            hypothesis_embedding_path: None,
            target_emotion: None,
            predicted_emotion: None,
        };
        let items = vec![
            mk("en", "a b", "a b"),
            mk("en", "a b c", "a x c"),
            mk("zh", "你好", "你好"),
        ];
        let report = aggregate(&items, TextPrep::Normalized).unwrap();
        let total: usize = report.per_language.values().map(|r| r.n).sum();
        assert_eq!(total, report.overall.n);
        let edits: usize = report.per_language.values().map(|r| r.edits).sum();
        assert_eq!(edits, report.overall.edits);
    }

    #[test]
    fn normalization_strips_case_and_punct() {
        assert_eq!(normalize_for_scoring("Hello,  World!"), "hello world");
    }

    #[test]
    fn embedding_file_roundtrip() {
        let vals = [0.25f32, -1.5, 3.0];
        let mut buf = Vec::new();
        buf.extend_from_slice(&3u32.to_le_bytes());
        for v in vals {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let got = read_embedding_file(buf.as_slice()).unwrap();
        assert_eq!(got, vec![0.25, -1.5, 3.0]);
    }
}

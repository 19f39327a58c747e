//! Differentiable readers that score sampled token sequences.
//!
//! A reader exposes the log-probability of a target under the sampled tokens
//! and its gradient with respect to the soft sample, which is all the
//! optimizer needs to backpropagate rewards.

use serde::{Deserialize, Serialize};

use super::{log_softmax, softmax};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

pub trait Reader<T: Real> {
    /// Output symbols (text tokens or attribute labels).
    fn vocab(&self) -> &[String];

    /// Codebook size `Q` expected on the sample axis.
    fn num_codes(&self) -> usize;

    /// Log-probability of `target` given the soft token rows.
    fn log_prob(&self, soft: &Mat<T>, target: &[usize]) -> Result<T>;

    /// Gradient of [`Reader::log_prob`] with respect to every soft entry.
    fn log_prob_grad(&self, soft: &Mat<T>, target: &[usize]) -> Result<Mat<T>>;

    fn encode_target(&self, tokens: &[&str]) -> Result<Vec<usize>> {
        tokens
            .iter()
            .map(|t| {
                self.vocab()
                    .iter()
                    .position(|v| v == t)
                    .ok_or_else(|| Error::UnknownSymbol((*t).to_owned()))
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ReaderFile {
    vocab: Vec<String>,
    emission: Vec<f64>,
}

fn emission_from_file<T: Real>(file: &ReaderFile) -> Result<(Vec<String>, Mat<T>)> {
    let v = file.vocab.len();
    if v == 0 {
        return Err(Error::InvalidConfig("reader vocab must be non-empty".into()));
    }
    if file.emission.len() % v != 0 {
        return Err(Error::InvalidConfig(format!(
            "emission length {} is not a multiple of the vocab size {v}",
            file.emission.len()
        )));
    }
    let q = file.emission.len() / v;
    let data: Vec<T> = file.emission.iter().map(|&x| T::scalar(x)).collect();
    Ok((file.vocab.clone(), Mat::from_vec(q, v, data)?))
}

/// Token-to-text reader with a per-position linear emission: position `t`
/// scores are `emission^T * soft_t`, normalized by a row softmax. The target
/// has one symbol per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearReader<T> {
    vocab: Vec<String>,
    emission: Mat<T>, // Q x V
}

impl<T: Real> LinearReader<T> {
    pub fn new(vocab: Vec<String>, emission: Mat<T>) -> Result<Self> {
        if vocab.len() != emission.cols() {
            return Err(Error::DimensionMismatch {
                expected: emission.cols(),
                got: vocab.len(),
            });
        }
        if !emission.is_finite() {
            return Err(Error::InvalidConfig("emission must be finite".into()));
        }
        Ok(Self { vocab, emission })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ReaderFile = serde_json::from_str(s)?;
        let (vocab, emission) = emission_from_file(&file)?;
        Self::new(vocab, emission)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = ReaderFile {
            vocab: self.vocab.clone(),
            emission: self.emission.data().iter().map(|v| v.widen()).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn emission(&self) -> &Mat<T> {
        &self.emission
    }

    /// For each position, the token index whose pure one-hot input maximizes
    /// the target symbol's log-probability (brute force over the codebook).
    pub fn optimal_sequence(&self, target: &[usize]) -> Result<Vec<usize>> {
        self.check_target(target)?;
        let q = self.emission.rows();
        let mut out = Vec::with_capacity(target.len());
        for &y in target {
            let mut best = 0usize;
            let mut best_score = T::neg_infinity();
            for code in 0..q {
                let lp = log_softmax(self.emission.row(code))[y];
                if lp > best_score {
                    best_score = lp;
                    best = code;
                }
            }
            out.push(best);
        }
        Ok(out)
    }

    fn check_target(&self, target: &[usize]) -> Result<()> {
        if let Some(&bad) = target.iter().find(|&&y| y >= self.vocab.len()) {
            return Err(Error::UnknownSymbol(format!("target id {bad}")));
        }
        Ok(())
    }

    fn check_soft(&self, soft: &Mat<T>, target: &[usize]) -> Result<()> {
        if soft.cols() != self.emission.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.emission.rows(),
                got: soft.cols(),
            });
        }
        if target.len() != soft.rows() {
            return Err(Error::InvalidInput(format!(
                "target length {} must equal the timestep count {}",
                target.len(),
                soft.rows()
            )));
        }
        self.check_target(target)
    }

    fn scores(&self, soft_row: &[T]) -> Vec<T> {
        let v = self.emission.cols();
        let mut scores = vec![T::zero(); v];
        for (q, &w) in soft_row.iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            let erow = self.emission.row(q);
            for (s, &e) in scores.iter_mut().zip(erow) {
                *s += w * e;
            }
        }
        scores
    }
}

impl<T: Real> Reader<T> for LinearReader<T> {
    fn vocab(&self) -> &[String] {
        &self.vocab
    }

    fn num_codes(&self) -> usize {
        self.emission.rows()
    }

    fn log_prob(&self, soft: &Mat<T>, target: &[usize]) -> Result<T> {
        self.check_soft(soft, target)?;
        let mut total = T::zero();
        for (t, &y) in target.iter().enumerate() {
            let scores = self.scores(soft.row(t));
            total += log_softmax(&scores)[y];
        }
        Ok(total)
    }

    fn log_prob_grad(&self, soft: &Mat<T>, target: &[usize]) -> Result<Mat<T>> {
        self.check_soft(soft, target)?;
        let mut grad = Mat::zeros(soft.rows(), soft.cols());
        for (t, &y) in target.iter().enumerate() {
            let probs = softmax(&self.scores(soft.row(t)));
            let g = grad.row_mut(t);
            for q in 0..self.emission.rows() {
                let erow = self.emission.row(q);
                let mut expected = T::zero();
                for (e, p) in erow.iter().zip(&probs) {
                    expected += *e * *p;
                }
                g[q] = erow[y] - expected;
            }
        }
        Ok(grad)
    }
}

/// Attribute classifier over a whole sequence: scores are the mean of the
/// per-position linear emissions and the target is a single label.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeReader<T> {
    labels: Vec<String>,
    emission: Mat<T>, // Q x num_labels
}

impl<T: Real> AttributeReader<T> {
    pub fn new(labels: Vec<String>, emission: Mat<T>) -> Result<Self> {
        if labels.len() != emission.cols() {
            return Err(Error::DimensionMismatch {
                expected: emission.cols(),
                got: labels.len(),
            });
        }
        if !emission.is_finite() {
            return Err(Error::InvalidConfig("emission must be finite".into()));
        }
        Ok(Self { labels, emission })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ReaderFile = serde_json::from_str(s)?;
        let (labels, emission) = emission_from_file(&file)?;
        Self::new(labels, emission)
    }

    fn pooled_scores(&self, soft: &Mat<T>) -> Vec<T> {
        let v = self.emission.cols();
        let mut scores = vec![T::zero(); v];
        for t in 0..soft.rows() {
            for (q, &w) in soft.row(t).iter().enumerate() {
                let erow = self.emission.row(q);
                for (s, &e) in scores.iter_mut().zip(erow) {
                    *s += w * e;
                }
            }
        }
        let inv = T::one() / T::scalar(soft.rows() as f64);
        for s in &mut scores {
            *s *= inv;
        }
        scores
    }

    fn check(&self, soft: &Mat<T>, target: &[usize]) -> Result<()> {
        if soft.cols() != self.emission.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.emission.rows(),
                got: soft.cols(),
            });
        }
        if soft.rows() == 0 {
            return Err(Error::EmptyInput("attribute reader needs at least one timestep"));
        }
        if target.len() != 1 {
            return Err(Error::InvalidInput(
                "attribute reader takes exactly one target label".into(),
            ));
        }
        if target[0] >= self.labels.len() {
            return Err(Error::UnknownSymbol(format!("label id {}", target[0])));
        }
        Ok(())
    }
}

impl<T: Real> Reader<T> for AttributeReader<T> {
    fn vocab(&self) -> &[String] {
        &self.labels
    }

    fn num_codes(&self) -> usize {
        self.emission.rows()
    }

    fn log_prob(&self, soft: &Mat<T>, target: &[usize]) -> Result<T> {
        self.check(soft, target)?;
        Ok(log_softmax(&self.pooled_scores(soft))[target[0]])
    }

    fn log_prob_grad(&self, soft: &Mat<T>, target: &[usize]) -> Result<Mat<T>> {
        self.check(soft, target)?;
        let probs = softmax(&self.pooled_scores(soft));
        let y = target[0];
        let inv = T::one() / T::scalar(soft.rows() as f64);
        let mut grad = Mat::zeros(soft.rows(), soft.cols());
        for t in 0..soft.rows() {
            let g = grad.row_mut(t);
            for q in 0..self.emission.rows() {
                let erow = self.emission.row(q);
                let mut expected = T::zero();
                for (e, p) in erow.iter().zip(&probs) {
                    expected += *e * *p;
                }
                g[q] = inv * (erow[y] - expected);
            }
        }
        Ok(grad)
    }
}

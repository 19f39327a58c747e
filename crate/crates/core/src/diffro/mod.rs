//! Differentiable reward optimization over speech-token policies.
//!
//! A policy is a `T x Q` matrix of per-timestep logits over the token
//! codebook. Tokens are sampled with the Gumbel-Softmax relaxation, a
//! differentiable reader scores the sampled sequence against a target, and
//! the policy is optimized by gradient ascent on `reward - beta * KL` where
//! the KL divergence to a reference policy is computed per timestep on the
//! full token distributions.

mod optimize;
mod reader;
mod sample;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use optimize::{grad_check, optimize, reward_and_grad, OptimizeOptions, TraceRow};
pub use reader::{AttributeReader, LinearReader, Reader};
pub use sample::{gumbel_noise, sample_gumbel_softmax, sample_sequence, sample_with_noise};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

/// Per-timestep logits over the token codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyLogits<T> {
    logits: Mat<T>,
}

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    logits: Vec<Vec<f64>>,
}

impl<T: Real> PolicyLogits<T> {
    pub fn new(logits: Mat<T>) -> Result<Self> {
        if !logits.is_finite() {
            return Err(Error::InvalidInput("logits must be finite".into()));
        }
        Ok(Self { logits })
    }

    pub fn timesteps(&self) -> usize {
        self.logits.rows()
    }

    pub fn num_codes(&self) -> usize {
        self.logits.cols()
    }

    pub fn logits(&self) -> &Mat<T> {
        &self.logits
    }

    pub fn into_logits(self) -> Mat<T> {
        self.logits
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: PolicyFile = serde_json::from_str(s)?;
        let rows: Vec<Vec<T>> = file
            .logits
            .iter()
            .map(|row| row.iter().map(|&v| T::scalar(v)).collect())
            .collect();
        Self::new(Mat::from_rows(&rows)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        let rows: Vec<Vec<f64>> = (0..self.logits.rows())
            .map(|t| self.logits.row(t).iter().map(|v| v.widen()).collect())
            .collect();
        Ok(serde_json::to_string_pretty(&PolicyFile { logits: rows })?)
    }

    /// Per-timestep argmax (greedy decoding, no sampling noise).
    pub fn argmax_sequence(&self) -> Vec<usize> {
        (0..self.logits.rows())
            .map(|t| argmax(self.logits.row(t)))
            .collect()
    }
}

/// A sampled token sequence: relaxed rows on the probability simplex plus
/// the hard argmax index per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct GumbelSample<T> {
    pub soft: Mat<T>,
    pub hard: Vec<usize>,
}

/// How the sampled sequence enters the reward on the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Forward pass reads the hard one-hot sample; gradients flow through
    /// the soft relaxation.
    #[default]
    StraightThrough,
    /// Forward pass reads the soft relaxation directly.
    Soft,
}

/// Reward shaping knobs: KL weight, sampling temperature, per-task weights.
#[derive(Debug, Clone)]
pub struct RewardConfig<T> {
    pub beta: T,
    pub temperature: T,
    pub task_weights: BTreeMap<String, T>,
    pub sample_mode: SampleMode,
}

impl<T: Real> RewardConfig<T> {
    pub fn new(beta: T, temperature: T) -> Result<Self> {
        let cfg = Self {
            beta,
            temperature,
            task_weights: BTreeMap::new(),
            sample_mode: SampleMode::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > T::zero()) || !self.temperature.is_finite() {
            return Err(Error::InvalidConfig("temperature must be positive".into()));
        }
        if self.beta < T::zero() || !self.beta.is_finite() {
            return Err(Error::InvalidConfig("beta must be nonnegative".into()));
        }
        if self.task_weights.values().any(|w| *w < T::zero()) {
            return Err(Error::InvalidConfig("task weights must be nonnegative".into()));
        }
        Ok(())
    }
}

pub(crate) fn argmax<T: Real>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable log-softmax of one row.
pub(crate) fn log_softmax<T: Real>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let log_z = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
    row.iter().map(|&v| v - max - log_z).collect()
}

pub(crate) fn softmax<T: Real>(row: &[T]) -> Vec<T> {
    log_softmax(row).iter().map(|v| v.exp()).collect()
}

/// KL divergence summed over timesteps on full per-step token distributions:
/// `sum_t sum_k P(mu_t=k) ln(P(mu_t=k) / P_ref(mu_t=k))` with probabilities
/// from a row softmax.
pub fn token_level_kl<T: Real>(
    policy: &PolicyLogits<T>,
    reference: &PolicyLogits<T>,
) -> Result<T> {
    Ok(kl_and_grad(policy.logits(), reference.logits())?.0)
}

/// [`token_level_kl`] together with its gradient with respect to the policy
/// logits.
pub fn kl_value_and_grad<T: Real>(
    policy: &PolicyLogits<T>,
    reference: &PolicyLogits<T>,
) -> Result<(T, Mat<T>)> {
    kl_and_grad(policy.logits(), reference.logits())
}

/// KL value plus its gradient with respect to the policy logits:
/// `d/dl_j = p_j ((ln p_j - ln q_j) - KL_t)` per row.
pub(crate) fn kl_and_grad<T: Real>(policy: &Mat<T>, reference: &Mat<T>) -> Result<(T, Mat<T>)> {
    if policy.rows() != reference.rows() || policy.cols() != reference.cols() {
        return Err(Error::ShapeMismatch {
            expected_rows: policy.rows(),
            expected_cols: policy.cols(),
            rows: reference.rows(),
            cols: reference.cols(),
        });
    }
    let mut total = T::zero();
    let mut grad = Mat::zeros(policy.rows(), policy.cols());
    for t in 0..policy.rows() {
        let lp = log_softmax(policy.row(t));
        let lq = log_softmax(reference.row(t));
        let mut row_kl = T::zero();
        for k in 0..lp.len() {
            row_kl += lp[k].exp() * (lp[k] - lq[k]);
        }
        total += row_kl;
        let g = grad.row_mut(t);
        for k in 0..lp.len() {
            g[k] = lp[k].exp() * ((lp[k] - lq[k]) - row_kl);
        }
    }
    Ok((total, grad))
}

/// `reward - beta * kl`.
pub fn diffro_objective<T: Real>(reward: T, kl: T, beta: T) -> T {
    reward - beta * kl
}

/// Sequence reward: summed per-position log-probability of the target text
/// under the reader, evaluated on the relaxed sample.
pub fn asr_reward<T: Real>(
    sample: &GumbelSample<T>,
    target: &[&str],
    reader: &dyn Reader<T>,
) -> Result<T> {
    let ids = reader.encode_target(target)?;
    reader.log_prob(&sample.soft, &ids)
}

/// Multi-task reward: weighted sum of per-task label log-probabilities.
/// Tasks missing from `weights` default to weight one.
pub fn mtr_reward<T: Real>(
    sample: &GumbelSample<T>,
    attributes: &BTreeMap<String, String>,
    readers: &BTreeMap<String, Box<dyn Reader<T>>>,
    weights: &BTreeMap<String, T>,
) -> Result<T> {
    let mut total = T::zero();
    for (task, label) in attributes {
        let reader = readers
            .get(task)
            .ok_or_else(|| Error::InvalidConfig(format!("missing reader for task {task:?}")))?;
        let weight = weights.get(task).copied().unwrap_or_else(T::one);
        if weight == T::zero() {
            continue;
        }
        let ids = reader.encode_target(&[label.as_str()])?;
        total += weight * reader.log_prob(&sample.soft, &ids)?;
    }
    Ok(total)
}

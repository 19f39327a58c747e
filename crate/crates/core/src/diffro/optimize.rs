//! Gradient-ascent optimization of a token policy against a differentiable
//! reward, with finite-difference verification of the hand-derived gradients.

use rand::Rng;

use super::{
    diffro_objective, gumbel_noise, kl_and_grad, sample_with_noise, PolicyLogits, Reader,
    RewardConfig, SampleMode,
};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions<T> {
    pub steps: usize,
    pub learning_rate: T,
    /// Noise realizations averaged per step when estimating the reward term.
    pub noise_draws: usize,
}

impl<T: Real> OptimizeOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if !(self.learning_rate > T::zero()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.noise_draws == 0 {
            return Err(Error::InvalidConfig("noise_draws must be at least 1".into()));
        }
        Ok(())
    }
}

/// One objective evaluation per optimization step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub step: usize,
    pub reward: T,
    pub kl: T,
    pub objective: T,
}

/// Reward of one noise realization and its gradient with respect to the
/// policy logits.
///
/// The sample is `soft = softmax((logits + noise) / tau)`. In
/// [`SampleMode::StraightThrough`] the reader sees the hard one-hot rows on
/// the forward pass while the gradient is chained through the soft
/// relaxation; in [`SampleMode::Soft`] the reader sees the relaxation itself,
/// which makes the value a differentiable function of the logits.
pub fn reward_and_grad<T: Real>(
    policy: &PolicyLogits<T>,
    target: &[usize],
    reader: &dyn Reader<T>,
    temperature: T,
    mode: SampleMode,
    noise: &Mat<T>,
) -> Result<(T, Mat<T>)> {
    let sample = sample_with_noise(policy, temperature, noise)?;
    let forward = match mode {
        SampleMode::Soft => sample.soft.clone(),
        SampleMode::StraightThrough => {
            let mut onehot = Mat::zeros(sample.soft.rows(), sample.soft.cols());
            for (t, &h) in sample.hard.iter().enumerate() {
                onehot[(t, h)] = T::one();
            }
            onehot
        }
    };
    let reward = reader.log_prob(&forward, target)?;
    let up = reader.log_prob_grad(&forward, target)?;

    // chain through the softmax rows: d/dl = (soft ⊙ (u - <soft, u>)) / tau
    let mut grad = Mat::zeros(up.rows(), up.cols());
    for t in 0..up.rows() {
        let soft_row = sample.soft.row(t);
        let u_row = up.row(t);
        let mut dot = T::zero();
        for (s, u) in soft_row.iter().zip(u_row) {
            dot += *s * *u;
        }
        let g = grad.row_mut(t);
        for k in 0..g.len() {
            g[k] = soft_row[k] * (u_row[k] - dot) / temperature;
        }
    }
    Ok((reward, grad))
}

/// Seeded gradient ascent on `reward - beta * KL(policy || reference)`.
///
/// Per step the reward term averages `noise_draws` Gumbel realizations while
/// the KL term and its gradient are computed exactly. The trace records one
/// row per step, evaluated at the pre-update policy; the whole run is a pure
/// function of its inputs and the generator seed.
pub fn optimize<T: Real, R: Rng>(
    policy: &PolicyLogits<T>,
    reference: &PolicyLogits<T>,
    target: &[usize],
    reader: &dyn Reader<T>,
    cfg: &RewardConfig<T>,
    opts: &OptimizeOptions<T>,
    rng: &mut R,
) -> Result<(PolicyLogits<T>, Vec<TraceRow<T>>)> {
    cfg.validate()?;
    opts.validate()?;
    let rows = policy.timesteps();
    let cols = policy.num_codes();
    let draws = T::scalar(opts.noise_draws as f64);

    let mut current = policy.clone();
    let mut trace = Vec::with_capacity(opts.steps);
    for step in 0..opts.steps {
        let (kl, kl_grad) = kl_and_grad(current.logits(), reference.logits())?;

        let mut reward_sum = T::zero();
        let mut reward_grad: Mat<T> = Mat::zeros(rows, cols);
        for _ in 0..opts.noise_draws {
            let noise = gumbel_noise::<T, R>(rng, rows, cols);
            let (r, g) =
                reward_and_grad(&current, target, reader, cfg.temperature, cfg.sample_mode, &noise)?;
            reward_sum += r;
            for t in 0..rows {
                let acc = reward_grad.row_mut(t);
                let src = g.row(t);
                for k in 0..cols {
                    acc[k] += src[k];
                }
            }
        }
        let reward = reward_sum / draws;
        let objective = diffro_objective(reward, kl, cfg.beta);
        if !objective.is_finite() {
            return Err(Error::Divergence {
                step,
                what: format!("objective became non-finite (reward {reward}, kl {kl})"),
            });
        }
        trace.push(TraceRow {
            step,
            reward,
            kl,
            objective,
        });

        let mut logits = current.into_logits();
        for t in 0..rows {
            let row = logits.row_mut(t);
            let rg = reward_grad.row(t);
            let kg = kl_grad.row(t);
            for k in 0..cols {
                row[k] += opts.learning_rate * (rg[k] / draws - cfg.beta * kg[k]);
            }
        }
        current = PolicyLogits::new(logits).map_err(|_| Error::Divergence {
            step,
            what: "logits became non-finite after the update".into(),
        })?;
    }
    Ok((current, trace))
}

/// Compare an analytic gradient against central finite differences of `f`
/// entry by entry; returns the maximum relative error (relative to the
/// larger of the two magnitudes, floored at one).
pub fn grad_check<T: Real>(
    mut f: impl FnMut(&Mat<T>) -> Result<T>,
    analytic: &Mat<T>,
    point: &Mat<T>,
    eps: T,
) -> Result<T> {
    if !(eps > T::zero()) || eps > T::scalar(1e-2) {
        return Err(Error::InvalidInput("eps must be in (0, 1e-2]".into()));
    }
    if analytic.rows() != point.rows() || analytic.cols() != point.cols() {
        return Err(Error::ShapeMismatch {
            expected_rows: point.rows(),
            expected_cols: point.cols(),
            rows: analytic.rows(),
            cols: analytic.cols(),
        });
    }
    let two = T::scalar(2.0);
    let mut worst = T::zero();
    for t in 0..point.rows() {
        for k in 0..point.cols() {
            let mut plus = point.clone();
            plus[(t, k)] += eps;
            let mut minus = point.clone();
            minus[(t, k)] -= eps;
            let fd = (f(&plus)? - f(&minus)?) / (two * eps);
            let an = analytic[(t, k)];
            let denom = fd.abs().max(an.abs()).max(T::one());
            let rel = (fd - an).abs() / denom;
            if rel > worst {
                worst = rel;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffro::{token_level_kl, LinearReader};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize, span: f64) -> Mat<f64> {
        let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-span..span)).collect();
        Mat::from_vec(rows, cols, data).unwrap()
    }

    fn toy_reader(rng: &mut ChaCha8Rng, q: usize, v: usize) -> LinearReader<f64> {
        let vocab: Vec<String> = (0..v).map(|i| format!("w{i}")).collect();
        LinearReader::new(vocab, random_mat(rng, q, v, 2.0)).unwrap()
    }

    #[test]
    fn grad_check_kl_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let point = random_mat(&mut rng, 3, 4, 2.0);
        let reference = random_mat(&mut rng, 3, 4, 2.0);
        let (_, analytic) = kl_and_grad(&point, &reference).unwrap();
        let f = |m: &Mat<f64>| Ok(kl_and_grad(m, &reference).unwrap().0);
        let err = grad_check(f, &analytic, &point, 1e-5).unwrap();
        assert!(err < 1e-5, "max rel err {err}");
    }

    #[test]
    fn grad_check_reward_only_fixed_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let point = random_mat(&mut rng, 3, 5, 1.5);
        let reader = toy_reader(&mut rng, 5, 4);
        let noise = gumbel_noise::<f64, _>(&mut rng, 3, 5);
        let target = vec![0usize, 2, 3];
        let policy = PolicyLogits::new(point.clone()).unwrap();
        let (_, analytic) = reward_and_grad(&policy, &target, &reader, 1.0, SampleMode::Soft, &noise)
            .unwrap();
        let f = |m: &Mat<f64>| {
            let p = PolicyLogits::new(m.clone())?;
            Ok(reward_and_grad(&p, &target, &reader, 1.0, SampleMode::Soft, &noise)?.0)
        };
        let err = grad_check(f, &analytic, &point, 1e-5).unwrap();
        assert!(err < 1e-4, "max rel err {err}");
    }

    #[test]
    fn grad_check_linear_objective_is_machine_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let point = random_mat(&mut rng, 2, 3, 1.0);
        let coeff = random_mat(&mut rng, 2, 3, 1.0);
        let f = |m: &Mat<f64>| {
            let mut acc = 0.0;
            for (a, b) in m.data().iter().zip(coeff.data()) {
                acc += a * b;
            }
            Ok(acc)
        };
        let err = grad_check(f, &coeff, &point, 1e-5).unwrap();
        assert!(err < 1e-9, "max rel err {err}");
    }

    #[test]
    fn grad_check_rejects_bad_eps() {
        let m = Mat::<f64>::zeros(1, 1);
        assert!(grad_check(|_| Ok(0.0), &m, &m, 0.0).is_err());
        assert!(grad_check(|_| Ok(0.0), &m, &m, 0.5).is_err());
    }

    #[test]
    fn optimize_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let reader = toy_reader(&mut rng, 4, 3);
        let init = PolicyLogits::new(Mat::zeros(3, 4)).unwrap();
        let cfg = RewardConfig::new(0.1, 1.0).unwrap();
        let opts = OptimizeOptions {
            steps: 20,
            learning_rate: 0.3,
            noise_draws: 1,
        };
        let target = vec![0usize, 1, 2];
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            optimize(&init, &init, &target, &reader, &cfg, &opts, &mut rng).unwrap()
        };
        let (p1, t1) = run();
        let (p2, t2) = run();
        assert_eq!(p1, p2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn huge_beta_pins_policy_to_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let reader = toy_reader(&mut rng, 4, 3);
        let init = PolicyLogits::new(random_mat(&mut rng, 3, 4, 1.0)).unwrap();
        let mut cfg = RewardConfig::new(1e6, 1.0).unwrap();
        cfg.sample_mode = SampleMode::Soft;
        let opts = OptimizeOptions {
            steps: 50,
            learning_rate: 1e-6,
            noise_draws: 1,
        };
        let target = vec![0usize, 1, 2];
        let mut run_rng = ChaCha8Rng::seed_from_u64(42);
        let (final_policy, _) =
            optimize(&init, &init, &target, &reader, &cfg, &opts, &mut run_rng).unwrap();
        let kl = token_level_kl(&final_policy, &init).unwrap();
        assert!(kl < 1e-3, "kl = {kl}");
        for (a, b) in final_policy.logits().data().iter().zip(init.logits().data()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn trace_has_one_row_per_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let reader = toy_reader(&mut rng, 3, 2);
        let init = PolicyLogits::new(Mat::zeros(2, 3)).unwrap();
        let cfg = RewardConfig::new(0.0, 1.0).unwrap();
        let opts = OptimizeOptions {
            steps: 7,
            learning_rate: 0.1,
            noise_draws: 2,
        };
        let (_, trace) =
            optimize(&init, &init, &[0, 1], &reader, &cfg, &opts, &mut rng).unwrap();
        assert_eq!(trace.len(), 7);
        assert!(trace.iter().enumerate().all(|(i, row)| row.step == i));
    }

    #[test]
    fn invalid_options_rejected() {
        let opts = OptimizeOptions { steps: 0, learning_rate: 0.1f64, noise_draws: 1 };
        assert!(opts.validate().is_err());
        let opts = OptimizeOptions { steps: 1, learning_rate: 0.0f64, noise_draws: 1 };
        assert!(opts.validate().is_err());
        let opts = OptimizeOptions { steps: 1, learning_rate: 0.1f64, noise_draws: 0 };
        assert!(opts.validate().is_err());
    }
}

//! Gumbel-Softmax sampling with a straight-through hard index.

use rand::Rng;

use super::{argmax, GumbelSample, PolicyLogits};
use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

/// Draw a matrix of standard Gumbel noise, `g = -ln(-ln u)`.
///
/// Noise is always drawn as f64 and converted, so the stream of values is
/// identical across scalar types for the same generator state.
pub fn gumbel_noise<T: Real, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat<T> {
    let mut out = Mat::zeros(rows, cols);
    for t in 0..rows {
        let row = out.row_mut(t);
        for v in row.iter_mut() {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            *v = T::scalar(-(-u.ln()).ln());
        }
    }
    out
}

/// Relax one logit row: `soft = softmax((logits + g) / tau)`,
/// `hard = argmax(logits + g)`.
pub fn sample_gumbel_softmax<T: Real, R: Rng>(
    logits: &[T],
    temperature: T,
    rng: &mut R,
) -> Result<(Vec<T>, usize)> {
    if logits.is_empty() {
        return Err(Error::EmptyInput("sampling requires at least one logit"));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("logits must be finite".into()));
    }
    if !(temperature > T::zero()) {
        return Err(Error::InvalidInput("temperature must be positive".into()));
    }
    let noise = gumbel_noise::<T, R>(rng, 1, logits.len());
    let sample = relax_row(logits, temperature, noise.row(0));
    Ok(sample)
}

fn relax_row<T: Real>(logits: &[T], temperature: T, noise: &[T]) -> (Vec<T>, usize) {
    let perturbed: Vec<T> = logits.iter().zip(noise).map(|(&l, &g)| l + g).collect();
    let hard = argmax(&perturbed);
    let scaled: Vec<T> = perturbed.iter().map(|&v| v / temperature).collect();
    (super::softmax(&scaled), hard)
}

/// Relax a whole policy with externally supplied noise (one entry per logit).
pub fn sample_with_noise<T: Real>(
    policy: &PolicyLogits<T>,
    temperature: T,
    noise: &Mat<T>,
) -> Result<GumbelSample<T>> {
    if !(temperature > T::zero()) {
        return Err(Error::InvalidInput("temperature must be positive".into()));
    }
    let logits = policy.logits();
    if noise.rows() != logits.rows() || noise.cols() != logits.cols() {
        return Err(Error::ShapeMismatch {
            expected_rows: logits.rows(),
            expected_cols: logits.cols(),
            rows: noise.rows(),
            cols: noise.cols(),
        });
    }
    let mut soft = Mat::zeros(logits.rows(), logits.cols());
    let mut hard = Vec::with_capacity(logits.rows());
    for t in 0..logits.rows() {
        let (row, idx) = relax_row(logits.row(t), temperature, noise.row(t));
        soft.row_mut(t).copy_from_slice(&row);
        hard.push(idx);
    }
    Ok(GumbelSample { soft, hard })
}

/// Sample every timestep of a policy with fresh Gumbel noise.
pub fn sample_sequence<T: Real, R: Rng>(
    policy: &PolicyLogits<T>,
    temperature: T,
    rng: &mut R,
) -> Result<GumbelSample<T>> {
    let noise = gumbel_noise::<T, R>(rng, policy.timesteps(), policy.num_codes());
    sample_with_noise(policy, temperature, &noise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dominant_logit_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (_, hard) = sample_gumbel_softmax(&[1000.0, 0.0], 1.0, &mut rng).unwrap();
            assert_eq!(hard, 0);
        }
    }

    #[test]
    fn equal_logits_sample_near_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 20_000u32;
        let mut counts = [0u32; 3];
        for _ in 0..n {
            let (_, hard) = sample_gumbel_softmax(&[0.5, 0.5, 0.5], 1.0, &mut rng).unwrap();
            counts[hard] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (p * (1.0 - p) / f64::from(n)).sqrt();
        for c in counts {
            let freq = f64::from(c) / f64::from(n);
            assert!((freq - p).abs() < 3.0 * sigma, "freq {freq}");
        }
    }

    #[test]
    fn low_temperature_approaches_one_hot() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (soft, hard) = sample_gumbel_softmax(&[0.3, -0.2, 0.8, 0.0], 0.01, &mut rng).unwrap();
        let max = soft.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(max >= 0.99);
        assert_eq!(soft.iter().position(|&v| v == max).unwrap(), hard);
    }

    #[test]
    fn rows_on_simplex_and_hard_is_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let logits: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (soft, hard) = sample_gumbel_softmax(&logits, 0.7, &mut rng).unwrap();
            let sum: f64 = soft.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(soft.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert_eq!(argmax(&soft), hard);
        }
    }

    #[test]
    fn invalid_temperature_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(sample_gumbel_softmax(&[0.0, 1.0], 0.0, &mut rng).is_err());
        assert!(sample_gumbel_softmax(&[0.0, 1.0], -1.0, &mut rng).is_err());
    }
}

//! Finite scalar quantization codec.
//!
//! Feature vectors are projected into a `D`-dimensional low-rank space, each
//! component is rounded into the integer range `[-K, K]`, and the resulting
//! digit vector is packed into a single token id in the `(2K+1)`-ary system.
//! The module also provides the straight-through gradient of the projection
//! pair and time-axis resampling between token rates.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::real::Real;

/// Tokens are emitted at 25 per second of audio.
pub const TOKEN_RATE_HZ: u64 = 25;

/// Magic bytes of the binary token stream header.
pub const TOKEN_MAGIC: &[u8; 4] = b"FSQT";

/// Version written into binary token stream headers.
pub const TOKEN_FORMAT_VERSION: u32 = 1;

/// Quantizer parameters: projection pair plus the per-dimension bound `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FsqConfig<T> {
    input_dim: usize,
    low_rank_dim: usize,
    bound: u32,
    proj_down: Mat<T>,
    proj_up: Mat<T>,
}

#[derive(Serialize, Deserialize)]
struct FsqConfigFile {
    input_dim: usize,
    low_rank_dim: usize,
    bound: u32,
    proj_down: Vec<f64>,
    proj_up: Vec<f64>,
}

impl<T: Real> FsqConfig<T> {
    /// Validates dimensions, the bound, finiteness of the projections, and
    /// that the implied codebook size `(2K+1)^D` fits in a `u64`.
    pub fn new(
        input_dim: usize,
        low_rank_dim: usize,
        bound: u32,
        proj_down: Mat<T>,
        proj_up: Mat<T>,
    ) -> Result<Self> {
        if input_dim == 0 || low_rank_dim == 0 {
            return Err(Error::InvalidConfig(
                "input_dim and low_rank_dim must be at least 1".into(),
            ));
        }
        if bound == 0 {
            return Err(Error::InvalidConfig("bound K must be at least 1".into()));
        }
        codebook_size(low_rank_dim, bound)?;
        if proj_down.rows() != low_rank_dim || proj_down.cols() != input_dim {
            return Err(Error::ShapeMismatch {
                expected_rows: low_rank_dim,
                expected_cols: input_dim,
                rows: proj_down.rows(),
                cols: proj_down.cols(),
            });
        }
        if proj_up.rows() != input_dim || proj_up.cols() != low_rank_dim {
            return Err(Error::ShapeMismatch {
                expected_rows: input_dim,
                expected_cols: low_rank_dim,
                rows: proj_up.rows(),
                cols: proj_up.cols(),
            });
        }
        if !proj_down.is_finite() || !proj_up.is_finite() {
            return Err(Error::InvalidConfig(
                "projection matrices must contain only finite values".into(),
            ));
        }
        Ok(Self {
            input_dim,
            low_rank_dim,
            bound,
            proj_down,
            proj_up,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn low_rank_dim(&self) -> usize {
        self.low_rank_dim
    }

    pub fn bound(&self) -> u32 {
        self.bound
    }

    pub fn proj_down(&self) -> &Mat<T> {
        &self.proj_down
    }

    pub fn proj_up(&self) -> &Mat<T> {
        &self.proj_up
    }

    /// Number of distinct token ids, `(2K+1)^D`.
    pub fn codebook_size(&self) -> u64 {
        codebook_size(self.low_rank_dim, self.bound).expect("validated at construction")
    }

    /// Parse the JSON config format: `{"input_dim", "low_rank_dim", "bound",
    /// "proj_down", "proj_up"}` with row-major projection arrays.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: FsqConfigFile = serde_json::from_str(s)?;
        let conv = |v: &[f64]| v.iter().map(|&x| T::scalar(x)).collect::<Vec<T>>();
        let proj_down = Mat::from_vec(file.low_rank_dim, file.input_dim, conv(&file.proj_down))?;
        let proj_up = Mat::from_vec(file.input_dim, file.low_rank_dim, conv(&file.proj_up))?;
        Self::new(
            file.input_dim,
            file.low_rank_dim,
            file.bound,
            proj_down,
            proj_up,
        )
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = FsqConfigFile {
            input_dim: self.input_dim,
            low_rank_dim: self.low_rank_dim,
            bound: self.bound,
            proj_down: self.proj_down.data().iter().map(|v| v.widen()).collect(),
            proj_up: self.proj_up.data().iter().map(|v| v.widen()).collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

/// `(2K+1)^D`, rejecting anything that does not fit in a `u64`.
pub fn codebook_size(low_rank_dim: usize, bound: u32) -> Result<u64> {
    let base = 2u64
        .checked_mul(u64::from(bound))
        .and_then(|b| b.checked_add(1))
        .ok_or_else(|| Error::InvalidConfig("bound too large".into()))?;
    let exp = u32::try_from(low_rank_dim)
        .map_err(|_| Error::InvalidConfig("low_rank_dim too large".into()))?;
    base.checked_pow(exp).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "codebook size (2*{bound}+1)^{low_rank_dim} does not fit in 64 bits"
        ))
    })
}

/// A `D`-vector of integers, each in `[-K, K]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedVector {
    values: Vec<i32>,
}

impl QuantizedVector {
    pub fn new(values: Vec<i32>, bound: u32) -> Result<Self> {
        let k = i64::from(bound);
        if let Some(v) = values.iter().find(|&&v| i64::from(v).abs() > k) {
            return Err(Error::InvalidInput(format!(
                "component {v} outside [-{bound}, {bound}]"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The vector re-expressed as reals, e.g. to feed back into `proj_up`.
    pub fn to_reals<T: Real>(&self) -> Vec<T> {
        self.values.iter().map(|&v| T::scalar(f64::from(v))).collect()
    }
}

/// Packed `(2K+1)`-ary index of a quantized vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenId(pub u64);

/// Round each component half away from zero and clamp into `[-K, K]`.
pub fn bounded_round<T: Real>(x: &[T], bound: u32) -> Result<QuantizedVector> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "bounded_round requires finite components".into(),
        ));
    }
    let k = i64::from(bound);
    let values = x
        .iter()
        .map(|v| {
            // Float::round rounds half-way cases away from zero.
            let r = v.round().widen() as i64;
            r.clamp(-k, k) as i32
        })
        .collect();
    Ok(QuantizedVector { values })
}

/// Project into the low-rank space: `proj_down * h`.
pub fn project_down<T: Real>(h: &[T], cfg: &FsqConfig<T>) -> Result<Vec<T>> {
    cfg.proj_down.matvec(h)
}

/// Project back into the original dimension: `proj_up * q`.
pub fn project_up<T: Real>(q: &[T], cfg: &FsqConfig<T>) -> Result<Vec<T>> {
    cfg.proj_up.matvec(q)
}

/// Full quantization: bounded rounding of the low-rank projection.
pub fn quantize<T: Real>(h: &[T], cfg: &FsqConfig<T>) -> Result<QuantizedVector> {
    let low = project_down(h, cfg)?;
    if low.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "projection produced non-finite values".into(),
        ));
    }
    bounded_round(&low, cfg.bound)
}

/// Pack a quantized vector into its `(2K+1)`-ary token id.
///
/// Digit `j` is `q_j + K`, mapping `[-K, K]` onto `[0, 2K]` so the code is a
/// nonnegative positional number with the first component least significant.
pub fn encode_index(q: &QuantizedVector, bound: u32) -> Result<TokenId> {
    let k = i64::from(bound);
    let base = 2 * u64::from(bound) + 1;
    let mut code: u64 = 0;
    let mut place: u64 = 1;
    for (j, &v) in q.values.iter().enumerate() {
        let v = i64::from(v);
        if v.abs() > k {
            return Err(Error::InvalidInput(format!(
                "component {v} outside [-{bound}, {bound}]"
            )));
        }
        let digit = (v + k) as u64;
        let term = digit
            .checked_mul(place)
            .and_then(|t| code.checked_add(t))
            .ok_or_else(|| Error::InvalidInput("token code overflows 64 bits".into()))?;
        code = term;
        if j + 1 < q.values.len() {
            place = place
                .checked_mul(base)
                .ok_or_else(|| Error::InvalidInput("token code overflows 64 bits".into()))?;
        }
    }
    Ok(TokenId(code))
}

/// Unpack a token id into its quantized vector of length `low_rank_dim`.
pub fn decode_index(token: TokenId, low_rank_dim: usize, bound: u32) -> Result<QuantizedVector> {
    let size = codebook_size(low_rank_dim, bound)?;
    if token.0 >= size {
        return Err(Error::CodeOutOfRange {
            code: token.0,
            size,
        });
    }
    let base = 2 * u64::from(bound) + 1;
    let k = i64::from(bound);
    let mut rest = token.0;
    let mut values = Vec::with_capacity(low_rank_dim);
    for _ in 0..low_rank_dim {
        let digit = rest % base;
        rest /= base;
        values.push((digit as i64 - k) as i32);
    }
    Ok(QuantizedVector { values })
}

/// Jacobian of `h -> proj_up(proj_down(h))` with rounding treated as the
/// identity on the backward pass; equals `proj_up * proj_down`.
pub fn ste_jacobian<T: Real>(h: &[T], cfg: &FsqConfig<T>) -> Result<Mat<T>> {
    if h.len() != cfg.input_dim {
        return Err(Error::DimensionMismatch {
            expected: cfg.input_dim,
            got: h.len(),
        });
    }
    cfg.proj_up.matmul(&cfg.proj_down)
}

/// Resample a `T x F` feature sequence from one frame rate to another.
///
/// The output has `round(T * target/source)` rows. Integer upsampling ratios
/// repeat each row; any other ratio interpolates linearly along the time axis
/// (output row `i` reads source position `i * source/target`, clamped to the
/// last row).
pub fn resample_token_features<T: Real>(
    seq: &Mat<T>,
    source_rate_hz: f64,
    target_rate_hz: f64,
) -> Result<Mat<T>> {
    if seq.rows() == 0 {
        return Err(Error::EmptyInput("resample requires at least one frame"));
    }
    if !(source_rate_hz > 0.0) || !(target_rate_hz > 0.0) {
        return Err(Error::InvalidInput("rates must be positive".into()));
    }
    let ratio = target_rate_hz / source_rate_hz;
    let out_rows = (seq.rows() as f64 * ratio).round() as usize;
    let cols = seq.cols();

    let repeat = ratio.round();
    if repeat >= 1.0 && (ratio - repeat).abs() < 1e-9 {
        let factor = repeat as usize;
        let mut out = Mat::zeros(seq.rows() * factor, cols);
        for i in 0..seq.rows() {
            for r in 0..factor {
                out.row_mut(i * factor + r).copy_from_slice(seq.row(i));
            }
        }
        return Ok(out);
    }

    let mut out = Mat::zeros(out_rows, cols);
    let last = (seq.rows() - 1) as f64;
    for i in 0..out_rows {
        let pos = (i as f64 / ratio).min(last);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(seq.rows() - 1);
        let frac = T::scalar(pos - lo as f64);
        let one_minus = T::one() - frac;
        let row_lo = seq.row(lo);
        let row_hi = seq.row(hi);
        let dst = out.row_mut(i);
        for f in 0..cols {
            dst[f] = one_minus * row_lo[f] + frac * row_hi[f];
        }
    }
    Ok(out)
}

/// Number of speech tokens for `seconds` of audio: `floor(25 * seconds)`.
/// Partial final hops do not emit a token.
pub fn token_count_for_duration<T: Real>(seconds: T) -> Result<u64> {
    if !seconds.is_finite() || seconds < T::zero() {
        return Err(Error::InvalidInput(
            "duration must be finite and nonnegative".into(),
        ));
    }
    let count = (T::scalar(TOKEN_RATE_HZ as f64) * seconds).floor();
    count
        .to_u64()
        .ok_or_else(|| Error::InvalidInput("token count does not fit in 64 bits".into()))
}

/// Write tokens as newline-delimited unsigned decimal integers.
pub fn write_tokens_text<W: Write>(mut w: W, tokens: &[TokenId]) -> Result<()> {
    for t in tokens {
        writeln!(w, "{}", t.0)?;
    }
    Ok(())
}

pub fn read_tokens_text<R: BufRead>(r: R) -> Result<Vec<TokenId>> {
    let mut tokens = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        let code = s
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        tokens.push(TokenId(code));
    }
    Ok(tokens)
}

/// Write the binary stream: 16-byte header (magic `FSQT`, version, D, K as
/// little-endian u32) followed by one little-endian u32 per token.
pub fn write_tokens_binary<W: Write>(
    mut w: W,
    tokens: &[TokenId],
    low_rank_dim: u32,
    bound: u32,
) -> Result<()> {
    w.write_all(TOKEN_MAGIC)?;
    w.write_all(&TOKEN_FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&low_rank_dim.to_le_bytes())?;
    w.write_all(&bound.to_le_bytes())?;
    for t in tokens {
        let code = u32::try_from(t.0).map_err(|_| {
            Error::InvalidInput(format!("token {} does not fit the u32 stream format", t.0))
        })?;
        w.write_all(&code.to_le_bytes())?;
    }
    Ok(())
}

/// Read the binary stream; returns `(tokens, D, K)`.
pub fn read_tokens_binary<R: Read>(mut r: R) -> Result<(Vec<TokenId>, u32, u32)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != TOKEN_MAGIC {
        return Err(Error::Parse("bad magic in binary token stream".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != TOKEN_FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported token format version {version}")));
    }
    let low_rank_dim = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let bound = u32::from_le_bytes(header[12..16].try_into().unwrap());
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() % 4 != 0 {
        return Err(Error::Parse("truncated binary token stream".into()));
    }
    let tokens = body
        .chunks_exact(4)
        .map(|c| TokenId(u64::from(u32::from_le_bytes(c.try_into().unwrap()))))
        .collect();
    Ok((tokens, low_rank_dim, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_config(k: u32) -> FsqConfig<f64> {
        let eye = Mat::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        FsqConfig::new(2, 2, k, eye.clone(), eye).unwrap()
    }

    #[test]
    fn bounded_round_zero() {
        let q = bounded_round(&[0.0, 0.0], 1).unwrap();
        assert_eq!(q.values(), &[0, 0]);
    }

    #[test]
    fn bounded_round_saturates() {
        let q = bounded_round(&[3.7, -10.2], 4).unwrap();
        assert_eq!(q.values(), &[4, -4]);
    }

    #[test]
    fn bounded_round_half_away_from_zero() {
        // scalar oracle for the grid {..., -1.5, -0.5, 0.5, ...}: half-way
        // values move away from zero
        let oracle = |x: f64, k: i32| -> i32 {
            let r = if x >= 0.0 { (x + 0.5).floor() } else { (x - 0.5).ceil() };
            (r as i32).clamp(-k, k)
        };
        let q = bounded_round(&[0.5, -1.5], 2).unwrap();
        assert_eq!(q.values(), &[oracle(0.5, 2), oracle(-1.5, 2)]);
        assert_eq!(q.values(), &[1, -2]);
        for i in -7..=7 {
            let x = i as f64 + 0.5;
            let q = bounded_round(&[x], 3).unwrap();
            assert_eq!(q.values()[0], oracle(x, 3), "x = {x}");
        }
    }

    #[test]
    fn bounded_round_rejects_non_finite() {
        assert!(bounded_round(&[f64::NAN], 1).is_err());
        assert!(bounded_round(&[f64::INFINITY], 1).is_err());
    }

    #[test]
    fn project_down_identity_and_zero() {
        let cfg = identity_config(1);
        assert_eq!(project_down(&[1.0, 2.0], &cfg).unwrap(), vec![1.0, 2.0]);
        let zero = Mat::zeros(2, 2);
        let cfg0 = FsqConfig::new(2, 2, 1, zero.clone(), zero).unwrap();
        assert_eq!(project_down(&[5.0, -3.0], &cfg0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn projections_match_naive_matmul_oracle() {
        let down = Mat::from_vec(2, 3, vec![0.3, -1.2, 0.7, 2.0, 0.1, -0.4]).unwrap();
        let up = Mat::from_vec(3, 2, vec![1.1, 0.2, -0.5, 0.9, 0.3, -2.2]).unwrap();
        let cfg = FsqConfig::new(3, 2, 1, down.clone(), up.clone()).unwrap();
        let h = [0.25f64, -1.5, 3.0];
        let got = project_down(&h, &cfg).unwrap();
        for i in 0..2 {
            let mut acc = 0.0f64;
            for j in 0..3 {
                acc += down[(i, j)] * h[j];
            }
            assert!((got[i] - acc).abs() < 1e-15);
        }
        let q = [0.5f64, -2.0];
        let got = project_up(&q, &cfg).unwrap();
        for i in 0..3 {
            let mut acc = 0.0f64;
            for j in 0..2 {
                acc += up[(i, j)] * q[j];
            }
            assert!((got[i] - acc).abs() < 1e-15);
        }
    }

    #[test]
    fn project_up_identity_cases() {
        let cfg = identity_config(1);
        assert_eq!(project_up(&[-1.0, 1.0], &cfg).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(project_up(&[0.0, 0.0], &cfg).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn quantize_composes_projection_and_rounding() {
        let cfg = identity_config(2);
        assert_eq!(quantize(&[0.0, 0.0], &cfg).unwrap().values(), &[0, 0]);
        assert_eq!(quantize(&[2.6, -0.4], &cfg).unwrap().values(), &[2, 0]);
        assert_eq!(quantize(&[100.0, -100.0], &cfg).unwrap().values(), &[2, -2]);
    }

    #[test]
    fn encode_index_examples() {
        let q = QuantizedVector::new(vec![-1, -1], 1).unwrap();
        assert_eq!(encode_index(&q, 1).unwrap(), TokenId(0));
        let q = QuantizedVector::new(vec![1, 1], 1).unwrap();
        assert_eq!(encode_index(&q, 1).unwrap(), TokenId(8));
        let q = QuantizedVector::new(vec![0], 2).unwrap();
        assert_eq!(encode_index(&q, 2).unwrap(), TokenId(2));
    }

    #[test]
    fn decode_index_examples() {
        assert_eq!(decode_index(TokenId(0), 2, 1).unwrap().values(), &[-1, -1]);
        assert_eq!(decode_index(TokenId(8), 2, 1).unwrap().values(), &[1, 1]);
        assert_eq!(decode_index(TokenId(4), 2, 1).unwrap().values(), &[0, 0]);
        assert!(decode_index(TokenId(9), 2, 1).is_err());
    }

    #[test]
    fn encode_decode_exhaustive_small() {
        // exhaustive enumeration over every code for D <= 3, K <= 2
        for d in 1..=3usize {
            for k in 1..=2u32 {
                let size = codebook_size(d, k).unwrap();
                let mut seen = std::collections::HashSet::new();
                for code in 0..size {
                    let q = decode_index(TokenId(code), d, k).unwrap();
                    assert!(q.values().iter().all(|&v| v.unsigned_abs() <= k));
                    let back = encode_index(&q, k).unwrap();
                    assert_eq!(back.0, code);
                    assert!(seen.insert(code));
                }
                assert_eq!(seen.len() as u64, size);
            }
        }
    }

    #[test]
    fn clamp_idempotent() {
        let q = bounded_round(&[7.3, -0.49, 1.5], 2).unwrap();
        let again = bounded_round(&q.to_reals::<f64>(), 2).unwrap();
        assert_eq!(q, again);
    }

    #[test]
    fn ste_jacobian_identity_and_zero() {
        let cfg = identity_config(1);
        let j = ste_jacobian(&[0.0, 0.0], &cfg).unwrap();
        assert_eq!(j, Mat::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let zero = Mat::zeros(2, 2);
        let cfg0 = FsqConfig::new(2, 2, 1, zero.clone(), Mat::from_vec(2, 2, vec![1.0; 4]).unwrap()).unwrap();
        let j0 = ste_jacobian(&[0.0, 0.0], &cfg0).unwrap();
        assert!(j0.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ste_jacobian_checks_input_length() {
        let cfg = identity_config(1);
        assert!(ste_jacobian(&[0.0], &cfg).is_err());
    }

    #[test]
    fn resample_integer_repeat() {
        let seq = Mat::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let out = resample_token_features(&seq, 25.0, 50.0).unwrap();
        assert_eq!(out.rows(), 8);
        for i in 0..4 {
            assert_eq!(out.row(2 * i), seq.row(i));
            assert_eq!(out.row(2 * i + 1), seq.row(i));
        }
    }

    #[test]
    fn resample_identity_at_equal_rates() {
        let seq = Mat::from_rows(&[vec![1.0, -1.0], vec![0.5, 2.0]]).unwrap();
        let out = resample_token_features(&seq, 25.0, 25.0).unwrap();
        assert_eq!(out, seq);
    }

    #[test]
    fn resample_linear_matches_scalar_oracle() {
        // ramp signal, 25 -> 37.5 Hz
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let seq = Mat::from_rows(&rows).unwrap();
        let out = resample_token_features(&seq, 25.0, 37.5).unwrap();
        assert_eq!(out.rows(), 12);
        for i in 0..out.rows() {
            // scalar oracle: interpolating a ramp at position p yields p itself
            let pos = (i as f64 * 25.0 / 37.5).min(7.0);
            let lo = pos.floor();
            let frac = pos - lo;
            let expect = (1.0 - frac) * lo + frac * (lo + 1.0).min(7.0);
            assert!((out[(i, 0)] - expect).abs() < 1e-12, "row {i}");
        }
    }

    #[test]
    fn resample_rejects_empty() {
        let seq = Mat::<f64>::zeros(0, 3);
        assert!(resample_token_features(&seq, 25.0, 50.0).is_err());
    }

    #[test]
    fn token_count_examples() {
        assert_eq!(token_count_for_duration(1.0f64).unwrap(), 25);
        assert_eq!(token_count_for_duration(0.0f64).unwrap(), 0);
        assert_eq!(token_count_for_duration(2.04f64).unwrap(), 51);
        assert!(token_count_for_duration(-0.1f64).is_err());
    }

    #[test]
    fn config_rejects_oversized_codebook() {
        let d = 41usize; // 3^41 > 2^64
        let down = Mat::<f64>::zeros(d, 2);
        let up = Mat::<f64>::zeros(2, d);
        assert!(FsqConfig::new(2, d, 1, down, up).is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = identity_config(2);
        let s = cfg.to_json_string().unwrap();
        let back = FsqConfig::<f64>::from_json_str(&s).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn token_stream_text_roundtrip() {
        let tokens = vec![TokenId(0), TokenId(8), TokenId(4)];
        let mut buf = Vec::new();
        write_tokens_text(&mut buf, &tokens).unwrap();
        let back = read_tokens_text(buf.as_slice()).unwrap();
        assert_eq!(tokens, back);
    }

    #[test]
    fn token_stream_binary_roundtrip() {
        let tokens = vec![TokenId(1), TokenId(2), TokenId(3)];
        let mut buf = Vec::new();
        write_tokens_binary(&mut buf, &tokens, 2, 1).unwrap();
        assert_eq!(&buf[0..4], TOKEN_MAGIC);
        let (back, d, k) = read_tokens_binary(buf.as_slice()).unwrap();
        assert_eq!(tokens, back);
        assert_eq!((d, k), (2, 1));
    }

    #[test]
    fn binary_stream_rejects_wide_tokens() {
        let tokens = vec![TokenId(u64::from(u32::MAX) + 1)];
        let mut buf = Vec::new();
        assert!(write_tokens_binary(&mut buf, &tokens, 40, 1).is_err());
    }
}

//! tokenforge-core: the non-neural machinery of a large-scale speech
//! synthesis stack.
//!
//! - [`fsq`]: finite-scalar-quantization speech-token codec with a
//!   straight-through gradient contract and token-rate resampling.
//! - [`diffro`]: differentiable reward optimization of token policies via
//!   Gumbel-Softmax sampling and token-level KL regularization.
//! - [`pipeline`]: the multilingual corpus-production pipeline with its
//!   numeric gates (15% pairwise-WER cross validation, 300 ms / 50 ms
//!   punctuation rules, 0.6 volume peak, 1% / 5% length-ratio trim).
//! - [`textproc`]: pronunciation-inpainting augmentation and instruction
//!   prompt construction.
//! - [`eval`]: WER/CER scoring, embedding similarity, and report tables.
//!
//! Numeric kernels are generic over the [`real::Real`] scalar (f32 or f64);
//! the aliases below fix the common concrete choices.

pub mod diffro;
pub mod error;
pub mod eval;
pub mod fsq;
pub mod mat;
pub mod pipeline;
pub mod real;
pub mod textproc;

pub use error::{Error, Result};
pub use real::Real;

pub type Mat32 = mat::Mat<f32>;
pub type Mat64 = mat::Mat<f64>;

pub type FsqConfig32 = fsq::FsqConfig<f32>;
pub type FsqConfig64 = fsq::FsqConfig<f64>;

pub type PolicyLogits32 = diffro::PolicyLogits<f32>;
pub type PolicyLogits64 = diffro::PolicyLogits<f64>;
pub type LinearReader32 = diffro::LinearReader<f32>;
pub type LinearReader64 = diffro::LinearReader<f64>;

pub type AudioBuffer32 = pipeline::AudioBuffer<f32>;
pub type AudioBuffer64 = pipeline::AudioBuffer<f64>;

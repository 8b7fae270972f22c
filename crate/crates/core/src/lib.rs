//! Moment matching contrastive VAE.
//!
//! A two-latent-space VAE for contrastive analysis: background latents `z`
//! are shared between a target and a background dataset, salient latents `s`
//! only explain the target. Two maximum mean discrepancy penalties push the
//! background samples' salient codes onto a fixed reference vector and match
//! the distribution of `z` across the two datasets.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};

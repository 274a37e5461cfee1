//! Contextual bandit policies.
//!
//! - [`linear::LinUcb`]: deterministic optimistic selection on per-arm ridge
//!   regression state.
//! - [`thompson::GaussianTs`]: Bayesian linear reward model with known noise,
//!   posterior sampling, and Monte Carlo action propensities.
//! - [`neural`]: neural-linear policy (small tanh feature extractor trained
//!   from a replay queue, Normal-inverse-Gamma head).
//! - [`kalman`]: stacked-coefficient Gaussian state-space belief updated by
//!   Kalman filtering, exact for the linear observation model.

pub mod kalman;
pub mod linear;
pub mod neural;
pub mod replay;
pub mod thompson;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub(crate) fn check_dim<S: Scalar>(x: &[S], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: x.len(),
        });
    }
    if !crate::linalg::all_finite(x) {
        return Err(Error::NonFinite("context vector"));
    }
    Ok(())
}

/// Index of the largest score, lowest index on ties.
pub(crate) fn argmax<S: Scalar>(scores: &[S]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

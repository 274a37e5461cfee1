//! LinUCB: disjoint per-arm ridge regression with an optimistic bonus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};
use crate::scalar::Scalar;

use super::{argmax, check_dim};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LinUcbConfig<S> {
    pub arms: usize,
    pub dim: usize,
    /// Exploration strength on the confidence width.
    pub alpha: S,
    /// Ridge regularization; the per-arm precision starts at `lambda * I`.
    pub lambda: S,
}

impl<S: Scalar> LinUcbConfig<S> {
    pub fn new(arms: usize, dim: usize) -> Self {
        Self {
            arms,
            dim,
            alpha: S::one(),
            lambda: S::one(),
        }
    }
}

/// Disjoint-arm LinUCB state.
///
/// Each arm keeps the exact sufficient statistics `A_k = lambda I + sum x x^T`
/// and `b_k = sum r x`; estimates and widths come from Cholesky solves, so the
/// state is permutation-invariant over its update history.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinUcb<S> {
    config: LinUcbConfig<S>,
    precision: Vec<Mat<S>>,
    response: Vec<Vec<S>>,
    pulls: Vec<u64>,
}

impl<S: Scalar> LinUcb<S> {
    pub fn new(config: LinUcbConfig<S>) -> Result<Self> {
        if config.arms == 0 || config.dim == 0 {
            return Err(Error::InvalidParameter("arms and dim must be >= 1".into()));
        }
        if !(config.lambda > S::zero()) || !(config.alpha >= S::zero()) {
            return Err(Error::InvalidParameter(
                "lambda must be > 0 and alpha >= 0".into(),
            ));
        }
        Ok(Self {
            precision: (0..config.arms)
                .map(|_| Mat::scaled_identity(config.dim, config.lambda))
                .collect(),
            response: vec![vec![S::zero(); config.dim]; config.arms],
            pulls: vec![0; config.arms],
            config,
        })
    }

    pub fn config(&self) -> &LinUcbConfig<S> {
        &self.config
    }

    pub fn pulls(&self, arm: usize) -> u64 {
        self.pulls[arm]
    }

    /// Current coefficient estimate `A_k^{-1} b_k`.
    pub fn coefficient_estimate(&self, arm: usize) -> Result<Vec<S>> {
        Ok(self.precision[arm].cholesky()?.solve(&self.response[arm]))
    }

    /// `sqrt(x^T A_k^{-1} x)`, the confidence width at `x`.
    pub fn confidence_width(&self, arm: usize, x: &[S]) -> Result<S> {
        check_dim(x, self.config.dim)?;
        Ok(self.precision[arm].cholesky()?.inv_quad_form(x).sqrt())
    }

    /// Per-arm optimistic scores `x . theta_k + alpha * width_k(x)`.
    pub fn scores(&self, x: &[S]) -> Result<Vec<S>> {
        check_dim(x, self.config.dim)?;
        let mut out = Vec::with_capacity(self.config.arms);
        for arm in 0..self.config.arms {
            let chol = self.precision[arm].cholesky()?;
            let estimate = chol.solve(&self.response[arm]);
            let width = chol.inv_quad_form(x).sqrt();
            out.push(dot(&estimate, x) + self.config.alpha * width);
        }
        Ok(out)
    }

    /// Chooses the arm with the largest optimistic score (lowest index on
    /// ties) and returns the full score vector for audit logs.
    pub fn select(&self, x: &[S]) -> Result<(usize, Vec<S>)> {
        let scores = self.scores(x)?;
        Ok((argmax(&scores), scores))
    }

    /// Folds one observed `(x, arm, reward)` into the arm's statistics.
    pub fn update(&mut self, x: &[S], arm: usize, reward: S) -> Result<()> {
        check_dim(x, self.config.dim)?;
        if arm >= self.config.arms {
            return Err(Error::InvalidParameter(format!(
                "arm {arm} out of range (K = {})",
                self.config.arms
            )));
        }
        if !reward.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
        self.precision[arm].add_outer(x, S::one());
        for (b, xi) in self.response[arm].iter_mut().zip(x) {
            *b += reward * *xi;
        }
        self.pulls[arm] += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn one_dim() -> LinUcb<f64> {
        LinUcb::new(LinUcbConfig::new(2, 1)).unwrap()
    }

    /// Closed-form ridge algebra: after (x=1, r=1) on arm 0 with lambda=1,
    /// A0=2, b0=1, theta0=0.5; arm 1 untouched.
    #[test]
    fn update_matches_closed_form_ridge() {
        let mut bandit = one_dim();
        bandit.update(&[1.0], 0, 1.0).unwrap();
        assert_relative_eq!(bandit.coefficient_estimate(0).unwrap()[0], 0.5);
        assert_eq!(bandit.pulls(0), 1);
        assert_eq!(bandit.pulls(1), 0);

        let (action, scores) = bandit.select(&[1.0]).unwrap();
        assert_relative_eq!(scores[0], 0.5 + 0.5f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(scores[1], 1.0, epsilon = 1e-12);
        assert_eq!(action, 0);
    }

    #[test]
    fn fresh_state_ties_break_to_arm_zero() {
        let bandit = LinUcb::new(LinUcbConfig::new(3, 2)).unwrap();
        let x = [0.6, -0.8];
        let (action, scores) = bandit.select(&x).unwrap();
        let expected = (x.iter().map(|v| v * v).sum::<f64>() / 1.0).sqrt();
        for s in &scores {
            assert_relative_eq!(*s, expected, epsilon = 1e-12);
        }
        assert_eq!(action, 0);
    }

    #[test]
    fn zero_context_scores_zero_and_picks_arm_zero() {
        let bandit = LinUcb::new(LinUcbConfig::new(3, 2)).unwrap();
        let (action, scores) = bandit.select(&[0.0, 0.0]).unwrap();
        assert!(scores.iter().all(|s| *s == 0.0));
        assert_eq!(action, 0);
    }

    #[test]
    fn zero_context_update_only_counts_the_pull() {
        let mut bandit = one_dim();
        bandit.update(&[0.0], 1, 5.0).unwrap();
        assert_eq!(bandit.pulls(1), 1);
        assert_eq!(bandit.coefficient_estimate(1).unwrap()[0], 0.0);
        assert_eq!(bandit.confidence_width(1, &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn updates_commute() {
        let mut ab = one_dim();
        ab.update(&[1.0], 0, 1.0).unwrap();
        ab.update(&[2.0], 0, -0.5).unwrap();
        let mut ba = one_dim();
        ba.update(&[2.0], 0, -0.5).unwrap();
        ba.update(&[1.0], 0, 1.0).unwrap();
        assert_eq!(
            ab.coefficient_estimate(0).unwrap(),
            ba.coefficient_estimate(0).unwrap()
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut bandit = one_dim();
        assert!(bandit.update(&[f64::NAN], 0, 1.0).is_err());
        assert!(bandit.update(&[1.0], 0, f64::INFINITY).is_err());
        assert!(bandit.update(&[1.0], 7, 1.0).is_err());
        assert!(bandit.select(&[1.0, 2.0]).is_err());
    }

    /// Relabeling arms and replaying the same data permutes the selection.
    #[test]
    fn permutation_equivariance() {
        let data = [
            (vec![1.0, 0.2], 0usize, 1.0),
            (vec![0.4, -1.0], 1, 0.3),
            (vec![-0.6, 0.9], 2, -0.2),
            (vec![0.8, 0.8], 0, 0.7),
        ];
        let perm = [2usize, 0, 1]; // new index of each old arm
        let mut original = LinUcb::new(LinUcbConfig::new(3, 2)).unwrap();
        let mut relabeled = LinUcb::new(LinUcbConfig::new(3, 2)).unwrap();
        for (x, a, r) in &data {
            original.update(x, *a, *r).unwrap();
            relabeled.update(x, perm[*a], *r).unwrap();
        }
        let x = [0.5, 0.5];
        let (a_orig, _) = original.select(&x).unwrap();
        let (a_perm, _) = relabeled.select(&x).unwrap();
        assert_eq!(perm[a_orig], a_perm);
    }

    proptest! {
        /// The per-arm precision stays symmetric positive definite and the
        /// confidence width never grows with more data.
        #[test]
        fn precision_spd_and_width_shrinks(
            updates in prop::collection::vec(
                (prop::collection::vec(-3.0f64..3.0, 3), 0usize..2, -2.0f64..2.0),
                1..40
            )
        ) {
            let mut bandit = LinUcb::new(LinUcbConfig::new(2, 3)).unwrap();
            let probe = [0.7, -0.3, 0.5];
            let mut prev_width = [
                bandit.confidence_width(0, &probe).unwrap(),
                bandit.confidence_width(1, &probe).unwrap(),
            ];
            for (x, arm, r) in updates {
                bandit.update(&x, arm, r).unwrap();
                // SPD: Cholesky must succeed for every arm.
                for k in 0..2 {
                    prop_assert!(bandit.precision[k].cholesky().is_ok());
                    let w = bandit.confidence_width(k, &probe).unwrap();
                    prop_assert!(w <= prev_width[k] + 1e-12);
                    prev_width[k] = w;
                }
            }
        }
    }
}

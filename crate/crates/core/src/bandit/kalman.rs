//! Gaussian state-space bandit updated by Kalman filtering.
//!
//! All arms' coefficients are stacked into one state vector with a Gaussian
//! belief. Each observed reward is a scalar measurement through the context
//! embedded at the played arm's block. With zero process noise the
//! observation model is linear, so the filtered belief coincides with the
//! exact conjugate Bayesian linear-regression posterior; `process_noise > 0`
//! lets the belief track drifting coefficients.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};
use crate::rng::standard_normal_vec;
use crate::scalar::Scalar;

use super::{argmax, check_dim};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EkfConfig<S> {
    pub arms: usize,
    pub dim: usize,
    /// Per-step covariance inflation `q` (0 for stationary coefficients).
    pub process_noise: S,
    /// Observation noise variance `R`.
    pub obs_noise: S,
    /// Prior covariance scale: the prior is `N(0, prior_var * I)`.
    pub prior_var: S,
}

impl<S: Scalar> EkfConfig<S> {
    pub fn new(arms: usize, dim: usize) -> Self {
        Self {
            arms,
            dim,
            process_noise: S::zero(),
            obs_noise: S::one(),
            prior_var: S::one(),
        }
    }
}

/// Stacked-coefficient Gaussian belief.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EkfBelief<S> {
    config: EkfConfig<S>,
    mean: Vec<S>,
    covariance: Mat<S>,
}

impl<S: Scalar> EkfBelief<S> {
    pub fn new(config: EkfConfig<S>) -> Result<Self> {
        if config.arms == 0 || config.dim == 0 {
            return Err(Error::InvalidParameter("arms and dim must be >= 1".into()));
        }
        if !(config.obs_noise > S::zero())
            || !(config.prior_var > S::zero())
            || config.process_noise < S::zero()
        {
            return Err(Error::InvalidParameter(
                "obs_noise and prior_var must be > 0, process_noise >= 0".into(),
            ));
        }
        let n = config.arms * config.dim;
        Ok(Self {
            mean: vec![S::zero(); n],
            covariance: Mat::scaled_identity(n, config.prior_var),
            config,
        })
    }

    /// Restores a belief from an explicit mean and covariance.
    pub fn with_state(config: EkfConfig<S>, mean: Vec<S>, covariance: Mat<S>) -> Result<Self> {
        let n = config.arms * config.dim;
        if mean.len() != n || covariance.rows() != n || covariance.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mean.len(),
            });
        }
        Ok(Self {
            config,
            mean,
            covariance,
        })
    }

    pub fn config(&self) -> &EkfConfig<S> {
        &self.config
    }

    pub fn arm_mean(&self, arm: usize) -> &[S] {
        let d = self.config.dim;
        &self.mean[arm * d..(arm + 1) * d]
    }

    pub fn arm_covariance(&self, arm: usize) -> Mat<S> {
        let d = self.config.dim;
        self.covariance.block(arm * d, arm * d, d)
    }

    pub fn covariance(&self) -> &Mat<S> {
        &self.covariance
    }

    /// Predict (covariance inflation by `q I`) then scalar Kalman update for
    /// the reward observed on `arm` at context `x`. The covariance is
    /// re-symmetrized after the rank-1 correction.
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
        let n = self.mean.len();
        let d = self.config.dim;

        if self.config.process_noise > S::zero() {
            self.covariance.add_scaled_identity(self.config.process_noise);
        }

        // Observation vector: x embedded at the arm's block.
        let mut h = vec![S::zero(); n];
        h[arm * d..(arm + 1) * d].copy_from_slice(x);

        let ph = self.covariance.matvec(&h);
        let innovation_var = dot(&h, &ph) + self.config.obs_noise;
        if !(innovation_var > S::zero()) || !innovation_var.is_finite() {
            return Err(Error::Internal(
                "Kalman innovation variance not positive".into(),
            ));
        }
        let innovation = reward - dot(&h, &self.mean);
        let gain_scale = innovation / innovation_var;
        for (m, phi) in self.mean.iter_mut().zip(&ph) {
            *m += gain_scale * *phi;
        }
        // P <- P - (P h)(P h)^T / s, then symmetrize.
        for i in 0..n {
            for j in 0..n {
                self.covariance
                    .add_at(i, j, -(ph[i] * ph[j]) / innovation_var);
            }
        }
        self.covariance.symmetrize();
        Ok(())
    }

    /// Thompson draw from the per-arm marginal blocks (cross-arm correlations
    /// are ignored at selection time).
    pub fn select(&self, x: &[S], rng: &mut dyn RngCore) -> Result<usize> {
        check_dim(x, self.config.dim)?;
        let mut scores = Vec::with_capacity(self.config.arms);
        for arm in 0..self.config.arms {
            let block = self.arm_covariance(arm);
            let chol = block.cholesky().map_err(|_| {
                Error::Internal("arm covariance block lost positive definiteness".into())
            })?;
            let z = standard_normal_vec::<S, _>(rng, self.config.dim);
            // theta = mean + L z draws from N(mean, block).
            let mut spread = vec![S::zero(); self.config.dim];
            for i in 0..self.config.dim {
                let mut s = S::zero();
                for j in 0..=i {
                    s += chol.lower(i, j) * z[j];
                }
                spread[i] = s;
            }
            let mean = self.arm_mean(arm);
            let theta: Vec<S> = mean.iter().zip(&spread).map(|(m, s)| *m + *s).collect();
            scores.push(dot(&theta, x));
        }
        Ok(argmax(&scores))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_relative_eq;
    use rand::Rng;

    /// Linear model makes the filter exact: q=0, R=1, prior N(0,1), d=1, K=1,
    /// observe (x=1, r=1) => posterior N(0.5, 0.5).
    #[test]
    fn single_update_matches_conjugate_oracle() {
        let mut belief = EkfBelief::new(EkfConfig::new(1, 1)).unwrap();
        belief.update(&[1.0], 0, 1.0).unwrap();
        assert_relative_eq!(belief.arm_mean(0)[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(belief.arm_covariance(0).get(0, 0), 0.5, epsilon = 1e-14);
    }

    /// Batch conjugate oracle: after 20 random updates with q=0 the belief
    /// equals batch Bayesian linear regression within 1e-8.
    #[test]
    fn sequence_matches_batch_bayesian_regression() {
        let arms = 2;
        let dim = 3;
        let mut belief = EkfBelief::new(EkfConfig::new(arms, dim)).unwrap();
        let mut rng = derive_rng(13, "ekf-batch");
        let mut per_arm_precision = vec![Mat::<f64>::identity(dim); arms];
        let mut per_arm_shift = vec![vec![0.0; dim]; arms];
        for i in 0..20 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let arm = i % arms;
            let r = rng.random_range(-1.0..1.0);
            belief.update(&x, arm, r).unwrap();
            per_arm_precision[arm].add_outer(&x, 1.0);
            for (s, xi) in per_arm_shift[arm].iter_mut().zip(&x) {
                *s += r * xi;
            }
        }
        for arm in 0..arms {
            let chol = per_arm_precision[arm].cholesky().unwrap();
            let mean = chol.solve(&per_arm_shift[arm]);
            let cov = chol.inverse();
            for (a, b) in belief.arm_mean(arm).iter().zip(&mean) {
                assert!((a - b).abs() < 1e-8, "mean {a} vs {b}");
            }
            assert!(belief.arm_covariance(arm).max_abs_diff(&cov) < 1e-8);
        }
    }

    #[test]
    fn zero_context_only_inflates_covariance() {
        let mut belief = EkfBelief::new(EkfConfig {
            process_noise: 0.1,
            ..EkfConfig::new(1, 2)
        })
        .unwrap();
        belief.update(&[0.0, 0.0], 0, 42.0).unwrap();
        assert_eq!(belief.arm_mean(0), &[0.0, 0.0]);
        let cov = belief.arm_covariance(0);
        assert_relative_eq!(cov.get(0, 0), 1.1, epsilon = 1e-14);
        assert_relative_eq!(cov.get(1, 1), 1.1, epsilon = 1e-14);
        assert_eq!(cov.get(0, 1), 0.0);
    }

    #[test]
    fn point_mass_belief_is_deterministic() {
        let config = EkfConfig::new(2, 1);
        let belief = EkfBelief::with_state(
            config,
            vec![0.2, 0.9],
            Mat::scaled_identity(2, 1e-18),
        )
        .unwrap();
        let mut rng = derive_rng(1, "ekf-point");
        for _ in 0..100 {
            assert_eq!(belief.select(&[1.0], &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn exchangeable_arm_blocks_select_uniformly() {
        let belief = EkfBelief::new(EkfConfig::new(4, 2)).unwrap();
        let mut rng = derive_rng(23, "ekf-sym");
        let mut counts = [0u32; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[belief.select(&[0.7, 0.1], &mut rng).unwrap()] += 1;
        }
        for c in counts {
            let freq = f64::from(c) / f64::from(n);
            assert!((freq - 0.25).abs() < 0.02, "freq {freq}");
        }
    }

    #[test]
    fn single_arm_always_zero() {
        let belief = EkfBelief::new(EkfConfig::new(1, 2)).unwrap();
        let mut rng = derive_rng(0, "ekf-single");
        assert_eq!(belief.select(&[1.0, -1.0], &mut rng).unwrap(), 0);
    }

    #[test]
    fn rejects_non_finite_inputs() {
        let mut belief = EkfBelief::new(EkfConfig::new(1, 1)).unwrap();
        assert!(belief.update(&[f64::NAN], 0, 1.0).is_err());
        assert!(belief.update(&[1.0], 0, f64::NEG_INFINITY).is_err());
    }

    /// Covariance keeps a Cholesky factorization (positive definiteness)
    /// through long update sequences.
    #[test]
    fn covariance_stays_positive_definite() {
        let mut belief = EkfBelief::new(EkfConfig::new(2, 2)).unwrap();
        let mut rng = derive_rng(31, "ekf-pd");
        for i in 0..500 {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            belief.update(&x, i % 2, rng.random_range(-1.0..1.0)).unwrap();
        }
        assert!(belief.covariance.cholesky().is_ok());
    }
}

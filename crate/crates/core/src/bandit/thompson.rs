//! Linear Thompson sampling with a known-noise Gaussian posterior.
//!
//! Per arm the belief over reward coefficients is Gaussian. State is kept in
//! natural parameters (precision and precision-times-mean), so the posterior
//! after any sequence of updates equals the batch conjugate posterior on the
//! same data — update order cannot matter.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Mat};
use crate::rng::standard_normal_vec;
use crate::scalar::Scalar;

use super::{argmax, check_dim};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GaussianTsConfig<S> {
    pub arms: usize,
    pub dim: usize,
    /// Known observation-noise variance `sigma^2`.
    pub noise_var: S,
    /// Prior covariance scale: the prior is `N(0, prior_var * I)`.
    pub prior_var: S,
}

impl<S: Scalar> GaussianTsConfig<S> {
    pub fn new(arms: usize, dim: usize) -> Self {
        Self {
            arms,
            dim,
            noise_var: S::one(),
            prior_var: S::one(),
        }
    }
}

/// Per-arm Gaussian posterior over reward coefficients.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussianTs<S> {
    config: GaussianTsConfig<S>,
    /// Posterior precision per arm.
    precision: Vec<Mat<S>>,
    /// Precision-times-mean per arm.
    shift: Vec<Vec<S>>,
}

impl<S: Scalar> GaussianTs<S> {
    pub fn new(config: GaussianTsConfig<S>) -> Result<Self> {
        if config.arms == 0 || config.dim == 0 {
            return Err(Error::InvalidParameter("arms and dim must be >= 1".into()));
        }
        if !(config.noise_var > S::zero()) || !(config.prior_var > S::zero()) {
            return Err(Error::InvalidParameter(
                "noise_var and prior_var must be > 0".into(),
            ));
        }
        let prior_precision = S::one() / config.prior_var;
        Ok(Self {
            precision: (0..config.arms)
                .map(|_| Mat::scaled_identity(config.dim, prior_precision))
                .collect(),
            shift: vec![vec![S::zero(); config.dim]; config.arms],
            config,
        })
    }

    /// Builds a belief from explicit per-arm posterior means and precisions
    /// (used to restore checkpoints and to pin degenerate posteriors in tests).
    pub fn from_posterior(
        config: GaussianTsConfig<S>,
        means: Vec<Vec<S>>,
        precisions: Vec<Mat<S>>,
    ) -> Result<Self> {
        if means.len() != config.arms || precisions.len() != config.arms {
            return Err(Error::DimensionMismatch {
                expected: config.arms,
                got: means.len().min(precisions.len()),
            });
        }
        let mut shift = Vec::with_capacity(config.arms);
        for (mean, precision) in means.iter().zip(&precisions) {
            check_dim(mean, config.dim)?;
            shift.push(precision.matvec(mean));
        }
        Ok(Self {
            config,
            precision: precisions,
            shift,
        })
    }

    pub fn config(&self) -> &GaussianTsConfig<S> {
        &self.config
    }

    /// Conjugate Gaussian update of arm `arm` with observation `(x, reward)`.
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
        let inv_noise = S::one() / self.config.noise_var;
        self.precision[arm].add_outer(x, inv_noise);
        for (s, xi) in self.shift[arm].iter_mut().zip(x) {
            *s += reward * *xi * inv_noise;
        }
        Ok(())
    }

    pub fn posterior_mean(&self, arm: usize) -> Result<Vec<S>> {
        Ok(self.precision[arm].cholesky()?.solve(&self.shift[arm]))
    }

    pub fn posterior_covariance(&self, arm: usize) -> Result<Mat<S>> {
        Ok(self.precision[arm].cholesky()?.inverse())
    }

    /// One posterior draw of arm `arm`'s coefficients: `m + L^{-T} z` where
    /// the precision factors as `L L^T`.
    pub fn sample_coefficients(&self, arm: usize, rng: &mut dyn RngCore) -> Result<Vec<S>> {
        let chol = self.precision[arm].cholesky()?;
        let mean = chol.solve(&self.shift[arm]);
        let z = standard_normal_vec::<S, _>(rng, self.config.dim);
        let noise = chol.solve_upper(&z);
        Ok(mean.iter().zip(&noise).map(|(m, n)| *m + *n).collect())
    }

    /// Thompson draw: samples coefficients per arm and plays the argmax of
    /// `x . theta_k` (lowest arm index on ties). Deterministic given the rng.
    pub fn select(&self, x: &[S], rng: &mut dyn RngCore) -> Result<usize> {
        check_dim(x, self.config.dim)?;
        let mut scores = Vec::with_capacity(self.config.arms);
        for arm in 0..self.config.arms {
            let theta = self.sample_coefficients(arm, rng)?;
            scores.push(dot(&theta, x));
        }
        Ok(argmax(&scores))
    }

    /// Monte Carlo estimate of `P(arm = argmax)` per arm over `n_samples`
    /// posterior draws. Entries are exact counts over `n_samples`, so they
    /// sum to 1.
    pub fn action_propensity(
        &self,
        x: &[S],
        n_samples: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<S>> {
        if n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
        }
        check_dim(x, self.config.dim)?;
        let mut counts = vec![0u64; self.config.arms];
        for _ in 0..n_samples {
            counts[self.select(x, rng)?] += 1;
        }
        let total = S::from_usize(n_samples).expect("sample count fits in scalar");
        Ok(counts
            .iter()
            .map(|c| S::from_u64(*c).expect("count fits in scalar") / total)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn one_dim() -> GaussianTs<f64> {
        GaussianTs::new(GaussianTsConfig::new(2, 1)).unwrap()
    }

    /// Conjugate Gaussian closed form: prior N(0,1), sigma^2=1, observe
    /// (x=1, r=1) => posterior N(0.5, 0.5).
    #[test]
    fn update_matches_conjugate_closed_form() {
        let mut belief = one_dim();
        belief.update(&[1.0], 0, 1.0).unwrap();
        assert_relative_eq!(belief.posterior_mean(0).unwrap()[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(
            belief.posterior_covariance(0).unwrap().get(0, 0),
            0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn zero_context_observation_changes_nothing() {
        let mut belief = one_dim();
        belief.update(&[0.0], 0, 123.0).unwrap();
        assert_eq!(belief.posterior_mean(0).unwrap()[0], 0.0);
        assert_eq!(belief.posterior_covariance(0).unwrap().get(0, 0), 1.0);
    }

    /// Sequential updates equal one batch update: natural parameters are sums.
    #[test]
    fn sequential_equals_batch() {
        let mut seq = one_dim();
        seq.update(&[1.0], 0, 1.0).unwrap();
        seq.update(&[1.0], 0, 0.0).unwrap();
        // Batch posterior: precision 1 + 2 = 3; shift = 1; mean = 1/3.
        assert_relative_eq!(seq.posterior_mean(0).unwrap()[0], 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(
            seq.posterior_covariance(0).unwrap().get(0, 0),
            1.0 / 3.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn point_mass_posterior_always_picks_better_arm() {
        let config = GaussianTsConfig::new(2, 1);
        let tight = Mat::scaled_identity(1, 1e16);
        let belief = GaussianTs::from_posterior(
            config,
            vec![vec![2.0], vec![1.0]],
            vec![tight.clone(), tight],
        )
        .unwrap();
        let mut rng = derive_rng(0, "ts-point-mass");
        for _ in 0..200 {
            assert_eq!(belief.select(&[1.0], &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn exchangeable_arms_select_uniformly() {
        let belief = GaussianTs::new(GaussianTsConfig::new(4, 2)).unwrap();
        let mut rng = derive_rng(7, "ts-symmetric");
        let mut counts = [0u32; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[belief.select(&[1.0, -0.5], &mut rng).unwrap()] += 1;
        }
        for c in counts {
            let freq = f64::from(c) / f64::from(n);
            assert!((freq - 0.25).abs() < 0.02, "freq {freq}");
        }
    }

    #[test]
    fn single_arm_always_zero() {
        let belief = GaussianTs::new(GaussianTsConfig::new(1, 2)).unwrap();
        let mut rng = derive_rng(1, "ts-single");
        assert_eq!(belief.select(&[1.0, 1.0], &mut rng).unwrap(), 0);
        let p = belief.action_propensity(&[1.0, 1.0], 100, &mut rng).unwrap();
        assert_eq!(p, vec![1.0]);
    }

    #[test]
    fn propensity_indicator_for_point_mass() {
        let config = GaussianTsConfig::new(3, 1);
        let tight = Mat::scaled_identity(1, 1e16);
        let belief = GaussianTs::from_posterior(
            config,
            vec![vec![0.0], vec![5.0], vec![1.0]],
            vec![tight.clone(), tight.clone(), tight],
        )
        .unwrap();
        let mut rng = derive_rng(3, "ts-prop");
        let p = belief.action_propensity(&[1.0], 500, &mut rng).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn propensity_symmetric_two_arms() {
        let belief = GaussianTs::<f64>::new(GaussianTsConfig::new(2, 1)).unwrap();
        let mut rng = derive_rng(11, "ts-prop-sym");
        let p = belief.action_propensity(&[1.0], 10_000, &mut rng).unwrap();
        assert!((p[0] - 0.5).abs() < 0.02);
        assert_relative_eq!(p[0] + p[1], 1.0);
    }

    #[test]
    fn selection_deterministic_given_seed() {
        let mut belief = GaussianTs::new(GaussianTsConfig::new(3, 2)).unwrap();
        belief.update(&[1.0, 0.0], 1, 0.8).unwrap();
        let x = [0.3, 0.7];
        let a: Vec<usize> = {
            let mut rng = derive_rng(42, "ts-det");
            (0..50).map(|_| belief.select(&x, &mut rng).unwrap()).collect()
        };
        let b: Vec<usize> = {
            let mut rng = derive_rng(42, "ts-det");
            (0..50).map(|_| belief.select(&x, &mut rng).unwrap()).collect()
        };
        assert_eq!(a, b);
    }

    proptest! {
        /// Posterior covariance shrinks in the Loewner order on every update:
        /// v^T Sigma_after v <= v^T Sigma_before v for all probes v.
        #[test]
        fn covariance_shrinks(
            xs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..15),
            rewards in prop::collection::vec(-2.0f64..2.0, 15),
            probe in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            let mut belief = GaussianTs::new(GaussianTsConfig::new(1, 2)).unwrap();
            for (x, r) in xs.iter().zip(&rewards) {
                let before = belief.posterior_covariance(0).unwrap();
                belief.update(x, 0, *r).unwrap();
                let after = belief.posterior_covariance(0).unwrap();
                let qb = dot(&before.matvec(&probe), &probe);
                let qa = dot(&after.matvec(&probe), &probe);
                prop_assert!(qa <= qb + 1e-10);
            }
        }

        /// Any permutation of a dataset yields the same final belief.
        #[test]
        fn permutation_invariant_posterior(seed in 0u64..1000) {
            let data: Vec<(Vec<f64>, f64)> = (0..8)
                .map(|i| {
                    let t = f64::from(i);
                    (vec![(t * 0.7).sin(), (t * 1.3).cos()], (t * 0.9).sin())
                })
                .collect();
            let mut forward = GaussianTs::new(GaussianTsConfig::new(1, 2)).unwrap();
            for (x, r) in &data {
                forward.update(x, 0, *r).unwrap();
            }
            // Deterministic pseudo-shuffle driven by the seed.
            let mut order: Vec<usize> = (0..data.len()).collect();
            let mut state = seed;
            for i in (1..order.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (state as usize) % (i + 1));
            }
            let mut shuffled = GaussianTs::new(GaussianTsConfig::new(1, 2)).unwrap();
            for i in order {
                shuffled.update(&data[i].0, 0, data[i].1).unwrap();
            }
            let mf = forward.posterior_mean(0).unwrap();
            let ms = shuffled.posterior_mean(0).unwrap();
            for (a, b) in mf.iter().zip(&ms) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            let cf = forward.posterior_covariance(0).unwrap();
            let cs = shuffled.posterior_covariance(0).unwrap();
            prop_assert!(cf.max_abs_diff(&cs) < 1e-10);
        }
    }
}

//! Neural-linear bandit: a small tanh feature extractor trained from an
//! experience replay queue, with a Bayesian linear head under a
//! Normal-inverse-Gamma prior over (coefficients, noise variance).
//!
//! The extractor is retrained every `retrain_every` interactions by
//! deterministic full-batch gradient descent; the head is then refit from the
//! full replay queue because the features changed. Between retrains the
//! extractor is frozen, so decisions depend only on (extractor, head, rng).

use rand::{Rng, RngCore};
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot, Mat};
use crate::rng::standard_normal_vec;
use crate::scalar::Scalar;

use super::replay::{ReplayQueue, Transition};
use super::{argmax, check_dim};

/// Architecture and training hyperparameters for [`FeatureExtractor`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    /// Hidden layer widths (tanh); may be empty for a purely linear map.
    pub hidden: Vec<usize>,
    /// Output feature dimension `p`.
    pub feature_dim: usize,
    /// Arm count for the training head.
    pub arms: usize,
    /// Fixed gradient-descent step size.
    pub step_size: f64,
    /// Full-batch epochs per retrain.
    pub epochs: usize,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl MlpConfig {
    pub fn standard(input_dim: usize, arms: usize, seed: u64) -> Self {
        Self {
            input_dim,
            hidden: vec![32, 32],
            feature_dim: 32,
            arms,
            step_size: 0.05,
            epochs: 50,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Dense<S> {
    w: Mat<S>,
    b: Vec<S>,
}

impl<S: Scalar> Dense<S> {
    fn seeded(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (cols.max(1) as f64).sqrt();
        let mut w = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                w.set(i, j, S::cast(rng.random_range(-bound..bound)));
            }
        }
        Self {
            w,
            b: vec![S::zero(); rows],
        }
    }

    fn forward(&self, x: &[S]) -> Vec<S> {
        let mut out = self.w.matvec(x);
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o += *b;
        }
        out
    }

    fn param_count(&self) -> usize {
        self.w.rows() * self.w.cols() + self.b.len()
    }
}

/// Fully-connected feature map `x -> phi(x)` with tanh hidden layers, a linear
/// projection to `p` features, and a per-arm linear head used only while
/// training the representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtractor<S> {
    config: MlpConfig,
    hidden: Vec<Dense<S>>,
    projection: Dense<S>,
    head: Dense<S>,
}

impl<S: Scalar> FeatureExtractor<S> {
    pub fn new(config: MlpConfig) -> Result<Self> {
        if config.input_dim == 0 || config.feature_dim == 0 || config.arms == 0 {
            return Err(Error::InvalidParameter(
                "input_dim, feature_dim, and arms must be >= 1".into(),
            ));
        }
        let mut rng = crate::rng::derive_rng(config.seed, "mlp-init");
        let mut hidden = Vec::with_capacity(config.hidden.len());
        let mut fan_in = config.input_dim;
        for width in &config.hidden {
            hidden.push(Dense::seeded(*width, fan_in, &mut rng));
            fan_in = *width;
        }
        let projection = Dense::seeded(config.feature_dim, fan_in, &mut rng);
        let head = Dense::seeded(config.arms, config.feature_dim, &mut rng);
        Ok(Self {
            config,
            hidden,
            projection,
            head,
        })
    }

    /// Linear pass-through extractor: `phi(x) = x` with a zeroed head.
    pub fn identity(dim: usize, arms: usize) -> Result<Self> {
        let config = MlpConfig {
            input_dim: dim,
            hidden: vec![],
            feature_dim: dim,
            arms,
            step_size: 0.0,
            epochs: 0,
            seed: 0,
        };
        Ok(Self {
            projection: Dense {
                w: Mat::identity(dim),
                b: vec![S::zero(); dim],
            },
            head: Dense {
                w: Mat::zeros(arms, dim),
                b: vec![S::zero(); arms],
            },
            hidden: vec![],
            config,
        })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn feature_dim(&self) -> usize {
        self.config.feature_dim
    }

    /// `phi(x)`: tanh hidden layers then the linear projection.
    pub fn features(&self, x: &[S]) -> Result<Vec<S>> {
        check_dim(x, self.config.input_dim)?;
        let mut h = x.to_vec();
        for layer in &self.hidden {
            h = layer.forward(&h);
            for v in &mut h {
                *v = v.tanh();
            }
        }
        Ok(self.projection.forward(&h))
    }

    /// Head prediction of the reward for `action` (training objective only).
    pub fn predict_reward(&self, x: &[S], action: usize) -> Result<S> {
        let phi = self.features(x)?;
        let scores = self.head.forward(&phi);
        scores
            .get(action)
            .copied()
            .ok_or_else(|| Error::InvalidParameter(format!("action {action} out of range")))
    }

    /// Mean squared reward-prediction error over the replay batch.
    pub fn batch_loss(&self, replay: &ReplayQueue<S>) -> Result<S> {
        Ok(self.loss_and_gradient(replay)?.0)
    }

    /// All parameters flattened in a fixed layout (hidden layers, projection,
    /// head; weights row-major before biases).
    pub fn params_flat(&self) -> Vec<S> {
        let mut out = Vec::new();
        for layer in self.hidden.iter().chain([&self.projection, &self.head]) {
            for i in 0..layer.w.rows() {
                for j in 0..layer.w.cols() {
                    out.push(layer.w.get(i, j));
                }
            }
            out.extend_from_slice(&layer.b);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[S]) -> Result<()> {
        let expected: usize = self
            .hidden
            .iter()
            .chain([&self.projection, &self.head])
            .map(Dense::param_count)
            .sum();
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: params.len(),
            });
        }
        let mut cursor = 0;
        for layer in self
            .hidden
            .iter_mut()
            .chain([&mut self.projection, &mut self.head])
        {
            for i in 0..layer.w.rows() {
                for j in 0..layer.w.cols() {
                    layer.w.set(i, j, params[cursor]);
                    cursor += 1;
                }
            }
            for b in &mut layer.b {
                *b = params[cursor];
                cursor += 1;
            }
        }
        Ok(())
    }

    /// Mean squared error over the replay batch and its gradient in the
    /// [`params_flat`](Self::params_flat) layout, by reverse-mode
    /// accumulation.
    pub fn loss_and_gradient(&self, replay: &ReplayQueue<S>) -> Result<(S, Vec<S>)> {
        if replay.is_empty() {
            return Err(Error::EmptyInput("replay queue"));
        }
        let n = S::from_usize(replay.len()).expect("replay length fits in scalar");
        let layer_count = self.hidden.len();
        let mut grads: Vec<Dense<S>> = self
            .hidden
            .iter()
            .chain([&self.projection, &self.head])
            .map(|l| Dense {
                w: Mat::zeros(l.w.rows(), l.w.cols()),
                b: vec![S::zero(); l.b.len()],
            })
            .collect();
        let mut loss = S::zero();

        for t in replay.iter() {
            check_dim(&t.context, self.config.input_dim)?;
            if t.action >= self.config.arms {
                return Err(Error::InvalidParameter(format!(
                    "replay action {} out of range",
                    t.action
                )));
            }
            // Forward pass, keeping activations.
            let mut activations = Vec::with_capacity(layer_count + 1);
            activations.push(t.context.clone());
            for layer in &self.hidden {
                let mut h = layer.forward(activations.last().unwrap());
                for v in &mut h {
                    *v = v.tanh();
                }
                activations.push(h);
            }
            let phi = self.projection.forward(activations.last().unwrap());
            let pred = dot(
                &(0..phi.len())
                    .map(|j| self.head.w.get(t.action, j))
                    .collect::<Vec<_>>(),
                &phi,
            ) + self.head.b[t.action];
            let err = pred - t.reward;
            loss += err * err / n;

            // Backward pass.
            let dpred = S::cast(2.0) * err / n;
            for j in 0..phi.len() {
                grads[layer_count + 1].w.add_at(t.action, j, dpred * phi[j]);
            }
            grads[layer_count + 1].b[t.action] += dpred;

            let mut dh: Vec<S> = (0..phi.len())
                .map(|j| dpred * self.head.w.get(t.action, j))
                .collect();
            // Projection layer (linear).
            {
                let input = activations.last().unwrap();
                for i in 0..self.projection.w.rows() {
                    for j in 0..self.projection.w.cols() {
                        grads[layer_count].w.add_at(i, j, dh[i] * input[j]);
                    }
                    grads[layer_count].b[i] += dh[i];
                }
                let mut next = vec![S::zero(); input.len()];
                for i in 0..self.projection.w.rows() {
                    for (j, nj) in next.iter_mut().enumerate() {
                        *nj += self.projection.w.get(i, j) * dh[i];
                    }
                }
                dh = next;
            }
            // Hidden layers, newest first.
            for l in (0..layer_count).rev() {
                let output = &activations[l + 1];
                let input = &activations[l];
                let dz: Vec<S> = dh
                    .iter()
                    .zip(output)
                    .map(|(d, h)| *d * (S::one() - *h * *h))
                    .collect();
                for i in 0..self.hidden[l].w.rows() {
                    for j in 0..self.hidden[l].w.cols() {
                        grads[l].w.add_at(i, j, dz[i] * input[j]);
                    }
                    grads[l].b[i] += dz[i];
                }
                let mut next = vec![S::zero(); input.len()];
                for i in 0..self.hidden[l].w.rows() {
                    for (j, nj) in next.iter_mut().enumerate() {
                        *nj += self.hidden[l].w.get(i, j) * dz[i];
                    }
                }
                dh = next;
            }
        }

        let mut flat = Vec::new();
        for g in &grads {
            for i in 0..g.w.rows() {
                for j in 0..g.w.cols() {
                    flat.push(g.w.get(i, j));
                }
            }
            flat.extend_from_slice(&g.b);
        }
        Ok((loss, flat))
    }

    /// Full-batch gradient descent on the replay batch with the configured
    /// fixed step size. Returns the loss after each epoch (the loss sequence
    /// is non-increasing at the default step on well-scaled data).
    pub fn train_on_replay(&mut self, replay: &ReplayQueue<S>) -> Result<Vec<S>> {
        if replay.is_empty() {
            return Err(Error::EmptyInput("replay queue"));
        }
        let step = S::cast(self.config.step_size);
        let mut losses = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            let (_, grad) = self.loss_and_gradient(replay)?;
            let mut params = self.params_flat();
            for (p, g) in params.iter_mut().zip(&grad) {
                *p = *p - step * *g;
            }
            self.set_params_flat(&params)?;
            losses.push(self.batch_loss(replay)?);
        }
        Ok(losses)
    }
}

/// Normal-inverse-Gamma prior/posterior parameters for one arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NigParams<S> {
    pub mean: Vec<S>,
    /// Coefficient precision `V^{-1}` (scaled by the noise variance).
    pub precision: Mat<S>,
    /// Inverse-Gamma shape `a`.
    pub shape: S,
    /// Inverse-Gamma rate `b`.
    pub rate: S,
}

impl<S: Scalar> NigParams<S> {
    /// Unit prior: `m = 0`, `V = I`, `a = 1`, `b = 1`.
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![S::zero(); dim],
            precision: Mat::identity(dim),
            shape: S::one(),
            rate: S::one(),
        }
    }
}

/// Per-arm Normal-inverse-Gamma posterior over (coefficients, noise variance)
/// of the bandit's last-layer features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NigHead<S> {
    feature_dim: usize,
    priors: Vec<NigParams<S>>,
    arms: Vec<NigParams<S>>,
}

impl<S: Scalar> NigHead<S> {
    pub fn standard(arms: usize, feature_dim: usize) -> Result<Self> {
        Self::from_priors(vec![NigParams::standard(feature_dim); arms])
    }

    pub fn from_priors(priors: Vec<NigParams<S>>) -> Result<Self> {
        let feature_dim = priors
            .first()
            .map(|p| p.mean.len())
            .ok_or(Error::EmptyInput("NIG priors"))?;
        for p in &priors {
            if p.mean.len() != feature_dim || p.precision.rows() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    got: p.mean.len(),
                });
            }
            if !(p.shape > S::zero()) || !(p.rate > S::zero()) {
                return Err(Error::InvalidParameter(
                    "NIG shape and rate must be > 0".into(),
                ));
            }
        }
        Ok(Self {
            feature_dim,
            arms: priors.clone(),
            priors,
        })
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn params(&self, arm: usize) -> &NigParams<S> {
        &self.arms[arm]
    }

    /// Resets every arm to its prior (used when features are retrained and
    /// the old sufficient statistics no longer apply).
    pub fn reset_to_prior(&mut self) {
        self.arms = self.priors.clone();
    }

    /// Standard conjugate update with one observation `(phi, reward)`.
    pub fn update(&mut self, features: &[S], arm: usize, reward: S) -> Result<()> {
        check_dim(features, self.feature_dim)?;
        if arm >= self.arms.len() {
            return Err(Error::InvalidParameter(format!("arm {arm} out of range")));
        }
        if !reward.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
        let current = &self.arms[arm];
        let mut precision = current.precision.clone();
        precision.add_outer(features, S::one());
        let prior_shift = current.precision.matvec(&current.mean);
        let mut rhs = prior_shift.clone();
        for (v, f) in rhs.iter_mut().zip(features) {
            *v += reward * *f;
        }
        let mean = precision.cholesky()?.solve(&rhs);

        let half = S::cast(0.5);
        let shape = current.shape + half;
        let old_quad = dot(&current.mean, &prior_shift);
        let new_quad = dot(&mean, &precision.matvec(&mean));
        let rate = current.rate + half * (reward * reward + old_quad - new_quad);
        if !(rate > S::zero()) || !rate.is_finite() {
            return Err(Error::Internal(format!(
                "NIG rate became non-positive ({rate})"
            )));
        }
        // Posterior predictive variance is finite once shape > 1.
        if shape > S::one() {
            let predictive_scale = rate / (shape - S::one());
            if !predictive_scale.is_finite() {
                return Err(Error::Internal("NIG predictive variance overflow".into()));
            }
        }
        self.arms[arm] = NigParams {
            mean,
            precision,
            shape,
            rate,
        };
        Ok(())
    }

    /// Joint draw `(theta, sigma^2)` from arm `arm`'s posterior.
    pub fn sample(&self, arm: usize, rng: &mut dyn RngCore) -> Result<(Vec<S>, S)> {
        let p = &self.arms[arm];
        let gamma = rand_distr::Gamma::new(p.shape.as_f64(), 1.0 / p.rate.as_f64())
            .map_err(|e| Error::InvalidParameter(format!("gamma draw: {e}")))?;
        let precision_draw: f64 = gamma.sample(rng);
        let sigma2 = S::cast(1.0 / precision_draw.max(f64::MIN_POSITIVE));
        let chol = p.precision.cholesky()?;
        let z = standard_normal_vec::<S, _>(rng, self.feature_dim);
        let spread = chol.solve_upper(&z);
        let sigma = sigma2.sqrt();
        let theta = p
            .mean
            .iter()
            .zip(&spread)
            .map(|(m, s)| *m + sigma * *s)
            .collect();
        Ok((theta, sigma2))
    }
}

/// Thompson draw through the feature map: samples `(theta, sigma^2)` per arm
/// and plays the argmax of `phi(x) . theta`.
pub fn neural_linear_select<S: Scalar>(
    extractor: &FeatureExtractor<S>,
    head: &NigHead<S>,
    x: &[S],
    rng: &mut dyn RngCore,
) -> Result<usize> {
    let phi = extractor.features(x)?;
    if phi.len() != head.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: head.feature_dim(),
            got: phi.len(),
        });
    }
    let mut scores = Vec::with_capacity(head.arm_count());
    for arm in 0..head.arm_count() {
        let (theta, _) = head.sample(arm, rng)?;
        scores.push(dot(&phi, &theta));
    }
    Ok(argmax(&scores))
}

/// Neural-linear contextual bandit: replay queue + extractor + NIG head with
/// a fixed retraining cadence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NeuralLinearBandit<S> {
    extractor: FeatureExtractor<S>,
    head: NigHead<S>,
    replay: ReplayQueue<S>,
    retrain_every: u64,
    interactions: u64,
}

impl<S: Scalar> NeuralLinearBandit<S> {
    pub fn new(config: MlpConfig, replay_capacity: usize, retrain_every: u64) -> Result<Self> {
        let head = NigHead::standard(config.arms, config.feature_dim)?;
        Ok(Self {
            extractor: FeatureExtractor::new(config)?,
            head,
            replay: ReplayQueue::new(replay_capacity),
            retrain_every,
            interactions: 0,
        })
    }

    pub fn extractor(&self) -> &FeatureExtractor<S> {
        &self.extractor
    }

    pub fn head(&self) -> &NigHead<S> {
        &self.head
    }

    pub fn replay(&self) -> &ReplayQueue<S> {
        &self.replay
    }

    pub fn interactions(&self) -> u64 {
        self.interactions
    }

    pub fn select(&self, x: &[S], rng: &mut dyn RngCore) -> Result<usize> {
        neural_linear_select(&self.extractor, &self.head, x, rng)
    }

    /// Records the interaction, updates the head, and retrains the extractor
    /// (then refits the head from the full replay) on the configured cadence.
    pub fn update(&mut self, x: &[S], arm: usize, reward: S) -> Result<()> {
        if !all_finite(x) || !reward.is_finite() {
            return Err(Error::NonFinite("neural-linear update"));
        }
        self.replay.push(Transition {
            context: x.to_vec(),
            action: arm,
            reward,
        });
        let phi = self.extractor.features(x)?;
        self.head.update(&phi, arm, reward)?;
        self.interactions += 1;
        if self.retrain_every > 0
            && self.interactions % self.retrain_every == 0
            && !self.replay.is_empty()
        {
            self.extractor.train_on_replay(&self.replay)?;
            // Features moved: stale sufficient statistics are discarded and
            // the head is refit from the retained transitions.
            self.head.reset_to_prior();
            let transitions: Vec<Transition<S>> = self.replay.iter().cloned().collect();
            for t in &transitions {
                let phi = self.extractor.features(&t.context)?;
                self.head.update(&phi, t.action, t.reward)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn replay_from(data: &[(Vec<f64>, usize, f64)]) -> ReplayQueue<f64> {
        let mut q = ReplayQueue::new(1000);
        for (x, a, r) in data {
            q.push(Transition {
                context: x.clone(),
                action: *a,
                reward: *r,
            });
        }
        q
    }

    #[test]
    fn zero_epochs_leaves_parameters_unchanged() {
        let mut config = MlpConfig::standard(2, 2, 3);
        config.hidden = vec![4];
        config.feature_dim = 4;
        config.epochs = 0;
        let mut extractor = FeatureExtractor::<f64>::new(config).unwrap();
        let before = extractor.params_flat();
        let replay = replay_from(&[(vec![1.0, 0.0], 0, 1.0)]);
        extractor.train_on_replay(&replay).unwrap();
        assert_eq!(before, extractor.params_flat());
    }

    #[test]
    fn training_on_empty_replay_errors() {
        let mut extractor =
            FeatureExtractor::<f64>::new(MlpConfig::standard(2, 2, 0)).unwrap();
        let empty = ReplayQueue::new(8);
        assert!(extractor.train_on_replay(&empty).is_err());
    }

    /// Variance-of-labels oracle: on a linear ground truth the trained
    /// extractor must beat the mean predictor's MSE, and the per-epoch loss
    /// sequence is non-increasing at the default step.
    #[test]
    fn training_beats_mean_predictor_on_linear_truth() {
        let mut rng = derive_rng(5, "nl-train");
        let theta = [[0.8, -0.4], [-0.5, 0.9]];
        let data: Vec<(Vec<f64>, usize, f64)> = (0..50)
            .map(|i| {
                let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                let a = i % 2;
                let r = theta[a][0] * x[0] + theta[a][1] * x[1];
                (x, a, r)
            })
            .collect();
        let replay = replay_from(&data);
        let mut config = MlpConfig::standard(2, 2, 11);
        config.hidden = vec![16];
        config.feature_dim = 16;
        config.epochs = 300;
        config.step_size = 0.2;
        let mut extractor = FeatureExtractor::<f64>::new(config).unwrap();
        let losses = extractor.train_on_replay(&replay).unwrap();
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss increased: {w:?}");
        }
        let mean_reward = data.iter().map(|(_, _, r)| r).sum::<f64>() / data.len() as f64;
        let label_variance = data
            .iter()
            .map(|(_, _, r)| (r - mean_reward).powi(2))
            .sum::<f64>()
            / data.len() as f64;
        assert!(
            *losses.last().unwrap() <= label_variance,
            "final {} vs variance {label_variance}",
            losses.last().unwrap()
        );
    }

    /// Finite-difference oracle on a 3-point replay.
    #[test]
    fn analytic_gradient_matches_central_differences() {
        let mut config = MlpConfig::standard(2, 2, 9);
        config.hidden = vec![3];
        config.feature_dim = 2;
        let extractor = FeatureExtractor::<f64>::new(config).unwrap();
        let replay = replay_from(&[
            (vec![0.5, -0.2], 0, 0.7),
            (vec![-0.8, 0.3], 1, -0.4),
            (vec![0.1, 0.9], 0, 0.2),
        ]);
        let (_, grad) = extractor.loss_and_gradient(&replay).unwrap();
        let params = extractor.params_flat();
        let h = 1e-5;
        for i in 0..params.len() {
            let mut probe = extractor.clone();
            let mut plus = params.clone();
            plus[i] += h;
            probe.set_params_flat(&plus).unwrap();
            let lp = probe.batch_loss(&replay).unwrap();
            let mut minus = params.clone();
            minus[i] -= h;
            probe.set_params_flat(&minus).unwrap();
            let lm = probe.batch_loss(&replay).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let denom = grad[i].abs().max(1e-4);
            assert!(
                ((grad[i] - fd) / denom).abs() < 1e-4,
                "param {i}: analytic {} vs fd {fd}",
                grad[i]
            );
        }
    }

    /// NIG closed-form update oracle: p=1, prior (m=0, V=1, a=1, b=1),
    /// observe (phi=1, r=1) => (m=0.5, V=0.5, a=1.5, b=1.25).
    #[test]
    fn nig_update_matches_closed_form() {
        let mut head = NigHead::<f64>::standard(1, 1).unwrap();
        head.update(&[1.0], 0, 1.0).unwrap();
        let p = head.params(0);
        assert_relative_eq!(p.mean[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(p.precision.get(0, 0), 2.0, epsilon = 1e-14); // V = 0.5
        assert_relative_eq!(p.shape, 1.5, epsilon = 1e-14);
        assert_relative_eq!(p.rate, 1.25, epsilon = 1e-14);
    }

    /// Zero regressor with zero reward: coefficient belief untouched, shape
    /// still counts the observation, rate unchanged.
    #[test]
    fn nig_zero_regressor_keeps_coefficients() {
        let mut head = NigHead::<f64>::standard(1, 1).unwrap();
        head.update(&[0.0], 0, 0.0).unwrap();
        let p = head.params(0);
        assert_eq!(p.mean[0], 0.0);
        assert_eq!(p.precision.get(0, 0), 1.0);
        assert_relative_eq!(p.shape, 1.5);
        assert_relative_eq!(p.rate, 1.0);
    }

    /// Batch conjugate oracle: sequential updates equal the closed-form batch
    /// posterior computed directly from the design matrix.
    #[test]
    fn nig_sequential_equals_batch() {
        let obs = [([1.0, 0.5], 1.0), ([0.2, -0.7], -0.3), ([-0.4, 0.9], 0.8)];
        let mut head = NigHead::<f64>::standard(1, 2).unwrap();
        for (phi, r) in &obs {
            head.update(phi, 0, *r).unwrap();
        }
        // Batch: V_n^{-1} = I + X^T X, m_n = V_n (X^T r), a_n = 1 + 3/2,
        // b_n = 1 + (r^T r - m_n^T V_n^{-1} m_n) / 2 (prior mean 0).
        let mut precision = Mat::<f64>::identity(2);
        let mut xtr = vec![0.0; 2];
        let mut rtr = 0.0;
        for (phi, r) in &obs {
            precision.add_outer(phi, 1.0);
            xtr[0] += phi[0] * r;
            xtr[1] += phi[1] * r;
            rtr += r * r;
        }
        let mean = precision.cholesky().unwrap().solve(&xtr);
        let quad = dot(&mean, &precision.matvec(&mean));
        let p = head.params(0);
        assert_relative_eq!(p.mean[0], mean[0], epsilon = 1e-12);
        assert_relative_eq!(p.mean[1], mean[1], epsilon = 1e-12);
        assert_relative_eq!(p.shape, 2.5, epsilon = 1e-12);
        assert_relative_eq!(p.rate, 1.0 + 0.5 * (rtr - quad), epsilon = 1e-12);
    }

    /// Identity extractor with point-mass heads reduces to the linear
    /// Thompson decision.
    #[test]
    fn identity_extractor_matches_linear_thompson() {
        use crate::bandit::thompson::{GaussianTs, GaussianTsConfig};
        let dim = 3;
        let means = [vec![1.0, -0.5, 0.2], vec![-0.3, 0.8, 0.1]];
        let extractor = FeatureExtractor::<f64>::identity(dim, 2).unwrap();
        let priors: Vec<NigParams<f64>> = means
            .iter()
            .map(|m| NigParams {
                mean: m.clone(),
                precision: Mat::scaled_identity(dim, 1e16),
                shape: 1e6,
                rate: 1e6,
            })
            .collect();
        let head = NigHead::from_priors(priors).unwrap();
        let linear = GaussianTs::from_posterior(
            GaussianTsConfig::new(2, dim),
            means.to_vec(),
            vec![
                Mat::scaled_identity(dim, 1e16),
                Mat::scaled_identity(dim, 1e16),
            ],
        )
        .unwrap();
        let mut rng_a = derive_rng(21, "nl-eq-a");
        let mut rng_b = derive_rng(22, "nl-eq-b");
        for i in 0..100 {
            let t = f64::from(i);
            let x = vec![(t * 0.31).sin(), (t * 0.17).cos(), (t * 0.05).sin()];
            let a = neural_linear_select(&extractor, &head, &x, &mut rng_a).unwrap();
            let b = linear.select(&x, &mut rng_b).unwrap();
            assert_eq!(a, b, "context {x:?}");
        }
    }

    #[test]
    fn exchangeable_arms_select_uniformly() {
        let extractor = FeatureExtractor::<f64>::identity(2, 3).unwrap();
        let head = NigHead::standard(3, 2).unwrap();
        let mut rng = derive_rng(17, "nl-sym");
        let mut counts = [0u32; 3];
        let n = 10_000;
        for _ in 0..n {
            counts[neural_linear_select(&extractor, &head, &[0.6, -0.4], &mut rng).unwrap()] += 1;
        }
        for c in counts {
            let freq = f64::from(c) / f64::from(n);
            assert!((freq - 1.0 / 3.0).abs() < 0.02, "freq {freq}");
        }
    }

    #[test]
    fn single_arm_always_zero() {
        let extractor = FeatureExtractor::<f64>::identity(2, 1).unwrap();
        let head = NigHead::standard(1, 2).unwrap();
        let mut rng = derive_rng(2, "nl-single");
        assert_eq!(
            neural_linear_select(&extractor, &head, &[1.0, 2.0], &mut rng).unwrap(),
            0
        );
    }

    /// Between retrains the extractor is frozen: a cloned policy replays the
    /// identical decision stream from the same rng.
    #[test]
    fn decisions_reproducible_between_retrains() {
        let mut config = MlpConfig::standard(2, 2, 4);
        config.hidden = vec![8];
        config.feature_dim = 8;
        config.epochs = 10;
        let mut bandit = NeuralLinearBandit::new(config, 100, 20).unwrap();
        let mut rng = derive_rng(9, "nl-repro-warm");
        for i in 0..15 {
            let x = vec![f64::from(i) * 0.1, 1.0 - f64::from(i) * 0.05];
            let a = bandit.select(&x, &mut rng).unwrap();
            bandit.update(&x, a, x[0] - x[1]).unwrap();
        }
        let frozen = bandit.clone();
        let mut rng_a = derive_rng(10, "nl-repro");
        let mut rng_b = derive_rng(10, "nl-repro");
        let x = [0.4, 0.2];
        let a: Vec<usize> = (0..4).map(|_| bandit.select(&x, &mut rng_a).unwrap()).collect();
        let b: Vec<usize> = (0..4).map(|_| frozen.select(&x, &mut rng_b).unwrap()).collect();
        assert_eq!(a, b);
    }

    proptest! {
        /// The NIG rate stays positive under any finite update stream.
        #[test]
        fn nig_rate_stays_positive(
            updates in prop::collection::vec(
                (prop::collection::vec(-3.0f64..3.0, 2), -5.0f64..5.0),
                1..30
            )
        ) {
            let mut head = NigHead::<f64>::standard(1, 2).unwrap();
            for (phi, r) in updates {
                head.update(&phi, 0, r).unwrap();
                prop_assert!(head.params(0).rate > 0.0);
                prop_assert!(head.params(0).shape > 1.0);
            }
        }
    }
}

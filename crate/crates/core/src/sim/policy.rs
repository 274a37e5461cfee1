//! Uniform policy interface for the simulation harness.

use rand::{Rng, RngCore};

use crate::bandit::kalman::EkfBelief;
use crate::bandit::linear::LinUcb;
use crate::bandit::neural::NeuralLinearBandit;
use crate::bandit::thompson::GaussianTs;
use crate::error::Result;
use crate::linalg::dot;
use crate::scalar::Scalar;

/// A contextual bandit policy as the episode loop sees it: select an arm for
/// a context, then learn from the observed reward.
pub trait BanditPolicy<S: Scalar> {
    fn name(&self) -> &str;
    fn select(&mut self, x: &[S], rng: &mut dyn RngCore) -> Result<usize>;
    fn update(&mut self, x: &[S], arm: usize, reward: S) -> Result<()>;
}

/// Ignores the context and plays uniformly at random.
pub struct UniformRandomPolicy {
    pub arms: usize,
}

impl<S: Scalar> BanditPolicy<S> for UniformRandomPolicy {
    fn name(&self) -> &str {
        "uniform"
    }

    fn select(&mut self, _x: &[S], rng: &mut dyn RngCore) -> Result<usize> {
        Ok(rng.random_range(0..self.arms))
    }

    fn update(&mut self, _x: &[S], _arm: usize, _reward: S) -> Result<()> {
        Ok(())
    }
}

/// Knows the true coefficients and always plays the noise-free best arm;
/// its cumulative regret is identically zero by definition.
pub struct OraclePolicy<S> {
    pub theta: Vec<Vec<S>>,
}

impl<S: Scalar> BanditPolicy<S> for OraclePolicy<S> {
    fn name(&self) -> &str {
        "oracle"
    }

    fn select(&mut self, x: &[S], _rng: &mut dyn RngCore) -> Result<usize> {
        let scores: Vec<S> = self.theta.iter().map(|t| dot(t, x)).collect();
        Ok(crate::bandit::argmax(&scores))
    }

    fn update(&mut self, _x: &[S], _arm: usize, _reward: S) -> Result<()> {
        Ok(())
    }
}

pub struct LinUcbPolicy<S>(pub LinUcb<S>);

impl<S: Scalar> BanditPolicy<S> for LinUcbPolicy<S> {
    fn name(&self) -> &str {
        "linucb"
    }

    fn select(&mut self, x: &[S], _rng: &mut dyn RngCore) -> Result<usize> {
        Ok(self.0.select(x)?.0)
    }

    fn update(&mut self, x: &[S], arm: usize, reward: S) -> Result<()> {
        self.0.update(x, arm, reward)
    }
}

pub struct LinearTsPolicy<S>(pub GaussianTs<S>);

impl<S: Scalar> BanditPolicy<S> for LinearTsPolicy<S> {
    fn name(&self) -> &str {
        "linear-ts"
    }

    fn select(&mut self, x: &[S], rng: &mut dyn RngCore) -> Result<usize> {
        self.0.select(x, rng)
    }

    fn update(&mut self, x: &[S], arm: usize, reward: S) -> Result<()> {
        self.0.update(x, arm, reward)
    }
}

pub struct NeuralLinearPolicy<S>(pub NeuralLinearBandit<S>);

impl<S: Scalar> BanditPolicy<S> for NeuralLinearPolicy<S> {
    fn name(&self) -> &str {
        "neural-linear"
    }

    fn select(&mut self, x: &[S], rng: &mut dyn RngCore) -> Result<usize> {
        self.0.select(x, rng)
    }

    fn update(&mut self, x: &[S], arm: usize, reward: S) -> Result<()> {
        self.0.update(x, arm, reward)
    }
}

pub struct EkfPolicy<S>(pub EkfBelief<S>);

impl<S: Scalar> BanditPolicy<S> for EkfPolicy<S> {
    fn name(&self) -> &str {
        "ekf"
    }

    fn select(&mut self, x: &[S], rng: &mut dyn RngCore) -> Result<usize> {
        self.0.select(x, rng)
    }

    fn update(&mut self, x: &[S], arm: usize, reward: S) -> Result<()> {
        self.0.update(x, arm, reward)
    }
}

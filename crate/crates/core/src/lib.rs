//! Sequential-decision engine for adaptive health interventions.
//!
//! The crate turns interaction logs into trait-based context vectors, models
//! time-to-event risk from censored data, selects interventions with
//! contextual bandits (LinUCB, linear Thompson sampling, neural-linear, and a
//! Kalman-filtered state-space belief), allocates a limited intervention
//! budget across a cohort with restless bandits (Whittle index, with an
//! equitable variant), and runs randomized or micro-randomized experiments
//! with logged propensities. A seeded simulation harness with known ground
//! truth validates every policy.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below pin the common `f64` instantiation.

pub mod bandit;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod pipeline;
pub mod rmab;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod survival;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations of the core models.
pub type LinUcb64 = bandit::linear::LinUcb<f64>;
pub type LinUcbConfig64 = bandit::linear::LinUcbConfig<f64>;
pub type GaussianTs64 = bandit::thompson::GaussianTs<f64>;
pub type GaussianTsConfig64 = bandit::thompson::GaussianTsConfig<f64>;
pub type NeuralLinearBandit64 = bandit::neural::NeuralLinearBandit<f64>;
pub type EkfBelief64 = bandit::kalman::EkfBelief<f64>;
pub type EkfConfig64 = bandit::kalman::EkfConfig<f64>;
pub type ReplayQueue64 = bandit::replay::ReplayQueue<f64>;
pub type TwoStateMdp64 = rmab::TwoStateMdp<f64>;
pub type RmabArm64 = rmab::RmabArm<f64>;
pub type Allocation64 = rmab::Allocation<f64>;
pub type SurvivalRecord64 = survival::SurvivalRecord<f64>;
pub type SurvivalCurve64 = survival::SurvivalCurve<f64>;
pub type HazardModel64 = survival::HazardModel<f64>;
pub type ExperimentDesign64 = experiment::ExperimentDesign<f64>;
pub type EffectEstimate64 = experiment::EffectEstimate<f64>;

/// `f32` instantiations of the bandit policies.
pub type LinUcb32 = bandit::linear::LinUcb<f32>;
pub type GaussianTs32 = bandit::thompson::GaussianTs<f32>;
pub type EkfBelief32 = bandit::kalman::EkfBelief<f32>;
pub type TwoStateMdp32 = rmab::TwoStateMdp<f32>;

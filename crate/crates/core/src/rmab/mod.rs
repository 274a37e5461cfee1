//! Restless multi-armed bandit allocation.
//!
//! Each arm is a two-state MDP that keeps evolving whether or not it is acted
//! on. A per-round budget of `k` actions is allocated by the Whittle index:
//! for each arm, the subsidy that makes resting exactly as attractive as
//! acting in its current state. Arms with unknown dynamics carry Beta
//! posteriors over their transition rows and are allocated by Thompson
//! sampling over sampled models. An equitable variant enforces per-group
//! budget floors.

mod allocate;
mod mdp;
mod whittle;

pub use allocate::{
    allocate, equitable_allocate, update_dynamics, Allocation, ArmDynamics, DynamicsBelief,
    EquityConstraint, RmabArm, WhittleAllocator,
};
pub use mdp::{value_iteration, value_iteration_from, SubsidySolution, TwoStateMdp};
pub use whittle::{
    check_indexability, subsidy_bracket, whittle_index, whittle_index_clamped,
    whittle_index_with, WhittleConfig,
};

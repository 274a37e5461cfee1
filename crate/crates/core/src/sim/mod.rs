//! Synthetic environments with known ground truth, used to validate every
//! policy: linear-reward contextual environments (regret curves), restless
//! cohorts (budgeted allocation performance, equity gaps), survival cohorts,
//! and a seeded replication driver.
//!
//! Environment draws and policy draws come from separate substreams of the
//! episode seed, so policy randomness never perturbs the environment and
//! coupled comparisons across policies are meaningful.

mod linear_env;
mod policy;
mod replicate;
mod rmab_env;
mod survival_env;

pub use linear_env::{run_bandit_episode, BanditEpisode, ContextDistribution, LinearEnvSpec};
pub use policy::{
    BanditPolicy, EkfPolicy, LinUcbPolicy, LinearTsPolicy, NeuralLinearPolicy, OraclePolicy,
    UniformRandomPolicy,
};
pub use replicate::{replicate, MetricRow, MetricsTable};
pub use rmab_env::{
    run_rmab_episode, DynamicsView, EquitableWhittleAllocator, RmabAllocator, RmabEnvArm,
    RmabEnvSpec, RmabEpisode, UniformAllocator,
};
pub use survival_env::{make_survival_cohort, SurvivalCohortSpec};

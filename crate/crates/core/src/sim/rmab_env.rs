//! Restless cohort environment and allocator baselines.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmab::{
    Allocation, ArmDynamics, DynamicsBelief, EquityConstraint, RmabArm, TwoStateMdp,
    WhittleAllocator,
};
use crate::rng::{derive_rng, uniform_01};
use crate::scalar::Scalar;

/// An allocator as the episode loop sees it.
pub trait RmabAllocator<S: Scalar> {
    fn name(&self) -> &str;
    fn allocate(
        &mut self,
        arms: &[RmabArm<S>],
        budget: usize,
        round: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Allocation<S>>;
}

impl<S: Scalar> RmabAllocator<S> for WhittleAllocator<S> {
    fn name(&self) -> &str {
        "whittle"
    }

    fn allocate(
        &mut self,
        arms: &[RmabArm<S>],
        budget: usize,
        round: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Allocation<S>> {
        WhittleAllocator::allocate(self, arms, budget, round, rng)
    }
}

/// Whittle allocation under per-group budget floors.
pub struct EquitableWhittleAllocator<S> {
    pub inner: WhittleAllocator<S>,
    pub equity: EquityConstraint,
}

impl<S: Scalar> RmabAllocator<S> for EquitableWhittleAllocator<S> {
    fn name(&self) -> &str {
        "whittle-equitable"
    }

    fn allocate(
        &mut self,
        arms: &[RmabArm<S>],
        budget: usize,
        round: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Allocation<S>> {
        self.inner
            .equitable_allocate(arms, budget, round, &self.equity, rng)
    }
}

/// Acts on a uniformly random subset of `min(budget, N)` arms.
pub struct UniformAllocator;

impl<S: Scalar> RmabAllocator<S> for UniformAllocator {
    fn name(&self) -> &str {
        "uniform"
    }

    fn allocate(
        &mut self,
        arms: &[RmabArm<S>],
        budget: usize,
        round: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Allocation<S>> {
        let target = budget.min(arms.len());
        let picked = rand::seq::index::sample(rng, arms.len(), target);
        let mut acted: Vec<String> = picked.iter().map(|i| arms[i].id.clone()).collect();
        acted.sort();
        let mut group_counts: BTreeMap<String, usize> = BTreeMap::new();
        for id in &acted {
            let arm = arms.iter().find(|a| &a.id == id).expect("sampled id exists");
            *group_counts.entry(arm.group.clone()).or_default() += 1;
        }
        Ok(Allocation {
            round,
            acted,
            indices: Vec::new(),
            group_counts,
            group_mean_index: BTreeMap::new(),
            non_indexable: false,
        })
    }
}

/// What the allocator is told about arm dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsView {
    /// The allocator sees the true transition model.
    Known,
    /// The allocator starts from uniform Beta posteriors and learns from
    /// every observed transition.
    Learned,
}

/// One arm's ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmabEnvArm<S> {
    pub id: String,
    pub group: String,
    pub initial_state: u8,
    pub mdp: TwoStateMdp<S>,
}

/// A restless cohort episode specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmabEnvSpec<S> {
    pub arms: Vec<RmabEnvArm<S>>,
    pub budget: usize,
    pub horizon: usize,
    pub view: DynamicsView,
}

/// Trace of one restless episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmabEpisode<S> {
    /// Total reward collected each round (sum of arm rewards after
    /// transition).
    pub round_rewards: Vec<S>,
    pub total_reward: S,
    /// Mean per-round reward per group.
    pub group_reward_mean: BTreeMap<String, S>,
    pub allocations: Vec<Allocation<S>>,
}

/// Runs one cohort episode. Each round the allocator picks the acted set,
/// every arm transitions under its chosen action's row (one environment draw
/// per arm per round, in arm order, independent of the allocator's choices so
/// runs with the same seed are coupled), and learned beliefs absorb the
/// observed transitions.
pub fn run_rmab_episode<S: Scalar>(
    spec: &RmabEnvSpec<S>,
    allocator: &mut dyn RmabAllocator<S>,
    seed: u64,
) -> Result<RmabEpisode<S>> {
    if spec.budget > spec.arms.len() {
        return Err(Error::InvalidParameter(format!(
            "budget {} exceeds cohort size {}",
            spec.budget,
            spec.arms.len()
        )));
    }
    for arm in &spec.arms {
        arm.mdp.validate()?;
        if arm.initial_state > 1 {
            return Err(Error::InvalidParameter("states are binary".into()));
        }
    }
    let mut env_rng = derive_rng(seed, "rmab-env");
    let mut alloc_rng = derive_rng(seed, "rmab-policy");

    let mut view_arms: Vec<RmabArm<S>> = spec
        .arms
        .iter()
        .map(|arm| RmabArm {
            id: arm.id.clone(),
            state: arm.initial_state,
            dynamics: match spec.view {
                DynamicsView::Known => ArmDynamics::Known(arm.mdp),
                DynamicsView::Learned => ArmDynamics::Learned {
                    belief: DynamicsBelief::new(),
                    reward: arm.mdp.reward,
                    discount: arm.mdp.discount,
                },
            },
            group: arm.group.clone(),
        })
        .collect();

    let mut episode = RmabEpisode {
        round_rewards: Vec::with_capacity(spec.horizon),
        total_reward: S::zero(),
        group_reward_mean: BTreeMap::new(),
        allocations: Vec::with_capacity(spec.horizon),
    };
    let mut group_totals: BTreeMap<String, S> = BTreeMap::new();

    for round in 0..spec.horizon {
        let allocation = allocator.allocate(&view_arms, spec.budget, round, &mut alloc_rng)?;
        let acted: BTreeSet<&str> = allocation.acted.iter().map(String::as_str).collect();

        let mut round_reward = S::zero();
        for (view, truth) in view_arms.iter_mut().zip(&spec.arms) {
            let action = usize::from(acted.contains(view.id.as_str()));
            let u: S = uniform_01(&mut env_rng);
            let next = u8::from(u < truth.mdp.good_state_prob(action, view.state));
            if let ArmDynamics::Learned { belief, .. } = &mut view.dynamics {
                belief.observe(action, view.state, next);
            }
            let reward = truth.mdp.reward[next as usize];
            round_reward += reward;
            *group_totals.entry(view.group.clone()).or_insert(S::zero()) += reward;
            view.state = next;
        }
        episode.total_reward += round_reward;
        episode.round_rewards.push(round_reward);
        episode.allocations.push(allocation);
    }
    let horizon = S::from_usize(spec.horizon.max(1)).expect("fits");
    episode.group_reward_mean = group_totals
        .into_iter()
        .map(|(g, total)| (g, total / horizon))
        .collect();
    Ok(episode)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monotone_template() -> TwoStateMdp<f64> {
        // Active dominates passive and staying good beats being bad under
        // both actions (monotone coupling applies).
        TwoStateMdp::from_good_state_probs([0.2, 0.6], [0.5, 0.9], 0.9).unwrap()
    }

    fn cohort(n: usize) -> RmabEnvSpec<f64> {
        RmabEnvSpec {
            arms: (0..n)
                .map(|i| RmabEnvArm {
                    id: format!("arm{i:02}"),
                    group: if i % 2 == 0 { "even" } else { "odd" }.to_string(),
                    initial_state: (i % 2) as u8,
                    mdp: monotone_template(),
                })
                .collect(),
            budget: 0,
            horizon: 200,
            view: DynamicsView::Known,
        }
    }

    #[test]
    fn horizon_zero_gives_empty_episode() {
        let mut spec = cohort(3);
        spec.horizon = 0;
        let episode = run_rmab_episode(&spec, &mut UniformAllocator, 1).unwrap();
        assert!(episode.round_rewards.is_empty());
        assert_eq!(episode.total_reward, 0.0);
    }

    /// Coupled-seed dominance: acting on everyone (with a dominating active
    /// action) never does worse than acting on no one, pathwise per seed.
    #[test]
    fn full_budget_dominates_zero_budget_on_shared_seed() {
        for seed in 0..10 {
            let mut none = cohort(8);
            none.budget = 0;
            let low = run_rmab_episode(&none, &mut UniformAllocator, seed).unwrap();
            let mut all = cohort(8);
            all.budget = 8;
            let high = run_rmab_episode(&all, &mut UniformAllocator, seed).unwrap();
            assert!(
                high.total_reward >= low.total_reward,
                "seed {seed}: {} < {}",
                high.total_reward,
                low.total_reward
            );
        }
    }

    /// Stationary-distribution arithmetic oracle: with budget 0 the cohort is
    /// a passive Markov chain with stationary good-state mass
    /// p01 / (p01 + 1 - p11).
    #[test]
    fn zero_budget_matches_passive_stationary_mass() {
        let spec = cohort(10);
        let p01 = 0.2;
        let p11 = 0.6;
        let stationary = p01 / (p01 + 1.0 - p11);
        let mut mean_reward_per_arm_round = 0.0;
        let reps = 200;
        for seed in 0..reps {
            let episode = run_rmab_episode(&spec, &mut UniformAllocator, seed).unwrap();
            // Skip a burn-in so the chain forgets its initial states.
            let tail: f64 = episode.round_rewards[50..].iter().sum();
            mean_reward_per_arm_round += tail / ((spec.horizon - 50) as f64 * 10.0);
        }
        mean_reward_per_arm_round /= f64::from(reps as u32);
        assert!(
            (mean_reward_per_arm_round - stationary).abs() < 0.02,
            "observed {mean_reward_per_arm_round} vs stationary {stationary}"
        );
    }

    #[test]
    fn episodes_are_seed_deterministic() {
        let mut spec = cohort(6);
        spec.budget = 2;
        spec.view = DynamicsView::Learned;
        let a = run_rmab_episode(&spec, &mut WhittleAllocator::default(), 7).unwrap();
        let b = run_rmab_episode(&spec, &mut WhittleAllocator::default(), 7).unwrap();
        assert_eq!(a, b);
        for alloc in &a.allocations {
            assert_eq!(alloc.acted.len(), 2);
        }
    }

    #[test]
    fn budget_larger_than_cohort_is_rejected() {
        let mut spec = cohort(3);
        spec.budget = 4;
        assert!(run_rmab_episode(&spec, &mut UniformAllocator, 0).is_err());
    }
}

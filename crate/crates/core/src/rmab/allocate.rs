//! Budgeted allocation across a cohort of restless arms.

use std::collections::BTreeMap;

use rand::RngCore;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::mdp::TwoStateMdp;
use super::whittle::{whittle_index_clamped, WhittleConfig};

/// Beta posteriors over `P(s' = 1 | action, state)`, one per (action, state),
/// initialized at Beta(1, 1). Counts move by exactly one per observed
/// transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsBelief {
    /// `successes[action][state]` counts transitions into state 1.
    successes: [[u64; 2]; 2],
    /// `failures[action][state]` counts transitions into state 0.
    failures: [[u64; 2]; 2],
}

impl Default for DynamicsBelief {
    fn default() -> Self {
        Self::new()
    }
}

impl DynamicsBelief {
    pub fn new() -> Self {
        Self {
            successes: [[0; 2]; 2],
            failures: [[0; 2]; 2],
        }
    }

    pub fn alpha(&self, action: usize, state: u8) -> f64 {
        1.0 + self.successes[action][state as usize] as f64
    }

    pub fn beta(&self, action: usize, state: u8) -> f64 {
        1.0 + self.failures[action][state as usize] as f64
    }

    /// Posterior mean of `P(s' = 1 | action, state)`.
    pub fn mean(&self, action: usize, state: u8) -> f64 {
        let a = self.alpha(action, state);
        a / (a + self.beta(action, state))
    }

    /// Records one observed transition.
    pub fn observe(&mut self, action: usize, state: u8, next_state: u8) {
        if next_state == 1 {
            self.successes[action][state as usize] += 1;
        } else {
            self.failures[action][state as usize] += 1;
        }
    }

    /// Thompson draw of a full transition model from the posterior.
    pub fn sample_mdp<S: Scalar>(
        &self,
        reward: [S; 2],
        discount: S,
        rng: &mut dyn RngCore,
    ) -> Result<TwoStateMdp<S>> {
        let mut draw = [[S::zero(); 2]; 2];
        for action in 0..2 {
            for state in 0..2u8 {
                let beta = rand_distr::Beta::new(self.alpha(action, state), self.beta(action, state))
                    .map_err(|e| Error::InvalidParameter(format!("beta draw: {e}")))?;
                draw[action][state as usize] = S::cast(beta.sample(rng));
            }
        }
        TwoStateMdp::from_good_state_probs(draw[0], draw[1], discount)
            .map(|mdp| mdp.with_reward(reward))
    }
}

/// Beta update of a transition posterior: alpha grows on `s' = 1`, beta on
/// `s' = 0`.
pub fn update_dynamics(
    belief: &DynamicsBelief,
    action: usize,
    state: u8,
    next_state: u8,
) -> DynamicsBelief {
    let mut updated = belief.clone();
    updated.observe(action, state, next_state);
    updated
}

/// How an arm's dynamics are represented to the allocator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ArmDynamics<S> {
    Known(TwoStateMdp<S>),
    Learned {
        belief: DynamicsBelief,
        reward: [S; 2],
        discount: S,
    },
}

/// One restless arm as seen by the allocator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmabArm<S> {
    pub id: String,
    pub state: u8,
    pub dynamics: ArmDynamics<S>,
    pub group: String,
}

/// Per-group minimum budget shares for [`equitable_allocate`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EquityConstraint {
    /// Minimum fraction of the budget reserved per group; each group first
    /// receives `floor(fraction * budget)` actions.
    pub min_fraction: BTreeMap<String, f64>,
}

impl EquityConstraint {
    pub fn floors(&self, budget: usize) -> Result<BTreeMap<String, usize>> {
        let mut floors = BTreeMap::new();
        let mut total = 0usize;
        for (group, fraction) in &self.min_fraction {
            if !(0.0..=1.0).contains(fraction) {
                return Err(Error::InvalidParameter(format!(
                    "equity fraction {fraction} for group {group:?} outside [0, 1]"
                )));
            }
            let floor = (fraction * budget as f64).floor() as usize;
            total += floor;
            floors.insert(group.clone(), floor);
        }
        if total > budget {
            return Err(Error::Infeasible(format!(
                "group floors sum to {total} > budget {budget}"
            )));
        }
        Ok(floors)
    }
}

/// One allocation round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Allocation<S> {
    pub round: usize,
    /// Ids acted on, highest index first.
    pub acted: Vec<String>,
    /// Every arm's index in input order.
    pub indices: Vec<(String, S)>,
    pub group_counts: BTreeMap<String, usize>,
    /// Mean index over acted arms per group.
    pub group_mean_index: BTreeMap<String, S>,
    /// True when any arm's index fell back to a bracket endpoint, which
    /// signals dynamics outside the indexable regime the bracket covers.
    pub non_indexable: bool,
}

impl<S: Scalar> Allocation<S> {
    pub fn is_acted(&self, id: &str) -> bool {
        self.acted.iter().any(|a| a == id)
    }
}

/// Whittle-index allocator with an index cache for known dynamics.
#[derive(Clone, Debug)]
pub struct WhittleAllocator<S> {
    pub config: WhittleConfig<S>,
    cache: std::collections::HashMap<(Vec<u64>, u8), (S, bool)>,
}

impl<S: Scalar> Default for WhittleAllocator<S> {
    fn default() -> Self {
        Self::new(WhittleConfig::default())
    }
}

impl<S: Scalar> WhittleAllocator<S> {
    pub fn new(config: WhittleConfig<S>) -> Self {
        Self {
            config,
            cache: std::collections::HashMap::new(),
        }
    }

    fn known_index(&mut self, mdp: &TwoStateMdp<S>, state: u8) -> Result<(S, bool)> {
        let mut key = Vec::with_capacity(11);
        for action in &mdp.transition {
            for row in action {
                for p in row {
                    key.push(p.as_f64().to_bits());
                }
            }
        }
        key.push(mdp.reward[0].as_f64().to_bits());
        key.push(mdp.reward[1].as_f64().to_bits());
        key.push(mdp.discount.as_f64().to_bits());
        if let Some(hit) = self.cache.get(&(key.clone(), state)) {
            return Ok(*hit);
        }
        let result = whittle_index_clamped(mdp, state, &self.config)?;
        self.cache.insert((key, state), result);
        Ok(result)
    }

    /// Computes each arm's index at its current state (sampling a model from
    /// the posterior for learned arms) and acts on the top `min(budget, N)`,
    /// ties broken by arm id.
    pub fn allocate(
        &mut self,
        arms: &[RmabArm<S>],
        budget: usize,
        round: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Allocation<S>> {
        self.allocate_with_floors(arms, budget, round, &BTreeMap::new(), rng)
    }

    /// Two-phase equitable allocation: each group first receives its
    /// `floor(fraction * budget)` highest-index arms, then the remaining
    /// budget is filled globally by index.
    pub fn equitable_allocate(
        &mut self,
        arms: &[RmabArm<S>],
        budget: usize,
        round: usize,
        equity: &EquityConstraint,
        rng: &mut dyn RngCore,
    ) -> Result<Allocation<S>> {
        let floors = equity.floors(budget)?;
        let mut group_sizes: BTreeMap<&str, usize> = BTreeMap::new();
        for arm in arms {
            *group_sizes.entry(arm.group.as_str()).or_default() += 1;
        }
        for (group, floor) in &floors {
            let size = group_sizes.get(group.as_str()).copied().unwrap_or(0);
            if *floor > size {
                return Err(Error::Infeasible(format!(
                    "group {group:?} floor {floor} exceeds its {size} arms"
                )));
            }
        }
        self.allocate_with_floors(arms, budget, round, &floors, rng)
    }

    fn allocate_with_floors(
        &mut self,
        arms: &[RmabArm<S>],
        budget: usize,
        round: usize,
        floors: &BTreeMap<String, usize>,
        rng: &mut dyn RngCore,
    ) -> Result<Allocation<S>> {
        let mut indices = Vec::with_capacity(arms.len());
        let mut non_indexable = false;
        for arm in arms {
            let (index, fallback) = match &arm.dynamics {
                ArmDynamics::Known(mdp) => self.known_index(mdp, arm.state)?,
                ArmDynamics::Learned {
                    belief,
                    reward,
                    discount,
                } => {
                    let sampled = belief.sample_mdp(*reward, *discount, rng)?;
                    whittle_index_clamped(&sampled, arm.state, &self.config)?
                }
            };
            non_indexable |= fallback;
            indices.push((arm.id.clone(), index));
        }

        // Rank every arm by (index desc, id asc).
        let mut ranked: Vec<usize> = (0..arms.len()).collect();
        ranked.sort_by(|&a, &b| {
            indices[b]
                .1
                .partial_cmp(&indices[a].1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| arms[a].id.cmp(&arms[b].id))
        });

        let target = budget.min(arms.len());
        let mut chosen = vec![false; arms.len()];
        let mut acted_order: Vec<usize> = Vec::with_capacity(target);

        // Phase 1: per-group floors, groups in name order.
        for (group, floor) in floors {
            let mut taken = 0;
            for &i in &ranked {
                if taken == *floor {
                    break;
                }
                if !chosen[i] && arms[i].group == *group {
                    chosen[i] = true;
                    acted_order.push(i);
                    taken += 1;
                }
            }
        }
        // Phase 2: remaining budget globally by index.
        for &i in &ranked {
            if acted_order.len() == target {
                break;
            }
            if !chosen[i] {
                chosen[i] = true;
                acted_order.push(i);
            }
        }
        // Highest index first in the acted list.
        acted_order.sort_by(|&a, &b| {
            indices[b]
                .1
                .partial_cmp(&indices[a].1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| arms[a].id.cmp(&arms[b].id))
        });

        let mut group_counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut group_index_sums: BTreeMap<String, (S, usize)> = BTreeMap::new();
        for &i in &acted_order {
            *group_counts.entry(arms[i].group.clone()).or_default() += 1;
            let entry = group_index_sums
                .entry(arms[i].group.clone())
                .or_insert((S::zero(), 0));
            entry.0 += indices[i].1;
            entry.1 += 1;
        }
        let group_mean_index = group_index_sums
            .into_iter()
            .map(|(g, (sum, n))| (g, sum / S::from_usize(n).expect("count fits in scalar")))
            .collect();

        Ok(Allocation {
            round,
            acted: acted_order.iter().map(|&i| arms[i].id.clone()).collect(),
            indices,
            group_counts,
            group_mean_index,
            non_indexable,
        })
    }
}

/// One-shot [`WhittleAllocator::allocate`] with default tolerances.
pub fn allocate<S: Scalar>(
    arms: &[RmabArm<S>],
    budget: usize,
    round: usize,
    rng: &mut dyn RngCore,
) -> Result<Allocation<S>> {
    WhittleAllocator::default().allocate(arms, budget, round, rng)
}

/// One-shot [`WhittleAllocator::equitable_allocate`] with default tolerances.
pub fn equitable_allocate<S: Scalar>(
    arms: &[RmabArm<S>],
    budget: usize,
    round: usize,
    equity: &EquityConstraint,
    rng: &mut dyn RngCore,
) -> Result<Allocation<S>> {
    WhittleAllocator::default().equitable_allocate(arms, budget, round, equity, rng)
}

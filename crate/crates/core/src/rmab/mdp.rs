//! Two-state per-arm MDPs and subsidy value iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two-state MDP with passive (0) and active (1) actions.
///
/// `transition[a][s][s']` is the probability of moving to `s'` from `s` under
/// action `a`. Rewards depend on the state only; the default `r(s) = s` makes
/// total reward count time spent in the good state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStateMdp<S> {
    pub transition: [[[S; 2]; 2]; 2],
    pub reward: [S; 2],
    pub discount: S,
}

impl<S: Scalar> TwoStateMdp<S> {
    /// Builds from the probability of landing in state 1: `passive[s]` and
    /// `active[s]` give `P(1 | s)` under each action.
    pub fn from_good_state_probs(passive: [S; 2], active: [S; 2], discount: S) -> Result<Self> {
        let mut transition = [[[S::zero(); 2]; 2]; 2];
        for (a, probs) in [passive, active].iter().enumerate() {
            for s in 0..2 {
                transition[a][s][1] = probs[s];
                transition[a][s][0] = S::one() - probs[s];
            }
        }
        let mdp = Self {
            transition,
            reward: [S::zero(), S::one()],
            discount,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn with_reward(mut self, reward: [S; 2]) -> Self {
        self.reward = reward;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.discount > S::zero() && self.discount < S::one()) {
            return Err(Error::InvalidParameter(
                "discount must lie in (0, 1)".into(),
            ));
        }
        let tol = S::cast(1e-12);
        for action in &self.transition {
            for row in action {
                let sum = row[0] + row[1];
                if (sum - S::one()).abs() > tol {
                    return Err(Error::InvalidParameter(format!(
                        "transition row sums to {sum}, expected 1"
                    )));
                }
                for p in row {
                    if *p < S::zero() || *p > S::one() || !p.is_finite() {
                        return Err(Error::InvalidParameter(format!(
                            "transition probability {p} outside [0, 1]"
                        )));
                    }
                }
            }
        }
        if !self.reward.iter().all(|r| r.is_finite()) {
            return Err(Error::NonFinite("reward vector"));
        }
        Ok(())
    }

    /// `P(s' = 1 | s, action)`.
    pub fn good_state_prob(&self, action: usize, state: u8) -> S {
        self.transition[action][state as usize][1]
    }
}

/// Converged evaluation of the subsidy MDP at one subsidy level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsidySolution<S> {
    pub values: [S; 2],
    pub q_passive: [S; 2],
    pub q_active: [S; 2],
    /// Passive weakly optimal (margin >= -1e-9) per state.
    pub passive_optimal: [bool; 2],
    pub iterations: usize,
}

impl<S: Scalar> SubsidySolution<S> {
    /// `Q_passive(state) - Q_active(state)`; non-negative where passive wins.
    pub fn passive_margin(&self, state: u8) -> S {
        self.q_passive[state as usize] - self.q_active[state as usize]
    }
}

/// Value iteration for the subsidy MDP: the passive action earns `r(s) +
/// subsidy`. The contraction stopping rule guarantees both the Bellman
/// residual and the sup-norm distance to the exact fixed point are at most
/// `tol` on return.
pub fn value_iteration<S: Scalar>(mdp: &TwoStateMdp<S>, subsidy: S, tol: S) -> SubsidySolution<S> {
    value_iteration_from(mdp, subsidy, tol, [S::zero(); 2])
}

/// Value iteration warm-started from `initial`; used by the index bisection
/// and the indexability sweep where consecutive subsidies are close.
pub fn value_iteration_from<S: Scalar>(
    mdp: &TwoStateMdp<S>,
    subsidy: S,
    tol: S,
    initial: [S; 2],
) -> SubsidySolution<S> {
    let beta = mdp.discount;
    let mut values = initial;
    let mut q_passive = [S::zero(); 2];
    let mut q_active = [S::zero(); 2];
    // delta <= tol (1 - beta) / beta bounds both the residual (beta * delta)
    // and the distance to the fixed point (beta delta / (1 - beta)) by tol.
    let threshold = tol * (S::one() - beta) / beta;
    let max_iterations = 2_000_000;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut next = [S::zero(); 2];
        for s in 0..2 {
            let cont_passive = mdp.transition[0][s][0] * values[0] + mdp.transition[0][s][1] * values[1];
            let cont_active = mdp.transition[1][s][0] * values[0] + mdp.transition[1][s][1] * values[1];
            q_passive[s] = mdp.reward[s] + subsidy + beta * cont_passive;
            q_active[s] = mdp.reward[s] + beta * cont_active;
            next[s] = q_passive[s].max(q_active[s]);
        }
        let delta = (next[0] - values[0]).abs().max((next[1] - values[1]).abs());
        values = next;
        if delta <= threshold || iterations >= max_iterations {
            break;
        }
    }
    // Q values consistent with the returned fixed point.
    for s in 0..2 {
        let cont_passive = mdp.transition[0][s][0] * values[0] + mdp.transition[0][s][1] * values[1];
        let cont_active = mdp.transition[1][s][0] * values[0] + mdp.transition[1][s][1] * values[1];
        q_passive[s] = mdp.reward[s] + subsidy + beta * cont_passive;
        q_active[s] = mdp.reward[s] + beta * cont_active;
    }
    let margin = S::cast(-1e-9);
    SubsidySolution {
        values,
        q_passive,
        q_active,
        passive_optimal: [
            q_passive[0] - q_active[0] >= margin,
            q_passive[1] - q_active[1] >= margin,
        ],
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn example_mdp() -> TwoStateMdp<f64> {
        TwoStateMdp::from_good_state_probs([0.1, 0.5], [0.6, 0.9], 0.9).unwrap()
    }

    #[test]
    fn huge_subsidy_makes_passive_optimal_everywhere() {
        let solution = value_iteration(&example_mdp(), 1e6, 1e-9);
        assert_eq!(solution.passive_optimal, [true, true]);
    }

    #[test]
    fn huge_negative_subsidy_makes_active_optimal() {
        let solution = value_iteration(&example_mdp(), -1e6, 1e-9);
        assert_eq!(solution.passive_optimal, [false, false]);
    }

    #[test]
    fn action_invariant_dynamics_with_zero_subsidy_are_indifferent() {
        let mdp = TwoStateMdp::<f64>::from_good_state_probs([0.3, 0.7], [0.3, 0.7], 0.9).unwrap();
        let solution = value_iteration(&mdp, 0.0, 1e-12);
        for s in 0..2u8 {
            assert!(solution.passive_margin(s).abs() <= 1e-9);
        }
        assert_eq!(solution.passive_optimal, [true, true]);
    }

    #[test]
    fn residual_and_fixed_point_error_bounded_by_tolerance() {
        let mdp = example_mdp();
        let tol = 1e-9;
        let subsidy = 0.35;
        let solution = value_iteration(&mdp, subsidy, tol);

        // One hand-rolled Bellman application measures the residual.
        let mut applied = [0.0f64; 2];
        for s in 0..2 {
            let qp = mdp.reward[s]
                + subsidy
                + 0.9 * (mdp.transition[0][s][0] * solution.values[0]
                    + mdp.transition[0][s][1] * solution.values[1]);
            let qa = mdp.reward[s]
                + 0.9 * (mdp.transition[1][s][0] * solution.values[0]
                    + mdp.transition[1][s][1] * solution.values[1]);
            applied[s] = qp.max(qa);
        }
        let residual = (applied[0] - solution.values[0])
            .abs()
            .max((applied[1] - solution.values[1]).abs());
        assert!(residual <= tol, "residual {residual}");

        // Distance to the (much more precise) fixed point is also within tol.
        let precise = value_iteration(&mdp, subsidy, 1e-13);
        let distance = (precise.values[0] - solution.values[0])
            .abs()
            .max((precise.values[1] - solution.values[1]).abs());
        assert!(distance <= tol, "distance {distance}");
    }

    #[test]
    fn rejects_bad_rows_and_discount() {
        assert!(TwoStateMdp::from_good_state_probs([0.1, 1.5], [0.2, 0.3], 0.9).is_err());
        assert!(TwoStateMdp::from_good_state_probs([0.1, 0.5], [0.2, 0.3], 1.0).is_err());
    }

    proptest! {
        /// Adding subsidy never lowers the optimal value.
        #[test]
        fn value_monotone_in_subsidy(
            p00 in 0.0f64..1.0, p01 in 0.0f64..1.0,
            p10 in 0.0f64..1.0, p11 in 0.0f64..1.0,
            lo in -3.0f64..3.0, bump in 0.0f64..2.0,
        ) {
            let mdp = TwoStateMdp::from_good_state_probs([p00, p01], [p10, p11], 0.9).unwrap();
            let a = value_iteration(&mdp, lo, 1e-10);
            let b = value_iteration(&mdp, lo + bump, 1e-10);
            for s in 0..2 {
                prop_assert!(b.values[s] >= a.values[s] - 1e-7);
            }
        }
    }
}

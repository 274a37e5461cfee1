//! Experiment designs and effect estimation.
//!
//! Assignment can happen at the individual or cluster level, fully at random,
//! adaptively through a bandit posterior, or per decision point in a
//! micro-randomized design. Every assignment logs the propensity with which
//! the realized arm was drawn, at draw time; analysis treats those logged
//! propensities as immutable ground truth.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::bandit::thompson::GaussianTs;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitLevel {
    Individual,
    Cluster,
}

/// Assignment mechanism.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism<S> {
    /// Independent draws from fixed arm probabilities (shared per cluster
    /// under cluster-level assignment).
    FixedRandom { probabilities: Vec<S> },
    /// Arm and propensity supplied by a bandit posterior at assignment time.
    Adaptive { propensity_samples: usize },
    /// Per-decision-point Bernoulli treatment with probability `treat_prob`,
    /// which must lie strictly inside (0, 1) for weighting to be defined.
    MicroRandomized { treat_prob: S },
}

/// A validated experiment design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign<S> {
    pub unit: UnitLevel,
    pub mechanism: Mechanism<S>,
    pub arms: Vec<String>,
    pub seed: u64,
}

impl<S: Scalar> ExperimentDesign<S> {
    pub fn new(
        unit: UnitLevel,
        mechanism: Mechanism<S>,
        arms: Vec<String>,
        seed: u64,
    ) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::InvalidParameter("at least one arm required".into()));
        }
        match &mechanism {
            Mechanism::FixedRandom { probabilities } => {
                if probabilities.len() != arms.len() {
                    return Err(Error::DimensionMismatch {
                        expected: arms.len(),
                        got: probabilities.len(),
                    });
                }
                if probabilities.iter().any(|p| !(*p > S::zero())) {
                    return Err(Error::InvalidParameter(
                        "arm probabilities must be positive".into(),
                    ));
                }
                let total: S = probabilities.iter().copied().sum();
                if (total - S::one()).abs() > S::cast(1e-9) {
                    return Err(Error::InvalidParameter(format!(
                        "arm probabilities sum to {total}, expected 1"
                    )));
                }
            }
            Mechanism::Adaptive { propensity_samples } => {
                if *propensity_samples == 0 {
                    return Err(Error::InvalidParameter(
                        "propensity_samples must be >= 1".into(),
                    ));
                }
            }
            Mechanism::MicroRandomized { treat_prob } => {
                if !(*treat_prob > S::zero() && *treat_prob < S::one()) {
                    return Err(Error::InvalidParameter(format!(
                        "treat_prob {treat_prob} outside (0, 1)"
                    )));
                }
                if arms.len() != 2 {
                    return Err(Error::InvalidParameter(
                        "micro-randomized designs need exactly 2 arms".into(),
                    ));
                }
            }
        }
        Ok(Self {
            unit,
            mechanism,
            arms,
            seed,
        })
    }
}

/// One logged assignment. The propensity is the probability with which the
/// realized arm was drawn, recorded at assignment time and never recomputed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord<S> {
    pub unit: String,
    pub cluster: Option<String>,
    pub decision_point: usize,
    pub arm: usize,
    pub propensity: S,
    pub timestamp: Option<chrono::DateTime<chrono::Utc>>,
}

/// Fixed-random assigner with a per-cluster arm cache so every member of a
/// cluster shares one draw.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Assigner<S> {
    design: ExperimentDesign<S>,
    cluster_arms: BTreeMap<String, usize>,
}

impl<S: Scalar> Assigner<S> {
    pub fn new(design: ExperimentDesign<S>) -> Result<Self> {
        if !matches!(design.mechanism, Mechanism::FixedRandom { .. }) {
            return Err(Error::InvalidParameter(
                "Assigner handles fixed-random designs only".into(),
            ));
        }
        Ok(Self {
            design,
            cluster_arms: BTreeMap::new(),
        })
    }

    pub fn design(&self) -> &ExperimentDesign<S> {
        &self.design
    }

    fn draw_arm(&self, rng: &mut dyn RngCore) -> usize {
        let Mechanism::FixedRandom { probabilities } = &self.design.mechanism else {
            unreachable!("validated at construction")
        };
        let u: f64 = rng.random();
        let mut cdf = 0.0;
        for (arm, p) in probabilities.iter().enumerate() {
            cdf += p.as_f64();
            if u < cdf {
                return arm;
            }
        }
        probabilities.len() - 1
    }

    /// Assigns one unit. Cluster-level designs require a cluster id; the
    /// first draw for a cluster is cached and shared by all its members.
    pub fn assign(
        &mut self,
        unit: &str,
        cluster: Option<&str>,
        decision_point: usize,
        rng: &mut dyn RngCore,
    ) -> Result<AssignmentRecord<S>> {
        let arm = match self.design.unit {
            UnitLevel::Individual => self.draw_arm(rng),
            UnitLevel::Cluster => {
                let cluster = cluster.ok_or_else(|| {
                    Error::InvalidParameter(
                        "cluster-level design requires a cluster id".into(),
                    )
                })?;
                match self.cluster_arms.get(cluster) {
                    Some(arm) => *arm,
                    None => {
                        let arm = self.draw_arm(rng);
                        self.cluster_arms.insert(cluster.to_string(), arm);
                        arm
                    }
                }
            }
        };
        let Mechanism::FixedRandom { probabilities } = &self.design.mechanism else {
            unreachable!("validated at construction")
        };
        Ok(AssignmentRecord {
            unit: unit.to_string(),
            cluster: cluster.map(str::to_string),
            decision_point,
            arm,
            propensity: probabilities[arm],
            timestamp: None,
        })
    }
}

/// Adaptive assignment: the arm comes from a Thompson draw of `belief` and
/// the propensity from a Monte Carlo estimate under the same belief, recorded
/// atomically before any further update.
pub fn adaptive_assign<S: Scalar>(
    design: &ExperimentDesign<S>,
    belief: &GaussianTs<S>,
    x: &[S],
    unit: &str,
    decision_point: usize,
    rng: &mut dyn RngCore,
) -> Result<AssignmentRecord<S>> {
    let Mechanism::Adaptive { propensity_samples } = design.mechanism else {
        return Err(Error::InvalidParameter(
            "design mechanism is not adaptive".into(),
        ));
    };
    if belief.config().arms != design.arms.len() {
        return Err(Error::DimensionMismatch {
            expected: design.arms.len(),
            got: belief.config().arms,
        });
    }
    let arm = belief.select(x, rng)?;
    let propensities = belief.action_propensity(x, propensity_samples, rng)?;
    Ok(AssignmentRecord {
        unit: unit.to_string(),
        cluster: None,
        decision_point,
        arm,
        propensity: propensities[arm],
        timestamp: None,
    })
}

/// Micro-randomized treatment draw for one (unit, decision point): Bernoulli
/// with the design's treatment probability. Arm 1 is treatment. The logged
/// propensity is the realized arm's draw probability (`p` for treatment,
/// `1 - p` for control), so weighting can always divide by it directly.
pub fn mrt_randomize<S: Scalar>(
    design: &ExperimentDesign<S>,
    unit: &str,
    decision_point: usize,
    rng: &mut dyn RngCore,
) -> Result<AssignmentRecord<S>> {
    let Mechanism::MicroRandomized { treat_prob } = design.mechanism else {
        return Err(Error::InvalidParameter(
            "design mechanism is not micro-randomized".into(),
        ));
    };
    let treated = rng.random::<f64>() < treat_prob.as_f64();
    Ok(AssignmentRecord {
        unit: unit.to_string(),
        cluster: None,
        decision_point,
        arm: usize::from(treated),
        propensity: if treated {
            treat_prob
        } else {
            S::one() - treat_prob
        },
        timestamp: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    DifferenceInMeans,
    InverseProbabilityWeighting,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::DifferenceInMeans => "difference-in-means",
            Estimator::InverseProbabilityWeighting => "ipw",
        }
    }
}

/// Point estimate of the treatment effect with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate<S> {
    pub estimate: S,
    pub std_error: S,
    pub estimator: String,
    pub n: usize,
}

/// Estimates the effect of arm 1 vs arm 0 from `(assignment, reward)` pairs.
///
/// Difference-in-means uses the pooled two-sample standard error and needs at
/// least one observation per arm. IPW forms the Horvitz-Thompson contrast
/// `A r / p - (1 - A) r / (1 - p)` with `p` the treatment probability
/// recovered from the logged realized-arm propensity; its standard error is
/// the empirical standard deviation of per-record contributions over sqrt(n).
pub fn estimate_effect<S: Scalar>(
    records: &[(AssignmentRecord<S>, S)],
    estimator: Estimator,
) -> Result<EffectEstimate<S>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no experiment records"));
    }
    for (record, reward) in records {
        if record.arm > 1 {
            return Err(Error::InvalidParameter(
                "effect estimation expects binary arms 0/1".into(),
            ));
        }
        if !reward.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
    }
    let n = records.len();
    match estimator {
        Estimator::DifferenceInMeans => {
            let (mut sum1, mut sum0) = (S::zero(), S::zero());
            let (mut n1, mut n0) = (0usize, 0usize);
            for (record, reward) in records {
                if record.arm == 1 {
                    sum1 += *reward;
                    n1 += 1;
                } else {
                    sum0 += *reward;
                    n0 += 1;
                }
            }
            if n1 == 0 || n0 == 0 {
                return Err(Error::EmptyInput("an arm has no observations"));
            }
            let mean1 = sum1 / S::from_usize(n1).expect("fits");
            let mean0 = sum0 / S::from_usize(n0).expect("fits");
            let mut ss = S::zero();
            for (record, reward) in records {
                let mean = if record.arm == 1 { mean1 } else { mean0 };
                ss += (*reward - mean) * (*reward - mean);
            }
            let df = n1 + n0 - 2;
            let std_error = if df == 0 {
                S::zero()
            } else {
                let pooled_var = ss / S::from_usize(df).expect("fits");
                (pooled_var
                    * (S::one() / S::from_usize(n1).expect("fits")
                        + S::one() / S::from_usize(n0).expect("fits")))
                .sqrt()
            };
            Ok(EffectEstimate {
                estimate: mean1 - mean0,
                std_error,
                estimator: estimator.name().to_string(),
                n,
            })
        }
        Estimator::InverseProbabilityWeighting => {
            let mut contributions = Vec::with_capacity(n);
            for (record, reward) in records {
                let p = record.propensity;
                if !(p > S::zero() && p < S::one()) {
                    return Err(Error::InvalidParameter(format!(
                        "IPW needs propensities strictly inside (0, 1), got {p}"
                    )));
                }
                // p is the realized arm's draw probability, so each branch
                // divides by its own logged propensity.
                let c = if record.arm == 1 {
                    *reward / p
                } else {
                    -(*reward) / p
                };
                contributions.push(c);
            }
            let n_s = S::from_usize(n).expect("fits");
            let mean: S = contributions.iter().copied().sum::<S>() / n_s;
            let std_error = if n > 1 {
                let var: S = contributions
                    .iter()
                    .map(|c| (*c - mean) * (*c - mean))
                    .sum::<S>()
                    / S::from_usize(n - 1).expect("fits");
                (var / n_s).sqrt()
            } else {
                S::zero()
            };
            Ok(EffectEstimate {
                estimate: mean,
                std_error,
                estimator: estimator.name().to_string(),
                n,
            })
        }
    }
}

//! Synthetic survival cohorts drawn from a known discrete hazard model.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::rng::{derive_rng, standard_normal_vec};
use crate::scalar::Scalar;
use crate::survival::SurvivalRecord;

/// Generating model: contexts are standard normal, the event time follows the
/// discrete logistic hazard with `coef` over `x ⊕ onehot(period)`, and a
/// fraction of subjects is censored uniformly over the follow-up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCohortSpec<S> {
    pub n: usize,
    pub context_dim: usize,
    /// True coefficients, length `context_dim + periods`.
    pub coef: Vec<S>,
    pub periods: usize,
    /// Probability that a subject gets an independent uniform censoring time.
    pub censoring_rate: f64,
}

impl<S: Scalar> SurvivalCohortSpec<S> {
    pub fn validate(&self) -> Result<()> {
        if self.coef.len() != self.context_dim + self.periods {
            return Err(Error::DimensionMismatch {
                expected: self.context_dim + self.periods,
                got: self.coef.len(),
            });
        }
        if self.periods == 0 {
            return Err(Error::InvalidParameter("periods must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.censoring_rate) {
            return Err(Error::InvalidParameter(
                "censoring_rate must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Draws a cohort. Events beyond the follow-up horizon are administratively
/// censored at `t = periods`; independent censoring truncates earlier with
/// probability `censoring_rate`.
pub fn make_survival_cohort<S: Scalar>(
    spec: &SurvivalCohortSpec<S>,
    seed: u64,
) -> Result<Vec<SurvivalRecord<S>>> {
    spec.validate()?;
    let mut rng = derive_rng(seed, "survival-cohort");
    let mut records = Vec::with_capacity(spec.n);
    for subject in 0..spec.n {
        let x: Vec<S> = standard_normal_vec(&mut rng, spec.context_dim);
        let censor = rng.random::<f64>() < spec.censoring_rate;
        let censor_time = rng.random_range(1..=spec.periods);

        let base: f64 = dot(
            &spec.coef[..spec.context_dim],
            &x,
        )
        .as_f64();
        let mut event_time = None;
        for h in 1..=spec.periods {
            let hazard = sigmoid(base + spec.coef[spec.context_dim + h - 1].as_f64());
            if rng.random::<f64>() < hazard {
                event_time = Some(h);
                break;
            }
        }
        let (time, censored) = match (event_time, censor) {
            (Some(t), true) if censor_time < t => (censor_time, true),
            (Some(t), _) => (t, false),
            (None, true) => (censor_time, true),
            (None, false) => (spec.periods, true),
        };
        records.push(SurvivalRecord {
            subject_id: format!("s{subject:05}"),
            x,
            time: S::from_usize(time).expect("period fits in scalar"),
            censored,
        });
    }
    Ok(records)
}

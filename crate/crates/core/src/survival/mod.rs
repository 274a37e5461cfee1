//! Time-to-event modeling on censored observations.
//!
//! Two estimators of the conditional survival function `P(T >= t | X = x)`:
//! the nonparametric Kaplan-Meier product-limit curve and a discrete-time
//! logistic hazard regression, plus risk ranking of a cohort by predicted
//! survival at a horizon.
//!
//! Censoring convention: `censored == true` means follow-up ended before the
//! event was observed. Parsers that read `c` columns choose which raw value
//! maps to `true`.

mod hazard;
mod km;

pub use hazard::{
    expand_person_periods, penalized_loss_grad, DiscreteHazardConfig, FitMetadata, HazardModel,
    PersonPeriodRow,
};
pub use km::{fit_kaplan_meier, CurvePoint, SurvivalCurve};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One censored time-to-event observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord<S> {
    pub subject_id: String,
    /// Feature vector at baseline.
    pub x: Vec<S>,
    /// Observed time: event time, or end of follow-up when censored.
    pub time: S,
    /// True when the event was *not* observed in `(0, time]`.
    pub censored: bool,
}

impl<S: Scalar> SurvivalRecord<S> {
    pub fn validate(&self, max_follow_up: S) -> Result<()> {
        if !(self.time > S::zero() && self.time <= max_follow_up) {
            return Err(Error::InvalidParameter(format!(
                "time {} outside (0, {}] for subject {:?}",
                self.time, max_follow_up, self.subject_id
            )));
        }
        if !self.x.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("survival record features"));
        }
        Ok(())
    }
}

/// Sorts a cohort highest-risk first: ascending survival at `horizon`,
/// ties broken by subject id.
pub fn risk_rank<S: Scalar>(
    model: &HazardModel<S>,
    cohort: &[(String, Vec<S>)],
    horizon: usize,
) -> Result<Vec<(String, S)>> {
    let mut ranked = Vec::with_capacity(cohort.len());
    for (id, x) in cohort {
        let s = model.predict_survival(x, horizon)?;
        let at_horizon = s.last().copied().unwrap_or_else(S::one);
        ranked.push((id.clone(), at_horizon));
    }
    ranked.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(ranked)
}

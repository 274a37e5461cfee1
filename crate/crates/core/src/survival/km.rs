//! Kaplan-Meier product-limit estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::SurvivalRecord;

/// One distinct observed time on the curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint<S> {
    pub time: S,
    /// Subjects still under observation entering this time.
    pub at_risk: usize,
    pub events: usize,
    pub censored: usize,
    /// Survival just after this time.
    pub survival: S,
}

/// Marginal survival curve `S(t)` as a right-continuous step function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve<S> {
    pub points: Vec<CurvePoint<S>>,
}

impl<S: Scalar> SurvivalCurve<S> {
    /// Step-function lookup; 1 before the first observed time.
    pub fn survival_at(&self, t: S) -> S {
        let mut s = S::one();
        for p in &self.points {
            if p.time <= t {
                s = p.survival;
            } else {
                break;
            }
        }
        s
    }

    /// Times at which at least one event occurred.
    pub fn event_times(&self) -> Vec<S> {
        self.points
            .iter()
            .filter(|p| p.events > 0)
            .map(|p| p.time)
            .collect()
    }
}

/// Product-limit estimate over censored records. At tied times, events are
/// processed before censorings: subjects censored at `t` still count in the
/// risk set for events at `t`.
pub fn fit_kaplan_meier<S: Scalar>(records: &[SurvivalRecord<S>]) -> Result<SurvivalCurve<S>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no survival records"));
    }
    for r in records {
        if !(r.time > S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "non-positive time for subject {:?}",
                r.subject_id
            )));
        }
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        records[a]
            .time
            .partial_cmp(&records[b].time)
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut points = Vec::new();
    let mut at_risk = records.len();
    let mut survival = S::one();
    let mut i = 0;
    while i < order.len() {
        let t = records[order[i]].time;
        let mut events = 0usize;
        let mut censored = 0usize;
        while i < order.len() && records[order[i]].time == t {
            if records[order[i]].censored {
                censored += 1;
            } else {
                events += 1;
            }
            i += 1;
        }
        if events > 0 {
            let n = S::from_usize(at_risk).expect("risk set fits in scalar");
            let d = S::from_usize(events).expect("event count fits in scalar");
            survival = survival * (S::one() - d / n);
        }
        points.push(CurvePoint {
            time: t,
            at_risk,
            events,
            censored,
            survival,
        });
        at_risk -= events + censored;
    }
    Ok(SurvivalCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(t: f64, censored: bool) -> SurvivalRecord<f64> {
        SurvivalRecord {
            subject_id: format!("s{t}-{censored}"),
            x: vec![],
            time: t,
            censored,
        }
    }

    /// Hand product-limit computation: risk sets 3 -> 2 -> 1,
    /// S(1) = 2/3, censoring at 2 leaves S alone, S(3) = 0.
    #[test]
    fn three_record_worked_example() {
        let curve =
            fit_kaplan_meier(&[rec(1.0, false), rec(2.0, true), rec(3.0, false)]).unwrap();
        let expected_s1 = 1.0 - 1.0 / 3.0;
        assert_eq!(curve.survival_at(1.0), expected_s1);
        assert_eq!(curve.survival_at(2.0), expected_s1);
        assert_eq!(curve.survival_at(3.0), 0.0);
        assert_eq!(curve.survival_at(0.5), 1.0);
        assert_eq!(curve.points[0].at_risk, 3);
        assert_eq!(curve.points[2].at_risk, 1);
    }

    #[test]
    fn all_censored_curve_stays_at_one() {
        let curve = fit_kaplan_meier(&[rec(1.0, true), rec(4.0, true)]).unwrap();
        assert_eq!(curve.survival_at(10.0), 1.0);
        assert!(curve.event_times().is_empty());
    }

    #[test]
    fn single_event_drops_to_zero() {
        let curve = fit_kaplan_meier(&[rec(5.0, false)]).unwrap();
        assert_eq!(curve.survival_at(5.0), 0.0);
        assert_eq!(curve.survival_at(4.9), 1.0);
    }

    #[test]
    fn empty_input_errors() {
        assert!(fit_kaplan_meier::<f64>(&[]).is_err());
    }

    #[test]
    fn tied_events_and_censorings_share_the_risk_set() {
        // 4 at risk at t=1: 1 event and 1 censoring tied there.
        // Events before censorings: S(1) = 1 - 1/4 = 3/4.
        let curve = fit_kaplan_meier(&[
            rec(1.0, false),
            rec(1.0, true),
            rec(2.0, false),
            rec(3.0, true),
        ])
        .unwrap();
        assert_eq!(curve.survival_at(1.0), 0.75);
        // At t=2: 2 at risk, 1 event: 3/4 * 1/2.
        assert_eq!(curve.survival_at(2.0), 0.375);
    }

    proptest! {
        /// With no censoring, Kaplan-Meier equals the empirical survival
        /// function exactly.
        #[test]
        fn uncensored_matches_empirical(times in prop::collection::vec(1u8..30, 1..40)) {
            let records: Vec<SurvivalRecord<f64>> = times
                .iter()
                .enumerate()
                .map(|(i, t)| SurvivalRecord {
                    subject_id: format!("s{i}"),
                    x: vec![],
                    time: f64::from(*t),
                    censored: false,
                })
                .collect();
            let curve = fit_kaplan_meier(&records).unwrap();
            let n = records.len() as f64;
            for probe in 0..=31u8 {
                let t = f64::from(probe);
                let surviving = records.iter().filter(|r| r.time > t).count() as f64;
                prop_assert!((curve.survival_at(t) - surviving / n).abs() < 1e-12);
            }
        }

        /// S is non-increasing and stays in [0, 1].
        #[test]
        fn survival_monotone_in_unit_interval(
            spec in prop::collection::vec((1u8..20, any::<bool>()), 1..50)
        ) {
            let records: Vec<SurvivalRecord<f64>> = spec
                .iter()
                .enumerate()
                .map(|(i, (t, c))| SurvivalRecord {
                    subject_id: format!("s{i}"),
                    x: vec![],
                    time: f64::from(*t),
                    censored: *c,
                })
                .collect();
            let curve = fit_kaplan_meier(&records).unwrap();
            let mut prev = 1.0;
            for p in &curve.points {
                prop_assert!(p.survival >= -1e-15 && p.survival <= 1.0 + 1e-15);
                prop_assert!(p.survival <= prev + 1e-15);
                prev = p.survival;
            }
        }
    }
}

//! Discrete-time logistic hazard regression.
//!
//! Follow-up `(0, M]` is cut into `H = ceil(M / period)` periods. A subject
//! alive entering period `h` contributes one person-period row with features
//! `x ⊕ onehot(h)` and label 1 iff the event happened in period `h`. The
//! per-period hazard is a logistic function of that row, fitted by Newton
//! iterations on the L2-penalized log-likelihood (deterministic, seed-free).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, Mat};
use crate::scalar::Scalar;

use super::SurvivalRecord;

/// Hyperparameters for [`HazardModel::fit`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscreteHazardConfig<S> {
    /// Length of one period, in the records' time unit.
    pub period: S,
    /// Maximum follow-up `M`; defaults to the largest observed time.
    pub max_follow_up: Option<S>,
    /// L2 penalty on all coefficients.
    pub l2: S,
    pub max_iterations: usize,
    /// Fit stops when the penalized-likelihood gradient norm drops below this.
    pub tolerance: S,
}

impl<S: Scalar> Default for DiscreteHazardConfig<S> {
    fn default() -> Self {
        Self {
            period: S::one(),
            max_follow_up: None,
            l2: S::cast(1e-2),
            max_iterations: 200,
            tolerance: S::cast(1e-8),
        }
    }
}

/// One row of the person-period expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct PersonPeriodRow<S> {
    /// `x ⊕ onehot(period)`, length `context_dim + periods`.
    pub features: Vec<S>,
    /// 1 iff the event occurred in this period.
    pub event: bool,
}

/// Expands records into person-period rows. Censored subjects contribute
/// all-zero labels through their censoring period; subjects with events
/// contribute a single 1 in the event period.
pub fn expand_person_periods<S: Scalar>(
    records: &[SurvivalRecord<S>],
    period: S,
    periods: usize,
) -> Result<Vec<PersonPeriodRow<S>>> {
    let dim = records.first().map(|r| r.x.len()).unwrap_or(0);
    let mut rows = Vec::new();
    for r in records {
        if r.x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.x.len(),
            });
        }
        let last = (r.time / period)
            .ceil()
            .to_usize()
            .ok_or(Error::NonFinite("record time"))?
            .clamp(1, periods);
        for h in 1..=last {
            let mut features = vec![S::zero(); dim + periods];
            features[..dim].copy_from_slice(&r.x);
            features[dim + h - 1] = S::one();
            rows.push(PersonPeriodRow {
                features,
                event: h == last && !r.censored,
            });
        }
    }
    Ok(rows)
}

fn sigmoid<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus<S: Scalar>(z: S) -> S {
    z.max(S::zero()) + (-(z.abs())).exp().ln_1p()
}

/// Penalized negative log-likelihood and its gradient at `coef`.
///
/// Exposed so the fitted gradient can be checked against finite differences.
pub fn penalized_loss_grad<S: Scalar>(
    coef: &[S],
    rows: &[PersonPeriodRow<S>],
    l2: S,
) -> (S, Vec<S>) {
    let mut loss = S::zero();
    let mut grad = vec![S::zero(); coef.len()];
    for row in rows {
        let z = dot(coef, &row.features);
        let y = if row.event { S::one() } else { S::zero() };
        loss += softplus(z) - y * z;
        let residual = sigmoid(z) - y;
        for (g, f) in grad.iter_mut().zip(&row.features) {
            *g += residual * *f;
        }
    }
    let half = S::cast(0.5);
    for (g, c) in grad.iter_mut().zip(coef) {
        loss += half * l2 * *c * *c;
        *g += l2 * *c;
    }
    (loss, grad)
}

/// Convergence diagnostics recorded on the fitted model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata<S> {
    pub iterations: usize,
    pub final_loss: S,
    pub gradient_norm: S,
}

/// Fitted discrete-time hazard model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HazardModel<S> {
    pub period: S,
    /// Number of periods `H`.
    pub periods: usize,
    pub context_dim: usize,
    /// Coefficients over `x ⊕ onehot(period)`, length `context_dim + periods`.
    pub coef: Vec<S>,
    pub fit: FitMetadata<S>,
}

impl<S: Scalar> HazardModel<S> {
    /// Builds a model from explicit coefficients (no fitting).
    pub fn from_coefficients(
        period: S,
        periods: usize,
        context_dim: usize,
        coef: Vec<S>,
    ) -> Result<Self> {
        if coef.len() != context_dim + periods {
            return Err(Error::DimensionMismatch {
                expected: context_dim + periods,
                got: coef.len(),
            });
        }
        Ok(Self {
            period,
            periods,
            context_dim,
            coef,
            fit: FitMetadata {
                iterations: 0,
                final_loss: S::zero(),
                gradient_norm: S::zero(),
            },
        })
    }

    /// Fits by full-batch Newton iterations with step halving; the L2 penalty
    /// keeps the objective strictly convex so the result is unique and
    /// independent of any seed.
    pub fn fit(records: &[SurvivalRecord<S>], config: &DiscreteHazardConfig<S>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyInput("no survival records"));
        }
        if !(config.period > S::zero()) {
            return Err(Error::InvalidParameter("period must be positive".into()));
        }
        if config.l2 < S::zero() {
            return Err(Error::InvalidParameter("l2 penalty must be >= 0".into()));
        }
        let max_time = records
            .iter()
            .map(|r| r.time)
            .fold(S::zero(), S::max);
        let max_follow_up = config.max_follow_up.unwrap_or(max_time);
        for r in records {
            r.validate(max_follow_up)?;
        }
        let periods = (max_follow_up / config.period)
            .ceil()
            .to_usize()
            .ok_or(Error::NonFinite("max follow-up"))?
            .max(1);
        let context_dim = records[0].x.len();
        let rows = expand_person_periods(records, config.period, periods)?;

        let p = context_dim + periods;
        let mut coef = vec![S::zero(); p];
        let (mut loss, mut grad) = penalized_loss_grad(&coef, &rows, config.l2);
        let mut iterations = 0;
        loop {
            let gnorm = norm2(&grad);
            if gnorm <= config.tolerance {
                return Ok(Self {
                    period: config.period,
                    periods,
                    context_dim,
                    coef,
                    fit: FitMetadata {
                        iterations,
                        final_loss: loss,
                        gradient_norm: gnorm,
                    },
                });
            }
            if iterations >= config.max_iterations {
                return Err(Error::NoConvergence {
                    iterations,
                    last_loss: loss.as_f64(),
                });
            }
            iterations += 1;

            // Newton direction on the penalized objective.
            let mut hess = Mat::scaled_identity(p, config.l2);
            for row in &rows {
                let z = dot(&coef, &row.features);
                let s = sigmoid(z);
                hess.add_outer(&row.features, s * (S::one() - s));
            }
            let direction = hess.cholesky()?.solve(&grad);

            // Step halving keeps the iteration monotone in loss.
            let mut step = S::one();
            let mut accepted = false;
            for _ in 0..40 {
                let candidate: Vec<S> = coef
                    .iter()
                    .zip(&direction)
                    .map(|(c, d)| *c - step * *d)
                    .collect();
                let (cand_loss, cand_grad) = penalized_loss_grad(&candidate, &rows, config.l2);
                if cand_loss <= loss {
                    coef = candidate;
                    loss = cand_loss;
                    grad = cand_grad;
                    accepted = true;
                    break;
                }
                step = step * S::cast(0.5);
            }
            if !accepted {
                // Gradient cannot be reduced further in this direction; treat
                // as converged if it is small, otherwise report failure.
                return Err(Error::NoConvergence {
                    iterations,
                    last_loss: loss.as_f64(),
                });
            }
        }
    }

    /// Per-period hazard `P(event in period h | alive entering h, x)`, `h` 1-based.
    pub fn hazard(&self, x: &[S], h: usize) -> Result<S> {
        if x.len() != self.context_dim {
            return Err(Error::DimensionMismatch {
                expected: self.context_dim,
                got: x.len(),
            });
        }
        if h == 0 || h > self.periods {
            return Err(Error::HorizonExceeded {
                got: h,
                max: self.periods,
            });
        }
        let z = dot(&self.coef[..self.context_dim], x) + self.coef[self.context_dim + h - 1];
        Ok(sigmoid(z))
    }

    /// `S(h | x) = prod_{j<=h} (1 - hazard_j(x))` for `h = 1..=horizon`.
    pub fn predict_survival(&self, x: &[S], horizon: usize) -> Result<Vec<S>> {
        if horizon > self.periods {
            return Err(Error::HorizonExceeded {
                got: horizon,
                max: self.periods,
            });
        }
        let mut out = Vec::with_capacity(horizon);
        let mut s = S::one();
        for h in 1..=horizon {
            s = s * (S::one() - self.hazard(x, h)?);
            out.push(s);
        }
        Ok(out)
    }
}

//! `experiment`: synthetic experiment runs with logged propensities and
//! effect estimation.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};

use intervene_core::bandit::thompson::{GaussianTs, GaussianTsConfig};
use intervene_core::experiment::{
    adaptive_assign, estimate_effect, mrt_randomize, Assigner, AssignmentRecord, Estimator,
    ExperimentDesign, Mechanism, UnitLevel,
};
use intervene_core::rng::{derive_rng, standard_normal_vec};

use crate::config::{ExperimentConfig, ScenarioConfig};
use crate::data::write_output;

pub fn run(config: &ScenarioConfig, out: &Path) -> Result<()> {
    let ScenarioConfig::Experiment(config) = config else {
        bail!("experiment expects an experiment config, got {:?}", config.kind());
    };
    super::echo_resolved_config(&ScenarioConfig::Experiment(config.clone()), out)?;
    experiment(config, out)
}

fn experiment(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let unit_level = match config.design.unit.as_str() {
        "individual" => UnitLevel::Individual,
        "cluster" => UnitLevel::Cluster,
        other => bail!("unknown unit level {other:?}"),
    };
    let mut outcome_rng = derive_rng(config.seed, "experiment-outcome");
    let mut assign_rng = derive_rng(config.seed, "experiment-assign");
    let mut records: Vec<(AssignmentRecord<f64>, f64)> = Vec::new();

    let mut draw_reward = |arm: usize, rng: &mut rand_chacha::ChaCha12Rng| -> f64 {
        let noise: f64 = intervene_core::rng::standard_normal::<f64, _>(rng);
        config.outcome.baseline
            + config.outcome.effect * f64::from(u8::from(arm == 1))
            + config.outcome.noise_sd * noise
    };

    match config.design.mechanism.as_str() {
        "fixed-random" => {
            let design = ExperimentDesign::new(
                unit_level,
                Mechanism::FixedRandom {
                    probabilities: config.design.probabilities.clone().unwrap_or_default(),
                },
                config.design.arms.clone(),
                config.seed,
            )?;
            let mut assigner = Assigner::new(design)?;
            for unit in 0..config.population.units {
                let cluster = (unit_level == UnitLevel::Cluster)
                    .then(|| format!("c{:03}", unit % config.population.clusters.max(1)));
                for t in 0..config.population.decision_points {
                    let record = assigner.assign(
                        &format!("u{unit:04}"),
                        cluster.as_deref(),
                        t,
                        &mut assign_rng,
                    )?;
                    let reward = draw_reward(record.arm, &mut outcome_rng);
                    records.push((record, reward));
                }
            }
        }
        "micro-randomized" => {
            let design = ExperimentDesign::new(
                unit_level,
                Mechanism::MicroRandomized {
                    treat_prob: config.design.treat_prob.unwrap_or(0.5),
                },
                config.design.arms.clone(),
                config.seed,
            )?;
            for unit in 0..config.population.units {
                for t in 0..config.population.decision_points {
                    let record =
                        mrt_randomize(&design, &format!("u{unit:04}"), t, &mut assign_rng)?;
                    let reward = draw_reward(record.arm, &mut outcome_rng);
                    records.push((record, reward));
                }
            }
        }
        "adaptive" => {
            let design = ExperimentDesign::new(
                unit_level,
                Mechanism::Adaptive {
                    propensity_samples: config.design.propensity_samples,
                },
                config.design.arms.clone(),
                config.seed,
            )?;
            let dim = config.design.context_dim;
            let mut belief = GaussianTs::new(GaussianTsConfig::new(config.design.arms.len(), dim))?;
            let mut context_rng = derive_rng(config.seed, "experiment-context");
            for unit in 0..config.population.units {
                for t in 0..config.population.decision_points {
                    let x: Vec<f64> = standard_normal_vec(&mut context_rng, dim);
                    let record = adaptive_assign(
                        &design,
                        &belief,
                        &x,
                        &format!("u{unit:04}"),
                        t,
                        &mut assign_rng,
                    )?;
                    let reward = draw_reward(record.arm, &mut outcome_rng);
                    belief.update(&x, record.arm, reward)?;
                    records.push((record, reward));
                }
            }
        }
        other => bail!("unknown mechanism {other:?}"),
    }

    let mut assignments = String::from("unit,cluster,decision_point,arm,propensity,reward\n");
    for (record, reward) in &records {
        writeln!(
            assignments,
            "{},{},{},{},{},{}",
            record.unit,
            record.cluster.as_deref().unwrap_or(""),
            record.decision_point,
            record.arm,
            record.propensity,
            reward
        )?;
    }
    write_output(out, "assignments.csv", &assignments)?;

    let mut estimates = String::from("estimator,estimate,std_error,n\n");
    for name in &config.analysis.estimators {
        let estimator = match name.as_str() {
            "difference-in-means" => Estimator::DifferenceInMeans,
            "ipw" => Estimator::InverseProbabilityWeighting,
            other => bail!("unknown estimator {other:?}"),
        };
        let estimate = estimate_effect(&records, estimator)?;
        writeln!(
            estimates,
            "{},{},{},{}",
            estimate.estimator, estimate.estimate, estimate.std_error, estimate.n
        )?;
    }
    write_output(out, "estimates.csv", &estimates)?;
    Ok(())
}

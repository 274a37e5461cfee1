//! `simulate`: seeded bandit or restless-cohort simulations with metrics
//! export.

use std::path::Path;

use anyhow::{bail, Result};

use intervene_core::bandit::kalman::{EkfBelief, EkfConfig};
use intervene_core::bandit::linear::{LinUcb, LinUcbConfig};
use intervene_core::bandit::neural::{MlpConfig, NeuralLinearBandit};
use intervene_core::bandit::thompson::{GaussianTs, GaussianTsConfig};
use intervene_core::rmab::{EquityConstraint, WhittleAllocator};
use intervene_core::rng::derive_seed;
use intervene_core::sim::{
    replicate, run_bandit_episode, run_rmab_episode, BanditPolicy, DynamicsView, EkfPolicy,
    EquitableWhittleAllocator, LinUcbPolicy, LinearTsPolicy, MetricRow, NeuralLinearPolicy,
    OraclePolicy, RmabAllocator, RmabEnvSpec, UniformAllocator, UniformRandomPolicy,
};

use crate::config::{BanditSimConfig, PolicyParams, RmabSimConfig, ScenarioConfig};
use crate::data::{cohort_env_arms, write_output};

pub fn run(config: &ScenarioConfig, out: &Path) -> Result<()> {
    super::echo_resolved_config(config, out)?;
    let csv = match config {
        ScenarioConfig::BanditSim(c) => bandit_sim(c)?,
        ScenarioConfig::RmabSim(c) => rmab_sim(c)?,
        other => bail!(
            "simulate expects a bandit-sim or rmab-sim config, got {:?}",
            other.kind()
        ),
    };
    write_output(out, "metrics.csv", &csv)?;
    Ok(())
}

fn build_policy(
    name: &str,
    env: &intervene_core::sim::LinearEnvSpec<f64>,
    params: &PolicyParams,
    seed: u64,
) -> Result<Box<dyn BanditPolicy<f64>>> {
    Ok(match name {
        "uniform" => Box::new(UniformRandomPolicy { arms: env.arms }),
        "oracle" => Box::new(OraclePolicy {
            theta: env.theta.clone(),
        }),
        "linucb" => Box::new(LinUcbPolicy(LinUcb::new(LinUcbConfig {
            arms: env.arms,
            dim: env.dim,
            alpha: params.alpha,
            lambda: params.lambda,
        })?)),
        "linear-ts" => Box::new(LinearTsPolicy(GaussianTs::new(GaussianTsConfig {
            arms: env.arms,
            dim: env.dim,
            noise_var: params.noise_var,
            prior_var: params.prior_var,
        })?)),
        "neural-linear" => Box::new(NeuralLinearPolicy(NeuralLinearBandit::new(
            MlpConfig {
                input_dim: env.dim,
                hidden: params.hidden.clone(),
                feature_dim: params.feature_dim,
                arms: env.arms,
                step_size: params.train_step,
                epochs: params.train_epochs,
                seed: derive_seed(seed, "neural-linear-init"),
            },
            params.replay_capacity,
            params.retrain_every,
        )?)),
        "ekf" => Box::new(EkfPolicy(EkfBelief::new(EkfConfig {
            arms: env.arms,
            dim: env.dim,
            process_noise: params.process_noise,
            obs_noise: params.obs_noise,
            prior_var: params.prior_var,
        })?)),
        other => bail!("unknown policy {other:?}"),
    })
}

fn bandit_sim(config: &BanditSimConfig) -> Result<String> {
    let env = config.env.to_spec()?;
    let policies = config.run.policies.clone();
    let params = config.params.clone();
    let record_every = config.run.record_every;

    let table = replicate(
        &config.scenario,
        config.run.replications,
        config.seed,
        |_rep, seed| {
            let mut rows = Vec::new();
            for name in &policies {
                let mut policy = build_policy(name, &env, &params, seed)
                    .map_err(|e| intervene_core::Error::InvalidParameter(e.to_string()))?;
                let episode = run_bandit_episode(&env, policy.as_mut(), seed)?;
                if record_every > 0 {
                    for (round, cum) in episode.cumulative_regret.iter().enumerate() {
                        if (round + 1) % record_every == 0 {
                            rows.push(MetricRow::per_round(
                                round + 1,
                                &format!("cum_regret/{name}"),
                                *cum,
                            ));
                        }
                    }
                }
                rows.push(MetricRow::summary(
                    &format!("cum_regret/{name}"),
                    episode.final_regret(),
                ));
                rows.push(MetricRow::summary(
                    &format!("mean_reward/{name}"),
                    episode.rewards.iter().sum::<f64>() / episode.rewards.len().max(1) as f64,
                ));
            }
            Ok(rows)
        },
    )?;
    Ok(table.to_csv())
}

fn build_allocator(
    name: &str,
    equity: &std::collections::BTreeMap<String, f64>,
) -> Result<(Box<dyn RmabAllocator<f64>>, DynamicsView)> {
    Ok(match name {
        "whittle" => (Box::new(WhittleAllocator::default()), DynamicsView::Known),
        "whittle-learned" => (Box::new(WhittleAllocator::default()), DynamicsView::Learned),
        "whittle-equitable" => {
            if equity.is_empty() {
                bail!("whittle-equitable requires a non-empty allocation.equity table");
            }
            (
                Box::new(EquitableWhittleAllocator {
                    inner: WhittleAllocator::default(),
                    equity: EquityConstraint {
                        min_fraction: equity.clone(),
                    },
                }),
                DynamicsView::Known,
            )
        }
        "uniform" => (Box::new(UniformAllocator), DynamicsView::Known),
        other => bail!("unknown allocator {other:?}"),
    })
}

fn rmab_sim(config: &RmabSimConfig) -> Result<String> {
    let arms = cohort_env_arms(&config.cohort, &config.params)?;
    let allocators = config.run.allocators.clone();
    let equity = config.allocation.equity.clone();
    let budget = config.allocation.budget;
    let horizon = config.run.horizon;
    let record_every = config.run.record_every;

    // Fail fast on a bad allocator name instead of inside the parallel loop.
    for name in &allocators {
        build_allocator(name, &equity)?;
    }

    let table = replicate(
        &config.scenario,
        config.run.replications,
        config.seed,
        |_rep, seed| {
            let mut rows = Vec::new();
            for name in &allocators {
                let (mut allocator, view) = build_allocator(name, &equity)
                    .map_err(|e| intervene_core::Error::InvalidParameter(e.to_string()))?;
                let spec = RmabEnvSpec {
                    arms: arms.clone(),
                    budget,
                    horizon,
                    view,
                };
                let episode = run_rmab_episode(&spec, allocator.as_mut(), seed)?;
                if record_every > 0 {
                    let mut cum = 0.0;
                    for (round, reward) in episode.round_rewards.iter().enumerate() {
                        cum += reward;
                        if (round + 1) % record_every == 0 {
                            rows.push(MetricRow::per_round(
                                round + 1,
                                &format!("cum_reward/{name}"),
                                cum,
                            ));
                        }
                    }
                }
                rows.push(MetricRow::summary(
                    &format!("total_reward/{name}"),
                    episode.total_reward,
                ));
                for (group, mean) in &episode.group_reward_mean {
                    rows.push(MetricRow::summary(
                        &format!("group_mean_reward/{name}/{group}"),
                        *mean,
                    ));
                }
            }
            Ok(rows)
        },
    )?;
    Ok(table.to_csv())
}

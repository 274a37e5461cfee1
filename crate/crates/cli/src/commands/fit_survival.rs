//! `fit-survival`: Kaplan-Meier curve, discrete-hazard fit, and risk ranking
//! from a survival CSV.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};

use intervene_core::survival::{fit_kaplan_meier, risk_rank, DiscreteHazardConfig, HazardModel};

use crate::checkpoint::save_checkpoint;
use crate::config::{ScenarioConfig, SurvivalFitConfig};
use crate::data::{read_survival_csv, write_output};

pub const MODEL_MODULE: &str = "hazard-model";

pub fn run(config: &ScenarioConfig, out: &Path) -> Result<()> {
    let ScenarioConfig::SurvivalFit(config) = config else {
        bail!("fit-survival expects a survival-fit config, got {:?}", config.kind());
    };
    super::echo_resolved_config(&ScenarioConfig::SurvivalFit(config.clone()), out)?;
    fit(config, out)
}

fn fit(config: &SurvivalFitConfig, out: &Path) -> Result<()> {
    let data_path = config
        .input
        .resolved_data
        .as_ref()
        .expect("resolved at load time");
    let (records, _features) = read_survival_csv(data_path, config.input.censored_value)?;

    let curve = fit_kaplan_meier(&records)?;
    let mut km = String::from("time,at_risk,events,censored,survival\n");
    for p in &curve.points {
        writeln!(
            km,
            "{},{},{},{},{}",
            p.time, p.at_risk, p.events, p.censored, p.survival
        )?;
    }
    write_output(out, "km.csv", &km)?;

    let hazard_config = DiscreteHazardConfig {
        period: config.model.period,
        max_follow_up: config.model.max_follow_up,
        l2: config.model.l2,
        max_iterations: config.model.max_iterations,
        tolerance: config.model.tolerance,
    };
    let model = HazardModel::fit(&records, &hazard_config)?;
    std::fs::create_dir_all(out)?;
    save_checkpoint(&model, MODEL_MODULE, &out.join("hazard-model.ckpt"))?;

    let horizon = config.rank.horizon.unwrap_or(model.periods);
    let cohort: Vec<(String, Vec<f64>)> = records
        .iter()
        .map(|r| (r.subject_id.clone(), r.x.clone()))
        .collect();
    let ranked = risk_rank(&model, &cohort, horizon)?;
    let mut ranking = String::from("rank,subject_id,survival\n");
    for (i, (id, survival)) in ranked.iter().enumerate() {
        writeln!(ranking, "{},{},{}", i + 1, id, survival)?;
    }
    write_output(out, "ranking.csv", &ranking)?;
    Ok(())
}

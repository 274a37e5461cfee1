//! `decide`: stream decision requests through a checkpointable policy.
//!
//! Requests come either from a JSONL file of explicit contexts (optionally
//! with rewards, which update the policy after selection) or from an event
//! log plus a declarative trait schema, in which case every subject in the
//! store gets one decision from its built context.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};

use intervene_core::pipeline::{build_context, read_event_log, TraitStore};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::{DecideConfig, ScenarioConfig};
use crate::data::{read_requests, read_schema_file, write_output, DecideRequest};
use crate::runtime::{PolicyRuntime, CHECKPOINT_MODULE};

pub fn run(config: &ScenarioConfig, out: &Path) -> Result<()> {
    let ScenarioConfig::Decide(config) = config else {
        bail!("decide expects a decide config, got {:?}", config.kind());
    };
    super::echo_resolved_config(&ScenarioConfig::Decide(config.clone()), out)?;
    decide(config, out)
}

fn decide(config: &DecideConfig, out: &Path) -> Result<()> {
    let mut runtime = match &config.checkpoint.resolved_load {
        Some(path) => {
            let runtime: PolicyRuntime = load_checkpoint(path, CHECKPOINT_MODULE)?;
            if runtime.algorithm() != config.policy.algorithm {
                bail!(
                    "checkpoint holds a {:?} policy but the config asks for {:?}",
                    runtime.algorithm(),
                    config.policy.algorithm
                );
            }
            runtime
        }
        None => PolicyRuntime::new(&config.policy, config.seed)?,
    };

    let requests = gather_requests(config)?;
    let mut decisions = String::from("id,action,propensity\n");
    for request in &requests {
        if request.context.len() != config.policy.dim {
            bail!(
                "request {:?} has dimension {}, policy expects {}",
                request.id,
                request.context.len(),
                config.policy.dim
            );
        }
        let decision = runtime.decide(&request.context)?;
        let propensity = decision
            .propensity
            .map(|p| p.to_string())
            .unwrap_or_default();
        writeln!(decisions, "{},{},{}", request.id, decision.action, propensity)?;
        if let Some(reward) = request.reward {
            runtime.learn(&request.context, decision.action, reward)?;
        }
    }
    write_output(out, "decisions.csv", &decisions)?;

    if let Some(save) = &config.checkpoint.save {
        std::fs::create_dir_all(out)?;
        save_checkpoint(&runtime, CHECKPOINT_MODULE, &out.join(save))?;
    }
    Ok(())
}

fn gather_requests(config: &DecideConfig) -> Result<Vec<DecideRequest>> {
    if let Some(path) = &config.input.resolved_requests {
        return read_requests(path);
    }
    let events_path = config
        .input
        .resolved_events
        .as_ref()
        .expect("validated at load time");
    let schema_path = config
        .input
        .resolved_schema
        .as_ref()
        .expect("validated at load time");
    let at_raw = config.input.at.as_ref().expect("validated at load time");
    let at: DateTime<Utc> = DateTime::parse_from_rfc3339(at_raw)
        .with_context(|| format!("input.at {at_raw:?} is not RFC 3339"))?
        .with_timezone(&Utc);

    let (defs, schema) = read_schema_file(schema_path)?;
    if schema.dim() != config.policy.dim {
        bail!(
            "schema expands to dimension {}, policy expects {}",
            schema.dim(),
            config.policy.dim
        );
    }
    let mut store = TraitStore::new();
    for def in defs {
        store.register_trait(def)?;
    }
    let file = std::fs::File::open(events_path)
        .with_context(|| format!("cannot open {}", events_path.display()))?;
    for event in read_event_log(std::io::BufReader::new(file))? {
        store.update(&event);
    }
    let subjects: Vec<String> = store.subject_ids().map(str::to_string).collect();
    subjects
        .iter()
        .map(|id| {
            let context = build_context::<f64>(&store, id, &schema, at)?;
            Ok(DecideRequest {
                id: id.clone(),
                context,
                reward: None,
            })
        })
        .collect()
}

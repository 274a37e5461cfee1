//! File formats: survival CSV, cohort files, trait schema files, and decision
//! request logs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use intervene_core::pipeline::{Aggregator, ContextSchema, TraitColumn, TraitDef};
use intervene_core::rmab::{ArmDynamics, DynamicsBelief, RmabArm, TwoStateMdp};
use intervene_core::SurvivalRecord64;

use crate::config::{CohortSource, CohortTemplate, RmabParams};

/// Reads a survival dataset CSV: header `subject_id,t,c,<features...>`.
/// `censored_value` selects which raw `c` value means censored.
pub fn read_survival_csv(
    path: &Path,
    censored_value: u8,
) -> Result<(Vec<SurvivalRecord64>, Vec<String>)> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let mut columns = headers.iter();
    if columns.next() != Some("subject_id") || columns.next() != Some("t") || columns.next() != Some("c")
    {
        bail!("survival CSV must start with columns subject_id,t,c");
    }
    let feature_names: Vec<String> = columns.map(str::to_string).collect();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2; // 1-based, after the header
        if row.len() != 3 + feature_names.len() {
            bail!("line {line}: expected {} fields, got {}", 3 + feature_names.len(), row.len());
        }
        let time: f64 = row[1]
            .parse()
            .with_context(|| format!("line {line}: bad time {:?}", &row[1]))?;
        let c: u8 = row[2]
            .parse()
            .with_context(|| format!("line {line}: bad censoring flag {:?}", &row[2]))?;
        if c > 1 {
            bail!("line {line}: censoring flag must be 0 or 1");
        }
        let mut x = Vec::with_capacity(feature_names.len());
        for (j, feature) in feature_names.iter().enumerate() {
            let v: f64 = row[3 + j]
                .parse()
                .with_context(|| format!("line {line}: bad value for {feature:?}"))?;
            x.push(v);
        }
        records.push(SurvivalRecord64 {
            subject_id: row[0].to_string(),
            x,
            time,
            censored: c == censored_value,
        });
    }
    Ok((records, feature_names))
}

/// One arm in a cohort file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortArmSpec {
    pub id: String,
    pub group: String,
    pub state: u8,
    /// `P(1 | s)` under passive, s = 0, 1. Omit with `dynamics = "learn"`.
    #[serde(default)]
    pub passive: Option<[f64; 2]>,
    #[serde(default)]
    pub active: Option<[f64; 2]>,
    /// `"learn"` starts from uniform Beta posteriors instead of known rows.
    #[serde(default)]
    pub dynamics: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CohortFile {
    arms: Vec<CohortArmSpec>,
}

/// Loads a cohort specification file into allocator-facing arms.
pub fn read_cohort_file(path: &Path, params: &RmabParams) -> Result<Vec<RmabArm<f64>>> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let file: CohortFile = toml::from_str(&raw)?;
    if file.arms.is_empty() {
        bail!("cohort file lists no arms");
    }
    let mut arms = Vec::with_capacity(file.arms.len());
    for spec in &file.arms {
        if spec.state > 1 {
            bail!("arm {:?}: state must be 0 or 1", spec.id);
        }
        let dynamics = match (&spec.dynamics, spec.passive, spec.active) {
            (Some(tag), None, None) if tag == "learn" => ArmDynamics::Learned {
                belief: DynamicsBelief::new(),
                reward: params.reward,
                discount: params.discount,
            },
            (None, Some(passive), Some(active)) => ArmDynamics::Known(
                TwoStateMdp::from_good_state_probs(passive, active, params.discount)?
                    .with_reward(params.reward),
            ),
            _ => bail!(
                "arm {:?}: give either passive+active rows or dynamics = \"learn\"",
                spec.id
            ),
        };
        arms.push(RmabArm {
            id: spec.id.clone(),
            state: spec.state,
            dynamics,
            group: spec.group.clone(),
        });
    }
    Ok(arms)
}

/// Materializes the cohort's ground truth for simulation: known transition
/// rows only.
pub fn cohort_env_arms(
    source: &CohortSource,
    params: &RmabParams,
) -> Result<Vec<intervene_core::sim::RmabEnvArm<f64>>> {
    if let Some(path) = &source.resolved_file {
        let arms = read_cohort_file(path, params)?;
        let mut env = Vec::with_capacity(arms.len());
        for arm in arms {
            let ArmDynamics::Known(mdp) = arm.dynamics else {
                bail!(
                    "arm {:?}: simulation cohorts need known transition rows (the learned view \
                     is selected via the whittle-learned allocator)",
                    arm.id
                );
            };
            env.push(intervene_core::sim::RmabEnvArm {
                id: arm.id,
                group: arm.group,
                initial_state: arm.state,
                mdp,
            });
        }
        return Ok(env);
    }
    let templates: &[CohortTemplate] = source.templates.as_deref().unwrap_or(&[]);
    let mut env = Vec::new();
    let mut arm_index = 0usize;
    for template in templates {
        let mdp = TwoStateMdp::from_good_state_probs(
            template.passive,
            template.active,
            params.discount,
        )?
        .with_reward(params.reward);
        for _ in 0..template.count {
            env.push(intervene_core::sim::RmabEnvArm {
                id: format!("arm{arm_index:04}"),
                group: template.group.clone(),
                initial_state: template
                    .initial_state
                    .unwrap_or((arm_index % 2) as u8),
                mdp,
            });
            arm_index += 1;
        }
    }
    Ok(env)
}

/// Declarative trait/schema file backing event-driven decisions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaFile {
    #[serde(default)]
    pub traits: Vec<SchemaTrait>,
    pub columns: Vec<SchemaColumn>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaTrait {
    pub name: String,
    pub kind: String,
    /// count | sum | mean | last
    pub aggregator: String,
    pub window_days: u32,
    #[serde(default)]
    pub field: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaColumn {
    #[serde(rename = "trait")]
    pub trait_name: String,
    #[serde(default = "default_true")]
    pub missing_indicator: bool,
    #[serde(default)]
    pub standardize: Option<StandardizeSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardizeSpec {
    pub mean: f64,
    pub scale: f64,
}

fn default_true() -> bool {
    true
}

/// Parses a schema file into trait definitions plus the context schema.
pub fn read_schema_file(path: &Path) -> Result<(Vec<TraitDef>, ContextSchema)> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let file: SchemaFile = toml::from_str(&raw)?;
    let mut defs = Vec::with_capacity(file.traits.len());
    for t in &file.traits {
        let field = || -> Result<String> {
            t.field
                .clone()
                .ok_or_else(|| anyhow::anyhow!("trait {:?} needs a payload field", t.name))
        };
        let aggregator = match t.aggregator.as_str() {
            "count" => Aggregator::Count,
            "sum" => Aggregator::Sum { field: field()? },
            "mean" => Aggregator::Mean { field: field()? },
            "last" => Aggregator::Last { field: field()? },
            other => bail!("unknown aggregator {other:?} for trait {:?}", t.name),
        };
        defs.push(TraitDef {
            name: t.name.clone(),
            kind: t.kind.clone(),
            aggregator,
            window_days: t.window_days,
        });
    }
    let columns = file
        .columns
        .iter()
        .map(|c| TraitColumn {
            trait_name: c.trait_name.clone(),
            missing_indicator: c.missing_indicator,
            standardize: c.standardize.as_ref().map(|s| (s.mean, s.scale)),
        })
        .collect();
    let schema = ContextSchema::new(columns)?;
    Ok((defs, schema))
}

/// One decision request line: `{"id": ..., "context": [...], "reward": ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecideRequest {
    pub id: String,
    pub context: Vec<f64>,
    #[serde(default)]
    pub reward: Option<f64>,
}

pub fn read_requests(path: &Path) -> Result<Vec<DecideRequest>> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut requests = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let request: DecideRequest = serde_json::from_str(line)
            .with_context(|| format!("line {}: bad request", i + 1))?;
        requests.push(request);
    }
    Ok(requests)
}

/// Writes text to `dir/name`, creating the directory if needed.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

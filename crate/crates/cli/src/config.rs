//! Declarative scenario configuration.
//!
//! Scenarios are TOML files with a `kind` discriminator, a mandatory `seed`
//! (no wall-clock entropy anywhere), and kind-specific blocks. Unknown keys
//! and missing required fields are hard errors naming the key; optional
//! fields are filled with documented defaults and echoed back into the
//! resolved config written next to the outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

/// One parsed scenario.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ScenarioConfig {
    BanditSim(BanditSimConfig),
    RmabSim(RmabSimConfig),
    SurvivalFit(SurvivalFitConfig),
    Experiment(ExperimentConfig),
    Decide(DecideConfig),
    Allocate(AllocateConfig),
}

impl ScenarioConfig {
    pub fn kind(&self) -> &str {
        match self {
            ScenarioConfig::BanditSim(c) => &c.kind,
            ScenarioConfig::RmabSim(c) => &c.kind,
            ScenarioConfig::SurvivalFit(c) => &c.kind,
            ScenarioConfig::Experiment(c) => &c.kind,
            ScenarioConfig::Decide(c) => &c.kind,
            ScenarioConfig::Allocate(c) => &c.kind,
        }
    }

    pub fn scenario_name(&self) -> &str {
        match self {
            ScenarioConfig::BanditSim(c) => &c.scenario,
            ScenarioConfig::RmabSim(c) => &c.scenario,
            ScenarioConfig::SurvivalFit(c) => &c.scenario,
            ScenarioConfig::Experiment(c) => &c.scenario,
            ScenarioConfig::Decide(c) => &c.scenario,
            ScenarioConfig::Allocate(c) => &c.scenario,
        }
    }

    /// Serializes the resolved config (defaults filled) back to TOML.
    pub fn to_resolved_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}

#[derive(Debug, Deserialize)]
struct KindProbe {
    kind: String,
}

/// Loads, validates, and resolves a scenario config. Relative paths inside
/// the config are resolved against the config file's directory and must exist
/// at load time.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let probe: KindProbe = toml::from_str(&raw).context("config must declare a kind")?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let scenario = match probe.kind.as_str() {
        "bandit-sim" => {
            let mut config: BanditSimConfig = toml::from_str(&raw)?;
            config.resolve_and_validate()?;
            ScenarioConfig::BanditSim(config)
        }
        "rmab-sim" => {
            let mut config: RmabSimConfig = toml::from_str(&raw)?;
            config.resolve_and_validate(base)?;
            ScenarioConfig::RmabSim(config)
        }
        "survival-fit" => {
            let mut config: SurvivalFitConfig = toml::from_str(&raw)?;
            config.resolve_and_validate(base)?;
            ScenarioConfig::SurvivalFit(config)
        }
        "experiment" => {
            let mut config: ExperimentConfig = toml::from_str(&raw)?;
            config.resolve_and_validate()?;
            ScenarioConfig::Experiment(config)
        }
        "decide" => {
            let mut config: DecideConfig = toml::from_str(&raw)?;
            config.resolve_and_validate(base)?;
            ScenarioConfig::Decide(config)
        }
        "allocate" => {
            let mut config: AllocateConfig = toml::from_str(&raw)?;
            config.resolve_and_validate(base)?;
            ScenarioConfig::Allocate(config)
        }
        other => bail!(
            "unknown scenario kind {other:?} (expected bandit-sim, rmab-sim, survival-fit, \
             experiment, decide, or allocate)"
        ),
    };
    Ok(scenario)
}

fn resolve_existing(base: &Path, relative: &str, what: &str) -> Result<PathBuf> {
    let candidate = base.join(relative);
    if !candidate.exists() {
        bail!("{what} {} does not exist", candidate.display());
    }
    Ok(candidate)
}

// ---------------------------------------------------------------------------
// bandit-sim

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditSimConfig {
    pub kind: String,
    #[serde(default)]
    pub scenario: String,
    pub seed: u64,
    pub env: BanditEnvConfig,
    pub run: BanditRunConfig,
    #[serde(default)]
    pub params: PolicyParams,
}

impl BanditSimConfig {
    fn resolve_and_validate(&mut self) -> Result<()> {
        if self.scenario.is_empty() {
            self.scenario = self.kind.clone();
        }
        if self.run.replications == 0 {
            bail!("run.replications must be >= 1");
        }
        if self.run.policies.is_empty() {
            bail!("run.policies must name at least one policy");
        }
        self.env.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditEnvConfig {
    pub arms: usize,
    pub dim: usize,
    pub theta: Vec<Vec<f64>>,
    pub noise_sd: f64,
    #[serde(default = "default_context")]
    pub context: String,
    #[serde(default)]
    pub context_constant: Option<Vec<f64>>,
    pub horizon: usize,
}

fn default_context() -> String {
    "standard-normal".to_string()
}

impl BanditEnvConfig {
    fn validate(&self) -> Result<()> {
        match self.context.as_str() {
            "standard-normal" | "uniform-cube" => {}
            "constant" => {
                if self.context_constant.is_none() {
                    bail!("context = \"constant\" requires env.context_constant");
                }
            }
            other => bail!("unknown context distribution {other:?}"),
        }
        Ok(())
    }

    pub fn to_spec(&self) -> Result<intervene_core::sim::LinearEnvSpec<f64>> {
        let context = match self.context.as_str() {
            "standard-normal" => intervene_core::sim::ContextDistribution::StandardNormal,
            "uniform-cube" => intervene_core::sim::ContextDistribution::UniformCube,
            "constant" => intervene_core::sim::ContextDistribution::Constant(
                self.context_constant.clone().unwrap_or_default(),
            ),
            other => bail!("unknown context distribution {other:?}"),
        };
        let spec = intervene_core::sim::LinearEnvSpec {
            arms: self.arms,
            dim: self.dim,
            theta: self.theta.clone(),
            noise_sd: self.noise_sd,
            context,
            horizon: self.horizon,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanditRunConfig {
    pub replications: usize,
    pub policies: Vec<String>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_record_every() -> usize {
    0
}

/// Policy hyperparameters with the documented defaults; every field is
/// echoed in the resolved config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyParams {
    /// LinUCB ridge.
    pub lambda: f64,
    /// LinUCB exploration strength.
    pub alpha: f64,
    /// Known observation-noise variance for Thompson sampling.
    pub noise_var: f64,
    /// Prior coefficient variance.
    pub prior_var: f64,
    /// Monte Carlo samples behind logged propensities.
    pub propensity_samples: usize,
    /// Neural-linear hidden layer widths.
    pub hidden: Vec<usize>,
    /// Neural-linear feature dimension.
    pub feature_dim: usize,
    pub replay_capacity: usize,
    pub retrain_every: u64,
    pub train_epochs: usize,
    pub train_step: f64,
    /// Kalman process-noise scale (0 keeps coefficients stationary).
    pub process_noise: f64,
    /// Kalman observation-noise variance.
    pub obs_noise: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            alpha: 1.0,
            noise_var: 1.0,
            prior_var: 1.0,
            propensity_samples: 1000,
            hidden: vec![32, 32],
            feature_dim: 32,
            replay_capacity: 1000,
            retrain_every: 100,
            train_epochs: 50,
            train_step: 0.05,
            process_noise: 0.0,
            obs_noise: 1.0,
        }
    }
}

// ---------------------------------------------------------------------------
// rmab-sim and allocate

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmabSimConfig {
    pub kind: String,
    #[serde(default)]
    pub scenario: String,
    pub seed: u64,
    pub cohort: CohortSource,
    pub allocation: AllocationConfig,
    pub run: RmabRunConfig,
    #[serde(default)]
    pub params: RmabParams,
}

impl RmabSimConfig {
    fn resolve_and_validate(&mut self, base: &Path) -> Result<()> {
        if self.scenario.is_empty() {
            self.scenario = self.kind.clone();
        }
        if self.run.replications == 0 {
            bail!("run.replications must be >= 1");
        }
        if self.run.allocators.is_empty() {
            bail!("run.allocators must name at least one allocator");
        }
        self.cohort.resolve(base)?;
        Ok(())
    }
}

/// Where the cohort comes from: an external file or inline templates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortSource {
    #[serde(default)]
    pub file: Option<String>,
    #[serde(default)]
    pub templates: Option<Vec<CohortTemplate>>,
    #[serde(skip)]
    pub resolved_file: Option<PathBuf>,
}

impl CohortSource {
    fn resolve(&mut self, base: &Path) -> Result<()> {
        match (&self.file, &self.templates) {
            (Some(file), None) => {
                self.resolved_file = Some(resolve_existing(base, file, "cohort file")?);
                Ok(())
            }
            (None, Some(templates)) if !templates.is_empty() => Ok(()),
            _ => bail!("cohort needs exactly one of `file` or non-empty `templates`"),
        }
    }
}

/// A block of identical arms.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortTemplate {
    pub count: usize,
    pub group: String,
    /// Initial state; arms alternate 0/1 when omitted.
    #[serde(default)]
    pub initial_state: Option<u8>,
    /// `P(1 | s)` under the passive action, for s = 0, 1.
    pub passive: [f64; 2],
    /// `P(1 | s)` under the active action.
    pub active: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationConfig {
    pub budget: usize,
    /// Per-group minimum budget fractions for the equitable allocator.
    #[serde(default)]
    pub equity: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmabRunConfig {
    pub replications: usize,
    pub horizon: usize,
    /// Any of: whittle, whittle-learned, whittle-equitable, uniform.
    pub allocators: Vec<String>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RmabParams {
    pub discount: f64,
    /// State rewards `[r(0), r(1)]`.
    pub reward: [f64; 2],
}

impl Default for RmabParams {
    fn default() -> Self {
        Self {
            discount: 0.9,
            reward: [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocateConfig {
    pub kind: String,
    #[serde(default)]
    pub scenario: String,
    pub seed: u64,
    pub cohort: CohortSource,
    pub allocation: AllocationConfig,
    #[serde(default)]
    pub params: RmabParams,
}

impl AllocateConfig {
    fn resolve_and_validate(&mut self, base: &Path) -> Result<()> {
        if self.scenario.is_empty() {
            self.scenario = self.kind.clone();
        }
        self.cohort.resolve(base)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// survival-fit

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalFitConfig {
    pub kind: String,
    #[serde(default)]
    pub scenario: String,
    pub seed: u64,
    pub input: SurvivalInputConfig,
    #[serde(default)]
    pub model: SurvivalModelConfig,
    #[serde(default)]
    pub rank: RankConfig,
}

impl SurvivalFitConfig {
    fn resolve_and_validate(&mut self, base: &Path) -> Result<()> {
        if self.scenario.is_empty() {
            self.scenario = self.kind.clone();
        }
        self.input.resolved_data = Some(resolve_existing(base, &self.input.data, "survival data")?);
        if !matches!(self.input.censored_value, 0 | 1) {
            bail!("input.censored_value must be 0 or 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalInputConfig {
    /// CSV with header `subject_id,t,c,<feature columns...>`.
    pub data: String,
    /// Which raw `c` value means censored (the other means event observed).
    #[serde(default = "default_censored_value")]
    pub censored_value: u8,
    #[serde(skip)]
    pub resolved_data: Option<PathBuf>,
}

fn default_censored_value() -> u8 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurvivalModelConfig {
    pub period: f64,
    pub l2: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub max_follow_up: Option<f64>,
}

impl Default for SurvivalModelConfig {
    fn default() -> Self {
        Self {
            period: 1.0,
            l2: 1e-2,
            max_iterations: 200,
            tolerance: 1e-8,
            max_follow_up: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankConfig {
    /// Ranking horizon in periods; defaults to the fitted model's horizon.
    pub horizon: Option<usize>,
}

// ---------------------------------------------------------------------------
// experiment

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    #[serde(default)]
    pub scenario: String,
    pub seed: u64,
    pub design: DesignConfig,
    pub population: PopulationConfig,
    pub outcome: OutcomeConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl ExperimentConfig {
    fn resolve_and_validate(&mut self) -> Result<()> {
        if self.scenario.is_empty() {
            self.scenario = self.kind.clone();
        }
        if self.design.arms.len() != 2 {
            bail!("experiment analysis is binary: design.arms must list exactly 2 arms");
        }
        match self.design.mechanism.as_str() {
            "fixed-random" => {
                if self.design.probabilities.is_none() {
                    bail!("fixed-random designs require design.probabilities");
                }
            }
            "micro-randomized" => {
                if self.design.treat_prob.is_none() {
                    bail!("micro-randomized designs require design.treat_prob");
                }
            }
            "adaptive" => {}
            other => bail!("unknown mechanism {other:?}"),
        }
        if self.design.unit == "cluster" && self.population.clusters == 0 {
            bail!("cluster designs require population.clusters >= 1");
        }
        if !matches!(self.design.unit.as_str(), "individual" | "cluster") {
            bail!("design.unit must be individual or cluster");
        }
        if self.population.units == 0 || self.population.decision_points == 0 {
            bail!("population.units and population.decision_points must be >= 1");
        }
        for estimator in &self.analysis.estimators {
            if !matches!(estimator.as_str(), "difference-in-means" | "ipw") {
                bail!("unknown estimator {estimator:?}");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    /// individual | cluster
    pub unit: String,
    /// fixed-random | adaptive | micro-randomized
    pub mechanism: String,
    pub arms: Vec<String>,
    #[serde(default)]
    pub probabilities: Option<Vec<f64>>,
    #[serde(default)]
    pub treat_prob: Option<f64>,
    #[serde(default = "default_propensity_samples")]
    pub propensity_samples: usize,
    /// Context dimension for the adaptive mechanism's bandit.
    #[serde(default = "default_context_dim")]
    pub context_dim: usize,
}

fn default_propensity_samples() -> usize {
    1000
}

fn default_context_dim() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub units: usize,
    #[serde(default)]
    pub clusters: usize,
    #[serde(default = "default_decision_points")]
    pub decision_points: usize,
}

fn default_decision_points() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeConfig {
    pub baseline: f64,
    /// True mean shift of the treatment arm.
    pub effect: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub estimators: Vec<String>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            estimators: vec!["difference-in-means".into(), "ipw".into()],
        }
    }
}

// ---------------------------------------------------------------------------
// decide

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecideConfig {
    pub kind: String,
    #[serde(default)]
    pub scenario: String,
    pub seed: u64,
    pub policy: DecidePolicyConfig,
    pub input: DecideInputConfig,
    #[serde(default)]
    pub checkpoint: CheckpointConfig,
}

impl DecideConfig {
    fn resolve_and_validate(&mut self, base: &Path) -> Result<()> {
        if self.scenario.is_empty() {
            self.scenario = self.kind.clone();
        }
        if !matches!(
            self.policy.algorithm.as_str(),
            "linucb" | "linear-ts" | "neural-linear" | "ekf"
        ) {
            bail!(
                "unknown policy algorithm {:?} (expected linucb, linear-ts, neural-linear, or ekf)",
                self.policy.algorithm
            );
        }
        match (&self.input.requests, &self.input.events) {
            (Some(requests), None) => {
                self.input.resolved_requests =
                    Some(resolve_existing(base, requests, "requests file")?);
            }
            (None, Some(events)) => {
                let schema = self
                    .input
                    .schema
                    .as_ref()
                    .ok_or_else(|| anyhow!("event input requires input.schema"))?;
                if self.input.at.is_none() {
                    bail!("event input requires input.at (evaluation instant, RFC 3339)");
                }
                self.input.resolved_events = Some(resolve_existing(base, events, "event log")?);
                self.input.resolved_schema = Some(resolve_existing(base, schema, "schema file")?);
            }
            _ => bail!("input needs exactly one of `requests` or `events`"),
        }
        if let Some(load) = &self.checkpoint.load {
            self.checkpoint.resolved_load = Some(resolve_existing(base, load, "checkpoint")?);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecidePolicyConfig {
    /// linucb | linear-ts | neural-linear | ekf
    pub algorithm: String,
    pub arms: usize,
    pub dim: usize,
    #[serde(default)]
    pub params: PolicyParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecideInputConfig {
    /// JSONL of `{"id": ..., "context": [...], "reward": optional}`.
    #[serde(default)]
    pub requests: Option<String>,
    /// JSONL event log (see the pipeline's external format).
    #[serde(default)]
    pub events: Option<String>,
    /// Declarative trait/schema file (TOML) for event input.
    #[serde(default)]
    pub schema: Option<String>,
    /// Evaluation instant for trait windows, RFC 3339.
    #[serde(default)]
    pub at: Option<String>,
    #[serde(skip)]
    pub resolved_requests: Option<PathBuf>,
    #[serde(skip)]
    pub resolved_events: Option<PathBuf>,
    #[serde(skip)]
    pub resolved_schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckpointConfig {
    pub load: Option<String>,
    /// File name (under --out) for the final policy state.
    pub save: Option<String>,
    #[serde(skip)]
    pub resolved_load: Option<PathBuf>,
}

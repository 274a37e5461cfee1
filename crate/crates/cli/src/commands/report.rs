//! `report`: aggregate a prior run's metrics file into a summary table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::config::ScenarioConfig;
use crate::data::write_output;

pub fn run(config: &ScenarioConfig, out: &Path) -> Result<()> {
    let metrics_path = out.join("metrics.csv");
    if !metrics_path.exists() {
        bail!(
            "no metrics.csv under {} (run `intervene simulate` with this config first)",
            out.display()
        );
    }
    let raw = std::fs::read_to_string(&metrics_path)
        .with_context(|| format!("cannot read {}", metrics_path.display()))?;

    // Collect per-replication summary rows (round == "final", replication
    // numeric) grouped by metric.
    let mut grouped: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, line) in raw.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            bail!("metrics.csv line {}: expected 5 fields", i + 1);
        }
        let (replication, round, metric, value) = (fields[1], fields[2], fields[3], fields[4]);
        if round != "final" || replication == "aggregate" {
            continue;
        }
        let value: f64 = value
            .parse()
            .with_context(|| format!("metrics.csv line {}: bad value {value:?}", i + 1))?;
        grouped.entry(metric.to_string()).or_default().push(value);
    }

    let mut summary = String::from("metric,n,mean,sd,min,max\n");
    for (metric, values) in &grouped {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n.max(1) as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        writeln!(summary, "{metric},{n},{mean},{sd},{min},{max}")?;
    }
    write_output(out, "summary.csv", &summary)?;
    // The scenario config is part of the report contract: echo it alongside.
    super::echo_resolved_config(config, out)?;
    Ok(())
}

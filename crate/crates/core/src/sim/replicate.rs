//! Seeded replication driver and the metrics table it fills.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One metrics value. `replication = None` marks aggregate rows;
/// `round = None` marks end-of-episode summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub replication: Option<usize>,
    pub round: Option<usize>,
    pub metric: String,
    pub value: f64,
}

impl MetricRow {
    pub fn per_round(round: usize, metric: &str, value: f64) -> Self {
        Self {
            replication: None,
            round: Some(round),
            metric: metric.to_string(),
            value,
        }
    }

    pub fn summary(metric: &str, value: f64) -> Self {
        Self {
            replication: None,
            round: None,
            metric: metric.to_string(),
            value,
        }
    }
}

/// Metrics for one scenario, with deterministic row order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub scenario: String,
    pub rows: Vec<MetricRow>,
}

impl MetricsTable {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            rows: Vec::new(),
        }
    }

    /// Renders the fixed CSV schema `scenario,replication,round,metric,value`.
    /// Row order is storage order and floats use shortest-roundtrip
    /// formatting, so re-rendering the same table is byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,replication,round,metric,value\n");
        for row in &self.rows {
            let replication = row
                .replication
                .map(|r| r.to_string())
                .unwrap_or_else(|| "aggregate".to_string());
            let round = row
                .round
                .map(|r| r.to_string())
                .unwrap_or_else(|| "final".to_string());
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.scenario, replication, round, row.metric, row.value
            ));
        }
        out
    }

    /// Summary rows (`round = None`) of per-replication data, grouped by
    /// metric name in first-appearance order.
    pub fn summaries_by_metric(&self) -> Vec<(String, Vec<f64>)> {
        let mut order: Vec<String> = Vec::new();
        let mut grouped: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
        for row in &self.rows {
            if row.round.is_none() && row.replication.is_some() {
                if !grouped.contains_key(&row.metric) {
                    order.push(row.metric.clone());
                }
                grouped.entry(row.metric.clone()).or_default().push(row.value);
            }
        }
        order
            .into_iter()
            .map(|m| {
                let values = grouped.remove(&m).unwrap_or_default();
                (m, values)
            })
            .collect()
    }
}

pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Runs `n_reps` independent replications with seeds `base_seed + i` and
/// collects per-replication rows plus `:mean` / `:sd` aggregates of every
/// summary metric. Replications run in parallel; output order depends only on
/// the replication index.
pub fn replicate<F>(
    scenario: &str,
    n_reps: usize,
    base_seed: u64,
    runner: F,
) -> Result<MetricsTable>
where
    F: Fn(usize, u64) -> Result<Vec<MetricRow>> + Sync,
{
    let per_rep: Vec<Vec<MetricRow>> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rows = runner(rep, base_seed + rep as u64)?;
            for row in &mut rows {
                row.replication = Some(rep);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let mut table = MetricsTable::new(scenario);
    for rows in per_rep {
        table.rows.extend(rows);
    }
    let aggregates: Vec<MetricRow> = table
        .summaries_by_metric()
        .into_iter()
        .flat_map(|(metric, values)| {
            let (mean, sd) = mean_sd(&values);
            [
                MetricRow {
                    replication: None,
                    round: None,
                    metric: format!("{metric}:mean"),
                    value: mean,
                },
                MetricRow {
                    replication: None,
                    round: None,
                    metric: format!("{metric}:sd"),
                    value: sd,
                },
            ]
        })
        .collect();
    table.rows.extend(aggregates);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_runner(rep: usize, seed: u64) -> Result<Vec<MetricRow>> {
        Ok(vec![
            MetricRow::per_round(0, "reward", seed as f64),
            MetricRow::summary("total", seed as f64 + rep as f64),
        ])
    }

    #[test]
    fn single_replication_aggregate_equals_the_run() {
        let table = replicate("toy", 1, 5, toy_runner).unwrap();
        let mean = table
            .rows
            .iter()
            .find(|r| r.metric == "total:mean")
            .unwrap();
        assert_eq!(mean.value, 5.0);
        let sd = table.rows.iter().find(|r| r.metric == "total:sd").unwrap();
        assert_eq!(sd.value, 0.0);
    }

    #[test]
    fn same_base_seed_gives_identical_tables() {
        let a = replicate("toy", 8, 100, toy_runner).unwrap();
        let b = replicate("toy", 8, 100, toy_runner).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn csv_is_deterministic_and_ordered() {
        let table = replicate("toy", 2, 0, toy_runner).unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "scenario,replication,round,metric,value");
        assert_eq!(lines[1], "toy,0,0,reward,0");
        assert_eq!(lines[2], "toy,0,final,total,0");
        assert_eq!(lines[3], "toy,1,0,reward,1");
        assert_eq!(lines[4], "toy,1,final,total,2");
        assert!(lines[5].starts_with("toy,aggregate,final,total:mean,"));
    }
}

//! `allocate`: one Whittle-index allocation round over a cohort file.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};

use intervene_core::rmab::{EquityConstraint, WhittleAllocator};
use intervene_core::rng::derive_rng;

use crate::config::{AllocateConfig, ScenarioConfig};
use crate::data::{read_cohort_file, write_output};

pub fn run(config: &ScenarioConfig, out: &Path) -> Result<()> {
    let ScenarioConfig::Allocate(config) = config else {
        bail!("allocate expects an allocate config, got {:?}", config.kind());
    };
    super::echo_resolved_config(&ScenarioConfig::Allocate(config.clone()), out)?;
    allocate(config, out)
}

fn allocate(config: &AllocateConfig, out: &Path) -> Result<()> {
    let cohort_path = config
        .cohort
        .resolved_file
        .as_ref()
        .expect("resolved at load time");
    let arms = read_cohort_file(cohort_path, &config.params)?;
    let mut rng = derive_rng(config.seed, "allocate");
    let mut allocator = WhittleAllocator::default();
    let allocation = if config.allocation.equity.is_empty() {
        allocator.allocate(&arms, config.allocation.budget, 0, &mut rng)?
    } else {
        allocator.equitable_allocate(
            &arms,
            config.allocation.budget,
            0,
            &EquityConstraint {
                min_fraction: config.allocation.equity.clone(),
            },
            &mut rng,
        )?
    };

    let mut csv = String::from("round,arm_id,group,state,index,acted,non_indexable\n");
    for (arm, (id, index)) in arms.iter().zip(&allocation.indices) {
        debug_assert_eq!(&arm.id, id);
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            allocation.round,
            id,
            arm.group,
            arm.state,
            index,
            u8::from(allocation.is_acted(id)),
            u8::from(allocation.non_indexable),
        )?;
    }
    write_output(out, "allocation.csv", &csv)?;

    let mut groups = String::from("group,acted,mean_index\n");
    for (group, count) in &allocation.group_counts {
        let mean = allocation
            .group_mean_index
            .get(group)
            .map(|m| m.to_string())
            .unwrap_or_default();
        writeln!(groups, "{group},{count},{mean}")?;
    }
    write_output(out, "group-summary.csv", &groups)?;
    Ok(())
}

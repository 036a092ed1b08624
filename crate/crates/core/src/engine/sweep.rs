use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ScenarioConfig;
use super::run::{run, RunSummary};
use crate::error::{Result, SimError};

/// One variant of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub seed: u64,
    pub summary: RunSummary,
}

/// Follows a dotted path through the config JSON. Array elements are
/// addressed by their `id` field or by position.
fn locate<'v>(root: &'v mut Value, path: &str) -> Result<&'v mut Value> {
    let mut cur = root;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(seg),
            Value::Array(items) => {
                let by_id = items
                    .iter()
                    .position(|v| v.get("id").and_then(Value::as_str) == Some(seg));
                match by_id.or_else(|| seg.parse::<usize>().ok()) {
                    Some(i) => items.get_mut(i),
                    None => None,
                }
            }
            _ => None,
        }
        .ok_or_else(|| SimError::config(format!("sweep path '{path}' has no segment '{seg}'")))?;
    }
    Ok(cur)
}

/// Applies `value` at `path` and returns the revalidated config.
pub fn with_parameter(base: &ScenarioConfig, path: &str, value: f64) -> Result<ScenarioConfig> {
    let mut json = serde_json::to_value(base).expect("config serializes");
    let slot = locate(&mut json, path)?;
    if !slot.is_number() {
        return Err(SimError::config(format!(
            "sweep path '{path}' addresses a non-numeric field ({slot})"
        )));
    }
    *slot = serde_json::Number::from_f64(value)
        .map(Value::Number)
        .ok_or_else(|| SimError::config(format!("sweep value {value} is not finite")))?;
    let mut cfg: ScenarioConfig = serde_json::from_value(json)
        .map_err(|e| SimError::config(format!("sweep value {value} at '{path}': {e}")))?;
    cfg.normalize();
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one variant per value, seeded `master_seed + index`. Variants run
/// concurrently; rows come back in value order.
pub fn sweep(base: &ScenarioConfig, path: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    let variants = values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            let mut cfg = with_parameter(base, path, value)?;
            cfg.master_seed = base.master_seed.wrapping_add(index as u64);
            Ok((index, value, cfg))
        })
        .collect::<Result<Vec<_>>>()?;
    variants
        .into_par_iter()
        .map(|(index, value, cfg)| {
            let out = run(&cfg)?;
            Ok(SweepRow {
                index,
                value,
                seed: cfg.master_seed,
                summary: out.summary,
            })
        })
        .collect()
}

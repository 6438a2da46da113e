use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use super::experiment::{run_experiment, RunBundle};
use super::scenario::{scenario_from_value, Scenario};
use super::RunnerError;
use crate::metrics::{KpiProcedure, Summary};

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub summaries: Vec<Summary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub registration_success_rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub param: String,
    pub points: Vec<SweepPoint>,
    /// Smallest swept value at which no UE registered.
    pub threshold: Option<f64>,
}

#[derive(Debug)]
pub struct SweepResult {
    pub report: SweepReport,
    pub bundles: Vec<RunBundle>,
}

fn unresolved(param: &str, reason: &str) -> RunnerError {
    RunnerError::Sweep(format!("`{param}`: {reason}"))
}

/// Copy of `base` with the numeric field at dotted `param` set to `value`.
pub fn with_param(base: &Scenario, param: &str, value: f64) -> Result<Scenario, RunnerError> {
    let mut root = serde_json::to_value(base).expect("scenario serializes");
    let mut slot = &mut root;
    for part in param.split('.') {
        slot = match slot {
            Value::Object(map) => map.get_mut(part),
            Value::Array(items) => part.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| unresolved(param, "path does not resolve"))?;
    }
    let Value::Number(old) = slot else {
        return Err(unresolved(param, "not a numeric field"));
    };
    let integral = old.is_u64() || old.is_i64();
    *slot = if integral {
        if value.fract() != 0.0 || value < 0.0 {
            return Err(unresolved(param, "field takes non-negative integers"));
        }
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| unresolved(param, "value is not finite"))?
    };
    // names track the point so bundles stay distinguishable
    if let Value::Object(map) = &mut root {
        map.insert(
            "name".into(),
            Value::from(format!("{}-{param}={value}", base.name)),
        );
    }
    scenario_from_value(root)
}

/// One run per value, all with the base seed, executed in parallel and
/// reported in ascending value order.
pub fn sweep(base: &Scenario, param: &str, values: &[f64]) -> Result<SweepResult, RunnerError> {
    if values.is_empty() {
        return Err(RunnerError::Sweep("no values to sweep".into()));
    }
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let scenarios = values
        .iter()
        .map(|&v| with_param(base, param, v))
        .collect::<Result<Vec<_>, _>>()?;
    let bundles = scenarios
        .par_iter()
        .map(|s| run_experiment(s, false))
        .collect::<Result<Vec<_>, _>>()?;

    let points: Vec<SweepPoint> = values
        .iter()
        .zip(&bundles)
        .map(|(&value, b)| SweepPoint {
            value,
            summaries: b.summaries.clone(),
            registration_success_rate: b
                .summary(KpiProcedure::Registration)
                .map(|s| s.success_rate),
        })
        .collect();
    let threshold = points
        .iter()
        .find(|p| p.registration_success_rate == Some(0.0))
        .map(|p| p.value);
    Ok(SweepResult {
        report: SweepReport {
            param: param.to_string(),
            points,
            threshold,
        },
        bundles,
    })
}

//! Re-running a structured report and re-checking its certificates.

use compactness::boxes::FunctionStream;
use compactness::linear::verify_solution;
use compactness::ring::{eval_poly, PartialAssignment};
use serde_json::{json, Value};

use crate::commands::{execute, parse_pair_schedule, parse_plain_schedule};
use crate::report::{Outcome, Report, TOOL, VERSION};
use crate::schema::{BoxSystem, LinearSystem, RingSystem};
use crate::{read_json, InputError, RunConfig};

/// Reads the report named by `config.input`, runs its configuration again
/// and checks that every verdict reproduces.
pub fn run(config: &RunConfig) -> Report {
    let base = Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        config: config.clone(),
        input: None,
        outcome: Outcome::ok(false),
        result: None,
    };
    match check(config) {
        Ok(checks) => {
            let all = checks.iter().all(|c| c["pass"] == true);
            Report {
                outcome: Outcome::ok(all),
                result: Some(json!({ "checks": checks })),
                ..base
            }
        }
        Err(e) => Report {
            outcome: Outcome::from_input(&e),
            ..base
        },
    }
}

fn check_entry(name: &str, expected: Value, actual: Value) -> Value {
    let pass = expected == actual;
    json!({ "name": name, "expected": expected, "actual": actual, "pass": pass })
}

fn check(config: &RunConfig) -> Result<Vec<Value>, InputError> {
    let path = config
        .input
        .as_deref()
        .ok_or_else(|| InputError::Field("verify needs a report file".into()))?;
    let original: Report = read_json(path)?;
    if original.config.command == "verify" {
        return Err(InputError::Field("cannot verify a verify report".into()));
    }
    let needs_input = original.config.command.starts_with("solve-");
    if needs_input && original.input.is_none() {
        return Err(InputError::Field("report does not embed its input".into()));
    }
    let rerun = execute(&original.config, original.input.clone());

    let mut checks = vec![
        check_entry(
            "exit_code",
            json!(original.outcome.exit_code),
            json!(rerun.outcome.exit_code),
        ),
        check_entry(
            "error_kind",
            json!(original.outcome.error.as_ref().map(|e| &e.kind)),
            json!(rerun.outcome.error.as_ref().map(|e| &e.kind)),
        ),
        check_entry(
            "result",
            original.result.clone().unwrap_or(Value::Null),
            rerun.result.clone().unwrap_or(Value::Null),
        ),
    ];
    if let (Some(input), Some(result)) = (&original.input, &original.result) {
        let recheck = match original.config.command.as_str() {
            "solve-linear" => recheck_linear(&original.config, input, result),
            "solve-ring" => recheck_ring(input, result),
            "solve-box" => recheck_box(&original.config, input, result),
            _ => Ok(None),
        };
        match recheck {
            Ok(Some(c)) => checks.push(c),
            Ok(None) => {}
            Err(e) => checks
                .push(json!({ "name": "certificates", "error": e.to_string(), "pass": false })),
        }
    }
    Ok(checks)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, InputError> {
    v.get(key)
        .ok_or_else(|| InputError::Field(format!("report result has no {key}")))
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .map(|a| a.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect())
        .unwrap_or_default()
}

/// Residual certificates of the stored candidate, recomputed from the
/// input rows.
fn recheck_linear(
    config: &RunConfig,
    input: &Value,
    result: &Value,
) -> Result<Option<Value>, InputError> {
    let desc: LinearSystem =
        serde_json::from_value(input.clone()).map_err(|e| InputError::Field(e.to_string()))?;
    if desc.approx.is_some() {
        return Ok(None);
    }
    let schedule = parse_pair_schedule(config.schedule.as_deref().unwrap_or(""))?;
    let Some(&(k, h)) = schedule.last() else {
        return Ok(None);
    };
    let sys = desc.build().map_err(|e| InputError::Field(e.to_string()))?;
    let y = floats(field(result, "y")?);
    let rows: Vec<usize> = (0..k).collect();
    let verdicts =
        verify_solution(&sys, &y, &rows, h, 1e-9).map_err(|e| InputError::Field(e.to_string()))?;
    let expected: Vec<bool> = field(result, "residual_certs")?
        .as_array()
        .map(|a| a.iter().map(|c| c["pass"] == true).collect())
        .unwrap_or_default();
    let actual: Vec<bool> = verdicts.iter().map(|v| v.pass).collect();
    Ok(Some(check_entry(
        "residual_certificates",
        json!(expected),
        json!(actual),
    )))
}

/// Verified prefix of the stored assignment, recomputed through the ring
/// tables.
fn recheck_ring(input: &Value, result: &Value) -> Result<Option<Value>, InputError> {
    let desc: RingSystem =
        serde_json::from_value(input.clone()).map_err(|e| InputError::Field(e.to_string()))?;
    let (ring, stream) = desc.build().map_err(|e| InputError::Field(e.to_string()))?;
    let schedule = floats(field(result, "schedule")?);
    let last = schedule.last().copied().unwrap_or(0.0) as usize;
    let mut a = PartialAssignment::new();
    for pair in field(result, "final_assignment")?
        .as_array()
        .into_iter()
        .flatten()
    {
        let (Some(v), Some(x)) = (pair[0].as_u64(), pair[1].as_u64()) else {
            return Err(InputError::Field("malformed final_assignment".into()));
        };
        a.insert(v as usize, x as usize);
    }
    let prefix = stream
        .prefix(last)
        .map_err(|e| InputError::Field(e.to_string()))?;
    let verified = prefix
        .iter()
        .take_while(|p| matches!(eval_poly(p, &a, &ring), Ok(v) if v == ring.zero()))
        .count();
    Ok(Some(check_entry(
        "verified_prefix",
        field(result, "verified_prefix")?.clone(),
        json!(verified),
    )))
}

/// Verified prefix of the stored point, recomputed by evaluating the
/// functions.
fn recheck_box(
    config: &RunConfig,
    input: &Value,
    result: &Value,
) -> Result<Option<Value>, InputError> {
    let desc: BoxSystem =
        serde_json::from_value(input.clone()).map_err(|e| InputError::Field(e.to_string()))?;
    let stream: FunctionStream = desc
        .stream()
        .map_err(|e| InputError::Field(e.to_string()))?;
    let schedule = parse_plain_schedule(config.schedule.as_deref().unwrap_or(""))?;
    let last = schedule.last().copied().unwrap_or(0);
    let mut point = std::collections::BTreeMap::new();
    for pair in field(result, "final_assignment")?
        .as_array()
        .into_iter()
        .flatten()
    {
        let (Some(v), Some(x)) = (pair[0].as_u64(), pair[1].as_f64()) else {
            return Err(InputError::Field("malformed final_assignment".into()));
        };
        point.insert(v as usize, x);
    }
    let tol = config.tol.unwrap_or(compactness::boxes::DEFAULT_BOX_TOL);
    let fs = stream
        .prefix(last)
        .map_err(|e| InputError::Field(e.to_string()))?;
    let verified = fs
        .iter()
        .take_while(|f| f.eval_at(|v| point.get(&v).copied().unwrap_or(0.0)).abs() <= tol)
        .count();
    Ok(Some(check_entry(
        "verified_prefix",
        field(result, "verified_prefix")?.clone(),
        json!(verified),
    )))
}

//! The report document and its two renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{InputError, RunConfig, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_REFUTED, EXIT_SOLVED};

pub const TOOL: &str = "compactness";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    pub refutation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: String,
    pub exit_code: i32,
    pub error: Option<ErrorInfo>,
}

/// One run: its configuration, the input it read, the verdict and the
/// command-specific result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub input: Option<Value>,
    pub outcome: Outcome,
    pub result: Option<Value>,
}

pub fn status_name(code: i32) -> &'static str {
    match code {
        EXIT_SOLVED => "solved",
        EXIT_REFUTED => "refuted",
        EXIT_INCONCLUSIVE => "inconclusive",
        _ => "input_error",
    }
}

/// Exit status for a solver error.
pub fn exit_code_for(e: &compactness::Error) -> i32 {
    use compactness::Error::*;
    if e.is_refutation() {
        return EXIT_REFUTED;
    }
    match e {
        InvalidArgument(_) | InvalidExponent(_) | RingAxiom(_) | UnassignedVariable(_) => {
            EXIT_INPUT
        }
        _ => EXIT_INCONCLUSIVE,
    }
}

impl Outcome {
    pub fn ok(solved: bool) -> Self {
        let code = if solved {
            EXIT_SOLVED
        } else {
            EXIT_INCONCLUSIVE
        };
        Outcome {
            status: status_name(code).into(),
            exit_code: code,
            error: None,
        }
    }

    pub fn from_error(e: &compactness::Error) -> Self {
        let code = exit_code_for(e);
        Outcome {
            status: status_name(code).into(),
            exit_code: code,
            error: Some(ErrorInfo {
                kind: e.kind().into(),
                message: e.to_string(),
                refutation: e.is_refutation(),
            }),
        }
    }

    pub fn from_input(e: &InputError) -> Self {
        Outcome {
            status: status_name(EXIT_INPUT).into(),
            exit_code: EXIT_INPUT,
            error: Some(ErrorInfo {
                kind: "InputError".into(),
                message: e.to_string(),
                refutation: false,
            }),
        }
    }
}

pub fn to_structured(r: &Report) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("reports serialize");
    s.push('\n');
    s
}

fn num(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:.9e}"),
            _ => n.to_string(),
        },
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Table rendering of the same data as [`to_structured`].
pub fn to_human(r: &Report) -> String {
    let mut out = String::new();
    let what = match (&r.config.input, r.config.demo) {
        (Some(i), _) => format!("{} {i}", r.config.command),
        (None, Some(d)) => format!(
            "demo {}",
            serde_json::to_value(d).unwrap().as_str().unwrap_or("")
        ),
        _ => r.config.command.clone(),
    };
    let _ = writeln!(
        out,
        "{what}: {} (exit {})",
        r.outcome.status, r.outcome.exit_code
    );
    if let Some(e) = &r.outcome.error {
        let _ = writeln!(out, "  {}: {}", e.kind, e.message);
    }
    let Some(res) = &r.result else {
        return out;
    };
    if let Some(v) = res.get("verified_prefix") {
        let _ = writeln!(out, "verified prefix: {}", num(v));
    }
    if let Some(v) = res.get("q_norm_cert") {
        let _ = writeln!(
            out,
            "‖y‖_q ≤ {}  budget M = {}",
            num(v),
            num(res.get("norm_budget").unwrap_or(&Value::Null))
        );
    }
    if let Some(Value::Array(coords)) = res.get("coordinates") {
        let _ = writeln!(
            out,
            "\n{:>6}  {:<11} {:>18}  extra",
            "coord", "status", "value"
        );
        for c in coords {
            let id = c
                .get("id")
                .or_else(|| c.get("index"))
                .map(num)
                .unwrap_or_default();
            let extra = match (c.get("strength"), c.get("determined")) {
                (Some(s), _) if !s.is_null() => num(s),
                (_, Some(Value::Bool(d))) => (if *d { "determined" } else { "" }).to_string(),
                _ => String::new(),
            };
            let _ = writeln!(
                out,
                "{:>6}  {:<11} {:>18}  {extra}",
                id,
                num(c.get("status").unwrap_or(&Value::Null)),
                num(c.get("value").unwrap_or(&Value::Null)),
            );
        }
    }
    if let Some(Value::Array(certs)) = res.get("residual_certs") {
        let _ = writeln!(
            out,
            "\n{:>6}  {:>18}  {:>18}  pass",
            "row", "head residual", "bound"
        );
        for c in certs {
            let _ = writeln!(
                out,
                "{:>6}  {:>18}  {:>18}  {}",
                num(&c["row"]),
                num(&c["head_residual"]),
                num(&c["tail_bound"]),
                c["pass"]
            );
        }
    }
    if let Some(Value::Array(suites)) = res.get("suites") {
        let _ = writeln!(
            out,
            "\n{:<10} {:>8} {:>8}  passed",
            "suite", "cases", "failed"
        );
        for s in suites {
            let _ = writeln!(
                out,
                "{:<10} {:>8} {:>8}  {}",
                num(&s["name"]),
                num(&s["cases"]),
                num(&s["failures"]),
                s["passed"]
            );
        }
    }
    if let Some(Value::Array(checks)) = res.get("checks") {
        for c in checks {
            let _ = writeln!(
                out,
                "{:<28} {}",
                num(&c["name"]),
                if c["pass"] == true { "PASS" } else { "FAIL" }
            );
        }
    }
    if let Some(demo) = res.get("demo") {
        let _ = writeln!(
            out,
            "\n{}",
            serde_json::to_string_pretty(demo).unwrap_or_default()
        );
    }
    out
}

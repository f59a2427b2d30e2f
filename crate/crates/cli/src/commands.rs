//! Command dispatch.

use std::collections::BTreeSet;

use compactness::boxes::{
    box_compactness_extract_with, certify_no_root, root_search, BoxOptions, VariableBox,
    DEFAULT_BOX_BUDGET, DEFAULT_BOX_TOL, DEFAULT_CERTIFY_CELLS,
};
use compactness::corpus::{
    abian_family, halving_vector, helly_prefix_solution, helly_system, helly_truncated_rows,
    planted_system,
};
use compactness::linear::{
    compactness_extract_with, epsilon_compactness_extract_with, min_norm_solve, ExtractOptions,
    InfiniteLinearSystem,
};
use compactness::properties::run_all;
use compactness::ring::{compactness_solve_ring, DEFAULT_SEARCH_BUDGET};
use compactness::sequences::ConjugatePair;
use compactness::stabilization::{StabilizationReport, Status};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::report::{Outcome, Report, TOOL, VERSION};
use crate::schema::{BoxSystem, LinearSystem, RingSystem};
use crate::{parse_json, DemoName, InputError, RunConfig};

pub(crate) enum Failure {
    Input(InputError),
    Solver(compactness::Error),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e)
    }
}

impl From<compactness::Error> for Failure {
    fn from(e: compactness::Error) -> Self {
        Failure::Solver(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(InputError::Field(e.to_string()))
    }
}

/// A command that ran to completion; `error` carries a verdict that still
/// came with a result, such as a refuted hypothesis next to a solved prefix.
pub(crate) struct Finished {
    pub result: Value,
    pub solved: bool,
    pub error: Option<compactness::Error>,
}

impl Finished {
    fn new(result: Value, solved: bool) -> Self {
        Finished {
            result,
            solved,
            error: None,
        }
    }
}

/// Runs a non-verify command. `input` replaces reading the input file.
pub fn execute(config: &RunConfig, input: Option<Value>) -> Report {
    let mut echoed = None;
    let outcome = run(config, input, &mut echoed);
    let (outcome, result) = match outcome {
        Ok(f) => {
            let o = match &f.error {
                Some(e) => Outcome::from_error(e),
                None => Outcome::ok(f.solved),
            };
            (o, Some(f.result))
        }
        Err(Failure::Input(e)) => (Outcome::from_input(&e), None),
        Err(Failure::Solver(e)) => (Outcome::from_error(&e), None),
    };
    Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        config: config.clone(),
        input: echoed,
        outcome,
        result,
    }
}

fn run(
    config: &RunConfig,
    input: Option<Value>,
    echoed: &mut Option<Value>,
) -> Result<Finished, Failure> {
    if !(config.coord_tol > 0.0) {
        return Err(InputError::Field(format!(
            "--coord-tol must be positive, got {}",
            config.coord_tol
        ))
        .into());
    }
    if let Some(t) = config.tol {
        if !(t > 0.0) {
            return Err(InputError::Field(format!("--tol must be positive, got {t}")).into());
        }
    }
    match config.command.as_str() {
        "solve-ring" => solve_ring(config, &load::<RingSystem>(config, input, echoed)?),
        "solve-linear" => solve_linear(config, &load::<LinearSystem>(config, input, echoed)?),
        "solve-box" => solve_box(config, &load::<BoxSystem>(config, input, echoed)?),
        "demo" => match config.demo {
            Some(DemoName::Helly) => demo_helly(config),
            Some(DemoName::Abian) => demo_abian(config),
            Some(DemoName::Planted) => demo_planted(config),
            None => Err(InputError::Field("demo needs a name".into()).into()),
        },
        "props" => props(config),
        other => Err(InputError::Field(format!("unknown command {other}")).into()),
    }
}

fn load<T: DeserializeOwned>(
    config: &RunConfig,
    input: Option<Value>,
    echoed: &mut Option<Value>,
) -> Result<T, Failure> {
    let value = match input {
        Some(v) => v,
        None => {
            let path = config
                .input
                .as_deref()
                .ok_or_else(|| InputError::Field("missing input file".into()))?;
            let text = std::fs::read_to_string(path).map_err(|source| InputError::Io {
                path: path.to_string(),
                source,
            })?;
            // typed parse first, for line and column diagnostics
            parse_json::<T>(path, &text)?;
            parse_json::<Value>(path, &text)?
        }
    };
    *echoed = Some(value.clone());
    Ok(serde_json::from_value(value)?)
}

fn require_schedule(config: &RunConfig) -> Result<&str, InputError> {
    config
        .schedule
        .as_deref()
        .ok_or_else(|| InputError::Field(format!("{} needs --schedule", config.command)))
}

/// `L,L,…`.
pub fn parse_plain_schedule(s: &str) -> Result<Vec<usize>, InputError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| InputError::Field(format!("--schedule: {t:?} is not a prefix length")))
        })
        .collect()
}

/// `k:H,k:H,…`.
pub fn parse_pair_schedule(s: &str) -> Result<Vec<(usize, usize)>, InputError> {
    s.split(',')
        .map(|t| {
            let bad = || InputError::Field(format!("--schedule: {t:?} is not rows:truncation"));
            let (k, h) = t.trim().split_once(':').ok_or_else(bad)?;
            Ok((k.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?))
        })
        .collect()
}

fn parse_eps(s: Option<&str>, steps: usize) -> Result<Vec<f64>, InputError> {
    let Some(s) = s else {
        return Ok(vec![1e-9; steps]);
    };
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| InputError::Field(format!("--eps: {t:?} is not a number")))
        })
        .collect::<Result<_, _>>()?;
    match vals.len() {
        1 => Ok(vec![vals[0]; steps]),
        n if n == steps => Ok(vals),
        n => Err(InputError::Field(format!(
            "--eps has {n} values for {steps} schedule steps"
        ))),
    }
}

fn solve_ring(config: &RunConfig, sys: &RingSystem) -> Result<Finished, Failure> {
    let schedule = parse_plain_schedule(require_schedule(config)?)?;
    let (ring, stream) = sys.build()?;
    let vars = match &sys.vars {
        Some(v) => v.clone(),
        None => {
            let last = schedule.last().copied().unwrap_or(0);
            let all: BTreeSet<usize> = stream
                .prefix(last)?
                .iter()
                .flat_map(|p| p.support())
                .collect();
            all.into_iter().collect()
        }
    };
    let budget = config.budget.unwrap_or(DEFAULT_SEARCH_BUDGET);
    let rep = compactness_solve_ring(&stream, &ring, &schedule, config.window, &vars, budget)?;
    Ok(Finished::new(serde_json::to_value(&rep)?, settled(&rep)))
}

/// The whole last prefix is satisfied and some coordinate has settled.
/// Variables introduced by the last steps of an unbounded stream never
/// settle, so requiring all of them would make exit 0 unreachable.
fn settled<V>(rep: &StabilizationReport<V>) -> bool {
    let last = rep.schedule.last().copied().unwrap_or(0);
    rep.verified_prefix == last
        && rep
            .coordinates
            .iter()
            .any(|c| c.status == Status::Stabilized)
}

fn extract_options(config: &RunConfig) -> ExtractOptions {
    let mut opts = ExtractOptions::default();
    if let Some(t) = config.tol {
        opts.tol = t;
    }
    opts
}

fn solve_linear(config: &RunConfig, desc: &LinearSystem) -> Result<Finished, Failure> {
    let schedule = parse_pair_schedule(require_schedule(config)?)?;
    let sys = desc.build()?;
    let opts = extract_options(config);
    let h_last = schedule.last().map_or(0, |s| s.1);
    match desc.approx(h_last + 1)? {
        Some((e, bounds)) => {
            let eps = parse_eps(config.eps.as_deref(), schedule.len())?;
            let c = epsilon_compactness_extract_with(
                &sys,
                &e,
                &bounds,
                &schedule,
                config.window,
                config.coord_tol,
                &eps,
                &opts,
            )?;
            let solved = c.certified() && c.stabilized_count() > 0;
            Ok(Finished::new(serde_json::to_value(&c)?, solved))
        }
        None => {
            if config.eps.is_some() {
                return Err(InputError::Field(
                    "--eps needs an \"approx\" section in the input".into(),
                )
                .into());
            }
            linear_exact(config, &sys, &schedule, &opts)
        }
    }
}

fn linear_exact(
    config: &RunConfig,
    sys: &InfiniteLinearSystem,
    schedule: &[(usize, usize)],
    opts: &ExtractOptions,
) -> Result<Finished, Failure> {
    let c = compactness_extract_with(sys, schedule, config.window, config.coord_tol, opts)?;
    let solved = c.certified() && c.stabilized_count() > 0;
    Ok(Finished::new(serde_json::to_value(&c)?, solved))
}

fn config_box(config: &RunConfig, desc: &BoxSystem) -> Result<VariableBox, Failure> {
    match (config.bx, &desc.bx) {
        (Some(m), _) => Ok(VariableBox::uniform(m)?),
        (None, Some(b)) => Ok(b.build()?),
        (None, None) => {
            Err(InputError::Field("no box: give \"box\" in the input or --box".into()).into())
        }
    }
}

fn solve_box(config: &RunConfig, desc: &BoxSystem) -> Result<Finished, Failure> {
    let schedule = parse_plain_schedule(require_schedule(config)?)?;
    let stream = desc.stream()?;
    let bx = config_box(config, desc)?;
    let opts = BoxOptions {
        budget: config.budget.unwrap_or(DEFAULT_BOX_BUDGET),
        certify_cells: DEFAULT_CERTIFY_CELLS,
    };
    let tol = config.tol.unwrap_or(DEFAULT_BOX_TOL);
    let rep = box_compactness_extract_with(
        &stream,
        &bx,
        &schedule,
        config.window,
        config.coord_tol,
        tol,
        opts,
    )?;
    Ok(Finished::new(serde_json::to_value(&rep)?, settled(&rep)))
}

fn error_value(e: &compactness::Error) -> Value {
    json!({ "kind": e.kind(), "message": e.to_string(), "refutation": e.is_refutation() })
}

/// Helly's rows fail certification for every `p`, while each finite prefix
/// is solved by `x_k = 1`.
fn demo_helly(config: &RunConfig) -> Result<Finished, Failure> {
    let k = config.prefix.unwrap_or(5);
    if k == 0 {
        return Err(InputError::Field("--prefix must be at least 1".into()).into());
    }
    let mut certification = Vec::new();
    let mut refusal = None;
    for p in [1.5, 2.0, 3.0] {
        let pair = ConjugatePair::from_p(p)?;
        match helly_system(pair) {
            Ok(_) => certification.push(json!({ "p": p, "certified": true })),
            Err(e) => {
                certification.push(json!({ "p": p, "certified": false, "error": error_value(&e) }));
                if p == 2.0 {
                    refusal = Some(e);
                }
            }
        }
    }
    let rows = helly_truncated_rows(2.0, k, k)?;
    let x = min_norm_solve(&rows, k - 1, ConjugatePair::euclidean())?;
    let residuals: Vec<f64> = rows
        .iter()
        .map(|r| {
            let dot: f64 = x.iter().enumerate().map(|(n, v)| r.a.coeff(n) * v).sum();
            (dot - r.b).abs()
        })
        .collect();
    let pattern = helly_prefix_solution(k);
    let max_residual = residuals.iter().fold(0.0f64, |m, r| m.max(*r));
    let deviation = x
        .iter()
        .zip(&pattern)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let result = json!({
        "demo": {
            "name": "helly",
            "certification": certification,
            "prefix": {
                "equations": k,
                "indexing": "0-based; coordinate k-1 here is the 1-based x_k",
                "solution": x,
                "pattern": pattern,
                "pattern_deviation": deviation,
                "residuals": residuals,
                "max_residual": max_residual,
            }
        }
    });
    Ok(Finished {
        result,
        solved: false,
        error: refusal,
    })
}

/// One Abian prefix in one box: a root when the box reaches `x = L`,
/// a certified refusal otherwise.
fn demo_abian(config: &RunConfig) -> Result<Finished, Failure> {
    let m = config.bx.unwrap_or(5.0);
    let l = config.prefix.unwrap_or(7);
    if l == 0 {
        return Err(InputError::Field("--prefix must be at least 1".into()).into());
    }
    let bx = VariableBox::uniform(m)?;
    let fs = abian_family(l)?.prefix(l)?;
    let tol = config.tol.unwrap_or(DEFAULT_BOX_TOL);
    let out = root_search(&fs, &bx, tol, config.budget.unwrap_or(DEFAULT_BOX_BUDGET))?;
    let residuals: Vec<f64> = fs
        .iter()
        .map(|f| f.eval_at(|v| out.point.get(v).unwrap_or(0.0)).abs())
        .collect();
    let mut error = None;
    let mut certified = false;
    if !out.found {
        for f in &fs {
            if certify_no_root(f, &bx, DEFAULT_CERTIFY_CELLS)? {
                certified = true;
                break;
            }
        }
        error = Some(compactness::Error::PrefixRootNotFound {
            prefix: l,
            best: out.best,
            certified,
        });
    }
    let result = json!({
        "demo": {
            "name": "abian",
            "box": m,
            "prefix": l,
            "found": out.found,
            "point": out.point,
            "max_residual": out.best,
            "residuals": residuals,
            "evaluations": out.evaluations,
            "certified_infeasible": certified,
        }
    });
    Ok(Finished {
        result,
        solved: out.found,
        error,
    })
}

/// Recovery of a planted vector from eight rows.
fn demo_planted(config: &RunConfig) -> Result<Finished, Failure> {
    let schedule = parse_pair_schedule(config.schedule.as_deref().unwrap_or("2:8,4:16,8:32"))?;
    let x_star = halving_vector(10);
    let seeds: Vec<u64> = (0..8).map(|i| config.seed + i).collect();
    let sys = planted_system(&x_star, &seeds, ConjugatePair::euclidean(), 0.5)?;
    let c = compactness_extract_with(
        &sys,
        &schedule,
        config.window,
        config.coord_tol,
        &extract_options(config),
    )?;
    let errors: Vec<Value> = c
        .coordinates
        .iter()
        .filter(|l| l.determined)
        .map(|l| {
            let truth = x_star.get(l.index).copied().unwrap_or(0.0);
            json!({ "index": l.index, "value": l.value, "planted": truth, "error": (l.value - truth).abs() })
        })
        .collect();
    let worst = errors.iter().fold(0.0f64, |m, e| {
        m.max(e["error"].as_f64().unwrap_or(f64::INFINITY))
    });
    let solved = c.certified() && !errors.is_empty() && worst <= 1e-6;
    let mut result = serde_json::to_value(&c)?;
    result["demo"] = json!({
        "name": "planted",
        "x_star": x_star,
        "row_seeds": seeds,
        "determined_recovery": errors,
        "worst_error": worst,
    });
    Ok(Finished::new(result, solved))
}

fn props(config: &RunConfig) -> Result<Finished, Failure> {
    let suites = run_all(config.seed)?;
    let passed = suites.iter().all(|s| s.passed);
    Ok(Finished::new(json!({ "suites": suites }), passed))
}

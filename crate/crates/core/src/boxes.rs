//! Common roots of continuous functions inside a product of intervals.
//!
//! Each function depends on finitely many variables and every variable
//! `x_i` ranges over `[−M_i, M_i]`. If every finite subfamily has a common
//! root in the box, the whole family does. Prefix roots come from a uniform
//! grid followed by a derivative-free pattern search; infeasibility of a
//! prefix is certified by Lipschitz covering of a single function.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stabilization::{
    check_schedule, spread, window_value, CoordinateReport, StabilizationReport, Status, Strength,
    HEURISTIC_NOTE,
};

/// Default cap on point evaluations per prefix.
pub const DEFAULT_BOX_BUDGET: u64 = 1_000_000;

/// Default root tolerance on `max_f |f|`.
pub const DEFAULT_BOX_TOL: f64 = 1e-6;

/// Default cap on cells examined per function by [`certify_no_root`].
pub const DEFAULT_CERTIFY_CELLS: usize = 200_000;

/// `coeff · Π vars`, with repeated ids standing for powers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealTerm {
    pub coeff: f64,
    pub vars: Vec<usize>,
}

/// A real polynomial with finitely many terms.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RealPolynomial {
    pub terms: Vec<RealTerm>,
}

impl RealPolynomial {
    pub fn new(terms: Vec<RealTerm>) -> Self {
        RealPolynomial { terms }
    }

    pub fn with_term(mut self, coeff: f64, vars: &[usize]) -> Self {
        self.terms.push(RealTerm {
            coeff,
            vars: vars.to_vec(),
        });
        self
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.terms
            .iter()
            .flat_map(|t| t.vars.iter().copied())
            .collect()
    }

    pub fn eval(&self, x: impl Fn(usize) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.vars.iter().fold(t.coeff, |acc, &v| acc * x(v)))
            .sum()
    }

    /// Bound on `|∂p/∂x_v|` where each `|x_w| ≤ reach(w)`.
    fn partial_bound(&self, v: usize, reach: impl Fn(usize) -> f64) -> f64 {
        let mut total = 0.0;
        for t in &self.terms {
            let Some(first) = t.vars.iter().position(|&w| w == v) else {
                continue;
            };
            let e = t.vars.iter().filter(|&&w| w == v).count();
            let rest = t
                .vars
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != first)
                .fold(1.0, |acc, (_, &w)| acc * reach(w));
            total += t.coeff.abs() * e as f64 * rest;
        }
        total
    }
}

impl fmt::Display for RealPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", t.coeff)?;
            for v in &t.vars {
                write!(f, "·x{v}")?;
            }
        }
        Ok(())
    }
}

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Modulus {
    None,
    /// `|f(x) − f(y)| ≤ L · max_v |x_v − y_v|` on the box.
    Fixed(f64),
    Polynomial(Arc<RealPolynomial>),
}

/// A continuous function of the variables in `support`.
///
/// The evaluator receives the values of the support variables in the order
/// of [`FiniteSupportFunction::support`] (ascending ids).
#[derive(Clone)]
pub struct FiniteSupportFunction {
    support: Vec<usize>,
    eval: EvalFn,
    modulus: Modulus,
}

impl fmt::Debug for FiniteSupportFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteSupportFunction")
            .field("support", &self.support)
            .finish()
    }
}

impl FiniteSupportFunction {
    pub fn new(
        support: Vec<usize>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "support must be strictly increasing".into(),
            ));
        }
        Ok(FiniteSupportFunction {
            support,
            eval: Arc::new(eval),
            modulus: Modulus::None,
        })
    }

    /// Declares a Lipschitz constant in the max-norm on the box, enabling
    /// [`certify_no_root`].
    pub fn with_modulus(mut self, lipschitz: f64) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Lipschitz constant {lipschitz}"
            )));
        }
        self.modulus = Modulus::Fixed(lipschitz);
        Ok(self)
    }

    /// The polynomial as a function; its modulus is derived cell by cell.
    pub fn polynomial(p: RealPolynomial) -> Self {
        let support: Vec<usize> = p.support().into_iter().collect();
        let p = Arc::new(p);
        let index: BTreeMap<usize, usize> =
            support.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let q = p.clone();
        FiniteSupportFunction {
            support,
            eval: Arc::new(move |x: &[f64]| q.eval(|v| x[index[&v]])),
            modulus: Modulus::Polynomial(p),
        }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn has_modulus(&self) -> bool {
        !matches!(self.modulus, Modulus::None)
    }

    /// Value at `x`, given as values of the support variables.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Value at a point given for all variables by `point`.
    pub fn eval_at(&self, point: impl Fn(usize) -> f64) -> f64 {
        let x: Vec<f64> = self.support.iter().map(|&v| point(v)).collect();
        self.eval(&x)
    }

    /// Per-variable bounds `L_v` with `|f(x) − f(c)| ≤ Σ L_v |x_v − c_v|`
    /// on the cell `c ± h`, or a single max-norm constant.
    fn cell_moduli(&self, c: &[f64], h: &[f64]) -> Option<CellModulus> {
        match &self.modulus {
            Modulus::None => None,
            Modulus::Fixed(l) => Some(CellModulus::MaxNorm(*l)),
            Modulus::Polynomial(p) => {
                let reach = |w: usize| {
                    let i = self.support.binary_search(&w).expect("variable in support");
                    c[i].abs() + h[i]
                };
                Some(CellModulus::PerVar(
                    self.support
                        .iter()
                        .map(|&v| p.partial_bound(v, reach))
                        .collect(),
                ))
            }
        }
    }
}

enum CellModulus {
    MaxNorm(f64),
    PerVar(Vec<f64>),
}

/// Per-variable half-widths `M_i` of the box `Π [−M_i, M_i]`.
#[derive(Debug, Clone, PartialEq)]
pub enum VariableBox {
    Uniform(f64),
    PerVar {
        bounds: BTreeMap<usize, f64>,
        default: Option<f64>,
    },
}

impl VariableBox {
    pub fn uniform(m: f64) -> Result<Self> {
        check_bound(m)?;
        Ok(VariableBox::Uniform(m))
    }

    /// Listed bounds, with `default` for unlisted variables (or an error on
    /// lookup when `None`).
    pub fn per_var(bounds: BTreeMap<usize, f64>, default: Option<f64>) -> Result<Self> {
        for &m in bounds.values().chain(default.iter()) {
            check_bound(m)?;
        }
        Ok(VariableBox::PerVar { bounds, default })
    }

    pub fn bound(&self, var: usize) -> Result<f64> {
        match self {
            VariableBox::Uniform(m) => Ok(*m),
            VariableBox::PerVar { bounds, default } => bounds
                .get(&var)
                .copied()
                .or(*default)
                .ok_or_else(|| Error::InvalidArgument(format!("no bound for variable x{var}"))),
        }
    }

    /// True when every bound of `self` is at most the matching bound of
    /// `other` on `vars`.
    pub fn within(&self, other: &VariableBox, vars: &[usize]) -> Result<bool> {
        for &v in vars {
            if self.bound(v)? > other.bound(v)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn check_bound(m: f64) -> Result<()> {
    if m.is_finite() && m > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "box bound must be positive, got {m}"
        )))
    }
}

/// A point over the union support of a family of functions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxPoint {
    pub vars: Vec<usize>,
    pub values: Vec<f64>,
}

impl BoxPoint {
    pub fn get(&self, var: usize) -> Option<f64> {
        self.vars.binary_search(&var).ok().map(|i| self.values[i])
    }
}

/// Result of a root search, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    /// Best point seen.
    pub point: BoxPoint,
    /// `max_f |f|` at `point`.
    pub best: f64,
    pub evaluations: u64,
    pub found: bool,
}

struct Problem<'a> {
    fs: &'a [FiniteSupportFunction],
    /// Positions of each function's support inside the union support.
    slots: Vec<Vec<usize>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    buf: Vec<f64>,
    evaluations: u64,
}

impl<'a> Problem<'a> {
    fn new(fs: &'a [FiniteSupportFunction], bx: &VariableBox) -> Result<(Self, Vec<usize>)> {
        let vars: Vec<usize> = fs
            .iter()
            .flat_map(|f| f.support.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let slots = fs
            .iter()
            .map(|f| {
                f.support
                    .iter()
                    .map(|v| vars.binary_search(v).unwrap())
                    .collect()
            })
            .collect();
        let mut lo = Vec::with_capacity(vars.len());
        let mut hi = Vec::with_capacity(vars.len());
        for &v in &vars {
            let m = bx.bound(v)?;
            lo.push(-m);
            hi.push(m);
        }
        let width = fs.iter().map(|f| f.support.len()).max().unwrap_or(0);
        Ok((
            Problem {
                fs,
                slots,
                lo,
                hi,
                buf: Vec::with_capacity(width),
                evaluations: 0,
            },
            vars,
        ))
    }

    fn values(&mut self, x: &[f64], mut sink: impl FnMut(f64)) {
        self.evaluations += 1;
        for (f, slot) in self.fs.iter().zip(&self.slots) {
            self.buf.clear();
            self.buf.extend(slot.iter().map(|&i| x[i]));
            sink(f.eval(&self.buf));
        }
    }

    fn max_abs(&mut self, x: &[f64]) -> f64 {
        let mut m = 0.0f64;
        self.values(x, |v| {
            m = if v.is_nan() {
                f64::INFINITY
            } else {
                m.max(v.abs())
            }
        });
        m
    }

    fn sum_sq(&mut self, x: &[f64]) -> (f64, f64) {
        let (mut s, mut m) = (0.0, 0.0f64);
        self.values(x, |v| {
            if v.is_nan() {
                s = f64::INFINITY;
                m = f64::INFINITY;
            } else {
                s += v * v;
                m = m.max(v.abs());
            }
        });
        (s, m)
    }
}

/// Searches `[−M_i, M_i]` over the union support of `fs` for a point with
/// `max_f |f| ≤ tol`.
///
/// Grid rounds come first: round 0 is the origin, round `r` uses `2^r + 1`
/// points per variable visited in lexicographic order from the lower corner,
/// and the first strictly better point wins, so ties go to the
/// lexicographically least. Rounds end when a point reaches `tol` or the
/// next grid would use more than half the remaining budget. A Hooke–Jeeves
/// pattern search on `Σ f²` then refines the best grid point.
pub fn root_search(
    fs: &[FiniteSupportFunction],
    bx: &VariableBox,
    tol: f64,
    budget: u64,
) -> Result<SearchOutcome> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol must be positive, got {tol}"
        )));
    }
    let (mut prob, vars) = Problem::new(fs, bx)?;
    let d = vars.len();
    let mut best_x = vec![0.0; d];
    let mut best = prob.max_abs(&best_x);
    let mut spacing: Vec<f64> = prob.hi.iter().map(|m| *m).collect();
    let mut r = 1u32;
    while best > tol && d > 0 && r < 40 {
        let n = 1u64 << r;
        let points = (n + 1).checked_pow(d as u32);
        let remaining = budget.saturating_sub(prob.evaluations);
        match points {
            Some(p) if p <= remaining / 2 => {}
            _ => break,
        }
        let mut idx = vec![0u64; d];
        let mut x = vec![0.0; d];
        'grid: loop {
            for i in 0..d {
                // exact dyadic fraction keeps the grid symmetric about 0
                x[i] = prob.hi[i] * (2.0 * idx[i] as f64 / n as f64 - 1.0);
            }
            let v = prob.max_abs(&x);
            if v < best {
                best = v;
                best_x.copy_from_slice(&x);
                if best <= tol {
                    break 'grid;
                }
            }
            let mut i = d;
            loop {
                if i == 0 {
                    break 'grid;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] <= n {
                    break;
                }
                idx[i] = 0;
            }
        }
        spacing = prob.hi.iter().map(|m| 2.0 * m / n as f64).collect();
        r += 1;
    }
    if best > tol && d > 0 {
        let (x, m) = pattern_search(&mut prob, best_x.clone(), spacing, tol, budget);
        if m < best {
            best = m;
            best_x = x;
        }
    }
    Ok(SearchOutcome {
        point: BoxPoint {
            vars,
            values: best_x,
        },
        best,
        evaluations: prob.evaluations,
        found: best <= tol,
    })
}

fn pattern_search(
    prob: &mut Problem,
    x0: Vec<f64>,
    step0: Vec<f64>,
    tol: f64,
    budget: u64,
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let min_step: Vec<f64> = prob.hi.iter().map(|m| m * 1e-15).collect();
    let mut step = step0;
    let mut base = x0;
    let (mut fb, mut mb) = prob.sum_sq(&base);
    let clamp = |prob: &Problem, x: &mut Vec<f64>| {
        for i in 0..x.len() {
            x[i] = x[i].clamp(prob.lo[i], prob.hi[i]);
        }
    };
    // coordinate exploration around `x`; returns the improved point
    let explore = |prob: &mut Problem, mut x: Vec<f64>, mut fx: f64, mut mx: f64, step: &[f64]| {
        for i in 0..d {
            if prob.evaluations >= budget {
                break;
            }
            let orig = x[i];
            let mut moved = false;
            for dir in [1.0, -1.0] {
                let t = (orig + dir * step[i]).clamp(prob.lo[i], prob.hi[i]);
                if t == orig {
                    continue;
                }
                x[i] = t;
                let (f, m) = prob.sum_sq(&x);
                if f < fx {
                    fx = f;
                    mx = m;
                    moved = true;
                    break;
                }
            }
            if !moved {
                x[i] = orig;
            }
        }
        (x, fx, mx)
    };
    while mb > tol && prob.evaluations < budget {
        let (mut x, mut fx, mut mx) = explore(prob, base.clone(), fb, mb, &step);
        if fx < fb {
            while fx < fb && mx > tol && prob.evaluations < budget {
                let mut jump: Vec<f64> = x.iter().zip(&base).map(|(a, b)| 2.0 * a - b).collect();
                clamp(prob, &mut jump);
                base = x;
                fb = fx;
                mb = mx;
                let (fj, mj) = prob.sum_sq(&jump);
                let (nx, nf, nm) = explore(prob, jump, fj, mj, &step);
                x = nx;
                fx = nf;
                mx = nm;
            }
            if fx < fb {
                base = x;
                fb = fx;
                mb = mx;
            }
        } else {
            let mut all_small = true;
            for (s, m) in step.iter_mut().zip(&min_step) {
                *s *= 0.5;
                all_small &= *s < *m;
            }
            if all_small {
                break;
            }
        }
    }
    (base, mb)
}

/// A point with `max_f |f| ≤ tol` in the box, or `None` when none turned
/// up within `budget` evaluations. `None` is not a proof that no root
/// exists; see [`certify_no_root`].
pub fn finite_root_search(
    fs: &[FiniteSupportFunction],
    bx: &VariableBox,
    tol: f64,
    budget: u64,
) -> Result<Option<BoxPoint>> {
    let out = root_search(fs, bx, tol, budget)?;
    Ok(out.found.then_some(out.point))
}

/// True when `f` provably has no root in the box.
///
/// Bisects the box over `f`'s support; a cell is discarded once `|f|` at
/// its centre exceeds the modulus bound over the cell. Returns false when
/// `f` has no modulus, or some cell survives after `max_cells` cells.
pub fn certify_no_root(
    f: &FiniteSupportFunction,
    bx: &VariableBox,
    max_cells: usize,
) -> Result<bool> {
    if !f.has_modulus() {
        return Ok(false);
    }
    let d = f.support.len();
    let half: Vec<f64> = f
        .support
        .iter()
        .map(|&v| bx.bound(v))
        .collect::<Result<_>>()?;
    let mut stack = vec![(vec![0.0; d], half)];
    let mut cells = 0usize;
    while let Some((c, h)) = stack.pop() {
        cells += 1;
        if cells > max_cells {
            return Ok(false);
        }
        let v = f.eval(&c);
        if v.is_nan() {
            return Ok(false);
        }
        let (bound, split) = match f.cell_moduli(&c, &h).expect("modulus present") {
            CellModulus::MaxNorm(l) => {
                let (i, w) = widest(&h);
                (l * w, i)
            }
            CellModulus::PerVar(ls) => {
                let contrib: Vec<f64> = ls.iter().zip(&h).map(|(l, w)| l * w).collect();
                (contrib.iter().sum(), widest(&contrib).0)
            }
        };
        // margin absorbs rounding in the centre value
        if v.abs() - bound > 1e-9 * (1.0 + v.abs()) {
            continue;
        }
        if d == 0 {
            return Ok(false);
        }
        let mut left_c = c.clone();
        let mut right_c = c;
        let mut nh = h;
        nh[split] *= 0.5;
        left_c[split] -= nh[split];
        right_c[split] += nh[split];
        stack.push((right_c, nh.clone()));
        stack.push((left_c, nh));
    }
    Ok(true)
}

fn widest(v: &[f64]) -> (usize, f64) {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bw), (i, &w)| {
            if w > bw {
                (i, w)
            } else {
                (bi, bw)
            }
        })
}

type FunctionFn = Arc<dyn Fn(usize) -> FiniteSupportFunction + Send + Sync>;

/// A countable enumeration of functions.
#[derive(Clone)]
pub struct FunctionStream {
    enumerate: FunctionFn,
    len: Option<usize>,
}

impl fmt::Debug for FunctionStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionStream")
            .field("len", &self.len)
            .finish()
    }
}

impl FunctionStream {
    pub fn from_fn(
        len: Option<usize>,
        f: impl Fn(usize) -> FiniteSupportFunction + Send + Sync + 'static,
    ) -> Self {
        FunctionStream {
            enumerate: Arc::new(f),
            len,
        }
    }

    pub fn from_list(fs: Vec<FiniteSupportFunction>) -> Self {
        let len = fs.len();
        let fs = Arc::new(fs);
        FunctionStream::from_fn(Some(len), move |k| fs[k].clone())
    }

    pub fn len(&self) -> Option<usize> {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == Some(0)
    }

    pub fn get(&self, k: usize) -> FiniteSupportFunction {
        (self.enumerate)(k)
    }

    pub fn prefix(&self, l: usize) -> Result<Vec<FiniteSupportFunction>> {
        if let Some(n) = self.len {
            if l > n {
                return Err(Error::InvalidArgument(format!(
                    "prefix {l} exceeds stream length {n}"
                )));
            }
        }
        Ok((0..l).map(|k| self.get(k)).collect())
    }
}

/// Search limits for [`box_compactness_extract_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxOptions {
    pub budget: u64,
    pub certify_cells: usize,
}

impl Default for BoxOptions {
    fn default() -> Self {
        BoxOptions {
            budget: DEFAULT_BOX_BUDGET,
            certify_cells: DEFAULT_CERTIFY_CELLS,
        }
    }
}

/// Searches each scheduled prefix for a root in the box and reports which
/// coordinates settle, with default limits.
pub fn box_compactness_extract(
    stream: &FunctionStream,
    bx: &VariableBox,
    schedule: &[usize],
    window: usize,
    coord_tol: f64,
    tol: f64,
) -> Result<StabilizationReport<f64>> {
    box_compactness_extract_with(
        stream,
        bx,
        schedule,
        window,
        coord_tol,
        tol,
        BoxOptions::default(),
    )
}

/// As [`box_compactness_extract`], with explicit limits.
///
/// A prefix without a found root raises [`Error::PrefixRootNotFound`];
/// `certified` is set when some function of the prefix provably has no
/// root in the box on its own.
pub fn box_compactness_extract_with(
    stream: &FunctionStream,
    bx: &VariableBox,
    schedule: &[usize],
    window: usize,
    coord_tol: f64,
    tol: f64,
    opts: BoxOptions,
) -> Result<StabilizationReport<f64>> {
    if window < 2 {
        return Err(Error::InvalidArgument("window must be at least 2".into()));
    }
    if !check_schedule(schedule) {
        return Err(Error::InvalidArgument(
            "schedule must be strictly increasing".into(),
        ));
    }
    if !(coord_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coord_tol must be positive, got {coord_tol}"
        )));
    }
    let mut points = Vec::with_capacity(schedule.len());
    let mut last_prefix = Vec::new();
    for &l in schedule {
        let fs = stream.prefix(l)?;
        let out = root_search(&fs, bx, tol, opts.budget)?;
        if !out.found {
            let mut certified = false;
            for f in &fs {
                if certify_no_root(f, bx, opts.certify_cells)? {
                    certified = true;
                    break;
                }
            }
            return Err(Error::PrefixRootNotFound {
                prefix: l,
                best: out.best,
                certified,
            });
        }
        points.push(out.point);
        last_prefix = fs;
    }

    let final_point = points.last().cloned().unwrap_or(BoxPoint {
        vars: Vec::new(),
        values: Vec::new(),
    });
    let verified_prefix = last_prefix
        .iter()
        .take_while(|f| f.eval_at(|v| final_point.get(v).unwrap_or(0.0)).abs() <= tol)
        .count();

    let coordinates = final_point
        .vars
        .iter()
        .map(|&v| {
            let history: Vec<Option<f64>> = points.iter().map(|p| p.get(v)).collect();
            let value = window_value(&history, window, |w| spread(w) <= coord_tol);
            CoordinateReport {
                id: v,
                status: if value.is_some() {
                    Status::Stabilized
                } else {
                    Status::Unstable
                },
                value,
                strength: value.map(|_| Strength::Heuristic),
                history,
            }
        })
        .collect();

    Ok(StabilizationReport {
        schedule: schedule.to_vec(),
        window,
        coordinates,
        verified_prefix,
        final_assignment: final_point
            .vars
            .iter()
            .copied()
            .zip(final_point.values.iter().copied())
            .collect(),
        note: HEURISTIC_NOTE,
    })
}

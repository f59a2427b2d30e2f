//! Infinite linear systems `a_i · x = b_i` with `ℓ^p` rows and `ℓ^q`
//! solutions.
//!
//! If every finite subsystem has a solution of `q`-norm at most `M`, the
//! whole system has one. [`compactness_extract`] builds the candidate from
//! minimum-norm solutions of growing finite sections and watches each
//! coordinate converge; [`verify_solution`] checks a candidate against the
//! Hölder residual bound
//!
//! ```text
//! |b_i − Σ_{n≤N} a_in y_n| ≤ ‖a_i^N‖_p · M
//! ```
//!
//! which is the rigorous part of the certificate. The approximate variant
//! with per-coordinate bounds and tail envelopes lives in [`approx`].

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sequences::{
    lp_norm, truncate_tail, ConjugatePair, PSummableSequence, TailSearch, CONJUGACY_TOL,
};
use crate::stabilization::{spread, window_value, Status};

pub mod approx;
pub mod section;

pub use approx::{
    check_condition_two, envelope_from_solution, epsilon_compactness_extract,
    epsilon_compactness_extract_with, ConditionTwoReport, CoordinateBounds, EnvelopeSequence,
};
pub use section::{min_norm_solve, SectionSolution};

/// Slack for the residual and norm chains in emitted certificates.
pub const CERTIFICATE_SLACK: f64 = 1e-9;

/// Widest truncation probed before an inconsistent section is declared a
/// refutation rather than a truncation artifact.
pub const DEFAULT_PROBE_CAP: usize = 4096;

/// One equation `a · x = b`.
#[derive(Debug, Clone)]
pub struct LinearRow {
    pub a: PSummableSequence,
    pub b: f64,
}

impl LinearRow {
    pub fn new(a: PSummableSequence, b: f64) -> Self {
        LinearRow { a, b }
    }
}

type RowFn = Arc<dyn Fn(usize) -> LinearRow + Send + Sync>;

/// A countable family of rows sharing one exponent pair.
#[derive(Clone)]
pub struct InfiniteLinearSystem {
    pair: ConjugatePair,
    rows: RowFn,
    len: Option<usize>,
    norm_budget: Option<f64>,
}

impl fmt::Debug for InfiniteLinearSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InfiniteLinearSystem")
            .field("pair", &self.pair)
            .field("len", &self.len)
            .field("norm_budget", &self.norm_budget)
            .finish()
    }
}

impl InfiniteLinearSystem {
    pub fn from_rows(
        pair: ConjugatePair,
        rows: Vec<LinearRow>,
        norm_budget: Option<f64>,
    ) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            check_row_exponent(pair, i, r)?;
        }
        check_budget(norm_budget)?;
        let len = rows.len();
        let rows = Arc::new(rows);
        Ok(InfiniteLinearSystem {
            pair,
            rows: Arc::new(move |i| rows[i].clone()),
            len: Some(len),
            norm_budget,
        })
    }

    /// Rows produced on demand; exponents are checked at access.
    pub fn from_fn(
        pair: ConjugatePair,
        len: Option<usize>,
        norm_budget: Option<f64>,
        rows: impl Fn(usize) -> LinearRow + Send + Sync + 'static,
    ) -> Result<Self> {
        check_budget(norm_budget)?;
        Ok(InfiniteLinearSystem {
            pair,
            rows: Arc::new(rows),
            len,
            norm_budget,
        })
    }

    pub fn pair(&self) -> ConjugatePair {
        self.pair
    }

    pub fn len(&self) -> Option<usize> {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == Some(0)
    }

    pub fn norm_budget(&self) -> Option<f64> {
        self.norm_budget
    }

    pub fn with_norm_budget(mut self, budget: Option<f64>) -> Result<Self> {
        check_budget(budget)?;
        self.norm_budget = budget;
        Ok(self)
    }

    pub fn row(&self, i: usize) -> Result<LinearRow> {
        if let Some(n) = self.len {
            if i >= n {
                return Err(Error::InvalidArgument(format!(
                    "row {i} of a {n}-row system"
                )));
            }
        }
        let r = (self.rows)(i);
        check_row_exponent(self.pair, i, &r)?;
        Ok(r)
    }

    pub fn rows(&self, k: usize) -> Result<Vec<LinearRow>> {
        (0..k).map(|i| self.row(i)).collect()
    }

    fn budget(&self) -> Result<f64> {
        self.norm_budget
            .ok_or_else(|| Error::InvalidArgument("system has no norm budget M".into()))
    }
}

fn check_row_exponent(pair: ConjugatePair, i: usize, r: &LinearRow) -> Result<()> {
    if (r.a.exponent() - pair.p()).abs() > CONJUGACY_TOL {
        return Err(Error::InvalidExponent(format!(
            "row {i} lies in ℓ^{} but the system pairs ℓ^{} with ℓ^{}",
            r.a.exponent(),
            pair.p(),
            pair.q()
        )));
    }
    if !r.b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "row {i} has right-hand side {}",
            r.b
        )));
    }
    Ok(())
}

fn check_budget(budget: Option<f64>) -> Result<()> {
    match budget {
        Some(m) if !(m.is_finite() && m > 0.0) => Err(Error::InvalidArgument(format!(
            "norm budget must be positive, got {m}"
        ))),
        _ => Ok(()),
    }
}

/// Hölder residual certificate for one row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualCertificate {
    pub row: usize,
    /// `|b_i − Σ_{n≤N} a_in y_n|`.
    pub head_residual: f64,
    /// Bound on the head residual of any admissible global solution.
    pub tail_bound: f64,
    pub pass: bool,
}

/// Per-coordinate line of a [`SolutionCandidate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateLine {
    pub index: usize,
    pub status: Status,
    pub value: f64,
    /// Every solution of the last section shares this coordinate.
    pub determined: bool,
    /// Present when per-coordinate bounds were imposed.
    pub bound: Option<f64>,
    pub history: Vec<f64>,
}

/// Check of `‖y^N‖_q ≤ e(N)` at one depth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailCheck {
    pub depth: usize,
    pub tail_norm: f64,
    pub envelope: f64,
    pub pass: bool,
}

/// A finitely supported candidate solution with its certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionCandidate {
    pub schedule: Vec<(usize, usize)>,
    pub window: usize,
    pub coord_tol: f64,
    /// Values at coordinates `0..y.len()`; zero beyond.
    pub y: Vec<f64>,
    pub coordinates: Vec<CoordinateLine>,
    /// Upper bound on `‖y‖_q`.
    pub q_norm_cert: f64,
    pub norm_budget: Option<f64>,
    pub residual_certs: Vec<ResidualCertificate>,
    pub tail_checks: Vec<TailCheck>,
    pub note: &'static str,
}

const LINEAR_NOTE: &str =
    "coordinate stabilization is heuristic; residual and norm certificates are exact Hölder bounds";

impl SolutionCandidate {
    pub(crate) fn empty(window: usize, coord_tol: f64, norm_budget: Option<f64>) -> Self {
        SolutionCandidate {
            schedule: Vec::new(),
            window,
            coord_tol,
            y: Vec::new(),
            coordinates: Vec::new(),
            q_norm_cert: 0.0,
            norm_budget,
            residual_certs: Vec::new(),
            tail_checks: Vec::new(),
            note: LINEAR_NOTE,
        }
    }

    pub fn all_stabilized(&self) -> bool {
        self.coordinates
            .iter()
            .all(|c| c.status == Status::Stabilized)
    }

    pub fn stabilized_count(&self) -> usize {
        self.coordinates
            .iter()
            .filter(|c| c.status == Status::Stabilized)
            .count()
    }

    /// Residual, tail, bound and norm certificates all hold.
    pub fn certified(&self) -> bool {
        let norm_ok = match self.norm_budget {
            Some(m) => self.q_norm_cert <= m + self.coord_tol,
            None => true,
        };
        let bounds_ok = self.coordinates.iter().all(|c| {
            c.bound
                .is_none_or(|b| c.value.abs() <= b + CERTIFICATE_SLACK)
        });
        norm_ok
            && bounds_ok
            && self.residual_certs.iter().all(|c| c.pass)
            && self.tail_checks.iter().all(|c| c.pass)
    }
}

/// Tuning for the extractors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// Tolerance for norms of rows computed inside certificates.
    pub tol: f64,
    pub probe_cap: usize,
    pub search: TailSearch,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            tol: 1e-12,
            probe_cap: DEFAULT_PROBE_CAP,
            search: TailSearch::default(),
        }
    }
}

/// Certified upper bound on `‖a^N‖_p · M`: the largest possible head
/// residual `|b − Σ_{n≤N} a_n y_n|` of any solution `y` with `‖y‖_q ≤ M`.
pub fn residual_bound(row: &LinearRow, n: usize, m: f64, tol: f64) -> Result<f64> {
    residual_bound_with(&TailSearch::default(), row, n, m, tol)
}

fn residual_bound_with(
    search: &TailSearch,
    row: &LinearRow,
    n: usize,
    m: f64,
    tol: f64,
) -> Result<f64> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "M must be positive, got {m}"
        )));
    }
    Ok(norm_upper(search, &truncate_tail(&row.a, n), tol)? * m)
}

/// `‖c‖_p` rounded up by `tol` unless the representation is exact.
pub(crate) fn norm_upper(search: &TailSearch, c: &PSummableSequence, tol: f64) -> Result<f64> {
    let v = search.p_norm(c, tol)?;
    Ok(match c.representation() {
        crate::sequences::Representation::Formula => v + tol,
        _ => v,
    })
}

/// `|b − Σ_{n≤N} a_n y_n|` with `y` zero beyond its length.
pub(crate) fn head_residual(row: &LinearRow, y: &[f64], n: usize) -> f64 {
    let dot: f64 = y
        .iter()
        .take(n + 1)
        .enumerate()
        .map(|(j, v)| row.a.coeff(j) * v)
        .sum();
    (row.b - dot).abs()
}

fn check_pairs(schedule: &[(usize, usize)], window: usize, coord_tol: f64) -> Result<()> {
    if window < 2 {
        return Err(Error::InvalidArgument("window must be at least 2".into()));
    }
    if !(coord_tol.is_finite() && coord_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "coord_tol must be positive, got {coord_tol}"
        )));
    }
    if !schedule
        .windows(2)
        .all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
    {
        return Err(Error::InvalidArgument(
            "schedule must be strictly increasing in rows and truncation".into(),
        ));
    }
    Ok(())
}

/// Minimum-norm solution of section `(k, h)`, distinguishing truncation
/// artifacts from inconsistency at every probed truncation.
fn solve_checked(rows: &[LinearRow], h: usize, probe_cap: usize) -> Result<SectionSolution> {
    match section::solve_section(rows, h) {
        Err(Error::InconsistentSubsystem { .. }) => {
            let k = rows.len();
            let exact = rows
                .iter()
                .all(|r| r.a.support_len().is_some_and(|s| s <= h + 1));
            let mut refuted = true;
            if !exact {
                let mut probe = (h + 1) * 2;
                while probe <= probe_cap.max(h + 1) {
                    if section::solve_section(rows, probe - 1).is_ok() {
                        refuted = false;
                        break;
                    }
                    probe *= 2;
                }
            }
            Err(Error::InconsistentSubsystem {
                rows: k,
                truncation: h,
                refuted,
            })
        }
        other => other,
    }
}

/// Certified lower bound on the `ℓ²` norm of every solution of `rows`:
/// `|λ·b| / ‖Σ λ_i a_i‖₂` with `λ` from the full (untruncated) Gram matrix.
pub(crate) fn min_norm_lower_bound(
    rows: &[LinearRow],
    pair: ConjugatePair,
    opts: &ExtractOptions,
) -> Result<f64> {
    let k = rows.len();
    if k == 0 {
        return Ok(0.0);
    }
    let tol = opts.tol.max(1e-14);
    let mut gram = nalgebra::DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = opts
                .search
                .certified_dot(&rows[i].a, &rows[j].a, pair, tol)?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let b = DVector::from_iterator(k, rows.iter().map(|r| r.b));
    let eig = nalgebra::SymmetricEigen::new(gram.clone());
    let largest = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    let mut lambda = DVector::zeros(k);
    for j in 0..k {
        let l = eig.eigenvalues[j];
        if l > section::RANK_CUTOFF * largest && l > 0.0 {
            let u = eig.eigenvectors.column(j);
            lambda.axpy(u.dot(&b) / l, &u.into_owned(), 1.0);
        }
    }
    let l1: f64 = lambda.iter().map(|v| v.abs()).sum();
    let quad = (lambda.transpose() * &gram * &lambda)[(0, 0)] + tol * l1 * l1;
    if quad <= 0.0 {
        return Ok(0.0);
    }
    Ok(lambda.dot(&b).abs() / quad.sqrt())
}

fn stabilize(
    histories: Vec<Vec<f64>>,
    window: usize,
    coord_tol: f64,
    determined: &[bool],
) -> Vec<CoordinateLine> {
    histories
        .into_iter()
        .enumerate()
        .map(|(n, history)| {
            let wrapped: Vec<Option<f64>> = history.iter().map(|&v| Some(v)).collect();
            let stable = window_value(&wrapped, window, |w| spread(w) <= coord_tol);
            CoordinateLine {
                index: n,
                status: if stable.is_some() {
                    Status::Stabilized
                } else {
                    Status::Unstable
                },
                value: *history.last().expect("nonempty history"),
                determined: determined.get(n).copied().unwrap_or(false),
                bound: None,
                history,
            }
        })
        .collect()
}

/// Values of each coordinate `0..=h_last` across the scheduled sections.
fn histories(sections: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let width = sections.last().map_or(0, |s| s.len());
    (0..width)
        .map(|n| {
            sections
                .iter()
                .map(|s| s.get(n).copied().unwrap_or(0.0))
                .collect()
        })
        .collect()
}

/// Builds a candidate solution from minimum-norm solutions of the scheduled
/// finite sections `(k, h)`: the first `k` rows on coordinates `0..=h`.
///
/// Fails with [`Error::NormBudgetExceeded`] only when a certified lower bound
/// on the norm of *every* solution of the first `k` rows exceeds the budget.
pub fn compactness_extract(
    sys: &InfiniteLinearSystem,
    schedule: &[(usize, usize)],
    window: usize,
    coord_tol: f64,
) -> Result<SolutionCandidate> {
    compactness_extract_with(sys, schedule, window, coord_tol, &ExtractOptions::default())
}

pub fn compactness_extract_with(
    sys: &InfiniteLinearSystem,
    schedule: &[(usize, usize)],
    window: usize,
    coord_tol: f64,
    opts: &ExtractOptions,
) -> Result<SolutionCandidate> {
    check_pairs(schedule, window, coord_tol)?;
    let m = sys.budget()?;
    if sys.pair.q() != 2.0 {
        return Err(Error::InvalidArgument(
            "exact section solving needs q = 2".into(),
        ));
    }
    let mut sections = Vec::with_capacity(schedule.len());
    let mut determined = Vec::new();
    for &(k, h) in schedule {
        let rows = sys.rows(k)?;
        let solved = solve_checked(&rows, h, opts.probe_cap)?;
        let norm = lp_norm(solved.x.iter().copied(), 2.0);
        if norm > m + coord_tol {
            let lower = min_norm_lower_bound(&rows, sys.pair, opts)?;
            if lower > m + coord_tol {
                return Err(Error::NormBudgetExceeded {
                    rows: k,
                    lower_bound: lower,
                    budget: m,
                });
            }
        }
        determined = solved.determined;
        sections.push(solved.x);
    }
    let Some(&(k_last, h_last)) = schedule.last() else {
        return Ok(SolutionCandidate::empty(window, coord_tol, Some(m)));
    };
    let y = sections.last().cloned().unwrap_or_default();
    let coordinates = stabilize(histories(&sections), window, coord_tol, &determined);
    let rows = sys.rows(k_last)?;
    let residual_certs = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let head = head_residual(row, &y, h_last);
            let bound = residual_bound_with(&opts.search, row, h_last, m, opts.tol)?;
            Ok(ResidualCertificate {
                row: i,
                head_residual: head,
                tail_bound: bound,
                pass: head <= bound + CERTIFICATE_SLACK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SolutionCandidate {
        schedule: schedule.to_vec(),
        window,
        coord_tol,
        q_norm_cert: lp_norm(y.iter().copied(), sys.pair.q()),
        y,
        coordinates,
        norm_budget: Some(m),
        residual_certs,
        tail_checks: Vec::new(),
        note: LINEAR_NOTE,
    })
}

/// Verdict for one row in [`verify_solution`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowVerdict {
    pub row: usize,
    pub head_residual: f64,
    pub tail_bound: f64,
    pub pass: bool,
}

/// Checks `|b_i − Σ_{n≤N} a_in y_n| ≤ ‖a_i^N‖_p · M + tol` for each listed row.
pub fn verify_solution(
    sys: &InfiniteLinearSystem,
    y: &[f64],
    rows_to_check: &[usize],
    n: usize,
    tol: f64,
) -> Result<Vec<RowVerdict>> {
    let m = sys.budget()?;
    if let Some(last) = y.iter().rposition(|&v| v != 0.0) {
        if last > n {
            return Err(Error::InvalidArgument(format!(
                "candidate is supported up to {last}, beyond the check depth {n}"
            )));
        }
    }
    rows_to_check
        .iter()
        .map(|&i| {
            let row = sys.row(i)?;
            let head = head_residual(&row, y, n);
            let bound = residual_bound(&row, n, m, tol)?;
            Ok(RowVerdict {
                row: i,
                head_residual: head,
                tail_bound: bound,
                pass: head <= bound + tol,
            })
        })
        .collect()
}

//! Approximate solvability with tail envelopes and per-coordinate bounds.
//!
//! Condition two for a finite row set `I′` and `ε > 0` asks for a vector `x`
//! with
//!
//! * (a) `‖x^N‖_q ≤ e_N` for every `N`,
//! * (b) `|x_n| ≤ M_n` for every `n`,
//! * (c) `|a_i · x − b_i| < ε` for `i ∈ I′`,
//!
//! where `e_N → 0` is fixed in advance. A genuine solution `x` yields
//! condition two with `e_N = ‖x^N‖_q` ([`envelope_from_solution`]); the
//! converse direction is [`epsilon_compactness_extract`].

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::section::GramSolver;
use super::{
    head_residual, histories, norm_upper, stabilize, CoordinateLine, ExtractOptions,
    InfiniteLinearSystem, LinearRow, ResidualCertificate, SolutionCandidate, TailCheck,
    CERTIFICATE_SLACK,
};
use crate::error::{Error, Result};
use crate::sequences::{lp_norm, truncate_tail, PSummableSequence, TailSearch};
use crate::stabilization::Status;

/// Smallest value an envelope takes, keeping it strictly positive.
pub const ENVELOPE_FLOOR: f64 = 1e-300;

/// Slack used when checking the three clauses.
pub const CLAUSE_SLACK: f64 = 1e-12;

/// Coordinates whose admissible range is narrower than this are pinned at 0.
const PIN_WIDTH: f64 = 1e-150;

/// Cap on alternating-projection sweeps per section.
const MAX_SWEEPS: usize = 20_000;

type ValueFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// A positive sequence `e_N`, eventually below any threshold.
#[derive(Clone)]
pub struct EnvelopeSequence {
    f: ValueFn,
}

impl fmt::Debug for EnvelopeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head: Vec<f64> = (0..4).map(|n| self.at(n)).collect();
        f.debug_struct("EnvelopeSequence")
            .field("head", &head)
            .finish()
    }
}

impl EnvelopeSequence {
    pub fn from_fn(f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        EnvelopeSequence { f: Arc::new(f) }
    }

    pub fn at(&self, n: usize) -> f64 {
        (self.f)(n).max(ENVELOPE_FLOOR)
    }

    /// Least `N` with `e_N < eps`, scanning up to `max_depth`.
    pub fn witness(&self, eps: f64, max_depth: usize) -> Result<usize> {
        (0..=max_depth)
            .find(|&n| self.at(n) < eps)
            .ok_or(Error::EnvelopeStall {
                threshold: eps,
                max_depth,
            })
    }
}

/// Per-coordinate bounds `M_n > 0`.
#[derive(Clone)]
pub struct CoordinateBounds {
    f: ValueFn,
}

impl fmt::Debug for CoordinateBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head: Vec<f64> = (0..4).map(|n| (self.f)(n)).collect();
        f.debug_struct("CoordinateBounds")
            .field("head", &head)
            .finish()
    }
}

impl CoordinateBounds {
    pub fn from_fn(f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        CoordinateBounds { f: Arc::new(f) }
    }

    pub fn uniform(m: f64) -> Self {
        CoordinateBounds::from_fn(move |_| m)
    }

    /// `values[n]` on the listed coordinates, `default` elsewhere.
    pub fn from_values(values: Vec<f64>, default: f64) -> Self {
        CoordinateBounds::from_fn(move |n| values.get(n).copied().unwrap_or(default))
    }

    pub fn at(&self, n: usize) -> Result<f64> {
        let m = (self.f)(n);
        if m.is_finite() && m > 0.0 {
            Ok(m)
        } else {
            Err(Error::InvalidArgument(format!(
                "coordinate bound M_{n} = {m} is not positive"
            )))
        }
    }
}

/// The envelope `e_N = ‖x^N‖_q` of a known solution, tabulated up to
/// `max_n` and continued by `x`'s own tail envelope.
pub fn envelope_from_solution(x: &PSummableSequence, max_n: usize) -> Result<EnvelopeSequence> {
    envelope_from_solution_with(&TailSearch::default(), x, max_n, 1e-12)
}

pub fn envelope_from_solution_with(
    search: &TailSearch,
    x: &PSummableSequence,
    max_n: usize,
    tol: f64,
) -> Result<EnvelopeSequence> {
    let mut table = Vec::with_capacity(max_n + 1);
    let mut previous = f64::INFINITY;
    for n in 0..=max_n {
        let v = norm_upper(search, &truncate_tail(x, n), tol)?.min(previous);
        table.push(v.max(ENVELOPE_FLOOR));
        previous = v;
    }
    let x = x.clone();
    let last = previous;
    Ok(EnvelopeSequence::from_fn(move |n| match table.get(n) {
        Some(&v) => v,
        None => x.tail_envelope(n).min(last).max(ENVELOPE_FLOOR),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseA {
    pub depth: usize,
    pub tail_norm: f64,
    pub envelope: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseB {
    pub index: usize,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseC {
    pub row: usize,
    pub residual: f64,
    pub pass: bool,
}

/// Itemized outcome of [`check_condition_two`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionTwoReport {
    pub holds: bool,
    pub clause_a: Vec<ClauseA>,
    pub clause_b: Vec<ClauseB>,
    pub clause_c: Vec<ClauseC>,
}

impl ConditionTwoReport {
    pub fn failed_clauses(&self) -> Vec<char> {
        let mut out = Vec::new();
        if self.clause_a.iter().any(|c| !c.pass) {
            out.push('a');
        }
        if self.clause_b.iter().any(|c| !c.pass) {
            out.push('b');
        }
        if self.clause_c.iter().any(|c| !c.pass) {
            out.push('c');
        }
        out
    }
}

/// Checks clauses (a), (b), (c) for the finitely supported vector `x`:
/// (a) at each depth in `depths`, (b) at every coordinate of `x`, (c) for
/// every row in `rows`. All comparisons allow `1e−12` slack.
pub fn check_condition_two(
    sys: &InfiniteLinearSystem,
    e: &EnvelopeSequence,
    bounds: &CoordinateBounds,
    rows: &[usize],
    eps: f64,
    x: &[f64],
    depths: &[usize],
) -> Result<ConditionTwoReport> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let q = sys.pair().q();
    let clause_a: Vec<ClauseA> = depths
        .iter()
        .map(|&n| {
            let tail_norm = lp_norm(x.iter().skip(n + 1).copied(), q);
            let envelope = e.at(n);
            ClauseA {
                depth: n,
                tail_norm,
                envelope,
                pass: tail_norm <= envelope + CLAUSE_SLACK,
            }
        })
        .collect();
    let clause_b = x
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let bound = bounds.at(n)?;
            Ok(ClauseB {
                index: n,
                value: v,
                bound,
                pass: v.abs() <= bound + CLAUSE_SLACK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let clause_c = rows
        .iter()
        .map(|&i| {
            let row = sys.row(i)?;
            let residual = head_residual(&row, x, x.len());
            Ok(ClauseC {
                row: i,
                residual,
                pass: residual < eps + CLAUSE_SLACK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let holds = clause_a.iter().all(|c| c.pass)
        && clause_b.iter().all(|c| c.pass)
        && clause_c.iter().all(|c| c.pass);
    Ok(ConditionTwoReport {
        holds,
        clause_a,
        clause_b,
        clause_c,
    })
}

/// Admissible magnitude of coordinate `n`: `min(M_n, e_{n−1})`, since
/// `|x_n| ≤ ‖x^{n−1}‖_q`.
fn effective_bound(e: &EnvelopeSequence, bounds: &CoordinateBounds, n: usize) -> Result<f64> {
    let m = bounds.at(n)?;
    Ok(if n == 0 { m } else { m.min(e.at(n - 1)) })
}

/// Proof that no `x` meeting (a) and (b) can bring some row within `eps`:
/// `|a·x| ≤ Σ_{n≤h} |a_n| B_n + ‖a^h‖_p e_h < |b| − eps`.
fn infeasibility_certificate(
    rows: &[LinearRow],
    caps: &[f64],
    e: &EnvelopeSequence,
    eps: f64,
    opts: &ExtractOptions,
) -> Result<bool> {
    let h = caps.len() - 1;
    for row in rows {
        let head: f64 = caps
            .iter()
            .enumerate()
            .map(|(n, c)| row.a.coeff(n).abs() * c)
            .sum();
        let tail = norm_upper(&opts.search, &truncate_tail(&row.a, h), opts.tol)? * e.at(h);
        let reach = head + tail;
        if row.b.abs() - eps > reach * (1.0 + 1e-12) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Projects onto the box `|x_n| ≤ caps[n]`, then onto each tail ball
/// `‖x^N‖₂ ≤ e_N` in increasing `N`. Afterwards (a) and (b) hold.
fn project_box_and_tails(x: &mut [f64], caps: &[f64], env: &[f64]) {
    for (v, c) in x.iter_mut().zip(caps) {
        *v = v.clamp(-c, *c);
    }
    let len = x.len();
    for n in 0..len.saturating_sub(1) {
        let tail = lp_norm(x[n + 1..].iter().copied(), 2.0);
        if tail > env[n] {
            let s = env[n] / tail;
            for v in &mut x[n + 1..] {
                *v *= s;
            }
        }
    }
}

fn max_residual(a: &DMatrix<f64>, x: &[f64], b: &DVector<f64>) -> f64 {
    let x = DVector::from_column_slice(x);
    (b - a * x).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Finds a vector on coordinates `0..=h` meeting (a), (b) and (c) for the
/// first rows within `eps`. Starts from the minimum-norm solution on the
/// unpinned coordinates, clipped; if that misses, runs Dykstra's
/// alternating projections between the affine solution set, the box and the
/// tail balls.
fn feasible_section(
    rows: &[LinearRow],
    caps: &[f64],
    env: &[f64],
    eps: f64,
) -> Result<Option<Vec<f64>>> {
    let width = caps.len();
    let free: Vec<usize> = (0..width).filter(|&n| caps[n] > PIN_WIDTH).collect();
    let k = rows.len();
    let full = DMatrix::from_fn(k, width, |i, j| rows[i].a.coeff(j));
    let b = DVector::from_iterator(k, rows.iter().map(|r| r.b));
    let restricted = DMatrix::from_fn(k, free.len(), |i, j| full[(i, free[j])]);
    let solver = GramSolver::new(restricted)?;

    let embed = |z: &DVector<f64>| {
        let mut x = vec![0.0; width];
        for (j, &n) in free.iter().enumerate() {
            x[n] = z[j];
        }
        x
    };
    let mut x = embed(&solver.solve(&b));
    project_box_and_tails(&mut x, caps, env);
    if max_residual(&full, &x, &b) < eps {
        return Ok(Some(x));
    }

    // Dykstra's algorithm over the affine set, the box and each tail ball;
    // all projections are exact, so the iterates approach the nearest point
    // of the intersection when it is nonempty
    let project_affine = |y: &[f64]| {
        let z = DVector::from_iterator(free.len(), free.iter().map(|&n| y[n]));
        let r = solver.residual(&z, &b);
        embed(&(&z + solver.apply_pinv(&r)))
    };
    let sets = 2 + width.saturating_sub(1);
    let mut increments = vec![vec![0.0; width]; sets];
    for _ in 0..MAX_SWEEPS {
        for (s, inc) in increments.iter_mut().enumerate() {
            let y: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
            let p = match s {
                0 => project_affine(&y),
                1 => y.iter().zip(caps).map(|(v, c)| v.clamp(-c, *c)).collect(),
                _ => {
                    let n = s - 2;
                    let mut p = y.clone();
                    let tail = lp_norm(p[n + 1..].iter().copied(), 2.0);
                    if tail > env[n] {
                        let scale = env[n] / tail;
                        p[n + 1..].iter_mut().for_each(|v| *v *= scale);
                    }
                    p
                }
            };
            for ((i, yv), pv) in inc.iter_mut().zip(&y).zip(&p) {
                *i = yv - pv;
            }
            x = p;
        }
        let mut candidate = x.clone();
        project_box_and_tails(&mut candidate, caps, env);
        if max_residual(&full, &candidate, &b) < eps {
            return Ok(Some(candidate));
        }
    }
    Ok(None)
}

/// Builds a candidate satisfying (a) and (b) whose residuals on the first
/// `k` rows shrink below the scheduled `eps`, and reports per-coordinate
/// stabilization across the schedule.
///
/// The final candidate carries tail checks `‖y^N‖_q ≤ e_N` at every
/// `N ≤ h_last`, bound checks `|y_n| ≤ M_n`, and residual certificates
/// `|b_i − Σ_{n≤h} a_in y_n| ≤ ‖a_i‖_p e_h`.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_compactness_extract(
    sys: &InfiniteLinearSystem,
    e: &EnvelopeSequence,
    bounds: &CoordinateBounds,
    schedule: &[(usize, usize)],
    window: usize,
    coord_tol: f64,
    eps_schedule: &[f64],
) -> Result<SolutionCandidate> {
    epsilon_compactness_extract_with(
        sys,
        e,
        bounds,
        schedule,
        window,
        coord_tol,
        eps_schedule,
        &ExtractOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn epsilon_compactness_extract_with(
    sys: &InfiniteLinearSystem,
    e: &EnvelopeSequence,
    bounds: &CoordinateBounds,
    schedule: &[(usize, usize)],
    window: usize,
    coord_tol: f64,
    eps_schedule: &[f64],
    opts: &ExtractOptions,
) -> Result<SolutionCandidate> {
    super::check_pairs(schedule, window, coord_tol)?;
    if eps_schedule.len() != schedule.len() {
        return Err(Error::InvalidArgument(
            "eps schedule and schedule differ in length".into(),
        ));
    }
    if eps_schedule.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::InvalidArgument("eps values must be positive".into()));
    }
    if sys.pair().q() != 2.0 {
        return Err(Error::InvalidArgument(
            "exact section solving needs q = 2".into(),
        ));
    }
    let Some(&(k_last, h_last)) = schedule.last() else {
        return Ok(SolutionCandidate::empty(window, coord_tol, None));
    };

    let caps: Vec<f64> = (0..=h_last)
        .map(|n| effective_bound(e, bounds, n))
        .collect::<Result<_>>()?;
    let env: Vec<f64> = (0..=h_last).map(|n| e.at(n)).collect();

    let mut sections = Vec::with_capacity(schedule.len());
    for (&(k, h), &eps) in schedule.iter().zip(eps_schedule) {
        let rows = sys.rows(k)?;
        if infeasibility_certificate(&rows, &caps[..=h], e, eps, opts)? {
            return Err(Error::NoFeasibleSection {
                rows: k,
                certified: true,
            });
        }
        match feasible_section(&rows, &caps[..=h], &env[..=h], eps)? {
            Some(x) => sections.push(x),
            None => {
                return Err(Error::NoFeasibleSection {
                    rows: k,
                    certified: false,
                })
            }
        }
    }

    let y = sections.last().cloned().unwrap_or_default();
    let mut coordinates: Vec<CoordinateLine> =
        stabilize(histories(&sections), window, coord_tol, &[]);
    for c in &mut coordinates {
        c.bound = Some(bounds.at(c.index)?);
    }
    mark_determined(sys, k_last, &caps, &mut coordinates)?;

    let q = sys.pair().q();
    let tail_checks = (0..=h_last)
        .map(|n| {
            let tail_norm = lp_norm(y.iter().skip(n + 1).copied(), q);
            TailCheck {
                depth: n,
                tail_norm,
                envelope: e.at(n),
                pass: tail_norm <= e.at(n) + CERTIFICATE_SLACK,
            }
        })
        .collect();
    let rows = sys.rows(k_last)?;
    let residual_certs = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let head = head_residual(row, &y, h_last);
            let bound = norm_upper(&opts.search, &row.a, opts.tol)? * e.at(h_last)
                + eps_schedule[eps_schedule.len() - 1];
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
        q_norm_cert: lp_norm(y.iter().copied(), q),
        y,
        coordinates,
        norm_budget: None,
        residual_certs,
        tail_checks,
        note: super::LINEAR_NOTE,
    })
}

/// Marks coordinates fixed by the last section's rows on the unpinned
/// coordinates.
fn mark_determined(
    sys: &InfiniteLinearSystem,
    k: usize,
    caps: &[f64],
    coords: &mut [CoordinateLine],
) -> Result<()> {
    let rows = sys.rows(k)?;
    let free: Vec<usize> = (0..caps.len()).filter(|&n| caps[n] > PIN_WIDTH).collect();
    let a = DMatrix::from_fn(k, free.len(), |i, j| rows[i].a.coeff(free[j]));
    let determined = GramSolver::new(a)?.determined();
    for c in coords.iter_mut() {
        c.determined = match free.iter().position(|&n| n == c.index) {
            Some(j) => determined[j],
            None => true,
        };
    }
    Ok(())
}

impl SolutionCandidate {
    /// Stabilized coordinate values, in index order.
    pub fn stabilized_values(&self) -> Vec<(usize, f64)> {
        self.coordinates
            .iter()
            .filter(|c| c.status == Status::Stabilized)
            .map(|c| (c.index, c.value))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::ConjugatePair;

    fn finite_row(a: &[f64], b: f64) -> LinearRow {
        LinearRow::new(PSummableSequence::finite(2.0, a.to_vec()).unwrap(), b)
    }

    #[test]
    fn envelope_of_two_ones() {
        let x = PSummableSequence::finite(2.0, vec![1.0, 1.0]).unwrap();
        let e = envelope_from_solution(&x, 4).unwrap();
        assert_eq!(e.at(0), 1.0);
        for n in 1..10 {
            assert_eq!(e.at(n), ENVELOPE_FLOOR);
        }
    }

    #[test]
    fn envelope_of_geometric() {
        // ‖x^N‖₂ = (Σ_{n>N} 4^−n)^(1/2) = 2^−(N+1) (4/3)^(1/2)
        let x = PSummableSequence::geometric(2.0, vec![1.0], 0.5).unwrap();
        let e = envelope_from_solution(&x, 5).unwrap();
        for n in 0..12 {
            let expected = 0.5f64.powi(n as i32 + 1) * (4.0f64 / 3.0).sqrt();
            assert!((e.at(n) - expected).abs() < 1e-15, "N = {n}");
        }
    }

    #[test]
    fn envelope_of_zero_is_floor() {
        let e = envelope_from_solution(&PSummableSequence::zero(2.0).unwrap(), 3).unwrap();
        assert!((0..8).all(|n| e.at(n) == ENVELOPE_FLOOR));
        assert_eq!(e.witness(1e-200, 10).unwrap(), 0);
    }

    #[test]
    fn clause_b_flagged() {
        let sys = InfiniteLinearSystem::from_rows(
            ConjugatePair::euclidean(),
            vec![finite_row(&[1.0], 1.0)],
            None,
        )
        .unwrap();
        let e = EnvelopeSequence::from_fn(|_| 10.0);
        let bounds = CoordinateBounds::uniform(0.5);
        let report = check_condition_two(&sys, &e, &bounds, &[0], 1e-6, &[1.0], &[0]).unwrap();
        assert!(!report.holds);
        assert_eq!(report.failed_clauses(), vec!['b']);
    }

    #[test]
    fn vacuous_clause_c() {
        let sys = InfiniteLinearSystem::from_rows(
            ConjugatePair::euclidean(),
            vec![finite_row(&[1.0], 1.0)],
            None,
        )
        .unwrap();
        let e = EnvelopeSequence::from_fn(|n| 1.0 / (n + 1) as f64);
        let bounds = CoordinateBounds::uniform(100.0);
        let report =
            check_condition_two(&sys, &e, &bounds, &[], 1e-6, &[0.0, 0.0], &[0, 1, 2]).unwrap();
        assert!(report.holds);
    }

    #[test]
    fn tiny_bounds_are_certified_infeasible() {
        let a = PSummableSequence::geometric(2.0, vec![1.0], 0.5).unwrap();
        let sys = InfiniteLinearSystem::from_rows(
            ConjugatePair::euclidean(),
            vec![LinearRow::new(a, 1.0)],
            None,
        )
        .unwrap();
        let e = envelope_from_solution(&PSummableSequence::zero(2.0).unwrap(), 0).unwrap();
        let bounds = CoordinateBounds::uniform(1e-12);
        assert_eq!(
            epsilon_compactness_extract(&sys, &e, &bounds, &[(1, 4)], 2, 1e-9, &[1e-3]),
            Err(Error::NoFeasibleSection {
                rows: 1,
                certified: true
            })
        );
    }

    #[test]
    fn empty_schedule() {
        let sys =
            InfiniteLinearSystem::from_rows(ConjugatePair::euclidean(), vec![], None).unwrap();
        let e = EnvelopeSequence::from_fn(|_| 1.0);
        let c = epsilon_compactness_extract(
            &sys,
            &e,
            &CoordinateBounds::uniform(1.0),
            &[],
            2,
            1e-9,
            &[],
        )
        .unwrap();
        assert!(c.y.is_empty() && c.residual_certs.is_empty() && c.tail_checks.is_empty());
    }

    #[test]
    fn projections_reach_a_tight_envelope() {
        // x_0 + x_1 + x_2 = 1 with e_0 = 0.3 forces most mass into x_0;
        // the minimum-norm split (1/3 each) violates (a)
        let sys = InfiniteLinearSystem::from_rows(
            ConjugatePair::euclidean(),
            vec![finite_row(&[1.0, 1.0, 1.0], 1.0)],
            None,
        )
        .unwrap();
        let e = EnvelopeSequence::from_fn(|n| match n {
            0 => 0.3,
            1 => 0.2,
            _ => 0.0,
        });
        let bounds = CoordinateBounds::uniform(1.0);
        let c =
            epsilon_compactness_extract(&sys, &e, &bounds, &[(1, 2)], 2, 1e-9, &[1e-8]).unwrap();
        assert!(c.tail_checks.iter().all(|t| t.pass));
        let sum: f64 = c.y.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8);
    }
}

//! Polynomial systems over finite rings.
//!
//! Every finite subset of a system having a common root forces a global root
//! when the ring is finite. This module searches for canonical
//! (lexicographically least) roots of finite prefixes of a constraint stream
//! and tracks how those roots settle as the prefix grows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stabilization::{
    check_schedule, window_value, CoordinateReport, StabilizationReport, Status, Strength,
    HEURISTIC_NOTE,
};

/// Default cap on search nodes for [`finite_sat`].
pub const DEFAULT_SEARCH_BUDGET: u64 = 10_000_000;

/// A finite ring given by operation tables over the elements `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteRing {
    size: usize,
    add: Vec<Vec<usize>>,
    mul: Vec<Vec<usize>>,
    zero: usize,
    one: usize,
}

impl FiniteRing {
    /// Builds a ring after checking every axiom exhaustively.
    pub fn new(
        add: Vec<Vec<usize>>,
        mul: Vec<Vec<usize>>,
        zero: usize,
        one: usize,
    ) -> Result<Self> {
        let size = add.len();
        if size == 0 {
            return Err(Error::RingAxiom(
                "ring must have at least one element".into(),
            ));
        }
        for (name, table) in [("add", &add), ("mul", &mul)] {
            if table.len() != size || table.iter().any(|row| row.len() != size) {
                return Err(Error::RingAxiom(format!(
                    "{name} table is not {size}×{size}"
                )));
            }
            if table.iter().flatten().any(|&v| v >= size) {
                return Err(Error::RingAxiom(format!(
                    "{name} table has an entry outside 0..{size}"
                )));
            }
        }
        if zero >= size || one >= size {
            return Err(Error::RingAxiom("zero or one is not an element".into()));
        }
        let ring = FiniteRing {
            size,
            add,
            mul,
            zero,
            one,
        };
        ring.check_axioms()?;
        Ok(ring)
    }

    /// The integers modulo `n`.
    pub fn zmod(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::RingAxiom("ℤ/0 is not finite".into()));
        }
        let add = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        let mul = (0..n)
            .map(|a| (0..n).map(|b| (a * b) % n).collect())
            .collect();
        FiniteRing::new(add, mul, 0, 1 % n)
    }

    fn check_axioms(&self) -> Result<()> {
        let n = self.size;
        let (add, mul) = (
            |a: usize, b: usize| self.add[a][b],
            |a: usize, b: usize| self.mul[a][b],
        );
        let fail = |what: &str, a: usize, b: usize, c: usize| {
            Err(Error::RingAxiom(format!("{what} fails at ({a}, {b}, {c})")))
        };
        for a in 0..n {
            if add(a, self.zero) != a || add(self.zero, a) != a {
                return fail("additive identity", a, self.zero, 0);
            }
            if mul(a, self.one) != a || mul(self.one, a) != a {
                return fail("multiplicative identity", a, self.one, 0);
            }
            if !(0..n).any(|b| add(a, b) == self.zero) {
                return fail("additive inverse", a, 0, 0);
            }
            for b in 0..n {
                if add(a, b) != add(b, a) {
                    return fail("commutativity of +", a, b, 0);
                }
                for c in 0..n {
                    if add(add(a, b), c) != add(a, add(b, c)) {
                        return fail("associativity of +", a, b, c);
                    }
                    if mul(mul(a, b), c) != mul(a, mul(b, c)) {
                        return fail("associativity of ×", a, b, c);
                    }
                    if mul(a, add(b, c)) != add(mul(a, b), mul(a, c)) {
                        return fail("left distributivity", a, b, c);
                    }
                    if mul(add(a, b), c) != add(mul(a, c), mul(b, c)) {
                        return fail("right distributivity", a, b, c);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn zero(&self) -> usize {
        self.zero
    }

    pub fn one(&self) -> usize {
        self.one
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        self.add[a][b]
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    /// Raw tables, in `(add, mul)` order.
    pub fn tables(&self) -> (&[Vec<usize>], &[Vec<usize>]) {
        (&self.add, &self.mul)
    }
}

/// `coeff · Π vars`, with repeated variable ids standing for powers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RingTerm {
    pub coeff: usize,
    pub vars: Vec<usize>,
}

/// A polynomial with finitely many terms over a finite ring.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RingPolynomial {
    pub terms: Vec<RingTerm>,
}

impl RingPolynomial {
    pub fn new(terms: Vec<RingTerm>) -> Self {
        RingPolynomial { terms }
    }

    pub fn constant(c: usize) -> Self {
        RingPolynomial::new(vec![RingTerm {
            coeff: c,
            vars: vec![],
        }])
    }

    /// `Σ vars` with unit coefficients, given the ring's `one`.
    pub fn sum_of(one: usize, vars: &[usize]) -> Self {
        RingPolynomial::new(
            vars.iter()
                .map(|&v| RingTerm {
                    coeff: one,
                    vars: vec![v],
                })
                .collect(),
        )
    }

    /// Adds `coeff · Π vars`.
    pub fn with_term(mut self, coeff: usize, vars: &[usize]) -> Self {
        self.terms.push(RingTerm {
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
}

impl fmt::Display for RingPolynomial {
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

/// A finite map from variable ids to ring elements.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PartialAssignment(BTreeMap<usize, usize>);

impl PartialAssignment {
    pub fn new() -> Self {
        PartialAssignment::default()
    }

    pub fn get(&self, var: usize) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn insert(&mut self, var: usize, value: usize) {
        self.0.insert(var, value);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }
}

impl FromIterator<(usize, usize)> for PartialAssignment {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        PartialAssignment(iter.into_iter().collect())
    }
}

type PolyFn = Arc<dyn Fn(usize) -> RingPolynomial + Send + Sync>;
type BoundFn = Arc<dyn Fn(usize) -> Option<usize> + Send + Sync>;

/// A countable enumeration of polynomial constraints.
#[derive(Clone)]
pub struct RingConstraintStream {
    enumerate: PolyFn,
    len: Option<usize>,
    /// `mention_bound(v) = Some(b)` promises that every constraint
    /// mentioning `v` has index `< b`.
    mention_bound: Option<BoundFn>,
}

impl fmt::Debug for RingConstraintStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RingConstraintStream")
            .field("len", &self.len)
            .field("mention_bound", &self.mention_bound.is_some())
            .finish()
    }
}

impl RingConstraintStream {
    /// Stream given by an accessor; `len = None` means unbounded.
    pub fn from_fn(
        len: Option<usize>,
        f: impl Fn(usize) -> RingPolynomial + Send + Sync + 'static,
    ) -> Self {
        RingConstraintStream {
            enumerate: Arc::new(f),
            len,
            mention_bound: None,
        }
    }

    pub fn from_list(polys: Vec<RingPolynomial>) -> Self {
        let mut last: BTreeMap<usize, usize> = BTreeMap::new();
        for (k, p) in polys.iter().enumerate() {
            for v in p.support() {
                last.insert(v, k + 1);
            }
        }
        let len = polys.len();
        let polys = Arc::new(polys);
        RingConstraintStream {
            enumerate: Arc::new(move |k| polys[k].clone()),
            len: Some(len),
            mention_bound: Some(Arc::new(move |v| Some(last.get(&v).copied().unwrap_or(0)))),
        }
    }

    /// Declares where each variable is last mentioned; enables strong
    /// stabilization certificates.
    pub fn with_mention_bound(
        mut self,
        f: impl Fn(usize) -> Option<usize> + Send + Sync + 'static,
    ) -> Self {
        self.mention_bound = Some(Arc::new(f));
        self
    }

    /// `x_k + x_{k+1}` for `k = 0, 1, …` (with `len` constraints, or unbounded).
    pub fn chain(ring: &FiniteRing, len: Option<usize>) -> Self {
        let one = ring.one();
        RingConstraintStream::from_fn(len, move |k| RingPolynomial::sum_of(one, &[k, k + 1]))
            .with_mention_bound(move |v| {
                let bound = v + 1;
                Some(len.map_or(bound, |n| bound.min(n)))
            })
    }

    /// Repeats `polys` cyclically forever.
    pub fn cycle(polys: Vec<RingPolynomial>) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::InvalidArgument("cannot cycle an empty list".into()));
        }
        let polys = Arc::new(polys);
        Ok(RingConstraintStream::from_fn(None, move |k| {
            polys[k % polys.len()].clone()
        }))
    }

    pub fn len(&self) -> Option<usize> {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == Some(0)
    }

    pub fn get(&self, k: usize) -> RingPolynomial {
        (self.enumerate)(k)
    }

    pub fn prefix(&self, l: usize) -> Result<Vec<RingPolynomial>> {
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

/// Value of `p` under `a`, computed through the ring tables.
pub fn eval_poly(p: &RingPolynomial, a: &PartialAssignment, ring: &FiniteRing) -> Result<usize> {
    let mut acc = ring.zero();
    for t in &p.terms {
        if t.coeff >= ring.size() {
            return Err(Error::InvalidArgument(format!(
                "coefficient {} is not a ring element",
                t.coeff
            )));
        }
        let mut term = t.coeff;
        for &v in &t.vars {
            let value = a.get(v).ok_or(Error::UnassignedVariable(v))?;
            if value >= ring.size() {
                return Err(Error::InvalidArgument(format!(
                    "x{v} ↦ {value} is not a ring element"
                )));
            }
            term = ring.mul(term, value);
        }
        acc = ring.add(acc, term);
    }
    Ok(acc)
}

#[derive(Clone, Copy)]
enum Slot {
    Fixed(usize),
    Free(usize),
}

struct Compiled {
    terms: Vec<(usize, Vec<Slot>)>,
}

impl Compiled {
    fn eval(&self, ring: &FiniteRing, values: &[usize]) -> usize {
        self.terms.iter().fold(ring.zero(), |acc, (coeff, slots)| {
            let term = slots.iter().fold(*coeff, |t, slot| {
                let v = match *slot {
                    Slot::Fixed(v) => v,
                    Slot::Free(i) => values[i],
                };
                ring.mul(t, v)
            });
            ring.add(acc, term)
        })
    }
}

/// Lexicographically least common root of `polys` extending `fixed`.
///
/// Free variables are ordered by id, the smallest id most significant, and
/// each takes values in element-id order. The search is a complete
/// depth-first enumeration that evaluates a polynomial as soon as its last
/// free variable is assigned, so the first root reached is the least one.
/// `budget` caps the number of (variable, value) trials.
pub fn finite_sat(
    polys: &[RingPolynomial],
    ring: &FiniteRing,
    fixed: &PartialAssignment,
    budget: u64,
) -> Result<Option<PartialAssignment>> {
    for p in polys {
        if let Some(t) = p.terms.iter().find(|t| t.coeff >= ring.size()) {
            return Err(Error::InvalidArgument(format!(
                "coefficient {} is not a ring element",
                t.coeff
            )));
        }
    }
    if let Some((v, value)) = fixed.iter().find(|&(_, value)| value >= ring.size()) {
        return Err(Error::InvalidArgument(format!(
            "x{v} ↦ {value} is not a ring element"
        )));
    }
    let free: Vec<usize> = polys
        .iter()
        .flat_map(|p| p.support())
        .filter(|v| fixed.get(*v).is_none())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<usize, usize> = free.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    // polynomials grouped by the position of their last free variable
    let mut at_depth: Vec<Vec<Compiled>> = (0..free.len()).map(|_| Vec::new()).collect();
    for p in polys {
        let compiled = Compiled {
            terms: p
                .terms
                .iter()
                .map(|t| {
                    let slots = t
                        .vars
                        .iter()
                        .map(|v| match index.get(v) {
                            Some(&i) => Slot::Free(i),
                            None => Slot::Fixed(fixed.get(*v).expect("fixed or free")),
                        })
                        .collect();
                    (t.coeff, slots)
                })
                .collect(),
        };
        let last = p
            .support()
            .iter()
            .filter_map(|v| index.get(v).copied())
            .max();
        match last {
            Some(d) => at_depth[d].push(compiled),
            None => {
                if compiled.eval(ring, &[]) != ring.zero() {
                    return Ok(None);
                }
            }
        }
    }

    let n = free.len();
    let mut values = vec![0usize; n];
    let mut depth = 0usize;
    let mut spent = 0u64;
    // values[depth] is the next candidate at `depth`; backtrack when exhausted
    loop {
        if depth == n {
            let mut out = fixed.clone();
            for (i, &v) in free.iter().enumerate() {
                out.insert(v, values[i]);
            }
            return Ok(Some(out));
        }
        if values[depth] >= ring.size() {
            if depth == 0 {
                return Ok(None);
            }
            values[depth] = 0;
            depth -= 1;
            values[depth] += 1;
            continue;
        }
        spent += 1;
        if spent > budget {
            return Err(Error::SearchBudgetExceeded { budget });
        }
        if at_depth[depth]
            .iter()
            .all(|c| c.eval(ring, &values) == ring.zero())
        {
            depth += 1;
            if depth < n {
                values[depth] = 0;
            }
        } else {
            values[depth] += 1;
        }
    }
}

/// Canonical root of the first `l` constraints of `stream`.
pub fn solve_prefix_canonical(
    stream: &RingConstraintStream,
    l: usize,
    ring: &FiniteRing,
    budget: u64,
) -> Result<Option<PartialAssignment>> {
    finite_sat(&stream.prefix(l)?, ring, &PartialAssignment::new(), budget)
}

/// Solves each scheduled prefix canonically and reports, per requested
/// variable, whether its value agrees across the last `window` steps.
///
/// An unsatisfiable prefix refutes the finite-satisfiability hypothesis; the
/// error carries the shortest such prefix.
pub fn compactness_solve_ring(
    stream: &RingConstraintStream,
    ring: &FiniteRing,
    schedule: &[usize],
    window: usize,
    vars: &[usize],
    budget: u64,
) -> Result<StabilizationReport<usize>> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    if !check_schedule(schedule) {
        return Err(Error::InvalidArgument(
            "schedule must be strictly increasing".into(),
        ));
    }
    let mut solutions = Vec::with_capacity(schedule.len());
    let mut last_sat = 0usize;
    for &l in schedule {
        match solve_prefix_canonical(stream, l, ring, budget)? {
            Some(a) => {
                solutions.push(a);
                last_sat = l;
            }
            None => {
                // satisfiability is monotone in the prefix length
                let (mut lo, mut hi) = (last_sat, l);
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if solve_prefix_canonical(stream, mid, ring, budget)?.is_some() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Err(Error::PrefixUnsatisfiable(hi));
            }
        }
    }

    let last_level = schedule.last().copied().unwrap_or(0);
    let final_assignment = solutions.last().cloned().unwrap_or_default();
    let prefix = stream.prefix(last_level)?;

    let mut verified_prefix = 0;
    for p in &prefix {
        match eval_poly(p, &final_assignment, ring) {
            Ok(v) if v == ring.zero() => verified_prefix += 1,
            _ => break,
        }
    }

    let closed = closed_variables(stream, &prefix, last_level);
    let mut requested: Vec<usize> = vars.to_vec();
    requested.sort_unstable();
    requested.dedup();
    let coordinates = requested
        .into_iter()
        .map(|v| {
            let history: Vec<Option<usize>> = solutions.iter().map(|a| a.get(v)).collect();
            let value = window_value(&history, window, |w| w.iter().all(|x| *x == w[0]));
            let strength = value.map(|_| {
                if closed.contains(&v) {
                    Strength::Strong
                } else {
                    Strength::Heuristic
                }
            });
            CoordinateReport {
                id: v,
                status: if value.is_some() {
                    Status::Stabilized
                } else {
                    Status::Unstable
                },
                value,
                strength,
                history,
            }
        })
        .collect();

    Ok(StabilizationReport {
        schedule: schedule.to_vec(),
        window,
        coordinates,
        verified_prefix,
        final_assignment: final_assignment.iter().collect(),
        note: HEURISTIC_NOTE,
    })
}

/// Variables whose whole constraint component lies inside the first `level`
/// constraints, so no later constraint can change their canonical value.
fn closed_variables(
    stream: &RingConstraintStream,
    prefix: &[RingPolynomial],
    level: usize,
) -> BTreeSet<usize> {
    let bound = match &stream.mention_bound {
        Some(b) => b,
        None => return BTreeSet::new(),
    };
    let mut parent: BTreeMap<usize, usize> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<usize, usize>, v: usize) -> usize {
        let mut root = v;
        while let Some(&p) = parent.get(&root) {
            if p == root {
                break;
            }
            root = p;
        }
        let mut cur = v;
        while cur != root {
            let next = parent[&cur];
            parent.insert(cur, root);
            cur = next;
        }
        root
    }
    for p in prefix {
        let support: Vec<usize> = p.support().into_iter().collect();
        for &v in &support {
            parent.entry(v).or_insert(v);
        }
        for w in support.windows(2) {
            let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if a != b {
                parent.insert(a.max(b), a.min(b));
            }
        }
    }
    let vars: Vec<usize> = parent.keys().copied().collect();
    let mut open_roots = BTreeSet::new();
    for &v in &vars {
        let within = matches!(bound(v), Some(b) if b <= level);
        if !within {
            open_roots.insert(find(&mut parent, v));
        }
    }
    vars.into_iter()
        .filter(|&v| !open_roots.contains(&find(&mut parent, v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(n: usize) -> FiniteRing {
        FiniteRing::zmod(n).unwrap()
    }

    fn assignment(pairs: &[(usize, usize)]) -> PartialAssignment {
        pairs.iter().copied().collect()
    }

    #[test]
    fn eval_examples() {
        let p = RingPolynomial::sum_of(1, &[0, 1]);
        assert_eq!(
            eval_poly(&p, &assignment(&[(0, 1), (1, 1)]), &z(2)).unwrap(),
            0
        );
        assert_eq!(
            eval_poly(
                &RingPolynomial::constant(1),
                &PartialAssignment::new(),
                &z(2)
            )
            .unwrap(),
            1
        );
        let q = RingPolynomial::default()
            .with_term(1, &[0, 1])
            .with_term(1, &[2]);
        assert_eq!(
            eval_poly(&q, &assignment(&[(0, 2), (1, 2), (2, 2)]), &z(3)).unwrap(),
            0
        );
    }

    #[test]
    fn eval_reports_missing_variable() {
        let p = RingPolynomial::sum_of(1, &[0, 4]);
        assert_eq!(
            eval_poly(&p, &assignment(&[(0, 1)]), &z(2)),
            Err(Error::UnassignedVariable(4))
        );
    }

    #[test]
    fn zmod_tables_are_rings() {
        for n in 1..=9 {
            assert!(FiniteRing::zmod(n).is_ok(), "ℤ/{n}");
        }
    }

    #[test]
    fn corrupted_table_rejected() {
        let ring = z(4);
        let (add, mul) = ring.tables();
        let mut mul = mul.to_vec();
        mul[2][3] = 1;
        assert!(matches!(
            FiniteRing::new(add.to_vec(), mul, 0, 1),
            Err(Error::RingAxiom(_))
        ));
    }

    #[test]
    fn sat_examples() {
        let ring = z(2);
        let polys = vec![
            RingPolynomial::sum_of(1, &[0, 1]),
            RingPolynomial::default().with_term(1, &[0, 1]),
        ];
        let got = finite_sat(
            &polys,
            &ring,
            &PartialAssignment::new(),
            DEFAULT_SEARCH_BUDGET,
        )
        .unwrap();
        assert_eq!(got, Some(assignment(&[(0, 0), (1, 0)])));
        assert_eq!(
            finite_sat(&[], &ring, &PartialAssignment::new(), 10).unwrap(),
            Some(PartialAssignment::new())
        );
        assert_eq!(
            finite_sat(
                &[RingPolynomial::constant(1)],
                &ring,
                &PartialAssignment::new(),
                10
            )
            .unwrap(),
            None
        );
    }

    #[test]
    fn sat_respects_fixed() {
        let ring = z(2);
        let polys = vec![RingPolynomial::sum_of(1, &[0, 1])];
        let got = finite_sat(&polys, &ring, &assignment(&[(0, 1)]), 100).unwrap();
        assert_eq!(got, Some(assignment(&[(0, 1), (1, 1)])));
    }

    #[test]
    fn sat_budget() {
        // x0·x1·…·x19 = 1 in ℤ/2 needs all ones: the last of 2^20 leaves
        let ring = z(2);
        let vars: Vec<usize> = (0..20).collect();
        let polys = vec![RingPolynomial::default()
            .with_term(1, &vars)
            .with_term(1, &[])];
        assert_eq!(
            finite_sat(&polys, &ring, &PartialAssignment::new(), 1000),
            Err(Error::SearchBudgetExceeded { budget: 1000 })
        );
    }

    #[test]
    fn chain_prefix_is_all_zero() {
        let ring = z(2);
        let stream = RingConstraintStream::chain(&ring, None);
        for l in [0, 1, 5, 9] {
            let a = solve_prefix_canonical(&stream, l, &ring, DEFAULT_SEARCH_BUDGET)
                .unwrap()
                .unwrap();
            assert_eq!(a.len(), if l == 0 { 0 } else { l + 1 });
            assert!(a.iter().all(|(_, v)| v == 0));
        }
    }

    #[test]
    fn unsat_prefix() {
        let ring = z(2);
        let polys = vec![
            RingPolynomial::sum_of(1, &[0, 1]),
            RingPolynomial::sum_of(1, &[1, 2]),
            RingPolynomial::constant(1),
            RingPolynomial::sum_of(1, &[2, 3]),
        ];
        let stream = RingConstraintStream::from_list(polys);
        assert_eq!(
            solve_prefix_canonical(&stream, 4, &ring, 1000).unwrap(),
            None
        );
    }

    #[test]
    fn chain_stabilizes() {
        let ring = z(2);
        let stream = RingConstraintStream::chain(&ring, None);
        let report = compactness_solve_ring(
            &stream,
            &ring,
            &[4, 8, 12, 16],
            3,
            &[0, 1],
            DEFAULT_SEARCH_BUDGET,
        )
        .unwrap();
        assert_eq!(report.verified_prefix, 16);
        for v in [0, 1] {
            let c = report.coordinate(v).unwrap();
            assert_eq!(c.status, Status::Stabilized);
            assert_eq!(c.value, Some(0));
            assert_eq!(c.strength, Some(Strength::Heuristic));
        }
    }

    #[test]
    fn finite_chain_is_strong() {
        let ring = z(2);
        let stream = RingConstraintStream::chain(&ring, Some(16));
        let report =
            compactness_solve_ring(&stream, &ring, &[4, 8, 16], 2, &[0], DEFAULT_SEARCH_BUDGET)
                .unwrap();
        assert_eq!(
            report.coordinate(0).unwrap().strength,
            Some(Strength::Strong)
        );
    }

    #[test]
    fn forced_value() {
        let ring = z(2);
        let stream =
            RingConstraintStream::cycle(vec![RingPolynomial::constant(1).with_term(1, &[0])])
                .unwrap();
        let report = compactness_solve_ring(&stream, &ring, &[1, 2, 3], 3, &[0], 100).unwrap();
        assert_eq!(report.coordinate(0).unwrap().value, Some(1));
    }

    #[test]
    fn contradictory_pair() {
        let ring = z(2);
        let stream = RingConstraintStream::cycle(vec![
            RingPolynomial::sum_of(1, &[0]),
            RingPolynomial::constant(1).with_term(1, &[0]),
        ])
        .unwrap();
        assert_eq!(
            compactness_solve_ring(&stream, &ring, &[1, 4, 8], 2, &[0], 100),
            Err(Error::PrefixUnsatisfiable(2))
        );
    }

    #[test]
    fn independent_components_close_early() {
        let ring = z(2);
        // {x0 + 1, x1 + x2, x2 + x3}: x0's component is done after one constraint
        let polys = vec![
            RingPolynomial::constant(1).with_term(1, &[0]),
            RingPolynomial::sum_of(1, &[1, 2]),
            RingPolynomial::sum_of(1, &[2, 3]),
        ];
        let stream = RingConstraintStream::from_list(polys);
        let report = compactness_solve_ring(&stream, &ring, &[1, 2], 2, &[0, 1], 100).unwrap();
        assert_eq!(
            report.coordinate(0).unwrap().strength,
            Some(Strength::Strong)
        );
        assert_eq!(report.coordinate(1).unwrap().status, Status::Unstable);
    }

    #[test]
    fn rejects_bad_schedule() {
        let ring = z(2);
        let stream = RingConstraintStream::chain(&ring, None);
        assert!(compactness_solve_ring(&stream, &ring, &[4, 4], 1, &[0], 100).is_err());
        assert!(compactness_solve_ring(&stream, &ring, &[4], 0, &[0], 100).is_err());
    }
}

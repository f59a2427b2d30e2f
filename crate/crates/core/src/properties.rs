//! Seeded randomized checks of the inequalities everything else relies on.
//!
//! Each suite draws its cases from `ChaCha8Rng` so a seed pins the run.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linear::section::{section_matrix, GramSolver};
use crate::linear::{min_norm_solve, LinearRow};
use crate::ring::{
    finite_sat, FiniteRing, PartialAssignment, RingPolynomial, RingTerm, DEFAULT_SEARCH_BUDGET,
};
use crate::sequences::{
    head_coefficient_bound, lp_norm, p_norm, tail_norm_limit_check, truncate_tail, ConjugatePair,
    PSummableSequence,
};

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub seed: u64,
    pub cases: u64,
    pub failures: u64,
    /// Smallest `rhs − lhs` over the inequality checks, when the suite has any.
    pub worst_margin: Option<f64>,
    pub passed: bool,
}

struct Tally {
    cases: u64,
    failures: u64,
    margin: Option<f64>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            cases: 0,
            failures: 0,
            margin: None,
        }
    }

    fn check(&mut self, ok: bool) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
        }
    }

    /// Records `lhs ≤ rhs + slack`.
    fn le(&mut self, lhs: f64, rhs: f64, slack: f64) {
        let m = rhs - lhs;
        self.margin = Some(self.margin.map_or(m, |w| w.min(m)));
        self.check(lhs <= rhs + slack);
    }

    fn report(self, name: &'static str, seed: u64) -> SuiteReport {
        SuiteReport {
            name,
            seed,
            cases: self.cases,
            failures: self.failures,
            worst_margin: self.margin,
            passed: self.failures == 0,
        }
    }
}

/// A mixed corpus of 60 sequences in `ℓ^p`: 24 finite, 24 geometric and 12
/// from the formula generators.
pub fn sequence_corpus(p: f64, seed: u64) -> Result<Vec<PSummableSequence>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(60);
    for _ in 0..24 {
        let len = rng.random_range(0..=12);
        out.push(PSummableSequence::finite(
            p,
            (0..len).map(|_| rng.random_range(-5.0..5.0)).collect(),
        )?);
    }
    for _ in 0..24 {
        let len = rng.random_range(1..=6);
        let head = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
        out.push(PSummableSequence::geometric(
            p,
            head,
            rng.random_range(-0.95..0.95),
        )?);
    }
    for i in 0..12 {
        let mut params = BTreeMap::new();
        params.insert("scale".to_string(), rng.random_range(0.1..4.0));
        let name = match i % 3 {
            0 => "power",
            1 => "alternating_power",
            _ => "damped_cosine",
        };
        if name == "damped_cosine" {
            params.insert("rate".to_string(), rng.random_range(0.05..2.0));
            params.insert("freq".to_string(), rng.random_range(0.0..3.0));
        } else {
            // envelope decays like N^(−(sp−1)/p); a rate of at least 2
            // reaches 1e−8 well inside the default search depth
            params.insert(
                "s".to_string(),
                (2.0 * p + 1.0 + rng.random_range(0.0..1.0)) / p,
            );
        }
        out.push(PSummableSequence::registered(p, name, &params)?);
    }
    Ok(out)
}

/// Truncation closure, tail limits down to `1e−8` and `|c_N| ≤ ‖c‖` on a
/// [`sequence_corpus`] plus `random_cases` random finite sequences.
pub fn sequence_suite(seed: u64, random_cases: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new();
    for p in [1.5, 2.0, 3.0] {
        for c in sequence_corpus(p, rng.random())? {
            for n in [0usize, 1, 3, 10] {
                let tr = truncate_tail(&c, n);
                let mut ok = (0..=n).all(|k| tr.coeff(k) == 0.0)
                    && (n + 1..n + 40).all(|k| tr.coeff(k) == c.coeff(k));
                let env: Vec<f64> = (0..64).map(|k| tr.tail_envelope(k)).collect();
                ok &= env.windows(2).all(|w| w[1] <= w[0]);
                t.check(ok);
                for from in [0usize, 2, 7] {
                    let partial = lp_norm((from + 1..=200).map(|k| tr.coeff(k)), p);
                    t.le(partial, tr.tail_envelope(from), 1e-12);
                }
            }
            for e in 1..=8 {
                t.check(tail_norm_limit_check(&c, 10f64.powi(-e)).is_ok());
            }
        }
    }
    for _ in 0..random_cases {
        let p = rng.random_range(1.05..10.0);
        let len = rng.random_range(0..=16);
        let c = PSummableSequence::finite(
            p,
            (0..len).map(|_| rng.random_range(-10.0..10.0)).collect(),
        )?;
        let (lhs, rhs) = head_coefficient_bound(&c, rng.random_range(0..24), 1e-12)?;
        t.le(lhs, rhs, 1e-9);
    }
    Ok(t.report("sequences", seed))
}

/// `|a·x| ≤ ‖a‖_p ‖x‖_q` on random finite pairs with random conjugate
/// exponents in `(1, 10)`.
pub fn holder_suite(seed: u64, cases: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new();
    for _ in 0..cases {
        let p = rng.random_range(1.0 + 1.0 / 9.0..10.0);
        let pair = ConjugatePair::from_p(p)?;
        let len = rng.random_range(1..=20);
        let a: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
        let dot: f64 = a.iter().zip(&x).map(|(a, x)| a * x).sum();
        let sa = PSummableSequence::finite(pair.p(), a)?;
        let sx = PSummableSequence::finite(pair.q(), x)?;
        t.le(dot.abs(), p_norm(&sa, 1e-12)? * p_norm(&sx, 1e-12)?, 1e-9);
    }
    Ok(t.report("holder", seed))
}

/// Minimum-norm solves on random consistent sections with `k ≤ 4` rows and
/// `m ≤ 8` columns: residual at most `1e−9` and norm no larger than that of
/// sampled solutions `x + (I − P) z`.
pub fn min_norm_suite(seed: u64, cases: u64, samples: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new();
    let pair = ConjugatePair::euclidean();
    for _ in 0..cases {
        let k = rng.random_range(1..=4);
        let m = rng.random_range(1..=8);
        let mut a = DMatrix::from_fn(k, m, |_, _| rng.random_range(-3.0..3.0));
        if k > 1 && rng.random_bool(0.25) {
            let s = rng.random_range(-2.0..2.0);
            let row = a.row(0) * s;
            a.set_row(k - 1, &row);
        }
        let x0 = DVector::from_fn(m, |_, _| rng.random_range(-3.0..3.0));
        let b = &a * &x0;
        let rows = (0..k)
            .map(|i| {
                let seq = PSummableSequence::finite(2.0, a.row(i).iter().copied().collect())?;
                Ok(LinearRow::new(seq, b[i]))
            })
            .collect::<Result<Vec<_>>>()?;
        let x = DVector::from_vec(min_norm_solve(&rows, m - 1, pair)?);
        let residual = (&b - &a * &x).amax();
        t.le(residual, 0.0, 1e-9);
        let solver = GramSolver::new(section_matrix(&rows, m - 1))?;
        for _ in 0..samples {
            let z = DVector::from_fn(m, |_, _| rng.random_range(-3.0..3.0));
            let y = &x + &z - solver.apply_pinv(&(&a * &z));
            t.le(x.norm(), y.norm(), 1e-9);
        }
    }
    Ok(t.report("min_norm", seed))
}

/// Ring axioms for `ℤ/2 … ℤ/8`, rejection of a corrupted table, and
/// [`finite_sat`] against exhaustive enumeration on systems with at most 3
/// variables and 3 polynomials over rings of size at most 4.
pub fn ring_suite(seed: u64, cases: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new();
    let mut rings = Vec::new();
    for n in 2..=8 {
        let r = FiniteRing::zmod(n);
        t.check(r.is_ok());
        if let Ok(r) = r {
            if n <= 4 {
                rings.push(r);
            }
        }
    }
    let z4 = FiniteRing::zmod(4)?;
    let (add, mul) = z4.tables();
    let mut bad = add.to_vec();
    bad[1][1] = 3;
    t.check(FiniteRing::new(bad, mul.to_vec(), 0, 1).is_err());
    rings.push(klein_ring()?);

    for _ in 0..cases {
        let ring = &rings[rng.random_range(0..rings.len())];
        let vars = rng.random_range(1..=3);
        let polys: Vec<RingPolynomial> = (0..rng.random_range(1..=3))
            .map(|_| {
                RingPolynomial::new(
                    (0..rng.random_range(1..=3))
                        .map(|_| RingTerm {
                            coeff: rng.random_range(0..ring.size()),
                            vars: (0..rng.random_range(0..=2))
                                .map(|_| rng.random_range(0..vars))
                                .collect(),
                        })
                        .collect(),
                )
            })
            .collect();
        let got = finite_sat(
            &polys,
            ring,
            &PartialAssignment::new(),
            DEFAULT_SEARCH_BUDGET,
        )?;
        t.check(got == exhaustive_least_root(&polys, ring)?);
    }
    Ok(t.report("rings", seed))
}

/// `𝔽₂ × 𝔽₂` with componentwise operations, a non-cyclic ring of size 4.
fn klein_ring() -> Result<FiniteRing> {
    let add = (0..4).map(|a| (0..4).map(|b| a ^ b).collect()).collect();
    let mul = (0..4).map(|a| (0..4).map(|b| a & b).collect()).collect();
    FiniteRing::new(add, mul, 0, 3)
}

fn exhaustive_least_root(
    polys: &[RingPolynomial],
    ring: &FiniteRing,
) -> Result<Option<PartialAssignment>> {
    let vars: Vec<usize> = polys
        .iter()
        .flat_map(|p| p.support())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let s = ring.size();
    let total = s.pow(vars.len() as u32);
    for code in 0..total {
        // most significant digit belongs to the smallest variable id
        let mut a = PartialAssignment::new();
        let mut rest = code;
        for &v in vars.iter().rev() {
            a.insert(v, rest % s);
            rest /= s;
        }
        let mut all = true;
        for p in polys {
            if crate::ring::eval_poly(p, &a, ring)? != ring.zero() {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

/// Every suite at desk-scale sizes.
pub fn run_all(seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        sequence_suite(seed, 10_000)?,
        holder_suite(seed, 10_000)?,
        min_norm_suite(seed, 1_000, 8)?,
        ring_suite(seed, 2_000)?,
    ])
}

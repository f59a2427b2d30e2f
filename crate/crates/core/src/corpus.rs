//! Named system families: two classical counterexamples and a generator of
//! linear systems with a known solution.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boxes::{FiniteSupportFunction, FunctionStream, RealPolynomial};
use crate::error::{Error, Result};
use crate::linear::{InfiniteLinearSystem, LinearRow};
use crate::sequences::{lp_norm, ConjugatePair, PSummableSequence};

/// Abian's constraints `(x − k) − y_k²` for `k = 1..=n_max`.
///
/// Variable 0 is `x` and variable `k` is `y_k`; stream index `j` holds the
/// constraint for `k = j + 1`. The prefix of length `n` has a root exactly
/// when `x ≥ n`, so no bounded box holds roots of every prefix.
pub fn abian_family(n_max: usize) -> Result<FunctionStream> {
    if n_max == 0 {
        return Err(Error::InvalidArgument(
            "abian family needs n_max ≥ 1".into(),
        ));
    }
    Ok(FunctionStream::from_fn(Some(n_max), |j| {
        FiniteSupportFunction::polynomial(abian_polynomial(j + 1))
    }))
}

/// `x − k − y_k²` over variables `{0, k}`.
pub fn abian_polynomial(k: usize) -> RealPolynomial {
    RealPolynomial::default()
        .with_term(1.0, &[0])
        .with_term(-(k as f64), &[])
        .with_term(-1.0, &[k, k])
}

/// The least-`x` root of the first `n` constraints: `x = n`,
/// `y_k = √(n − k)`, indexed by variable id.
pub fn abian_root(n: usize) -> Vec<f64> {
    let mut x = vec![n as f64];
    x.extend((1..=n).map(|k| ((n - k) as f64).sqrt()));
    x
}

/// Helly's system `Σ_{n ≥ i} x_n = 1`, `i = 1, 2, …`, as an `ℓ^p` system.
///
/// The rows are eventually constant 1, so they lie in no `ℓ^p` and this
/// always fails with [`Error::NotPSummable`]. Use [`helly_rows`] for the
/// raw finite data.
pub fn helly_system(pair: ConjugatePair) -> Result<InfiniteLinearSystem> {
    let first = helly_row_sequence(pair.p(), 0)?;
    InfiniteLinearSystem::from_fn(pair, None, None, move |i| {
        LinearRow::new(
            helly_row_sequence(first.exponent(), i).expect("rows share the first row's fate"),
            1.0,
        )
    })
}

/// Row `i` (0-based) as a certified sequence: zeros, then a geometric run
/// of ratio 1 from index `i`.
pub fn helly_row_sequence(p: f64, i: usize) -> Result<PSummableSequence> {
    let mut head = vec![0.0; i];
    head.push(1.0);
    PSummableSequence::geometric(p, head, 1.0)
}

/// The first `k` rows truncated to `width` columns: row `i` (0-based) has
/// ones at columns `i..width`. Displayed 1-based, row `i + 1` sums
/// `x_{i+1}, x_{i+2}, …`.
pub fn helly_rows(k: usize, width: usize) -> Vec<(Vec<f64>, f64)> {
    (0..k)
        .map(|i| {
            (
                (0..width).map(|n| if n >= i { 1.0 } else { 0.0 }).collect(),
                1.0,
            )
        })
        .collect()
}

/// The same truncated rows as finitely supported linear rows in `ℓ^p`.
pub fn helly_truncated_rows(p: f64, k: usize, width: usize) -> Result<Vec<LinearRow>> {
    helly_rows(k, width)
        .into_iter()
        .map(|(a, b)| Ok(LinearRow::new(PSummableSequence::finite(p, a)?, b)))
        .collect()
}

/// The solution of the first `k` equations forced by telescoping:
/// `x_k = 1` (1-based), everything else 0. Returned 0-based, length `k`.
pub fn helly_prefix_solution(k: usize) -> Vec<f64> {
    let mut x = vec![0.0; k];
    if let Some(last) = x.last_mut() {
        *last = 1.0;
    }
    x
}

/// Rows with known solution `x_star`.
///
/// Row `i` draws its first `i + 1` coefficients from `ChaCha8Rng` seeded
/// with `row_seeds[i]`: off-diagonal entries in `[−1, 1]`, the entry at
/// index `i` with magnitude in `[0.5, 1]`. Beyond index `i` the row decays
/// geometrically with ratio `decay` from that entry. Consecutive rows then
/// combine into vectors supported on `0..=i`, so with `k` rows coordinates
/// `0..k−1` are pinned by the rows alone.
///
/// `b_i` is the dot product with `x_star` over its finite support, and the
/// norm budget is `1.5 · ‖x_star‖_q`.
pub fn planted_system(
    x_star: &[f64],
    row_seeds: &[u64],
    pair: ConjugatePair,
    decay: f64,
) -> Result<InfiniteLinearSystem> {
    if !(decay > 0.0 && decay < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "decay must lie in (0, 1), got {decay}"
        )));
    }
    if x_star.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "planted vector must be finite".into(),
        ));
    }
    let rows = row_seeds
        .iter()
        .enumerate()
        .map(|(i, &seed)| {
            let a = PSummableSequence::geometric(pair.p(), planted_head(i, seed), decay)?;
            let b = x_star.iter().enumerate().map(|(n, x)| a.coeff(n) * x).sum();
            Ok(LinearRow::new(a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    let budget = (1.5 * lp_norm(x_star.iter().copied(), pair.q())).max(f64::MIN_POSITIVE);
    InfiniteLinearSystem::from_rows(pair, rows, Some(budget))
}

fn planted_head(i: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut head: Vec<f64> = (0..i).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let magnitude = rng.random_range(0.5..=1.0);
    head.push(if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    });
    head
}

/// The planted vector `(1, 1/2, …, 1/2^{len−1})`.
pub fn halving_vector(len: usize) -> Vec<f64> {
    (0..len).map(|n| 0.5f64.powi(n as i32)).collect()
}

/// A system family built by name.
#[derive(Debug, Clone)]
pub enum Family {
    Box(FunctionStream),
    Linear(InfiniteLinearSystem),
}

/// A registered family name with scalar parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDescriptor {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

/// Registered family names.
pub const FAMILIES: [&str; 3] = ["abian", "helly", "planted"];

impl FamilyDescriptor {
    pub fn new(name: &str, params: BTreeMap<String, f64>) -> Result<Self> {
        if !FAMILIES.contains(&name) {
            return Err(Error::InvalidArgument(format!("unknown family {name:?}")));
        }
        Ok(FamilyDescriptor {
            name: name.to_string(),
            params,
        })
    }

    fn param(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match (self.params.get(key), default) {
            (Some(v), _) if v.is_finite() => Ok(*v),
            (Some(v), _) => Err(Error::InvalidArgument(format!(
                "{}: {key} = {v}",
                self.name
            ))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::InvalidArgument(format!(
                "{}: missing parameter {key}",
                self.name
            ))),
        }
    }

    fn count(&self, key: &str, default: Option<f64>) -> Result<usize> {
        let v = self.param(key, default)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::InvalidArgument(format!(
                "{}: {key} must be a count, got {v}",
                self.name
            )));
        }
        Ok(v as usize)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidArgument(format!(
                "{}: unknown parameter {k}",
                self.name
            ))),
            None => Ok(()),
        }
    }

    /// Builds the family.
    ///
    /// * `abian`: `n_max` (default 64).
    /// * `helly`: `p` (default 2); always fails with `NotPSummable`.
    /// * `planted`: `support` (default 10) entries of the halving vector,
    ///   `rows` (default 8) seeded `seed, seed + 1, …` (default seed 0),
    ///   exponent `p` (default 2), `decay` (default 0.5).
    pub fn build(&self) -> Result<Family> {
        match self.name.as_str() {
            "abian" => {
                self.check_keys(&["n_max"])?;
                Ok(Family::Box(abian_family(self.count("n_max", Some(64.0))?)?))
            }
            "helly" => {
                self.check_keys(&["p"])?;
                Ok(Family::Linear(helly_system(ConjugatePair::from_p(
                    self.param("p", Some(2.0))?,
                )?)?))
            }
            "planted" => {
                self.check_keys(&["support", "rows", "seed", "p", "decay"])?;
                let x = halving_vector(self.count("support", Some(10.0))?);
                let seed = self.count("seed", Some(0.0))? as u64;
                let seeds: Vec<u64> = (0..self.count("rows", Some(8.0))? as u64)
                    .map(|i| seed + i)
                    .collect();
                let pair = ConjugatePair::from_p(self.param("p", Some(2.0))?)?;
                Ok(Family::Linear(planted_system(
                    &x,
                    &seeds,
                    pair,
                    self.param("decay", Some(0.5))?,
                )?))
            }
            other => Err(Error::InvalidArgument(format!("unknown family {other:?}"))),
        }
    }
}

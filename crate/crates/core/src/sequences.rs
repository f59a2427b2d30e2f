//! Real sequences with `ℓ^p` structure.
//!
//! A [`PSummableSequence`] carries its coefficients together with a certified
//! *tail envelope*: a nonincreasing function `N ↦ e(N)` with
//! `‖c^N‖_p ≤ e(N)` and `e(N) → 0`, where `c^N` is the sequence with every
//! index `n ≤ N` zeroed. Norms, inner products and residual bounds are all
//! computed by summing a finite head and charging the rest to the envelope.
//!
//! Indexing is 0-based throughout.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest truncation depth searched before giving up with
/// [`Error::EnvelopeStall`].
pub const DEFAULT_MAX_DEPTH: usize = 1_000_000;

/// Tolerance on `|1/p + 1/q − 1|` for a pair to count as conjugate.
pub const CONJUGACY_TOL: f64 = 1e-12;

/// Slack allowed when comparing partial tail sums against an envelope.
pub const ENVELOPE_SLACK: f64 = 1e-12;

/// Hölder-conjugate exponents `p, q > 1` with `1/p + 1/q = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConjugatePair {
    p: f64,
    q: f64,
}

impl ConjugatePair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && q.is_finite() && p > 1.0 && q > 1.0) {
            return Err(Error::InvalidExponent(format!(
                "need finite p, q > 1, got p = {p}, q = {q}"
            )));
        }
        if (1.0 / p + 1.0 / q - 1.0).abs() > CONJUGACY_TOL {
            return Err(Error::InvalidExponent(format!(
                "p = {p} and q = {q} are not conjugate"
            )));
        }
        Ok(ConjugatePair { p, q })
    }

    /// The pair `(p, p/(p−1))`.
    pub fn from_p(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidExponent(format!(
                "need finite p > 1, got {p}"
            )));
        }
        ConjugatePair::new(p, p / (p - 1.0))
    }

    pub fn euclidean() -> Self {
        ConjugatePair { p: 2.0, q: 2.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

/// Which concrete representation backs a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Finite,
    Geometric,
    Formula,
}

/// Coefficient or envelope accessor for formula sequences.
pub type IndexFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

enum Repr {
    Finite {
        coeffs: Vec<f64>,
        /// `mass[n] = Σ_{m ≥ n} |c_m|^p`, length `coeffs.len() + 1`.
        mass: Vec<f64>,
    },
    Geometric {
        head: Vec<f64>,
        ratio: f64,
        /// `Σ_{m ≥ n, m < head.len()} |c_m|^p`.
        head_mass: Vec<f64>,
        /// `|last|^p`.
        last_pow: f64,
        /// `|ratio|^p`.
        ratio_pow: f64,
    },
    Formula {
        name: String,
        coeff: IndexFn,
        envelope: IndexFn,
    },
}

fn suffix_masses(values: &[f64], p: f64) -> Vec<f64> {
    let mut mass = vec![0.0; values.len() + 1];
    for n in (0..values.len()).rev() {
        mass[n] = mass[n + 1] + values[n].abs().powf(p);
    }
    mass
}

fn powi_clamped(base: f64, exp: usize) -> f64 {
    if exp > i32::MAX as usize {
        // |base| < 1 wherever this is used
        0.0
    } else {
        base.powi(exp as i32)
    }
}

impl Repr {
    fn coeff(&self, n: usize) -> f64 {
        match self {
            Repr::Finite { coeffs, .. } => coeffs.get(n).copied().unwrap_or(0.0),
            Repr::Geometric { head, ratio, .. } => {
                if n < head.len() {
                    head[n]
                } else {
                    let last = head[head.len() - 1];
                    last * powi_clamped(*ratio, n - head.len() + 1)
                }
            }
            Repr::Formula { coeff, .. } => coeff(n),
        }
    }

    /// Exact `Σ_{n ≥ start} |c_n|^p`, when the representation admits one.
    fn tail_mass(&self, start: usize) -> Option<f64> {
        match self {
            Repr::Finite { mass, .. } => Some(mass[start.min(mass.len() - 1)]),
            Repr::Geometric {
                head,
                head_mass,
                last_pow,
                ratio_pow,
                ..
            } => {
                let h = head.len();
                let head_part = head_mass[start.min(h)];
                // geometric terms n ≥ max(start, h) contribute
                // |last|^p · ρ^(n−h+1), summed in closed form
                let k = (start + 1).saturating_sub(h).max(1);
                let geo = last_pow * powi_clamped(*ratio_pow, k) / (1.0 - ratio_pow);
                Some(head_part + geo)
            }
            Repr::Formula { .. } => None,
        }
    }

    fn envelope(&self, n: usize, p: f64) -> f64 {
        match self {
            Repr::Formula { envelope, .. } => envelope(n),
            _ => self
                .tail_mass(n.saturating_add(1))
                .expect("closed-form tail")
                .powf(1.0 / p),
        }
    }
}

/// An element of `ℓ^p` with a certified tail-norm envelope.
///
/// Cloning is cheap: the underlying representation is shared.
#[derive(Clone)]
pub struct PSummableSequence {
    exponent: f64,
    repr: Arc<Repr>,
    /// Indices `n ≤ cut` read as zero (the tail truncation `c^cut`).
    cut: Option<usize>,
}

impl fmt::Debug for PSummableSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("PSummableSequence");
        d.field("exponent", &self.exponent);
        match &*self.repr {
            Repr::Finite { coeffs, .. } => d.field("finite", coeffs),
            Repr::Geometric { head, ratio, .. } => d.field("head", head).field("ratio", ratio),
            Repr::Formula { name, .. } => d.field("formula", name),
        };
        d.field("cut", &self.cut).finish()
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(format!(
            "sequence exponent must exceed 1, got {p}"
        )))
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::InvalidArgument(format!(
            "coefficient {i} is not finite"
        ))),
        None => Ok(()),
    }
}

impl PSummableSequence {
    /// Finitely supported sequence `(c_0, …, c_{len−1}, 0, 0, …)`.
    pub fn finite(p: f64, coeffs: Vec<f64>) -> Result<Self> {
        check_exponent(p)?;
        check_finite(&coeffs)?;
        let mass = suffix_masses(&coeffs, p);
        Ok(PSummableSequence {
            exponent: p,
            repr: Arc::new(Repr::Finite { coeffs, mass }),
            cut: None,
        })
    }

    pub fn zero(p: f64) -> Result<Self> {
        PSummableSequence::finite(p, Vec::new())
    }

    /// The unit vector `e_n`.
    pub fn unit(p: f64, n: usize) -> Result<Self> {
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        PSummableSequence::finite(p, coeffs)
    }

    /// Explicit head followed by a geometric continuation of the last head
    /// entry: `c_n = head[h−1] · ratio^(n−h+1)` for `n ≥ h`.
    ///
    /// Fails with [`Error::NotPSummable`] when `|ratio| ≥ 1` and the last head
    /// entry is nonzero, since the terms then do not tend to zero.
    pub fn geometric(p: f64, head: Vec<f64>, ratio: f64) -> Result<Self> {
        check_exponent(p)?;
        check_finite(&head)?;
        if !ratio.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ratio {ratio} is not finite"
            )));
        }
        let last = match head.last() {
            Some(&v) => v,
            None => return PSummableSequence::zero(p),
        };
        let ratio = if last == 0.0 { 0.0 } else { ratio };
        if ratio.abs() >= 1.0 {
            return Err(Error::NotPSummable {
                reason: format!(
                    "geometric tail with ratio {ratio} and nonzero anchor {last}: terms do not tend to zero"
                ),
            });
        }
        let head_mass = suffix_masses(&head, p);
        Ok(PSummableSequence {
            exponent: p,
            repr: Arc::new(Repr::Geometric {
                last_pow: last.abs().powf(p),
                ratio_pow: ratio.abs().powf(p),
                head,
                ratio,
                head_mass,
            }),
            cut: None,
        })
    }

    /// Sequence given by a closed-form coefficient and a user-supplied tail
    /// envelope. The envelope is validated by sampling (see
    /// [`validate_envelope`]); a sampled violation is reported as
    /// [`Error::NotPSummable`].
    pub fn formula(p: f64, name: &str, coeff: IndexFn, envelope: IndexFn) -> Result<Self> {
        check_exponent(p)?;
        validate_envelope(p, coeff.as_ref(), envelope.as_ref())?;
        Ok(PSummableSequence {
            exponent: p,
            repr: Arc::new(Repr::Formula {
                name: name.to_string(),
                coeff,
                envelope,
            }),
            cut: None,
        })
    }

    /// Registered formula generators, addressable from system files.
    ///
    /// | name | coefficient | parameters |
    /// |---|---|---|
    /// | `power` | `scale·(n+1)^(−s)` | `scale` (default 1), `s` with `s·p > 1` |
    /// | `alternating_power` | `(−1)^n·scale·(n+1)^(−s)` | as `power` |
    /// | `damped_cosine` | `scale·e^(−rate·n)·cos(freq·n)` | `scale`, `rate > 0`, `freq` |
    /// | `ones` | `1` for `n ≥ start`, else `0` | `start`; never p-summable |
    pub fn registered(p: f64, name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        check_exponent(p)?;
        let get = |key: &str, default: Option<f64>| -> Result<f64> {
            match params.get(key).copied().or(default) {
                Some(v) if v.is_finite() => Ok(v),
                Some(v) => Err(Error::InvalidArgument(format!(
                    "{name}: parameter {key} = {v}"
                ))),
                None => Err(Error::InvalidArgument(format!(
                    "{name}: missing parameter {key}"
                ))),
            }
        };
        match name {
            "power" | "alternating_power" => {
                let scale = get("scale", Some(1.0))?;
                let s = get("s", None)?;
                let sp = s * p;
                if sp <= 1.0 {
                    return Err(Error::NotPSummable {
                        reason: format!("Σ (n+1)^(−{sp}) diverges"),
                    });
                }
                let alternating = name == "alternating_power";
                let coeff: IndexFn = Arc::new(move |n| {
                    let v = scale * ((n + 1) as f64).powf(-s);
                    if alternating && n % 2 == 1 {
                        -v
                    } else {
                        v
                    }
                });
                // Σ_{n>N} (n+1)^(−sp) ≤ ∫_{N+1}^∞ t^(−sp) dt
                let envelope: IndexFn = Arc::new(move |n| {
                    scale.abs() * (((n + 1) as f64).powf(1.0 - sp) / (sp - 1.0)).powf(1.0 / p)
                });
                PSummableSequence::formula(p, name, coeff, envelope)
            }
            "damped_cosine" => {
                let scale = get("scale", Some(1.0))?;
                let rate = get("rate", None)?;
                let freq = get("freq", Some(0.0))?;
                if rate <= 0.0 {
                    return Err(Error::NotPSummable {
                        reason: format!("damped_cosine needs rate > 0, got {rate}"),
                    });
                }
                let coeff: IndexFn =
                    Arc::new(move |n| scale * (-rate * n as f64).exp() * (freq * n as f64).cos());
                // |c_n| ≤ |scale|·e^(−rate·n), geometric tail from n = N+1
                let rho = (-rate * p).exp();
                let envelope: IndexFn = Arc::new(move |n| {
                    let mass =
                        scale.abs().powf(p) * (-rate * p * (n + 1) as f64).exp() / (1.0 - rho);
                    mass.powf(1.0 / p)
                });
                PSummableSequence::formula(p, name, coeff, envelope)
            }
            "ones" => Err(Error::NotPSummable {
                reason: "constant nonzero tail: partial sums of 1^p diverge".to_string(),
            }),
            other => Err(Error::InvalidArgument(format!(
                "unknown formula generator {other:?}"
            ))),
        }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn representation(&self) -> Representation {
        match &*self.repr {
            Repr::Finite { .. } => Representation::Finite,
            Repr::Geometric { .. } => Representation::Geometric,
            Repr::Formula { .. } => Representation::Formula,
        }
    }

    pub fn coeff(&self, n: usize) -> f64 {
        match self.cut {
            Some(cut) if n <= cut => 0.0,
            _ => self.repr.coeff(n),
        }
    }

    /// Certified upper bound on `‖c^n‖_p`, nonincreasing in `n`.
    pub fn tail_envelope(&self, n: usize) -> f64 {
        let n = match self.cut {
            Some(cut) => n.max(cut),
            None => n,
        };
        self.repr.envelope(n, self.exponent)
    }

    /// First `len` coefficients.
    pub fn head(&self, len: usize) -> Vec<f64> {
        (0..len).map(|n| self.coeff(n)).collect()
    }

    /// Number of leading coordinates outside of which the sequence is
    /// identically zero, when that is known exactly.
    pub fn support_len(&self) -> Option<usize> {
        match &*self.repr {
            Repr::Finite { coeffs, .. } => {
                let len = coeffs.iter().rposition(|&v| v != 0.0).map_or(0, |i| i + 1);
                match self.cut {
                    Some(cut) if len <= cut + 1 => Some(0),
                    _ => Some(len),
                }
            }
            _ => None,
        }
    }

    /// First index that can be nonzero.
    fn first_index(&self) -> usize {
        self.cut.map_or(0, |c| c + 1)
    }

    /// Exact `‖c‖_p` for the closed-form representations.
    fn exact_norm(&self) -> Option<f64> {
        self.repr
            .tail_mass(self.first_index())
            .map(|m| m.powf(1.0 / self.exponent))
    }
}

/// Checks a formula envelope against its coefficients on a deterministic
/// sample of depths: finiteness, monotonicity, and partial tail sums
/// `(Σ_{N<n≤K} |c_n|^p)^(1/p) ≤ e(N) + 1e−12` over a window of `K`.
pub fn validate_envelope(
    p: f64,
    coeff: &dyn Fn(usize) -> f64,
    envelope: &dyn Fn(usize) -> f64,
) -> Result<()> {
    const WINDOW: usize = 2048;
    let mut depths: Vec<usize> = (0..16).collect();
    let mut d = 16;
    while d <= 1 << 20 {
        depths.push(d);
        d *= 2;
    }
    let mut previous = f64::INFINITY;
    for &n in &depths {
        let e = envelope(n);
        if !(e.is_finite() && e >= 0.0) {
            return Err(Error::NotPSummable {
                reason: format!("envelope at depth {n} is {e}"),
            });
        }
        if e > previous {
            return Err(Error::NotPSummable {
                reason: format!("envelope increases at depth {n}"),
            });
        }
        previous = e;
    }
    for &n in depths.iter().take(24) {
        let bound = envelope(n);
        let mut mass = 0.0;
        for k in n + 1..=n + WINDOW {
            let c = coeff(k);
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "coefficient {k} is not finite"
                )));
            }
            mass += c.abs().powf(p);
            if mass.powf(1.0 / p) > bound + ENVELOPE_SLACK {
                return Err(Error::NotPSummable {
                    reason: format!(
                        "partial tail sum over ({n}, {k}] exceeds the envelope {bound:e}"
                    ),
                });
            }
        }
    }
    Ok(())
}

/// The tail truncation `c^N`: zeroes every index `n ≤ N` and keeps the tail.
pub fn truncate_tail(c: &PSummableSequence, n: usize) -> PSummableSequence {
    PSummableSequence {
        exponent: c.exponent,
        repr: Arc::clone(&c.repr),
        cut: Some(c.cut.map_or(n, |cut| cut.max(n))),
    }
}

/// Depth-limited searches over tail envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TailSearch {
    pub max_depth: usize,
}

impl Default for TailSearch {
    fn default() -> Self {
        TailSearch {
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl TailSearch {
    pub fn new(max_depth: usize) -> Self {
        TailSearch { max_depth }
    }

    /// Least `N ≤ max_depth` with `e(N) < threshold` (or `≤` when not
    /// `strict`). Relies on the envelope being nonincreasing.
    fn least_depth(&self, c: &PSummableSequence, threshold: f64, strict: bool) -> Result<usize> {
        let ok = |n: usize| {
            let e = c.tail_envelope(n);
            if strict {
                e < threshold
            } else {
                e <= threshold
            }
        };
        if ok(0) {
            return Ok(0);
        }
        let stall = Error::EnvelopeStall {
            threshold,
            max_depth: self.max_depth,
        };
        let (mut lo, mut hi) = (0usize, 1usize);
        loop {
            if hi >= self.max_depth {
                hi = self.max_depth;
                if !ok(hi) {
                    return Err(stall);
                }
                break;
            }
            if ok(hi) {
                break;
            }
            lo = hi;
            hi *= 2;
        }
        // invariant: !ok(lo), ok(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `‖c‖_p` within `tol`.
    ///
    /// Closed-form representations are evaluated exactly; formulas are summed
    /// up to the least depth whose envelope is at most `tol`.
    pub fn p_norm(&self, c: &PSummableSequence, tol: f64) -> Result<f64> {
        check_tol(tol)?;
        if let Some(v) = c.exact_norm() {
            return Ok(v);
        }
        let depth = self.least_depth(c, tol, false)?;
        Ok(lp_norm(
            (c.first_index()..=depth).map(|n| c.coeff(n)),
            c.exponent,
        ))
    }

    /// `(|c_N|, ‖c‖_p)`; the second component is within `tol` of the norm.
    pub fn head_coefficient_bound(
        &self,
        c: &PSummableSequence,
        n: usize,
        tol: f64,
    ) -> Result<(f64, f64)> {
        Ok((c.coeff(n).abs(), self.p_norm(c, tol)?))
    }

    /// Least depth `N` with `e(N) < eps`: a constructive witness that the
    /// tail norms tend to zero.
    pub fn tail_norm_limit_check(&self, c: &PSummableSequence, eps: f64) -> Result<usize> {
        check_tol(eps)?;
        self.least_depth(c, eps, true)
    }

    /// `a · x` within `tol`. The neglected tail is bounded by Hölder:
    /// `|a^N · x| ≤ ‖a^N‖_p ‖x‖_q`, with the roles of `a` and `x` swapped when
    /// that gives a shorter head.
    pub fn certified_dot(
        &self,
        a: &PSummableSequence,
        x: &PSummableSequence,
        pair: ConjugatePair,
        tol: f64,
    ) -> Result<f64> {
        check_tol(tol)?;
        if (a.exponent - pair.p).abs() > CONJUGACY_TOL
            || (x.exponent - pair.q).abs() > CONJUGACY_TOL
        {
            return Err(Error::InvalidExponent(format!(
                "dot of ℓ^{} with ℓ^{} under pair ({}, {})",
                a.exponent, x.exponent, pair.p, pair.q
            )));
        }
        let half = tol / 2.0;
        let x_bound = self.p_norm(x, half)? + half;
        let a_bound = self.p_norm(a, half)? + half;
        if x_bound == 0.0 || a_bound == 0.0 {
            return Ok(0.0);
        }
        let via_a = self.least_depth(a, tol / x_bound, false);
        let via_x = self.least_depth(x, tol / a_bound, false);
        let depth = match (via_a, via_x) {
            (Ok(n), Ok(m)) => n.min(m),
            (Ok(n), Err(_)) | (Err(_), Ok(n)) => n,
            (Err(e), Err(_)) => return Err(e),
        };
        let start = a.first_index().max(x.first_index());
        Ok((start..=depth).map(|n| a.coeff(n) * x.coeff(n)).sum())
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

/// `(Σ |v|^p)^(1/p)`, scaled by the largest magnitude to avoid overflow.
pub fn lp_norm<I: IntoIterator<Item = f64>>(values: I, p: f64) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = values.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    scale * sum.powf(1.0 / p)
}

/// `‖c‖_p` within `tol` using [`DEFAULT_MAX_DEPTH`].
pub fn p_norm(c: &PSummableSequence, tol: f64) -> Result<f64> {
    TailSearch::default().p_norm(c, tol)
}

/// See [`TailSearch::head_coefficient_bound`].
pub fn head_coefficient_bound(c: &PSummableSequence, n: usize, tol: f64) -> Result<(f64, f64)> {
    TailSearch::default().head_coefficient_bound(c, n, tol)
}

/// See [`TailSearch::tail_norm_limit_check`].
pub fn tail_norm_limit_check(c: &PSummableSequence, eps: f64) -> Result<usize> {
    TailSearch::default().tail_norm_limit_check(c, eps)
}

/// See [`TailSearch::certified_dot`].
pub fn certified_dot(
    a: &PSummableSequence,
    x: &PSummableSequence,
    pair: ConjugatePair,
    tol: f64,
) -> Result<f64> {
    TailSearch::default().certified_dot(a, x, pair, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halves(p: f64) -> PSummableSequence {
        PSummableSequence::geometric(p, vec![1.0], 0.5).unwrap()
    }

    #[test]
    fn conjugate_pairs() {
        let pair = ConjugatePair::from_p(3.0).unwrap();
        assert!((pair.q() - 1.5).abs() < 1e-15);
        assert!(ConjugatePair::new(2.0, 3.0).is_err());
        assert!(ConjugatePair::new(1.0, f64::INFINITY).is_err());
        assert!(ConjugatePair::from_p(0.5).is_err());
    }

    #[test]
    fn truncate_geometric_keeps_tail() {
        let t = truncate_tail(&halves(2.0), 1);
        assert_eq!(t.head(4), vec![0.0, 0.0, 0.25, 0.125]);
    }

    #[test]
    fn truncate_at_zero_only_clears_first() {
        let c = PSummableSequence::finite(2.0, vec![3.0, 4.0, 5.0]).unwrap();
        let t = truncate_tail(&c, 0);
        assert_eq!(t.head(4), vec![0.0, 4.0, 5.0, 0.0]);
    }

    #[test]
    fn truncate_past_support_is_zero() {
        let c = PSummableSequence::finite(2.0, vec![1.0, 2.0, 3.0]).unwrap();
        let t = truncate_tail(&c, 5);
        assert!(t.head(10).iter().all(|&v| v == 0.0));
        assert_eq!(t.tail_envelope(0), 0.0);
        assert_eq!(t.support_len(), Some(0));
    }

    #[test]
    fn truncated_envelope_shifts() {
        let c = halves(2.0);
        let t = truncate_tail(&c, 4);
        assert_eq!(t.tail_envelope(1), c.tail_envelope(4));
        assert_eq!(t.tail_envelope(9), c.tail_envelope(9));
    }

    #[test]
    fn norms() {
        let c = PSummableSequence::finite(2.0, vec![3.0, 4.0]).unwrap();
        assert_eq!(p_norm(&c, 1e-9).unwrap(), 5.0);
        assert_eq!(
            p_norm(&PSummableSequence::zero(3.0).unwrap(), 1e-9).unwrap(),
            0.0
        );
        let g = p_norm(&halves(2.0), 1e-12).unwrap();
        assert!((g - (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn formula_norm_sums_head() {
        let mut params = BTreeMap::new();
        params.insert("rate".to_string(), 0.5_f64.ln().abs());
        let c = PSummableSequence::registered(2.0, "damped_cosine", &params).unwrap();
        // same sequence as halves(), summed instead of closed form
        let v = p_norm(&c, 1e-10).unwrap();
        assert!((v - (4.0f64 / 3.0).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn head_bound_examples() {
        let c = PSummableSequence::finite(2.0, vec![3.0, 4.0]).unwrap();
        assert_eq!(head_coefficient_bound(&c, 1, 1e-9).unwrap(), (4.0, 5.0));
        assert_eq!(head_coefficient_bound(&c, 7, 1e-9).unwrap(), (0.0, 5.0));
    }

    #[test]
    fn limit_check_geometric() {
        // e(N) = (4/3)^(1/2) · 2^−(N+1); least N with e(N) < 0.1 is 3
        let n = tail_norm_limit_check(&halves(2.0), 0.1).unwrap();
        assert_eq!(n, 3);
    }

    #[test]
    fn limit_check_finite_support() {
        let c = PSummableSequence::finite(2.0, vec![1.0, -1.0, 2.0]).unwrap();
        for eps in [1.0, 1e-3, 1e-12] {
            assert!(tail_norm_limit_check(&c, eps).unwrap() <= 3);
        }
    }

    #[test]
    fn slow_envelope_stalls() {
        let mut params = BTreeMap::new();
        params.insert("s".to_string(), 0.51);
        let c = PSummableSequence::registered(2.0, "power", &params).unwrap();
        assert!(matches!(
            tail_norm_limit_check(&c, 0.5),
            Err(Error::EnvelopeStall { .. })
        ));
    }

    #[test]
    fn divergent_rows_refused() {
        assert!(matches!(
            PSummableSequence::geometric(2.0, vec![0.0, 1.0], 1.0),
            Err(Error::NotPSummable { .. })
        ));
        let mut params = BTreeMap::new();
        params.insert("s".to_string(), 0.5);
        assert!(matches!(
            PSummableSequence::registered(2.0, "power", &params),
            Err(Error::NotPSummable { .. })
        ));
    }

    #[test]
    fn lying_envelope_is_caught() {
        let coeff: IndexFn = Arc::new(|_| 1.0);
        let envelope: IndexFn = Arc::new(|n| 10.0 / (n + 1) as f64);
        assert!(matches!(
            PSummableSequence::formula(2.0, "ones", coeff, envelope),
            Err(Error::NotPSummable { .. })
        ));
    }

    #[test]
    fn dot_examples() {
        let pair = ConjugatePair::euclidean();
        let a = PSummableSequence::finite(2.0, vec![3.0, 4.0]).unwrap();
        let x = PSummableSequence::finite(2.0, vec![1.0, 1.0]).unwrap();
        let v = certified_dot(&a, &x, pair, 1e-9).unwrap();
        assert_eq!(v, 7.0);
        assert!(v <= 5.0 * 2f64.sqrt());

        let zero = PSummableSequence::zero(2.0).unwrap();
        assert_eq!(certified_dot(&a, &zero, pair, 1e-9).unwrap(), 0.0);

        let e0 = PSummableSequence::unit(2.0, 0).unwrap();
        let g = halves(2.0);
        assert_eq!(certified_dot(&e0, &g, pair, 1e-9).unwrap(), 1.0);
    }

    #[test]
    fn dot_of_geometric_tails() {
        // Σ 2^−n 3^−n = 1 / (1 − 1/6)
        let pair = ConjugatePair::euclidean();
        let a = halves(2.0);
        let x = PSummableSequence::geometric(2.0, vec![1.0], 1.0 / 3.0).unwrap();
        let v = certified_dot(&a, &x, pair, 1e-10).unwrap();
        assert!((v - 1.2).abs() <= 1e-10);
    }

    #[test]
    fn dot_rejects_mismatched_exponents() {
        let pair = ConjugatePair::from_p(3.0).unwrap();
        let a = PSummableSequence::zero(2.0).unwrap();
        assert!(certified_dot(&a, &a, pair, 1e-9).is_err());
    }
}

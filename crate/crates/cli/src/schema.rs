//! Input documents and their conversion into solver types.

use std::collections::BTreeMap;

use compactness::boxes::{
    FiniteSupportFunction, FunctionStream, RealPolynomial, RealTerm, VariableBox,
};
use compactness::corpus::{planted_system, Family, FamilyDescriptor};
use compactness::linear::{
    envelope_from_solution, CoordinateBounds, EnvelopeSequence, InfiniteLinearSystem, LinearRow,
};
use compactness::ring::{FiniteRing, RingConstraintStream, RingPolynomial, RingTerm};
use compactness::sequences::{ConjugatePair, PSummableSequence};
use serde::{Deserialize, Serialize};

/// An `ℓ^p` sequence literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Finite {
        coeffs: Vec<f64>,
    },
    Geometric {
        head: Vec<f64>,
        ratio: f64,
    },
    Formula {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

impl SequenceSpec {
    pub fn build(&self, p: f64) -> compactness::Result<PSummableSequence> {
        match self {
            SequenceSpec::Finite { coeffs } => PSummableSequence::finite(p, coeffs.clone()),
            SequenceSpec::Geometric { head, ratio } => {
                PSummableSequence::geometric(p, head.clone(), *ratio)
            }
            SequenceSpec::Formula { name, params } => {
                PSummableSequence::registered(p, name, params)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term<C> {
    pub coeff: C,
    #[serde(default)]
    pub vars: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RingSpec {
    Zmod {
        zmod: usize,
    },
    Tables {
        size: usize,
        add: Vec<Vec<usize>>,
        mul: Vec<Vec<usize>>,
        zero: usize,
        one: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub len: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstraintsSpec {
    List(Vec<Vec<Term<usize>>>),
    /// `x_k + x_{k+1}` for `k = 0, 1, …`.
    Chain {
        chain: ChainSpec,
    },
    /// The listed polynomials repeated forever.
    Cycle {
        cycle: Vec<Vec<Term<usize>>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSystem {
    pub ring: RingSpec,
    pub constraints: ConstraintsSpec,
    /// Variables to report; all variables of the last prefix when absent.
    pub vars: Option<Vec<usize>>,
}

fn ring_poly(terms: &[Term<usize>]) -> RingPolynomial {
    RingPolynomial::new(
        terms
            .iter()
            .map(|t| RingTerm {
                coeff: t.coeff,
                vars: t.vars.clone(),
            })
            .collect(),
    )
}

impl RingSystem {
    pub fn build(&self) -> compactness::Result<(FiniteRing, RingConstraintStream)> {
        let ring = match &self.ring {
            RingSpec::Zmod { zmod } => FiniteRing::zmod(*zmod)?,
            RingSpec::Tables {
                size,
                add,
                mul,
                zero,
                one,
            } => {
                if add.len() != *size {
                    return Err(compactness::Error::RingAxiom(format!(
                        "size is {size} but the addition table has {} rows",
                        add.len()
                    )));
                }
                FiniteRing::new(add.clone(), mul.clone(), *zero, *one)?
            }
        };
        let stream = match &self.constraints {
            ConstraintsSpec::List(polys) => {
                RingConstraintStream::from_list(polys.iter().map(|p| ring_poly(p)).collect())
            }
            ConstraintsSpec::Chain { chain } => RingConstraintStream::chain(&ring, chain.len),
            ConstraintsSpec::Cycle { cycle } => {
                RingConstraintStream::cycle(cycle.iter().map(|p| ring_poly(p)).collect())?
            }
        };
        Ok((ring, stream))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub a: SequenceSpec,
    pub b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Explicit planted vector, replacing the halving vector.
    pub x_star: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RowsSpec {
    List(Vec<RowSpec>),
    Family(FamilySpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvelopeSpec {
    /// `e_N = ‖w^N‖_q` for a known solution `w`.
    Witness {
        witness: SequenceSpec,
        depth: Option<usize>,
    },
    /// `e_N` listed; beyond the list the envelope is 0.
    Values { values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundsSpec {
    Uniform { uniform: f64 },
    Values { values: Vec<f64>, default: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxSpec {
    pub envelope: EnvelopeSpec,
    pub bounds: BoundsSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSystem {
    pub p: f64,
    pub q: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub rows: RowsSpec,
    pub approx: Option<ApproxSpec>,
}

impl LinearSystem {
    pub fn pair(&self) -> compactness::Result<ConjugatePair> {
        match self.q {
            Some(q) => ConjugatePair::new(self.p, q),
            None => ConjugatePair::from_p(self.p),
        }
    }

    pub fn build(&self) -> compactness::Result<InfiniteLinearSystem> {
        let pair = self.pair()?;
        let sys = match &self.rows {
            RowsSpec::List(rows) => {
                let rows = rows
                    .iter()
                    .map(|r| Ok(LinearRow::new(r.a.build(pair.p())?, r.b)))
                    .collect::<compactness::Result<Vec<_>>>()?;
                InfiniteLinearSystem::from_rows(pair, rows, None)?
            }
            RowsSpec::Family(f) => {
                let mut params = f.params.clone();
                if f.family != "helly" && f.family != "planted" {
                    return Err(compactness::Error::InvalidArgument(format!(
                        "{} is not a linear family",
                        f.family
                    )));
                }
                match params.get("p") {
                    Some(&p) if p != pair.p() => {
                        return Err(compactness::Error::InvalidArgument(format!(
                            "family exponent {p} disagrees with p = {}",
                            pair.p()
                        )))
                    }
                    _ => {
                        params.insert("p".into(), pair.p());
                    }
                }
                match &f.x_star {
                    Some(x) if f.family == "planted" => {
                        let count =
                            |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
                        let seed = count("seed", 0.0) as u64;
                        let seeds: Vec<u64> =
                            (0..count("rows", 8.0) as u64).map(|i| seed + i).collect();
                        planted_system(x, &seeds, pair, count("decay", 0.5))?
                    }
                    Some(_) => {
                        return Err(compactness::Error::InvalidArgument(
                            "x_star only applies to planted".into(),
                        ))
                    }
                    None => match FamilyDescriptor::new(&f.family, params)?.build()? {
                        Family::Linear(sys) => sys,
                        Family::Box(_) => unreachable!("checked above"),
                    },
                }
            }
        };
        match self.m {
            Some(m) => sys.with_norm_budget(Some(m)),
            None => Ok(sys),
        }
    }

    pub fn approx(
        &self,
        max_n: usize,
    ) -> compactness::Result<Option<(EnvelopeSequence, CoordinateBounds)>> {
        let Some(a) = &self.approx else {
            return Ok(None);
        };
        let pair = self.pair()?;
        let e = match &a.envelope {
            EnvelopeSpec::Witness { witness, depth } => {
                envelope_from_solution(&witness.build(pair.q())?, depth.unwrap_or(max_n))?
            }
            EnvelopeSpec::Values { values } => {
                let values = values.clone();
                EnvelopeSequence::from_fn(move |n| values.get(n).copied().unwrap_or(0.0))
            }
        };
        let bounds = match &a.bounds {
            BoundsSpec::Uniform { uniform } => CoordinateBounds::uniform(*uniform),
            BoundsSpec::Values { values, default } => {
                CoordinateBounds::from_values(values.clone(), *default)
            }
        };
        Ok(Some((e, bounds)))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionsSpec {
    List(Vec<Vec<Term<f64>>>),
    Family {
        family: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxSpec {
    Uniform {
        uniform: f64,
    },
    PerVar {
        per_var: BTreeMap<String, f64>,
        default: Option<f64>,
    },
}

impl BoxSpec {
    pub fn build(&self) -> compactness::Result<VariableBox> {
        match self {
            BoxSpec::Uniform { uniform } => VariableBox::uniform(*uniform),
            BoxSpec::PerVar { per_var, default } => {
                let mut bounds = BTreeMap::new();
                for (k, v) in per_var {
                    let id: usize = k.parse().map_err(|_| {
                        compactness::Error::InvalidArgument(format!(
                            "box.per_var: {k:?} is not a variable id"
                        ))
                    })?;
                    bounds.insert(id, *v);
                }
                VariableBox::per_var(bounds, *default)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSystem {
    pub functions: FunctionsSpec,
    #[serde(rename = "box")]
    pub bx: Option<BoxSpec>,
}

impl BoxSystem {
    pub fn stream(&self) -> compactness::Result<FunctionStream> {
        match &self.functions {
            FunctionsSpec::List(fs) => Ok(FunctionStream::from_list(
                fs.iter()
                    .map(|terms| {
                        FiniteSupportFunction::polynomial(RealPolynomial::new(
                            terms
                                .iter()
                                .map(|t| RealTerm {
                                    coeff: t.coeff,
                                    vars: t.vars.clone(),
                                })
                                .collect(),
                        ))
                    })
                    .collect(),
            )),
            FunctionsSpec::Family { family, params } => {
                match FamilyDescriptor::new(family, params.clone())?.build()? {
                    Family::Box(s) => Ok(s),
                    Family::Linear(_) => Err(compactness::Error::InvalidArgument(format!(
                        "{family} is not a function family"
                    ))),
                }
            }
        }
    }
}

use thiserror::Error;

/// Errors raised by the solvers and certificate checkers.
///
/// Several variants are *refutations*: they show that the finite-satisfiability
/// hypothesis of a compactness theorem fails for the given input. See
/// [`Error::is_refutation`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid exponent pair: {0}")]
    InvalidExponent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tail envelope did not drop below {threshold:e} before depth {max_depth}")]
    EnvelopeStall { threshold: f64, max_depth: usize },

    #[error("sequence is not p-summable: {reason}")]
    NotPSummable { reason: String },

    #[error("table does not define a ring: {0}")]
    RingAxiom(String),

    #[error("variable x{0} is not assigned")]
    UnassignedVariable(usize),

    #[error("search budget of {budget} evaluations exceeded")]
    SearchBudgetExceeded { budget: u64 },

    #[error("prefix of length {0} has no common root")]
    PrefixUnsatisfiable(usize),

    #[error("finite section with {rows} rows and truncation {truncation} is inconsistent{}", if *.refuted { " at every probed truncation" } else { "" })]
    InconsistentSubsystem {
        rows: usize,
        truncation: usize,
        /// True when every probed truncation up to the cap was inconsistent.
        refuted: bool,
    },

    #[error("rank cutoff left an ill-posed section solve")]
    RankDeficiencyUnresolved,

    #[error("section with {rows} rows needs norm at least {lower_bound} > budget {budget}")]
    NormBudgetExceeded {
        rows: usize,
        lower_bound: f64,
        budget: f64,
    },

    #[error("no section vector with {rows} rows meets the approximation clauses{}", if *.certified { " (certified)" } else { "" })]
    NoFeasibleSection { rows: usize, certified: bool },

    #[error("no root found for prefix {prefix} (best max residual {best:e}){}", if *.certified { ", certified infeasible" } else { "" })]
    PrefixRootNotFound {
        prefix: usize,
        best: f64,
        certified: bool,
    },
}

impl Error {
    /// True when the error is a machine-checked proof that a theorem's
    /// hypothesis fails for the input, as opposed to a budget or search limit.
    pub fn is_refutation(&self) -> bool {
        match self {
            Error::NotPSummable { .. }
            | Error::PrefixUnsatisfiable(_)
            | Error::NormBudgetExceeded { .. } => true,
            Error::InconsistentSubsystem { refuted, .. } => *refuted,
            Error::NoFeasibleSection { certified, .. } => *certified,
            Error::PrefixRootNotFound { certified, .. } => *certified,
            _ => false,
        }
    }

    /// Short stable name used in structured reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidExponent(_) => "InvalidExponent",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::EnvelopeStall { .. } => "EnvelopeStall",
            Error::NotPSummable { .. } => "NotPSummable",
            Error::RingAxiom(_) => "RingAxiom",
            Error::UnassignedVariable(_) => "UnassignedVariable",
            Error::SearchBudgetExceeded { .. } => "SearchBudgetExceeded",
            Error::PrefixUnsatisfiable(_) => "PrefixUnsatisfiable",
            Error::InconsistentSubsystem { .. } => "InconsistentSubsystem",
            Error::RankDeficiencyUnresolved => "RankDeficiencyUnresolved",
            Error::NormBudgetExceeded { .. } => "NormBudgetExceeded",
            Error::NoFeasibleSection { .. } => "NoFeasibleSection",
            Error::PrefixRootNotFound { .. } => "PrefixRootNotFound",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

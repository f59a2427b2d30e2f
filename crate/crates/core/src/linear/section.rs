//! Minimum-norm solves of finite sections through the Gram matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::LinearRow;
use crate::error::{Error, Result};
use crate::sequences::ConjugatePair;

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Residual (relative to `max(1, ‖b‖∞)`) accepted as consistent.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// A coordinate counts as determined when its distance to the row space
/// is below this.
const DETERMINED_TOL: f64 = 1e-7;

/// Pseudo-inverse of a section, factored through `A Aᵀ = U Λ Uᵀ`.
pub(crate) struct GramSolver {
    a: DMatrix<f64>,
    /// `Aᵀ u_j / λ_j` for the kept eigenpairs, as columns, paired with `u_j`.
    kept: Vec<(DVector<f64>, DVector<f64>, f64)>,
}

impl GramSolver {
    pub(crate) fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::RankDeficiencyUnresolved);
        }
        if a.nrows() == 0 || a.ncols() == 0 {
            return Ok(GramSolver {
                a,
                kept: Vec::new(),
            });
        }
        let gram = &a * a.transpose();
        let eig = SymmetricEigen::new(gram);
        let largest = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
        if !largest.is_finite() {
            return Err(Error::RankDeficiencyUnresolved);
        }
        let cutoff = RANK_CUTOFF * largest;
        let mut kept = Vec::new();
        for j in 0..eig.eigenvalues.len() {
            let lambda = eig.eigenvalues[j];
            if largest > 0.0 && lambda > cutoff {
                let u = eig.eigenvectors.column(j).into_owned();
                let w = a.transpose() * &u;
                kept.push((u, w, lambda));
            }
        }
        // fixed order keeps results bit-identical run to run
        kept.sort_by(|x, y| y.2.total_cmp(&x.2));
        Ok(GramSolver { a, kept })
    }

    pub(crate) fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// `Aᵀ (A Aᵀ)⁺ r`.
    pub(crate) fn apply_pinv(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.cols());
        for (u, w, lambda) in &self.kept {
            x.axpy(u.dot(r) / lambda, w, 1.0);
        }
        x
    }

    pub(crate) fn residual(&self, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        b - &self.a * x
    }

    /// Minimum-norm (least-squares) solution with one refinement step.
    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.apply_pinv(b);
        let r = self.residual(&x, b);
        x += self.apply_pinv(&r);
        x
    }

    /// Whether each coordinate's unit vector lies in the row space, judged
    /// by the residual of its refined projection.
    pub(crate) fn determined(&self) -> Vec<bool> {
        (0..self.cols())
            .map(|n| {
                let col = self.a.column(n).into_owned();
                let mut proj = self.apply_pinv(&col);
                let fix = &col - &self.a * &proj;
                proj += self.apply_pinv(&fix);
                proj[n] -= 1.0;
                proj.norm() <= DETERMINED_TOL
            })
            .collect()
    }
}

/// The `k × (h+1)` matrix of leading coefficients.
pub(crate) fn section_matrix(rows: &[LinearRow], h: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), h + 1, |i, j| rows[i].a.coeff(j))
}

pub(crate) fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub(crate) fn is_consistent(residual: &DVector<f64>, b: &DVector<f64>) -> bool {
    max_abs(residual) <= CONSISTENCY_TOL * max_abs(b).max(1.0)
}

/// A solved section: the minimum-norm vector and which of its coordinates
/// every solution of the section shares.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSolution {
    pub x: Vec<f64>,
    pub determined: Vec<bool>,
    pub residual: f64,
}

pub(crate) fn solve_section(rows: &[LinearRow], h: usize) -> Result<SectionSolution> {
    let solver = GramSolver::new(section_matrix(rows, h))?;
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.b));
    let x = solver.solve(&b);
    let residual = solver.residual(&x, &b);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::RankDeficiencyUnresolved);
    }
    if !is_consistent(&residual, &b) {
        return Err(Error::InconsistentSubsystem {
            rows: rows.len(),
            truncation: h,
            refuted: false,
        });
    }
    Ok(SectionSolution {
        x: x.iter().copied().collect(),
        determined: solver.determined(),
        residual: max_abs(&residual),
    })
}

/// Minimum Euclidean-norm solution of the section `rows × (0..=h)`.
///
/// Solves `x = Aᵀ (A Aᵀ)⁺ b` with a symmetric eigendecomposition of the Gram
/// matrix; eigenvalues below `1e−12 · λ_max` are dropped. Only `q = 2` has
/// this closed form, so other pairs are rejected.
pub fn min_norm_solve(rows: &[LinearRow], h: usize, pair: ConjugatePair) -> Result<Vec<f64>> {
    if pair.q() != 2.0 {
        return Err(Error::InvalidArgument(format!(
            "minimum-norm section solving needs q = 2, got q = {}",
            pair.q()
        )));
    }
    Ok(solve_section(rows, h)?.x)
}

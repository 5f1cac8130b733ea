//! Lowest eigenpairs of the discrete pencil and cluster/gap diagnostics.

mod lanczos;

use serde::Serialize;

use crate::sparse::SymmetricSparseOperator;
use crate::{Error, Result};

pub use lanczos::{relative_residual, solve_smallest, SolverOptions, DEFAULT_SEED};

/// Relative distance below which two discrete eigenvalues are reported as
/// numerically multiple.
pub const MULTIPLE_TOL: f64 = 1e-8;

/// Ascending eigenvalues with M-orthonormal eigenvectors over the free dofs.
#[derive(Debug, Clone)]
pub struct EigenPairSet {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub m_requested: usize,
    pub m_converged: usize,
    pub seed: u64,
}

impl EigenPairSet {
    pub fn new(values: Vec<f64>, vectors: Vec<Vec<f64>>, residuals: Vec<f64>, m_requested: usize, seed: u64) -> Self {
        let m_converged = values.len();
        EigenPairSet { values, vectors, residuals, m_requested, m_converged, seed }
    }

    /// Eigenvalue with 1-based index `j`.
    pub fn value(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        &self.vectors[j - 1]
    }

    /// Maximal runs of consecutive indices (1-based, inclusive) whose
    /// eigenvalues agree to [`MULTIPLE_TOL`] relative.
    pub fn near_multiple_groups(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.values.len() {
            let breaks = i == self.values.len() || (self.values[i] - self.values[i - 1]).abs() > MULTIPLE_TOL * self.values[i - 1].abs();
            if breaks {
                if i - start > 1 {
                    out.push((start + 1, i));
                }
                start = i;
            }
        }
        out
    }

    /// Largest `|v_iᵀ M v_j − δ_ij|`.
    pub fn orthonormality_defect(&self, mass: &SymmetricSparseOperator) -> f64 {
        let mv: Vec<Vec<f64>> = self.vectors.iter().map(|v| mass.mul_vec(v)).collect();
        let mut worst = 0.0f64;
        for i in 0..self.vectors.len() {
            for j in 0..self.vectors.len() {
                let g = crate::sparse::dot(&self.vectors[i], &mv[j]);
                worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }
}

/// Contiguous 1-based cluster `J = {lo, …, hi}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClusterSelection {
    pub lo: usize,
    pub hi: usize,
}

impl ClusterSelection {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || hi < lo {
            return Err(Error::Argument(format!("invalid cluster {{{lo}..{hi}}}")));
        }
        Ok(ClusterSelection { lo, hi })
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    pub fn contains(&self, j: usize) -> bool {
        (self.lo..=self.hi).contains(&j)
    }

    /// Number of eigenpairs to request so that the spectrum beyond the
    /// cluster is available: `n + L + 3`.
    pub fn pairs_to_request(&self) -> usize {
        self.hi + 3
    }

    /// Checks that every index of `J` and one beyond it were computed.
    pub fn check(&self, pairs: &EigenPairSet) -> Result<()> {
        if self.hi + 1 > pairs.m_converged {
            return Err(Error::Argument(format!(
                "cluster ends at {} but only {} pairs were computed (need one beyond the cluster)",
                self.hi, pairs.m_converged
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationDiagnostic {
    /// `max_{i∉J, j∈J} λ_j / |λ_{l,i} − λ_j|`, `+∞` on exact coincidence.
    pub m_j_discrete: f64,
    /// `λ_{n+1} − λ_n` with `λ_0 = 0`.
    pub gap_below: f64,
    /// `λ_{n+L+1} − λ_{n+L}`.
    pub gap_above: f64,
}

/// Separation and gap diagnostics of a cluster. `reference` supplies the
/// continuous eigenvalues (ascending, 1-based order) when known; otherwise
/// the discrete ones stand in for them.
pub fn separation_diagnostic(pairs: &EigenPairSet, cluster: ClusterSelection, reference: &[f64]) -> Result<SeparationDiagnostic> {
    cluster.check(pairs)?;
    if !reference.is_empty() && reference.len() < cluster.hi + 1 {
        return Err(Error::Argument("reference spectrum does not extend beyond the cluster".into()));
    }
    let lam = |j: usize| if reference.is_empty() { pairs.value(j) } else { reference[j - 1] };
    let mut m_j = 0.0f64;
    for i in (1..=pairs.m_converged).filter(|&i| !cluster.contains(i)) {
        for j in cluster.indices() {
            let d = (pairs.value(i) - lam(j)).abs();
            m_j = m_j.max(if d == 0.0 { f64::INFINITY } else { lam(j) / d });
        }
    }
    let below = if cluster.lo == 1 { 0.0 } else { lam(cluster.lo - 1) };
    Ok(SeparationDiagnostic { m_j_discrete: m_j, gap_below: lam(cluster.lo) - below, gap_above: lam(cluster.hi + 1) - lam(cluster.hi) })
}

#[cfg(test)]
mod tests;

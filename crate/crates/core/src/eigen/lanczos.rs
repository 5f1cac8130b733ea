//! Shift-invert Lanczos for the lowest eigenpairs of `A x = λ M x`.
//!
//! The iteration runs on `S = A⁻¹ M`, which is self-adjoint in the `M` inner
//! product and has eigenvalues `θ = 1/λ`. Every run keeps a fully
//! reorthogonalized Krylov basis and deflates against the pairs already
//! locked. A single-vector Krylov space only sees one direction of each
//! eigenspace, so after `m` pairs are locked, verification runs on the
//! deflated complement pick up missing copies of multiple eigenvalues until
//! a run finds nothing below the current `m`-th value.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EigenPairSet;
use crate::sparse::{axpy, dot, norm2, CholeskyFactor, SymmetricSparseOperator};
use crate::{Error, Result};

/// Seed of the start-vector generator.
pub const DEFAULT_SEED: u64 = 0x5eed_1a2c_2024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual `‖Av − λMv‖₂ / (λ‖v‖₂)` required of every pair.
    pub tol: f64,
    /// Total Lanczos step budget is `steps_per_pair * m`.
    pub steps_per_pair: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-9, steps_per_pair: 50, seed: DEFAULT_SEED }
    }
}

struct Locked {
    lambda: f64,
    x: Vec<f64>,
    mx: Vec<f64>,
}

struct Run<'a> {
    chol: &'a CholeskyFactor,
    a: &'a SymmetricSparseOperator,
    mass: &'a SymmetricSparseOperator,
    tol: f64,
}

/// `‖Av − λMv‖₂ / (λ‖v‖₂)`
pub fn relative_residual(a: &SymmetricSparseOperator, mass: &SymmetricSparseOperator, lambda: f64, v: &[f64]) -> f64 {
    let av = a.mul_vec(v);
    let mv = mass.mul_vec(v);
    let r: Vec<f64> = av.iter().zip(&mv).map(|(p, q)| p - lambda * q).collect();
    norm2(&r) / (lambda.abs() * norm2(v))
}

impl Run<'_> {
    fn orthogonalize(&self, w: &mut [f64], basis: &[Vec<f64>], mbasis: &[Vec<f64>], locked: &[Locked]) {
        for _ in 0..2 {
            for l in locked {
                let c = dot(&l.mx, w);
                axpy(-c, &l.x, w);
            }
            for (q, mq) in basis.iter().zip(mbasis) {
                let c = dot(mq, w);
                axpy(-c, q, w);
            }
        }
    }

    /// One Lanczos run. Returns converged pairs among the `want` largest Ritz
    /// values of `S` (smallest λ), plus the number of steps taken.
    fn run(&self, locked: &[Locked], want: usize, max_dim: usize, rng: &mut ChaCha8Rng) -> (Vec<Locked>, usize, f64) {
        let n = self.a.dim();
        let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        self.orthogonalize(&mut q, &[], &[], locked);
        let mq = self.mass.mul_vec(&q);
        let nrm = dot(&q, &mq).sqrt();
        let mut basis = vec![q.iter().map(|v| v / nrm).collect::<Vec<_>>()];
        let mut mbasis = vec![mq.iter().map(|v| v / nrm).collect::<Vec<_>>()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut worst = f64::INFINITY;
        let mut accepted = Vec::new();

        for j in 0..max_dim {
            let mut w = self.chol.solve(&mbasis[j]);
            let alpha = dot(&mbasis[j], &w);
            axpy(-alpha, &basis[j], &mut w);
            if j > 0 {
                axpy(-betas[j - 1], &basis[j - 1], &mut w);
            }
            self.orthogonalize(&mut w, &basis, &mbasis, locked);
            let mw = self.mass.mul_vec(&w);
            let beta = dot(&w, &mw).max(0.0).sqrt();
            alphas.push(alpha);
            let k = j + 1;
            let exhausted = beta <= 1e-14 * alpha.abs() || k == max_dim;
            if (k >= want && k % 5 == 0) || exhausted {
                let mut t = DMatrix::<f64>::zeros(k, k);
                for i in 0..k {
                    t[(i, i)] = alphas[i];
                    if i + 1 < k {
                        t[(i, i + 1)] = betas[i];
                        t[(i + 1, i)] = betas[i];
                    }
                }
                let eig = SymmetricEigen::new(t);
                let mut order: Vec<usize> = (0..k).collect();
                order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
                let top = &order[..want.min(k)];
                let estimates_ok = top.iter().all(|&c| {
                    let theta = eig.eigenvalues[c];
                    theta > 0.0 && (beta * eig.eigenvectors[(k - 1, c)]).abs() <= 1e-3 * self.tol * theta
                });
                if estimates_ok || exhausted {
                    accepted.clear();
                    worst = 0.0f64;
                    for &c in top {
                        let theta = eig.eigenvalues[c];
                        if theta <= 0.0 {
                            continue;
                        }
                        let mut x = vec![0.0; n];
                        for (i, qi) in basis.iter().enumerate() {
                            axpy(eig.eigenvectors[(i, c)], qi, &mut x);
                        }
                        let lambda = 1.0 / theta;
                        let res = relative_residual(self.a, self.mass, lambda, &x);
                        worst = worst.max(res);
                        if res <= self.tol {
                            let mx = self.mass.mul_vec(&x);
                            accepted.push(Locked { lambda, x, mx });
                        }
                    }
                    if accepted.len() == top.len() || exhausted {
                        return (accepted, k, worst);
                    }
                }
            }
            if exhausted {
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|v| v / beta).collect());
            mbasis.push(mw.iter().map(|v| v / beta).collect());
        }
        (accepted, basis.len(), worst)
    }
}

/// Computes the `m` smallest eigenpairs of `A x = λ M x` for SPD `A`, `M`.
pub fn solve_smallest(a: &SymmetricSparseOperator, mass: &SymmetricSparseOperator, m: usize, opts: &SolverOptions) -> Result<EigenPairSet> {
    let n = a.dim();
    if mass.dim() != n {
        return Err(Error::Argument("stiffness and mass dimensions differ".into()));
    }
    if m == 0 || m >= n {
        return Err(Error::Argument(format!("requested {m} eigenpairs of a dimension-{n} problem")));
    }
    let chol = CholeskyFactor::new(a)?;
    let run = Run { chol: &chol, a, mass, tol: opts.tol };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let budget = opts.steps_per_pair * m;
    let mut used = 0;
    let mut locked: Vec<Locked> = Vec::new();
    let mut worst_seen = 0.0f64;

    loop {
        let remaining = budget.saturating_sub(used).min(n - locked.len());
        let verifying = locked.len() >= m;
        let want = if verifying { 1 } else { m - locked.len() };
        if remaining < want {
            if verifying {
                break;
            }
            return Err(Error::Solver { requested: m, converged: locked.len(), worst_residual: worst_seen });
        }
        let (found, steps, worst) = run.run(&locked, want, remaining, &mut rng);
        used += steps;
        worst_seen = worst_seen.max(worst);
        if verifying {
            locked.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
            let threshold = locked[m - 1].lambda * (1.0 - 1e-10);
            let below: Vec<Locked> = found.into_iter().filter(|p| p.lambda < threshold).collect();
            if below.is_empty() {
                break;
            }
            locked.extend(below);
        } else {
            if found.is_empty() {
                return Err(Error::Solver { requested: m, converged: locked.len(), worst_residual: worst });
            }
            locked.extend(found);
        }
    }

    locked.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
    locked.truncate(m);
    let mut values = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    for mut p in locked {
        let scale = p.x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if let Some(first) = p.x.iter().find(|v| v.abs() > 1e-8 * scale) {
            if *first < 0.0 {
                p.x.iter_mut().for_each(|v| *v = -*v);
            }
        }
        residuals.push(relative_residual(a, mass, p.lambda, &p.x));
        values.push(p.lambda);
        vectors.push(p.x);
    }
    Ok(EigenPairSet::new(values, vectors, residuals, m, opts.seed))
}

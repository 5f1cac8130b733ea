//! Analytic oracles on the unit square: exact eigenpairs, the cluster
//! approximation `Λ_l = P_l ∘ R_l`, sampled max-norm errors and
//! reliability/efficiency ratio tracking.

pub mod quadrature;

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::adapt::{run_from_mesh, AdaptConfig, HistoryRow};
use crate::eigen::{solve_smallest, ClusterSelection, EigenPairSet, SolverOptions};
use crate::estimator::{eta_energy, eta_pointwise, EstimatorKind};
use crate::fem::{assemble, FeFunction, FeSpace};
use crate::geometry::{builtin_domain, initial_mesh};
use crate::marking::Marking;
use crate::mesh::{uniform_refine, Strategy, Triangulation};
use crate::sparse::{dot, CholeskyFactor, SymmetricSparseOperator};
use crate::{Error, Point, Result};

/// `u = 2 sin(mπx) sin(nπy)` on `(0,1)²` with `λ = (m² + n²)π²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExactEigenpair {
    pub m: u32,
    pub n: u32,
}

impl ExactEigenpair {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Argument(format!("mode ({m}, {n}) needs positive indices")));
        }
        Ok(ExactEigenpair { m, n })
    }

    pub fn lambda(&self) -> f64 {
        ((self.m * self.m + self.n * self.n) as f64) * PI * PI
    }

    pub fn value(&self, p: Point) -> f64 {
        2.0 * (self.m as f64 * PI * p[0]).sin() * (self.n as f64 * PI * p[1]).sin()
    }

    /// Modes of the `count` smallest eigenvalues, ascending, ties by `(m, n)`.
    pub fn lowest(count: usize) -> Vec<ExactEigenpair> {
        let k = (count as f64).sqrt().ceil() as u32 + 2;
        let mut modes: Vec<ExactEigenpair> = (1..=k).flat_map(|m| (1..=k).map(move |n| ExactEigenpair { m, n })).collect();
        modes.sort_by_key(|e| (e.m * e.m + e.n * e.n, e.m, e.n));
        modes.truncate(count);
        modes
    }
}

fn physical(mesh: &Triangulation, t: usize, l: [f64; 3]) -> Point {
    let [a, b, c] = mesh.vertices_of(t);
    [l[0] * a[0] + l[1] * b[0] + l[2] * c[0], l[0] * a[1] + l[1] * b[1] + l[2] * c[1]]
}

/// Solves `a(r, w) = ∫ (f w + G·∇w)` over the free dofs, where
/// `integrand(t, λ, x) = (f, G)` at a point of element `t`.
pub fn ritz_project_with(space: &Arc<FeSpace>, integrand: impl Fn(usize, [f64; 3], Point) -> (f64, [f64; 2]) + Sync) -> Result<FeFunction> {
    let mesh = space.mesh();
    let basis = space.basis();
    let rule = quadrature::triangle_rule();
    let local: Vec<Vec<f64>> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let geo = space.geometry(t);
            let mut b = vec![0.0; basis.n_local()];
            for &(l, w) in rule {
                let (f, g) = integrand(t, l, physical(mesh, t, l));
                for (i, bi) in b.iter_mut().enumerate() {
                    let gi = basis.gradient(i, l, geo);
                    *bi += geo.area * w * (f * basis.value(i, l) + g[0] * gi[0] + g[1] * gi[1]);
                }
            }
            b
        })
        .collect();
    let mut rhs = vec![0.0; space.n_free()];
    for (t, b) in local.iter().enumerate() {
        for (i, &d) in space.element_dofs(t).iter().enumerate() {
            if let Some(k) = space.free_index(d) {
                rhs[k] += b[i];
            }
        }
    }
    let (a, _) = assemble(space)?;
    let x = CholeskyFactor::new(&a)?.solve(&rhs);
    Ok(FeFunction::from_free(Arc::clone(space), &x))
}

/// Ritz projection `R_l u`, using `a(u, w) = λ (u, w)` for the exact
/// eigenfunction and the degree-8 quadrature rule for the right-hand side.
pub fn ritz_project(u: &ExactEigenpair, space: &Arc<FeSpace>) -> Result<FeFunction> {
    let lambda = u.lambda();
    ritz_project_with(space, |_, _, p| (lambda * u.value(p), [0.0, 0.0]))
}

/// `P_l r = Σ_{i∈J} (rᵀ M v_i) v_i` with the mass operator supplied.
pub fn lambda_project_with_mass(
    r: &FeFunction,
    pairs: &EigenPairSet,
    cluster: ClusterSelection,
    mass: &SymmetricSparseOperator,
) -> Result<FeFunction> {
    if cluster.hi > pairs.m_converged {
        return Err(Error::Argument("cluster exceeds the computed pairs".into()));
    }
    let rf = r.free_coeffs();
    if rf.len() != mass.dim() {
        return Err(Error::Argument("function and eigenvectors live on different spaces".into()));
    }
    let mr = mass.mul_vec(&rf);
    let mut out = vec![0.0; rf.len()];
    for j in cluster.indices() {
        let v = pairs.vector(j);
        let c = dot(&mr, v);
        for (o, vi) in out.iter_mut().zip(v) {
            *o += c * vi;
        }
    }
    Ok(FeFunction::from_free(Arc::clone(r.space()), &out))
}

/// `P_l r`, the M-orthogonal projection onto `span{v_i}_{i∈J}`.
pub fn lambda_project(r: &FeFunction, pairs: &EigenPairSet, cluster: ClusterSelection) -> Result<FeFunction> {
    let (_, m) = assemble(r.space())?;
    lambda_project_with_mass(r, pairs, cluster, &m)
}

/// Sampled `max |u − approx|` over a barycentric lattice of the given order
/// on every element; a lower bound of the true max norm.
pub fn linf_error(u: &ExactEigenpair, approx: &FeFunction, order: usize) -> Result<f64> {
    sampled_max(approx, order, |p| u.value(p))
}

/// Sampled `max |g − approx|`.
pub fn sampled_max(approx: &FeFunction, order: usize, g: impl Fn(Point) -> f64 + Sync) -> Result<f64> {
    if order < 4 {
        return Err(Error::Argument(format!("lattice order {order} below 4")));
    }
    let mesh = approx.space().mesh();
    let worst = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let mut m = 0.0f64;
            for i in 0..=order {
                for j in 0..=order - i {
                    let l = [i as f64 / order as f64, j as f64 / order as f64, (order - i - j) as f64 / order as f64];
                    m = m.max((g(physical(mesh, t, l)) - approx.eval_unchecked(t, l)).abs());
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// How the levels of a reliability report are produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementMode {
    Uniform,
    /// Pointwise estimator, max marking with this θ, `bisec_lg1`.
    Adaptive {
        theta: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityRow {
    pub history: HistoryRow,
    /// Sampled `‖u_j − Λ_l u_j‖_∞` per `j ∈ J`.
    pub err_linf: Vec<f64>,
    /// `max_j ‖e_j‖_∞ / η_l`.
    pub ratio_rel: f64,
    /// `η_l / Σ_j ‖e_j‖_∞`.
    pub ratio_eff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityReport {
    pub cluster: ClusterSelection,
    pub modes: Vec<ExactEigenpair>,
    pub mode: RefinementMode,
    pub lattice_order: usize,
    pub quadrature: &'static str,
    pub rows: Vec<ReliabilityRow>,
}

fn spread(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
    hi / lo
}

impl ReliabilityReport {
    /// `max/min` of `ratio_rel` over the levels.
    pub fn rel_spread(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.ratio_rel))
    }

    pub fn eff_spread(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.ratio_eff))
    }

    /// True when both ratios stay within a factor `band` across levels.
    pub fn within_band(&self, band: f64) -> bool {
        self.rel_spread() <= band && self.eff_spread() <= band
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,ndof,nelem,eta_pointwise,eta_energy");
        for j in self.cluster.indices() {
            out.push_str(&format!(",lambda_{j}"));
        }
        out.push_str(",marked,h_max,h_min,t_solve_ms,t_estimate_ms,t_refine_ms");
        for j in self.cluster.indices() {
            out.push_str(&format!(",err_linf_{j}"));
        }
        out.push_str(",ratio_rel,ratio_eff\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let h = &r.history;
            out.push_str(&format!("{},{},{},{},{}", h.level, h.ndof, h.nelem, opt(h.eta_pointwise), opt(h.eta_energy)));
            for l in &h.lambdas {
                out.push_str(&format!(",{l}"));
            }
            out.push_str(&format!(",{},{},{},{:.3},{:.3},{:.3}", h.marked, h.h_max, h.h_min, h.t_solve_ms, h.t_estimate_ms, h.t_refine_ms));
            for e in &r.err_linf {
                out.push_str(&format!(",{e}"));
            }
            out.push_str(&format!(",{},{}\n", r.ratio_rel, r.ratio_eff));
        }
        out
    }
}

/// Errors of one level given its space and eigenpairs.
fn level_errors(
    space: &Arc<FeSpace>,
    pairs: &EigenPairSet,
    cluster: ClusterSelection,
    modes: &[ExactEigenpair],
    order: usize,
) -> Result<Vec<f64>> {
    let (_, m) = assemble(space)?;
    modes
        .iter()
        .map(|u| {
            let r = ritz_project(u, space)?;
            let lu = lambda_project_with_mass(&r, pairs, cluster, &m)?;
            linf_error(u, &lu, order)
        })
        .collect()
}

fn reliability_row(history: HistoryRow, err_linf: Vec<f64>) -> ReliabilityRow {
    let eta = history.eta_pointwise.unwrap_or(0.0);
    let max_err = err_linf.iter().fold(0.0f64, |a, b| a.max(*b));
    let sum_err: f64 = err_linf.iter().sum();
    ReliabilityRow { history, err_linf, ratio_rel: max_err / eta, ratio_eff: eta / sum_err }
}

/// Tracks `‖e_j‖_∞ / η_l` and `η_l / Σ_j ‖e_j‖_∞` on the unit square over
/// `levels` levels, with `e_j = u_j − Λ_l u_j`.
pub fn reliability_efficiency_report(
    cluster: ClusterSelection,
    levels: usize,
    mode: RefinementMode,
    initial_n: usize,
    degree: u8,
    lattice_order: usize,
) -> Result<ReliabilityReport> {
    if levels == 0 {
        return Err(Error::Argument("at least one level is required".into()));
    }
    let modes = ExactEigenpair::lowest(cluster.hi)[cluster.lo - 1..].to_vec();
    let spec = builtin_domain("unit_square")?;
    let mesh = initial_mesh(&spec, initial_n)?;
    let mut rows = Vec::with_capacity(levels);
    match mode {
        RefinementMode::Uniform => {
            let mut mesh = mesh;
            for level in 0..levels {
                let space = Arc::new(FeSpace::new(Arc::new(mesh.clone()), degree)?);
                let (a, m) = assemble(&space)?;
                let pairs = solve_smallest(&a, &m, cluster.pairs_to_request(), &SolverOptions::default())?;
                let pw = eta_pointwise(&space, &pairs, cluster)?;
                let en = eta_energy(&space, &pairs, cluster)?;
                let hs: Vec<f64> = (0..mesh.n_elements()).map(|t| mesh.h(t)).collect();
                let history = HistoryRow {
                    level,
                    ndof: space.n_free(),
                    nelem: mesh.n_elements(),
                    eta_pointwise: Some(pw.eta_max),
                    eta_energy: Some(en.eta_l2),
                    lambdas: cluster.indices().map(|j| pairs.value(j)).collect(),
                    marked: if level + 1 < levels { mesh.n_elements() } else { 0 },
                    h_max: hs.iter().fold(0.0f64, |a, b| a.max(*b)),
                    h_min: hs.iter().fold(f64::INFINITY, |a, b| a.min(*b)),
                    t_solve_ms: 0.0,
                    t_estimate_ms: 0.0,
                    t_refine_ms: 0.0,
                };
                let errs = level_errors(&space, &pairs, cluster, &modes, lattice_order)?;
                rows.push(reliability_row(history, errs));
                mesh = uniform_refine(&mesh);
            }
        }
        RefinementMode::Adaptive { theta } => {
            let config = AdaptConfig {
                domain: "unit_square".into(),
                initial_n,
                degree,
                cluster_lo: cluster.lo,
                cluster_hi: cluster.hi,
                theta,
                estimator: EstimatorKind::Pointwise,
                marking: Marking::Max,
                refine: Strategy::BisecLg1,
                max_dof: usize::MAX,
                max_levels: Some(levels - 1),
                ..AdaptConfig::default()
            };
            let history = run_from_mesh(&config, mesh, |view| {
                let errs = level_errors(view.space, view.pairs, cluster, &modes, lattice_order)?;
                rows.push(reliability_row(view.row.clone(), errs));
                Ok(())
            })?;
            if history.failure.is_some() {
                return Err(Error::Solver { requested: cluster.pairs_to_request(), converged: 0, worst_residual: f64::NAN });
            }
        }
    }
    Ok(ReliabilityReport { cluster, modes, mode, lattice_order, quadrature: quadrature::RULE_NAME, rows })
}

#[cfg(test)]
mod tests;

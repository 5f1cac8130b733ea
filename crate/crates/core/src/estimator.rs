//! Residual a posteriori estimators for an eigenvalue cluster.
//!
//! For P1 and P2 the element residual `λu + Δu` is a quadratic polynomial on
//! each element and the normal-derivative jump is affine along each edge, so
//! both max norms and L² norms are evaluated in closed form. A P1 function is
//! lifted to P2 nodal values (midpoints are averages) so that one code path
//! serves both degrees.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{ClusterSelection, EigenPairSet};
use crate::fem::{FeFunction, FeSpace, LocalBasis};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// `η_l(T)` in max norms; global value is the maximum over elements.
    Pointwise,
    /// `η^a(T)` in L² norms; global value is the root-sum-of-squares.
    Energy,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Pointwise => "pointwise",
            EstimatorKind::Energy => "energy",
        })
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(EstimatorKind::Pointwise),
            "energy" => Ok(EstimatorKind::Energy),
            _ => Err(Error::Config(format!("unknown estimator '{s}' (expected pointwise or energy)"))),
        }
    }
}

/// Per-element estimator values.
///
/// For the pointwise kind `eta[T] = elem_part[T] + jump_part[T]`; for the
/// energy kind the parts are the two L²-type norms and
/// `eta[T]² = elem_part[T]² + jump_part[T]²`.
#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub kind: EstimatorKind,
    pub eta: Vec<f64>,
    pub elem_part: Vec<f64>,
    pub jump_part: Vec<f64>,
    pub eta_max: f64,
    pub eta_l2: f64,
    pub cluster: Option<ClusterSelection>,
    pub degree: u8,
}

impl EstimatorReport {
    fn new(kind: EstimatorKind, parts: Vec<(f64, f64)>, cluster: Option<ClusterSelection>, degree: u8) -> Self {
        let (elem_part, jump_part): (Vec<f64>, Vec<f64>) = parts.into_iter().unzip();
        let eta: Vec<f64> = elem_part
            .iter()
            .zip(&jump_part)
            .map(|(e, j)| match kind {
                EstimatorKind::Pointwise => e + j,
                EstimatorKind::Energy => e.hypot(*j),
            })
            .collect();
        let eta_max = eta.iter().fold(0.0f64, |m, v| m.max(*v));
        let eta_l2 = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
        EstimatorReport { kind, eta, elem_part, jump_part, eta_max, eta_l2, cluster, degree }
    }

    /// The global value used downstream: `η_max` for pointwise, `η_l2` for energy.
    pub fn global(&self) -> f64 {
        match self.kind {
            EstimatorKind::Pointwise => self.eta_max,
            EstimatorKind::Energy => self.eta_l2,
        }
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// CSV dump `element,h,eta,eta_elem_part,eta_jump_part`.
    pub fn to_csv(&self, space: &FeSpace) -> String {
        let mesh = space.mesh();
        let mut out = String::from("element,h,eta,eta_elem_part,eta_jump_part\n");
        for t in 0..self.eta.len() {
            out.push_str(&format!("{t},{:e},{:e},{:e},{:e}\n", mesh.h(t), self.eta[t], self.elem_part[t], self.jump_part[t]));
        }
        out
    }
}

fn p2_basis() -> &'static LocalBasis {
    static B: OnceLock<LocalBasis> = OnceLock::new();
    B.get_or_init(|| LocalBasis::new(2))
}

/// Nodal values of `λu + Δu` on element `t` in P2 order.
fn residual_nodal(u: &FeFunction, lambda: f64, t: usize) -> [f64; 6] {
    let c = u.local_coeffs(t);
    let lap = u.laplacian(t);
    let mut r = [0.0; 6];
    for i in 0..3 {
        r[i] = lambda * c[i] + lap;
    }
    for k in 0..3 {
        r[3 + k] = if u.space().degree() == 2 { lambda * c[3 + k] + lap } else { 0.5 * (r[(k + 1) % 3] + r[(k + 2) % 3]) };
    }
    r
}

/// Max of `|g|` over `[0, 1]` for the quadratic with `g(0)`, `g(1/2)`, `g(1)`.
fn quadratic_edge_max(g0: f64, gm: f64, g1: f64) -> f64 {
    let gamma = 2.0 * (g1 - 2.0 * gm + g0);
    let beta = g1 - g0 - gamma;
    let mut best = g0.abs().max(g1.abs());
    if gamma != 0.0 {
        let tau = -beta / (2.0 * gamma);
        if tau > 0.0 && tau < 1.0 {
            best = best.max((g0 + beta * tau + gamma * tau * tau).abs());
        }
    }
    best
}

/// Exact `max |r|` over the closed triangle for a quadratic `r` given by its
/// P2 nodal values.
pub fn quadratic_triangle_max(r: &[f64; 6]) -> f64 {
    let [r0, r1, r2, re0, re1, re2] = *r;
    let mut best = quadratic_edge_max(r0, re2, r1).max(quadratic_edge_max(r1, re0, r2)).max(quadratic_edge_max(r2, re1, r0));
    // r(s, t) = a + b s + c t + d s² + e s t + f t² with λ = (1 − s − t, s, t)
    let a = r0;
    let d = 2.0 * (r1 - 2.0 * re2 + r0);
    let b = r1 - r0 - d;
    let f = 2.0 * (r2 - 2.0 * re1 + r0);
    let c = r2 - r0 - f;
    let e = 4.0 * (re0 - a - 0.5 * b - 0.5 * c) - d - f;
    let det = 4.0 * d * f - e * e;
    let scale = d.abs().max(e.abs()).max(f.abs());
    if det.abs() > 1e-14 * scale * scale && scale > 0.0 {
        let s = (-b * 2.0 * f + c * e) / det;
        let t = (-c * 2.0 * d + b * e) / det;
        const EPS: f64 = 1e-12;
        if s > EPS && t > EPS && 1.0 - s - t > EPS {
            best = best.max((a + b * s + c * t + d * s * s + e * s * t + f * t * t).abs());
        }
    }
    best
}

/// Normal-derivative jump across local edge `k` of `t`, evaluated at the two
/// edge endpoints, together with the edge length. `None` on boundary edges.
fn edge_jump(u: &FeFunction, t: usize, k: usize) -> Option<([f64; 2], f64)> {
    let space = u.space();
    let mesh = space.mesh();
    let s = mesh.neighbors()[t][k]?;
    let tri = mesh.triangles()[t];
    let other = mesh.triangles()[s];
    let (la, lb) = ((k + 1) % 3, (k + 2) % 3);
    let pa = mesh.coords()[tri[la]];
    let pb = mesh.coords()[tri[lb]];
    let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
    let n = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
    let mut j = [0.0; 2];
    for (slot, &l) in [la, lb].iter().enumerate() {
        let v = tri[l];
        let m = other.iter().position(|&w| w == v).expect("neighbor shares the edge");
        let mut lam_t = [0.0; 3];
        lam_t[l] = 1.0;
        let mut lam_s = [0.0; 3];
        lam_s[m] = 1.0;
        let gt = u.grad_unchecked(t, lam_t);
        let gs = u.grad_unchecked(s, lam_s);
        j[slot] = (gt[0] - gs[0]) * n[0] + (gt[1] - gs[1]) * n[1];
    }
    Some((j, len))
}

fn check_inputs(space: &Arc<FeSpace>, lambdas: &[f64], functions: &[FeFunction]) -> Result<()> {
    if lambdas.len() != functions.len() {
        return Err(Error::Argument("one eigenvalue per function is required".into()));
    }
    if functions.iter().any(|u| !Arc::ptr_eq(u.space(), space)) {
        return Err(Error::Argument("functions must live on the estimator's space".into()));
    }
    Ok(())
}

/// `η(T) = h_T² Σ_i ‖λ_i u_i + Δu_i‖_{L∞(T)} + h_T Σ_i ‖[[∂u_i/∂n]]‖_{L∞(∂T\∂Ω)}`
/// for arbitrary finite element functions.
pub fn pointwise_from_functions(space: &Arc<FeSpace>, lambdas: &[f64], functions: &[FeFunction]) -> Result<EstimatorReport> {
    check_inputs(space, lambdas, functions)?;
    let mesh = space.mesh();
    let parts = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let h = mesh.h(t);
            let mut elem = 0.0;
            let mut jump = 0.0;
            for (u, &lambda) in functions.iter().zip(lambdas) {
                elem += quadratic_triangle_max(&residual_nodal(u, lambda, t));
                for k in 0..3 {
                    if let Some((j, _)) = edge_jump(u, t, k) {
                        jump += j[0].abs().max(j[1].abs());
                    }
                }
            }
            (h * h * elem, h * jump)
        })
        .collect();
    Ok(EstimatorReport::new(EstimatorKind::Pointwise, parts, None, space.degree()))
}

/// `η^a(T)² = Σ_i h_T² ‖λ_i u_i + Δu_i‖²_{L²(T)} + Σ_i h_T ‖[[∂u_i/∂n]]‖²_{L²(∂T\∂Ω)}`
/// for arbitrary finite element functions.
pub fn energy_from_functions(space: &Arc<FeSpace>, lambdas: &[f64], functions: &[FeFunction]) -> Result<EstimatorReport> {
    check_inputs(space, lambdas, functions)?;
    let mesh = space.mesh();
    let p2 = p2_basis();
    let parts = (0..mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let h = mesh.h(t);
            let mass = p2.mass(space.geometry(t));
            let mut elem = 0.0;
            let mut jump = 0.0;
            for (u, &lambda) in functions.iter().zip(lambdas) {
                let r = residual_nodal(u, lambda, t);
                for a in 0..6 {
                    for b in 0..6 {
                        elem += r[a] * mass[a][b] * r[b];
                    }
                }
                for k in 0..3 {
                    if let Some(([j0, j1], len)) = edge_jump(u, t, k) {
                        jump += len * (j0 * j0 + j0 * j1 + j1 * j1) / 3.0;
                    }
                }
            }
            ((h * h * elem.max(0.0)).sqrt(), (h * jump).sqrt())
        })
        .collect();
    Ok(EstimatorReport::new(EstimatorKind::Energy, parts, None, space.degree()))
}

fn cluster_functions(space: &Arc<FeSpace>, pairs: &EigenPairSet, cluster: ClusterSelection) -> Result<(Vec<f64>, Vec<FeFunction>)> {
    if cluster.hi > pairs.m_converged {
        return Err(Error::Argument(format!("cluster ends at {} but only {} pairs converged", cluster.hi, pairs.m_converged)));
    }
    let lambdas = cluster.indices().map(|j| pairs.value(j)).collect();
    let functions = cluster.indices().map(|j| FeFunction::from_free(Arc::clone(space), pairs.vector(j))).collect();
    Ok((lambdas, functions))
}

/// Pointwise estimator of the cluster `J`, using the discrete eigenvalues.
pub fn eta_pointwise(space: &Arc<FeSpace>, pairs: &EigenPairSet, cluster: ClusterSelection) -> Result<EstimatorReport> {
    let (lambdas, functions) = cluster_functions(space, pairs, cluster)?;
    let mut report = pointwise_from_functions(space, &lambdas, &functions)?;
    report.cluster = Some(cluster);
    Ok(report)
}

/// Energy (H¹) estimator of the cluster `J`.
pub fn eta_energy(space: &Arc<FeSpace>, pairs: &EigenPairSet, cluster: ClusterSelection) -> Result<EstimatorReport> {
    let (lambdas, functions) = cluster_functions(space, pairs, cluster)?;
    let mut report = energy_from_functions(space, &lambdas, &functions)?;
    report.cluster = Some(cluster);
    Ok(report)
}

/// Dispatches on `kind`.
pub fn estimate(kind: EstimatorKind, space: &Arc<FeSpace>, pairs: &EigenPairSet, cluster: ClusterSelection) -> Result<EstimatorReport> {
    match kind {
        EstimatorKind::Pointwise => eta_pointwise(space, pairs, cluster),
        EstimatorKind::Energy => eta_energy(space, pairs, cluster),
    }
}

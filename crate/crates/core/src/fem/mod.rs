//! Lagrange finite element spaces of degree 1 and 2 with homogeneous
//! Dirichlet conditions on the whole boundary (slit faces included).

mod assemble;
pub mod element;

use std::collections::HashMap;
use std::sync::Arc;

use crate::mesh::Triangulation;
use crate::{Error, Point, Result};

pub use assemble::{assemble, assemble_full};
pub use element::{ElementGeometry, LocalBasis};

#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Triangulation>,
    basis: LocalBasis,
    n_dofs: usize,
    elem_dofs: Vec<[usize; 6]>,
    dof_coords: Vec<Point>,
    dirichlet: Vec<bool>,
    free: Vec<usize>,
    free_index: Vec<Option<usize>>,
    geometry: Vec<ElementGeometry>,
}

impl FeSpace {
    /// Builds the P`degree` space on `mesh`. Edge dofs are keyed by the
    /// sorted vertex pair of their edge.
    pub fn new(mesh: Arc<Triangulation>, degree: u8) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::Argument(format!("unsupported polynomial degree {degree}")));
        }
        let basis = LocalBasis::new(degree);
        let nv = mesh.n_vertices();
        let mut dof_coords: Vec<Point> = mesh.coords().to_vec();
        let mut dirichlet: Vec<bool> = mesh.dirichlet().to_vec();
        let mut elem_dofs = Vec::with_capacity(mesh.n_elements());
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let mut dofs = [0usize; 6];
            dofs[..3].copy_from_slice(tri);
            if degree == 2 {
                for k in 0..3 {
                    let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    let key = if a < b { (a, b) } else { (b, a) };
                    let next = nv + edges.len();
                    let idx = *edges.entry(key).or_insert_with(|| {
                        let (pa, pb) = (mesh.coords()[a], mesh.coords()[b]);
                        dof_coords.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
                        dirichlet.push(mesh.neighbors()[t][k].is_none());
                        next
                    });
                    dofs[3 + k] = idx;
                }
            }
            elem_dofs.push(dofs);
        }
        let n_dofs = dof_coords.len();
        let free: Vec<usize> = (0..n_dofs).filter(|&i| !dirichlet[i]).collect();
        let mut free_index = vec![None; n_dofs];
        for (k, &i) in free.iter().enumerate() {
            free_index[i] = Some(k);
        }
        let geometry = (0..mesh.n_elements()).map(|t| ElementGeometry::new(mesh.vertices_of(t))).collect();
        Ok(FeSpace { mesh, basis, n_dofs, elem_dofs, dof_coords, dirichlet, free, free_index, geometry })
    }

    pub fn mesh(&self) -> &Triangulation {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Triangulation> {
        &self.mesh
    }

    pub fn degree(&self) -> u8 {
        self.basis.degree
    }

    pub fn basis(&self) -> &LocalBasis {
        &self.basis
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_local(&self) -> usize {
        self.basis.n_local()
    }

    /// Global dofs of element `t` in local basis order.
    pub fn element_dofs(&self, t: usize) -> &[usize] {
        &self.elem_dofs[t][..self.n_local()]
    }

    pub fn dof_coords(&self) -> &[Point] {
        &self.dof_coords
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet[dof]
    }

    /// Global indices of the free dofs, ascending.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    pub fn geometry(&self, t: usize) -> &ElementGeometry {
        &self.geometry[t]
    }

    /// Expands a free-dof vector to all dofs (Dirichlet entries zero).
    pub fn extend_free(&self, free_values: &[f64]) -> Vec<f64> {
        assert_eq!(free_values.len(), self.n_free());
        let mut full = vec![0.0; self.n_dofs];
        for (&i, &v) in self.free.iter().zip(free_values) {
            full[i] = v;
        }
        full
    }
}

/// Validates a barycentric point.
pub fn check_barycentric(lam: [f64; 3]) -> Result<()> {
    let tol = 1e-12;
    if lam.iter().any(|&l| l < -tol || !l.is_finite()) || (lam.iter().sum::<f64>() - 1.0).abs() > tol {
        return Err(Error::Argument(format!("invalid barycentric point {lam:?}")));
    }
    Ok(())
}

/// A finite element function stored over all dofs.
#[derive(Debug, Clone)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.n_dofs();
        FeFunction { space, coeffs: vec![0.0; n] }
    }

    /// Builds from coefficients over the free dofs.
    pub fn from_free(space: Arc<FeSpace>, free_values: &[f64]) -> Self {
        let coeffs = space.extend_free(free_values);
        FeFunction { space, coeffs }
    }

    /// Builds from coefficients over all dofs; Dirichlet entries are zeroed.
    pub fn from_coeffs(space: Arc<FeSpace>, mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::Argument("coefficient vector length does not match the space".into()));
        }
        for (i, c) in coeffs.iter_mut().enumerate() {
            if space.is_dirichlet(i) {
                *c = 0.0;
            }
        }
        Ok(FeFunction { space, coeffs })
    }

    /// Like [`FeFunction::from_coeffs`] but keeps Dirichlet entries, for
    /// unconstrained test functions (e.g. globally affine fields).
    pub fn from_coeffs_unconstrained(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), space.n_dofs());
        FeFunction { space, coeffs }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn free_coeffs(&self) -> Vec<f64> {
        self.space.free_dofs().iter().map(|&i| self.coeffs[i]).collect()
    }

    pub fn local_coeffs(&self, t: usize) -> [f64; 6] {
        let mut c = [0.0; 6];
        for (k, &d) in self.space.element_dofs(t).iter().enumerate() {
            c[k] = self.coeffs[d];
        }
        c
    }

    pub fn evaluate(&self, t: usize, lam: [f64; 3]) -> Result<f64> {
        check_barycentric(lam)?;
        Ok(self.eval_unchecked(t, lam))
    }

    pub(crate) fn eval_unchecked(&self, t: usize, lam: [f64; 3]) -> f64 {
        let c = self.local_coeffs(t);
        let b = self.space.basis();
        (0..b.n_local()).map(|i| c[i] * b.value(i, lam)).sum()
    }

    pub fn evaluate_gradient(&self, t: usize, lam: [f64; 3]) -> Result<[f64; 2]> {
        check_barycentric(lam)?;
        Ok(self.grad_unchecked(t, lam))
    }

    pub(crate) fn grad_unchecked(&self, t: usize, lam: [f64; 3]) -> [f64; 2] {
        let c = self.local_coeffs(t);
        let b = self.space.basis();
        let geo = self.space.geometry(t);
        let mut g = [0.0; 2];
        for i in 0..b.n_local() {
            let gi = b.gradient(i, lam, geo);
            g[0] += c[i] * gi[0];
            g[1] += c[i] * gi[1];
        }
        g
    }

    /// Laplacian on element `t` (constant for degree ≤ 2).
    pub fn laplacian(&self, t: usize) -> f64 {
        let c = self.local_coeffs(t);
        let b = self.space.basis();
        let geo = self.space.geometry(t);
        (0..b.n_local()).map(|i| c[i] * b.laplacian(i, geo)).sum()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        FeFunction { space: Arc::clone(&self.space), coeffs: self.coeffs.iter().map(|c| alpha * c).collect() }
    }
}

/// Nodal interpolation; Dirichlet coefficients are forced to zero.
pub fn interpolate(g: impl Fn(Point) -> f64, space: &Arc<FeSpace>) -> FeFunction {
    let coeffs = space.dof_coords().iter().enumerate().map(|(i, &p)| if space.is_dirichlet(i) { 0.0 } else { g(p) }).collect();
    FeFunction { space: Arc::clone(space), coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_domain, initial_mesh};

    fn space(id: &str, n: usize, k: u8) -> Arc<FeSpace> {
        let mesh = initial_mesh(&builtin_domain(id).unwrap(), n).unwrap();
        Arc::new(FeSpace::new(Arc::new(mesh), k).unwrap())
    }

    #[test]
    fn free_dof_counts() {
        assert_eq!(space("omega1", 8, 1).n_free(), 33);
        assert_eq!(space("unit_square", 2, 1).n_free(), 1);
        let s = space("unit_square", 2, 2);
        assert_eq!(s.n_free(), 9);
        assert_eq!(s.n_dofs(), 9 + 16);
        assert!(matches!(FeSpace::new(Arc::clone(s.mesh_arc()), 3), Err(Error::Argument(_))));
    }

    #[test]
    fn p2_dirichlet_exactly_on_boundary() {
        let s = space("omega2", 8, 2);
        let spec = builtin_domain("omega2").unwrap();
        for (i, &p) in s.dof_coords().iter().enumerate() {
            let on = spec.boundary_segments().iter().any(|seg| crate::geometry::point_segment_distance(p, seg[0], seg[1]) < 1e-12);
            assert_eq!(s.is_dirichlet(i), on, "dof {i} at {p:?}");
        }
    }

    #[test]
    fn nodal_basis_at_own_node() {
        let s = space("unit_square", 2, 2);
        let center = s.free_dofs()[0];
        let mut c = vec![0.0; s.n_dofs()];
        c[center] = 1.0;
        let f = FeFunction::from_coeffs(Arc::clone(&s), c).unwrap();
        let nodes = s.basis().nodes();
        for t in 0..s.mesh().n_elements() {
            for (k, &d) in s.element_dofs(t).iter().enumerate() {
                if d == center {
                    assert_eq!(f.evaluate(t, nodes[k]).unwrap(), 1.0);
                }
            }
        }
    }

    #[test]
    fn p1_gradient_constant_on_elements() {
        let s = space("unit_square", 4, 1);
        let f = interpolate(|p| (p[0] * 3.0).sin() * p[1], &s);
        for t in 0..s.mesh().n_elements() {
            let g1 = f.evaluate_gradient(t, [0.2, 0.3, 0.5]).unwrap();
            let g2 = f.evaluate_gradient(t, [0.6, 0.1, 0.3]).unwrap();
            assert!((g1[0] - g2[0]).abs() < 1e-13 && (g1[1] - g2[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn p2_reproduces_quadratics() {
        let s = space("unit_square", 2, 2);
        let f = interpolate(|p| p[0] * (1.0 - p[0]), &s);
        // (0.5, 0.25): find the containing element by barycentrics
        let target = [0.5, 0.25];
        let mut found = false;
        for t in 0..s.mesh().n_elements() {
            let [a, b, c] = s.mesh().vertices_of(t);
            let area = s.mesh().area(t);
            let l0 = crate::mesh::signed_area(target, b, c) / area;
            let l1 = crate::mesh::signed_area(a, target, c) / area;
            let l2 = 1.0 - l0 - l1;
            if l0 >= 0.0 && l1 >= 0.0 && l2 >= -1e-15 {
                let v = f.evaluate(t, [l0, l1, l2.max(0.0)]).unwrap();
                assert!((v - 0.25).abs() < 1e-14);
                found = true;
            }
        }
        assert!(found);
        // x² vanishes on x = 0 only, so compare in the interior through an unconstrained interpolant
        let g = |p: Point| p[0] * p[0];
        let coeffs = s.dof_coords().iter().map(|&p| g(p)).collect();
        let f = FeFunction::from_coeffs_unconstrained(Arc::clone(&s), coeffs);
        for t in 0..s.mesh().n_elements() {
            let [a, b, c] = s.mesh().vertices_of(t);
            let lam = [0.2, 0.35, 0.45];
            let x = lam[0] * a[0] + lam[1] * b[0] + lam[2] * c[0];
            assert!((f.evaluate(t, lam).unwrap() - x * x).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_is_nodal() {
        let s = space("unit_square", 8, 1);
        let pi = std::f64::consts::PI;
        let g = |p: Point| (pi * p[0]).sin() * (pi * p[1]).sin();
        let f = interpolate(g, &s);
        for (i, &p) in s.dof_coords().iter().enumerate() {
            assert!((f.coeffs()[i] - g(p)).abs() < 1e-15);
        }
        let mid_err = (0..s.mesh().n_elements())
            .map(|t| {
                let [a, b, c] = s.mesh().vertices_of(t);
                let p = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
                (f.evaluate(t, [1.0 / 3.0; 3]).unwrap() - g(p)).abs()
            })
            .fold(0.0, f64::max);
        assert!(mid_err > 0.0);
        assert!(interpolate(|_| 0.0, &s).coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn invalid_barycentric() {
        let s = space("unit_square", 2, 1);
        let f = FeFunction::zero(Arc::clone(&s));
        assert!(f.evaluate(0, [0.5, 0.6, -0.1]).is_err());
        assert!(f.evaluate(0, [0.5, 0.6, 0.1]).is_err());
    }
}

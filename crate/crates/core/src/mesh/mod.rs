//! Conforming triangulations with newest-vertex bookkeeping.
//!
//! Triangles are stored as vertex triples `[peak, b, c]`: the refinement edge
//! `(b, c)` is opposite local vertex 0. Local edge `k` is the edge opposite
//! local vertex `k`, and `neighbors[t][k]` is the triangle across it (or
//! `None` on the boundary, slit faces included).

mod io;
mod refine;

use std::collections::HashMap;
use std::sync::Arc;

use crate::geometry::point_segment_distance;
use crate::{Error, Point, Result};

pub use refine::{refine, uniform_refine, Strategy, MAX_ADJACENT_GEN_DIFF};

/// A set of element indices selected for refinement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkSet {
    elements: Vec<usize>,
}

impl MarkSet {
    /// Builds a mark set; duplicates are removed and indices sorted.
    pub fn new(mut elements: Vec<usize>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        MarkSet { elements }
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.elements.binary_search(&t).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    coords: Vec<Point>,
    tris: Vec<[usize; 3]>,
    gen: Vec<u32>,
    neighbors: Vec<[Option<usize>; 3]>,
    dirichlet: Vec<bool>,
    /// Index of the parent element in the mesh this one was refined from.
    parent: Vec<usize>,
    /// Index of the level-0 ancestor.
    root: Vec<usize>,
    roots: Arc<Vec<[Point; 3]>>,
    boundary: Arc<Vec<[Point; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub n_elements: usize,
    pub n_vertices: usize,
    pub n_interior_dofs_p1: usize,
    pub h_max: f64,
    pub h_min: f64,
    /// Minimum interior angle, radians.
    pub min_angle: f64,
    pub max_adjacent_gen_diff: u32,
    pub max_vertex_gen_diff: u32,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Local edge `k` of a triangle as an ordered vertex pair.
pub(crate) fn local_edge(tri: &[usize; 3], k: usize) -> (usize, usize) {
    (tri[(k + 1) % 3], tri[(k + 2) % 3])
}

pub(crate) fn triangle_min_angle(p: [Point; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..3 {
        let a = p[k];
        let b = p[(k + 1) % 3];
        let c = p[(k + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let cr = u[0] * v[1] - u[1] * v[0];
        let dt = u[0] * v[0] + u[1] * v[1];
        best = best.min(cr.abs().atan2(dt));
    }
    best
}

fn build_neighbors(tris: &[[usize; 3]]) -> Result<Vec<[Option<usize>; 3]>> {
    let mut seen: HashMap<(usize, usize), (usize, usize)> = HashMap::with_capacity(tris.len() * 2);
    let mut neighbors = vec![[None; 3]; tris.len()];
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = local_edge(tri, k);
            match seen.remove(&edge_key(a, b)) {
                Some((s, l)) => {
                    if local_edge(&tris[s], l) != (b, a) {
                        return Err(Error::Geometry(format!(
                            "edge ({a}, {b}) shared by triangles {s} and {t} with inconsistent orientation"
                        )));
                    }
                    neighbors[t][k] = Some(s);
                    neighbors[s][l] = Some(t);
                }
                None => {
                    seen.insert(edge_key(a, b), (t, k));
                }
            }
        }
    }
    Ok(neighbors)
}

impl Triangulation {
    /// Creates a level-0 mesh. Every triangle must be listed peak-first.
    pub fn from_initial(coords: Vec<Point>, tris: Vec<[usize; 3]>, dirichlet: Vec<bool>, boundary: Vec<[Point; 2]>) -> Result<Self> {
        if dirichlet.len() != coords.len() {
            return Err(Error::Geometry("dirichlet flags do not match vertex count".into()));
        }
        for (t, tri) in tris.iter().enumerate() {
            if tri.iter().any(|&v| v >= coords.len()) {
                return Err(Error::Geometry(format!("triangle {t} references a missing vertex")));
            }
            if signed_area(coords[tri[0]], coords[tri[1]], coords[tri[2]]) <= 0.0 {
                return Err(Error::Geometry(format!("triangle {t} has non-positive area")));
            }
        }
        let neighbors = build_neighbors(&tris)?;
        let n = tris.len();
        let roots = tris.iter().map(|t| [coords[t[0]], coords[t[1]], coords[t[2]]]).collect();
        Ok(Triangulation {
            coords,
            tris,
            gen: vec![0; n],
            neighbors,
            dirichlet,
            parent: (0..n).collect(),
            root: (0..n).collect(),
            roots: Arc::new(roots),
            boundary: Arc::new(boundary),
        })
    }

    /// Creates a level-0 mesh whose boundary is taken from its own
    /// single-incidence edges (used when loading mesh files).
    pub fn from_parts(coords: Vec<Point>, tris: Vec<[usize; 3]>, dirichlet: Vec<bool>, gen: Vec<u32>) -> Result<Self> {
        let neighbors = build_neighbors(&tris)?;
        let boundary = tris
            .iter()
            .zip(&neighbors)
            .flat_map(|(tri, nb)| {
                (0..3).filter(|&k| nb[k].is_none()).map(|k| {
                    let (a, b) = local_edge(tri, k);
                    [coords[a], coords[b]]
                })
            })
            .collect();
        let mut mesh = Self::from_initial(coords, tris, dirichlet, boundary)?;
        if gen.len() != mesh.tris.len() {
            return Err(Error::Geometry("generation list does not match triangle count".into()));
        }
        mesh.gen = gen;
        Ok(mesh)
    }

    pub fn n_elements(&self) -> usize {
        self.tris.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.tris
    }

    pub fn generations(&self) -> &[u32] {
        &self.gen
    }

    pub fn neighbors(&self) -> &[[Option<usize>; 3]] {
        &self.neighbors
    }

    pub fn dirichlet(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    pub fn roots(&self) -> &[usize] {
        &self.root
    }

    pub fn root_triangle(&self, t: usize) -> [Point; 3] {
        self.roots[self.root[t]]
    }

    pub fn boundary_segments(&self) -> &[[Point; 2]] {
        &self.boundary
    }

    pub fn vertices_of(&self, t: usize) -> [Point; 3] {
        let tri = self.tris[t];
        [self.coords[tri[0]], self.coords[tri[1]], self.coords[tri[2]]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.vertices_of(t);
        signed_area(a, b, c)
    }

    /// Mesh size `h_T = meas(T)^{1/2}`.
    pub fn h(&self, t: usize) -> f64 {
        self.area(t).sqrt()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.vertices_of(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elements()).map(|t| self.area(t)).sum()
    }

    /// Largest generation difference across interior edges.
    pub fn max_adjacent_gen_diff(&self) -> u32 {
        let mut best = 0;
        for (t, nb) in self.neighbors.iter().enumerate() {
            for s in nb.iter().flatten() {
                best = best.max(self.gen[t].abs_diff(self.gen[*s]));
            }
        }
        best
    }

    /// Largest generation among the triangles incident to each vertex.
    pub(crate) fn vertex_max_generation(&self) -> Vec<u32> {
        let mut top = vec![0u32; self.n_vertices()];
        for (t, tri) in self.tris.iter().enumerate() {
            for &v in tri {
                top[v] = top[v].max(self.gen[t]);
            }
        }
        top
    }

    /// Largest generation difference between triangles sharing a vertex.
    pub fn max_vertex_gen_diff(&self) -> u32 {
        let mut lo = vec![u32::MAX; self.n_vertices()];
        let top = self.vertex_max_generation();
        for (t, tri) in self.tris.iter().enumerate() {
            for &v in tri {
                lo[v] = lo[v].min(self.gen[t]);
            }
        }
        top.iter().zip(&lo).map(|(h, l)| h.saturating_sub(*l)).max().unwrap_or(0)
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.n_elements()).map(|t| triangle_min_angle(self.vertices_of(t))).fold(f64::INFINITY, f64::min)
    }

    /// Minimum angle over every shape newest-vertex bisection can produce
    /// from the root triangles.
    pub fn nvb_min_angle_bound(&self) -> f64 {
        fn descend(p: [Point; 3], depth: u32, best: &mut f64) {
            *best = best.min(triangle_min_angle(p));
            if depth == 0 {
                return;
            }
            let [a, b, c] = p;
            let m = [(b[0] + c[0]) / 2.0, (b[1] + c[1]) / 2.0];
            descend([m, a, b], depth - 1, best);
            descend([m, c, a], depth - 1, best);
        }
        let mut best = f64::INFINITY;
        // similarity classes repeat after a few generations
        for &root in self.roots.iter() {
            descend(root, 8, &mut best);
        }
        best
    }

    pub fn stats(&self) -> MeshStats {
        let hs: Vec<f64> = (0..self.n_elements()).map(|t| self.h(t)).collect();
        MeshStats {
            n_elements: self.n_elements(),
            n_vertices: self.n_vertices(),
            n_interior_dofs_p1: self.dirichlet.iter().filter(|d| !**d).count(),
            h_max: hs.iter().copied().fold(0.0, f64::max),
            h_min: hs.iter().copied().fold(f64::INFINITY, f64::min),
            min_angle: self.min_angle(),
            max_adjacent_gen_diff: self.max_adjacent_gen_diff(),
            max_vertex_gen_diff: self.max_vertex_gen_diff(),
        }
    }

    fn on_boundary(&self, p: Point) -> bool {
        self.boundary.iter().any(|s| point_segment_distance(p, s[0], s[1]) <= 1e-12)
    }

    /// Verifies conformity: positive areas, consistent edge sharing, no
    /// hanging nodes (every unshared edge lies on the domain boundary), and
    /// Dirichlet flags exactly on boundary vertices.
    pub fn check_conformity(&self) -> std::result::Result<(), String> {
        let mut count: HashMap<(usize, usize), u32> = HashMap::with_capacity(self.tris.len() * 2);
        for (t, tri) in self.tris.iter().enumerate() {
            if self.area(t) <= 0.0 {
                return Err(format!("triangle {t} has non-positive area"));
            }
            for k in 0..3 {
                let (a, b) = local_edge(tri, k);
                *count.entry(edge_key(a, b)).or_default() += 1;
            }
        }
        let mut boundary_vertex = vec![false; self.coords.len()];
        for (&(a, b), &c) in &count {
            if c > 2 {
                return Err(format!("edge ({a}, {b}) is shared by {c} triangles"));
            }
            if c == 1 {
                let pa = self.coords[a];
                let pb = self.coords[b];
                let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
                if !self.on_boundary(mid) {
                    return Err(format!("edge ({a}, {b}) is unshared but not on the boundary (hanging node)"));
                }
                boundary_vertex[a] = true;
                boundary_vertex[b] = true;
            }
        }
        for (t, nb) in self.neighbors.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = local_edge(&self.tris[t], k);
                let shared = count[&edge_key(a, b)] == 2;
                if shared != nb[k].is_some() {
                    return Err(format!("stale adjacency on triangle {t}, edge {k}"));
                }
            }
        }
        for (v, (&flag, &bnd)) in self.dirichlet.iter().zip(&boundary_vertex).enumerate() {
            if flag != bnd {
                return Err(format!("vertex {v}: dirichlet flag {flag} but boundary incidence {bnd}"));
            }
        }
        Ok(())
    }

    /// Verifies every element lies inside its level-0 ancestor and obeys
    /// `meas(T) = meas(root) 2^{-gen}`.
    pub fn check_nestedness(&self) -> std::result::Result<(), String> {
        for t in 0..self.n_elements() {
            let r = self.root_triangle(t);
            let root_area = signed_area(r[0], r[1], r[2]);
            for p in self.vertices_of(t) {
                let l0 = signed_area(p, r[1], r[2]) / root_area;
                let l1 = signed_area(r[0], p, r[2]) / root_area;
                let l2 = signed_area(r[0], r[1], p) / root_area;
                if l0 < -1e-12 || l1 < -1e-12 || l2 < -1e-12 {
                    return Err(format!("triangle {t} leaves its root {}", self.root[t]));
                }
            }
            let expected = root_area * 0.5f64.powi(self.gen[t] as i32);
            if (self.area(t) - expected).abs() > 1e-12 * root_area {
                return Err(format!("triangle {t} violates the generation/area law"));
            }
        }
        Ok(())
    }
}

pub use io::{read_mesh, write_mesh};

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn single_triangle() -> Triangulation {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let boundary = vec![[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 0.0]]];
        Triangulation::from_initial(coords, vec![[0, 1, 2]], vec![true; 3], boundary).unwrap()
    }

    #[test]
    fn rejects_inverted() {
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(Triangulation::from_initial(coords, vec![[0, 2, 1]], vec![true; 3], vec![]).is_err());
    }

    #[test]
    fn single_triangle_is_conforming() {
        let m = single_triangle();
        m.check_conformity().unwrap();
        m.check_nestedness().unwrap();
        assert_eq!(m.h(0), 0.5f64.sqrt());
        assert!((m.min_angle() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn right_isosceles_has_one_shape_class() {
        let m = single_triangle();
        assert!((m.nvb_min_angle_bound() - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn mark_set_dedups() {
        let s = MarkSet::new(vec![3, 1, 3]);
        assert_eq!(s.elements(), &[1, 3]);
        assert!(s.contains(3) && !s.contains(2));
    }
}

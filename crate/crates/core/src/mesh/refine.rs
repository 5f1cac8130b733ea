//! Newest-vertex bisection with conformity closure, and a grading-limited
//! variant that bounds the generation jump between triangles sharing a vertex.
//!
//! Plain NVB from a compatibly labelled initial mesh already keeps
//! edge-adjacent generations within one of each other, so the grading
//! closure acts on vertex patches, where NVB alone lets generations drift
//! further apart.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{build_neighbors, edge_key, MarkSet, Triangulation};
use crate::{Error, Result};

/// Bound enforced by [`Strategy::BisecLg1`] on `|gen(T) - gen(T')|` for
/// triangles sharing a vertex (in particular for edge-adjacent ones). Two
/// generations halve `h_T`, so touching mesh sizes differ by at most a
/// factor 2.
pub const MAX_ADJACENT_GEN_DIFF: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Plain newest-vertex bisection with conformity closure.
    Nvb,
    /// Newest-vertex bisection plus a generation-grading closure over
    /// vertex patches.
    BisecLg1,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Nvb => "nvb",
            Strategy::BisecLg1 => "bisec_lg1",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nvb" => Ok(Strategy::Nvb),
            "bisec_lg1" => Ok(Strategy::BisecLg1),
            other => Err(Error::Config(format!("unknown refinement strategy '{other}'"))),
        }
    }
}

type EdgeFlags = Vec<[bool; 3]>;

/// Flags `(t, k)` and its twin on the neighbor, queueing both triangles.
fn flag_edge(mesh: &Triangulation, flags: &mut EdgeFlags, queue: &mut VecDeque<usize>, t: usize, k: usize) {
    if flags[t][k] {
        return;
    }
    flags[t][k] = true;
    queue.push_back(t);
    if let Some(s) = mesh.neighbors[t][k] {
        let l = (0..3).find(|&l| mesh.neighbors[s][l] == Some(t)).expect("adjacency is symmetric");
        flags[s][l] = true;
        queue.push_back(s);
    }
}

/// Closure: any triangle with a flagged edge must also have its refinement
/// edge flagged.
fn close(mesh: &Triangulation, flags: &mut EdgeFlags, mut queue: VecDeque<usize>) {
    while let Some(t) = queue.pop_front() {
        if !flags[t][0] && flags[t].iter().any(|&f| f) {
            flag_edge(mesh, flags, &mut queue, t, 0);
        }
    }
}

/// Bisects every triangle across its flagged edges. `flags` must be closed.
fn bisect(mesh: &Triangulation, flags: &EdgeFlags) -> Triangulation {
    let mut coords = mesh.coords.clone();
    let mut dirichlet = mesh.dirichlet.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let n_new = flags.iter().map(|f| 1 + f.iter().filter(|&&x| x).count()).sum();
    let mut tris = Vec::with_capacity(n_new);
    let mut gen = Vec::with_capacity(n_new);
    let mut parent = Vec::with_capacity(n_new);

    let mut midpoint = |a: usize, b: usize, boundary: bool| -> usize {
        *midpoints.entry(edge_key(a, b)).or_insert_with(|| {
            let (pa, pb) = (coords[a], coords[b]);
            coords.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
            dirichlet.push(boundary);
            coords.len() - 1
        })
    };

    for (t, &[a, b, c]) in mesh.tris.iter().enumerate() {
        let f = flags[t];
        let g = mesh.gen[t];
        let bnd = mesh.neighbors[t].map(|n| n.is_none());
        let mut emit = |tri: [usize; 3], g: u32| {
            tris.push(tri);
            gen.push(g);
            parent.push(t);
        };
        if !f[0] {
            debug_assert!(!f[1] && !f[2], "flags not closed");
            emit([a, b, c], g);
            continue;
        }
        let m = midpoint(b, c, bnd[0]);
        // left child [m, a, b]: its refinement edge (a, b) is parent edge 2
        if f[2] {
            let m2 = midpoint(a, b, bnd[2]);
            emit([m2, m, a], g + 2);
            emit([m2, b, m], g + 2);
        } else {
            emit([m, a, b], g + 1);
        }
        // right child [m, c, a]: its refinement edge (c, a) is parent edge 1
        if f[1] {
            let m1 = midpoint(c, a, bnd[1]);
            emit([m1, m, c], g + 2);
            emit([m1, a, m], g + 2);
        } else {
            emit([m, c, a], g + 1);
        }
    }

    let neighbors = build_neighbors(&tris).expect("bisection preserves orientation");
    let root = parent.iter().map(|&p| mesh.root[p]).collect();
    Triangulation {
        coords,
        tris,
        gen,
        neighbors,
        dirichlet,
        parent,
        root,
        roots: Arc::clone(&mesh.roots),
        boundary: Arc::clone(&mesh.boundary),
    }
}

fn nvb_pass(mesh: &Triangulation, marked: impl IntoIterator<Item = usize>) -> Triangulation {
    let mut flags = vec![[false; 3]; mesh.n_elements()];
    let mut queue = VecDeque::new();
    for t in marked {
        flag_edge(mesh, &mut flags, &mut queue, t, 0);
    }
    close(mesh, &mut flags, queue);
    bisect(mesh, &flags)
}

/// Elements whose generation trails an edge neighbor by more than the bound.
fn grading_violations(mesh: &Triangulation) -> Vec<usize> {
    let top = mesh.vertex_max_generation();
    (0..mesh.n_elements()).filter(|&t| mesh.tris[t].iter().any(|&v| top[v] > mesh.gen[t] + MAX_ADJACENT_GEN_DIFF)).collect()
}

/// Refines `mesh` so that every marked element is bisected at least once,
/// closing hanging nodes (and, for [`Strategy::BisecLg1`], generation jumps
/// across vertex patches).
pub fn refine(mesh: &Triangulation, marked: &MarkSet, strategy: Strategy) -> Result<Triangulation> {
    if marked.is_empty() {
        return Err(Error::Argument("refine called with an empty mark set".into()));
    }
    if let Some(&t) = marked.elements().last() {
        if t >= mesh.n_elements() {
            return Err(Error::Argument(format!("marked element {t} out of range")));
        }
    }
    let mut out = nvb_pass(mesh, marked.elements().iter().copied());
    if strategy == Strategy::BisecLg1 {
        loop {
            let bad = grading_violations(&out);
            if bad.is_empty() {
                break;
            }
            let mut next = nvb_pass(&out, bad);
            next.parent = next.parent.iter().map(|&p| out.parent[p]).collect();
            out = next;
        }
    }
    Ok(out)
}

/// Bisects every edge of every element: each triangle becomes four
/// children two generations deeper.
pub fn uniform_refine(mesh: &Triangulation) -> Triangulation {
    let flags = vec![[true; 3]; mesh.n_elements()];
    bisect(mesh, &flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{builtin_domain, initial_mesh};
    use crate::mesh::tests::single_triangle;

    #[test]
    fn single_bisection() {
        let m = single_triangle();
        let r = refine(&m, &MarkSet::new(vec![0]), Strategy::Nvb).unwrap();
        assert_eq!(r.n_elements(), 2);
        for t in 0..2 {
            assert_eq!(r.area(t), 0.25);
            assert_eq!(r.generations()[t], 1);
            assert_eq!(r.triangles()[t][0], 3, "midpoint becomes the peak");
        }
        assert_eq!(r.coords()[3], [0.5, 0.5]);
        assert!(r.dirichlet()[3]);
        r.check_conformity().unwrap();
        r.check_nestedness().unwrap();
    }

    #[test]
    fn two_triangle_closure() {
        // unit square split along its diagonal; both halves share the refinement edge
        let coords = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let boundary = vec![[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [1.0, 1.0]], [[1.0, 1.0], [0.0, 1.0]], [[0.0, 1.0], [0.0, 0.0]]];
        let m = Triangulation::from_initial(coords, vec![[1, 2, 0], [3, 0, 2]], vec![true; 4], boundary).unwrap();
        let r = refine(&m, &MarkSet::new(vec![0]), Strategy::Nvb).unwrap();
        assert_eq!(r.n_elements(), 4);
        assert_eq!(r.n_vertices(), 5);
        assert!(!r.dirichlet()[4], "diagonal midpoint is interior");
        r.check_conformity().unwrap();
        r.check_nestedness().unwrap();
        assert_eq!(r.parents(), &[0, 0, 1, 1]);
    }

    #[test]
    fn empty_mark_set_rejected() {
        let m = single_triangle();
        assert!(matches!(refine(&m, &MarkSet::default(), Strategy::Nvb), Err(Error::Argument(_))));
        assert!(matches!(refine(&m, &MarkSet::new(vec![5]), Strategy::Nvb), Err(Error::Argument(_))));
    }

    #[test]
    fn uniform_refine_counts() {
        let square = initial_mesh(&builtin_domain("unit_square").unwrap(), 2).unwrap();
        let r = uniform_refine(&square);
        assert_eq!(r.n_elements(), 32);
        assert!((r.total_area() - 1.0).abs() < 1e-15);
        assert!(r.generations().iter().all(|&g| g == 2));
        r.check_conformity().unwrap();
        r.check_nestedness().unwrap();
        let h0 = square.stats().h_max;
        assert!((r.stats().h_max - h0 / 2.0).abs() < 1e-15);

        let l = initial_mesh(&builtin_domain("omega1").unwrap(), 8).unwrap();
        let l2 = uniform_refine(&uniform_refine(&l));
        assert_eq!(l2.n_elements(), 1536);
        l2.check_conformity().unwrap();
    }

    #[test]
    fn children_areas_partition_parent() {
        let l = initial_mesh(&builtin_domain("omega1").unwrap(), 8).unwrap();
        let r = uniform_refine(&l);
        let mut sums = vec![0.0; l.n_elements()];
        for t in 0..r.n_elements() {
            sums[r.parents()[t]] += r.area(t);
        }
        for t in 0..l.n_elements() {
            assert!((sums[t] - l.area(t)).abs() < 1e-16);
        }
    }

    #[test]
    fn lg1_grading_over_repeated_single_marks() {
        let mut m = initial_mesh(&builtin_domain("omega1").unwrap(), 8).unwrap();
        let corner = [0.5, 0.5];
        for _ in 0..20 {
            // mark the element touching the reentrant corner with the highest generation
            let t = (0..m.n_elements())
                .filter(|&t| m.vertices_of(t).contains(&corner))
                .max_by_key(|&t| (m.generations()[t], std::cmp::Reverse(t)))
                .unwrap();
            m = refine(&m, &MarkSet::new(vec![t]), Strategy::BisecLg1).unwrap();
            assert!(m.max_adjacent_gen_diff() <= MAX_ADJACENT_GEN_DIFF);
            assert!(m.max_vertex_gen_diff() <= MAX_ADJACENT_GEN_DIFF);
            m.check_conformity().unwrap();
            m.check_nestedness().unwrap();
        }
    }

    #[test]
    fn grading_closure_acts_on_vertex_patches() {
        // repeated corner marking under plain NVB lets vertex patches drift
        // apart by more than two generations; the graded variant does not
        let run = |strategy| {
            let mut m = initial_mesh(&builtin_domain("omega1").unwrap(), 8).unwrap();
            for _ in 0..12 {
                let t = (0..m.n_elements())
                    .filter(|&t| m.vertices_of(t).contains(&[0.5, 0.5]))
                    .max_by_key(|&t| (m.generations()[t], std::cmp::Reverse(t)))
                    .unwrap();
                m = refine(&m, &MarkSet::new(vec![t]), strategy).unwrap();
                assert!(m.max_adjacent_gen_diff() <= 1);
            }
            m
        };
        let plain = run(Strategy::Nvb);
        let graded = run(Strategy::BisecLg1);
        assert!(plain.max_vertex_gen_diff() > MAX_ADJACENT_GEN_DIFF);
        assert!(graded.max_vertex_gen_diff() <= MAX_ADJACENT_GEN_DIFF);
        assert!(graded.n_elements() > plain.n_elements());
    }

    #[test]
    fn deterministic() {
        let l = initial_mesh(&builtin_domain("omega2").unwrap(), 8).unwrap();
        let marks = MarkSet::new(vec![3, 100, 200]);
        let a = refine(&l, &marks, Strategy::BisecLg1).unwrap();
        let b = refine(&l, &marks, Strategy::BisecLg1).unwrap();
        assert_eq!(a.triangles(), b.triangles());
        assert_eq!(a.coords(), b.coords());
    }
}

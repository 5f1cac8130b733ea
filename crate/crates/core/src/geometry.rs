//! Computational domains and structured initial meshes.
//!
//! A [`DomainSpec`] is a counterclockwise outer polygon plus a list of slit
//! segments. Slits are realized in the mesh by node duplication: the two
//! faces of a slit carry independent vertices, while an interior slit tip is
//! a single shared vertex.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::mesh::Triangulation;
use crate::{Error, Point, Result};

/// Orientation used to split lattice squares into two triangles.
pub const DIAGONAL_ORIENTATION: &str = "lower-left-to-upper-right";

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub name: String,
    pub outer: Vec<Point>,
    pub slits: Vec<[Point; 2]>,
}

/// Identifiers accepted by [`builtin_domain`].
pub const BUILTIN_DOMAINS: [&str; 4] = ["omega1", "omega2", "omega3", "unit_square"];

pub fn builtin_domain(id: &str) -> Result<DomainSpec> {
    let square = |a: f64, b: f64| vec![[a, a], [b, a], [b, b], [a, b]];
    let spec = match id {
        "omega1" => DomainSpec {
            name: id.into(),
            outer: vec![[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [1.0, 0.5], [1.0, 1.0], [0.0, 1.0]],
            slits: vec![],
        },
        "omega2" => DomainSpec {
            name: id.into(),
            outer: square(-1.0, 1.0),
            slits: vec![[[0.5, 0.0], [1.0, 0.0]], [[0.0, 0.5], [0.0, 1.0]], [[-0.5, 0.0], [-1.0, 0.0]], [[0.0, -0.5], [0.0, -1.0]]],
        },
        "omega3" => DomainSpec {
            name: id.into(),
            outer: square(-1.0, 1.0),
            slits: vec![[[0.505, 0.0], [1.0, 0.0]], [[0.0, 0.501], [0.0, 1.0]], [[-0.499, 0.0], [-1.0, 0.0]], [[0.0, -0.5], [0.0, -1.0]]],
        },
        "unit_square" => DomainSpec { name: id.into(), outer: square(0.0, 1.0), slits: vec![] },
        other => return Err(Error::Config(format!("unknown domain '{other}'"))),
    };
    Ok(spec)
}

/// Resolves `--domain <id|path>`: a built-in identifier or a domain file.
pub fn resolve_domain(id_or_path: &str) -> Result<DomainSpec> {
    if BUILTIN_DOMAINS.contains(&id_or_path) {
        return builtin_domain(id_or_path);
    }
    let path = Path::new(id_or_path);
    if path.exists() {
        let text = std::fs::read_to_string(path)?;
        let mut spec = DomainSpec::parse(&text)?;
        if spec.name.is_empty() {
            spec.name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("domain").to_string();
        }
        return Ok(spec);
    }
    Err(Error::Config(format!("'{id_or_path}' is neither a built-in domain nor a readable file")))
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let eps = 1e-14;
    (d1.abs() <= eps && point_segment_distance(a, c, d) <= eps)
        || (d2.abs() <= eps && point_segment_distance(b, c, d) <= eps)
        || (d3.abs() <= eps && point_segment_distance(c, a, b) <= eps)
        || (d4.abs() <= eps && point_segment_distance(d, a, b) <= eps)
}

fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

impl DomainSpec {
    pub fn signed_area(&self) -> f64 {
        let n = self.outer.len();
        (0..n)
            .map(|i| {
                let a = self.outer[i];
                let b = self.outer[(i + 1) % n];
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn outer_edges(&self) -> impl Iterator<Item = [Point; 2]> + '_ {
        let n = self.outer.len();
        (0..n).map(move |i| [self.outer[i], self.outer[(i + 1) % n]])
    }

    pub fn on_outer_boundary(&self, p: Point, tol: f64) -> bool {
        self.outer_edges().any(|[a, b]| point_segment_distance(p, a, b) <= tol)
    }

    /// All boundary segments: outer polygon edges followed by slits.
    pub fn boundary_segments(&self) -> Vec<[Point; 2]> {
        self.outer_edges().chain(self.slits.iter().copied()).collect()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.outer {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Slit endpoints that lie strictly inside the domain.
    pub fn interior_tips(&self) -> Vec<Point> {
        self.slits.iter().flat_map(|s| s.iter().copied()).filter(|&p| !self.on_outer_boundary(p, 1e-12)).collect()
    }

    /// Checks the polygon is simple and counterclockwise, and that slits
    /// meet the boundary or each other only at endpoints on the boundary.
    pub fn validate(&self) -> Result<()> {
        let n = self.outer.len();
        if n < 3 {
            return Err(Error::Geometry("outer polygon needs at least 3 vertices".into()));
        }
        if self.signed_area() <= 0.0 {
            return Err(Error::Geometry("outer polygon must be counterclockwise".into()));
        }
        let edges: Vec<[Point; 2]> = self.outer_edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && segments_intersect(edges[i][0], edges[i][1], edges[j][0], edges[j][1]) {
                    return Err(Error::Geometry(format!("outer polygon self-intersects at edges {i} and {j}")));
                }
            }
        }
        for (k, s) in self.slits.iter().enumerate() {
            let mid = [(s[0][0] + s[1][0]) / 2.0, (s[0][1] + s[1][1]) / 2.0];
            if !point_in_polygon(mid, &self.outer) {
                return Err(Error::Geometry(format!("slit {k} lies outside the domain")));
            }
            for &p in s {
                if !point_in_polygon(p, &self.outer) && !self.on_outer_boundary(p, 1e-12) {
                    return Err(Error::Geometry(format!("slit {k} endpoint outside the domain")));
                }
            }
            // only endpoints may touch the outer boundary
            let interior_hits = edges.iter().any(|e| {
                segments_intersect(s[0], s[1], e[0], e[1])
                    && !(point_segment_distance(s[0], e[0], e[1]) <= 1e-12 || point_segment_distance(s[1], e[0], e[1]) <= 1e-12)
            });
            if interior_hits {
                return Err(Error::Geometry(format!("slit {k} crosses the outer boundary")));
            }
            for (l, t) in self.slits.iter().enumerate().skip(k + 1) {
                if segments_intersect(s[0], s[1], t[0], t[1]) {
                    return Err(Error::Geometry(format!("slits {k} and {l} intersect")));
                }
            }
        }
        Ok(())
    }

    /// Parses the line-oriented domain format.
    ///
    /// ```text
    /// # comment
    /// name omega1
    /// polygon
    /// 0 0
    /// 0.5 0
    /// ...
    /// slit 0.5 0 1 0
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = DomainSpec { name: String::new(), outer: vec![], slits: vec![] };
        let mut in_polygon = false;
        let num = |s: &str, line: usize| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("expected a number, found '{s}'") })
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let toks: Vec<&str> = content.split_whitespace().collect();
            match toks[0] {
                "polygon" => {
                    if toks.len() != 1 {
                        return Err(Error::Parse { line, msg: "'polygon' takes no arguments".into() });
                    }
                    in_polygon = true;
                }
                "slit" => {
                    in_polygon = false;
                    if toks.len() != 5 {
                        return Err(Error::Parse { line, msg: "'slit' expects x1 y1 x2 y2".into() });
                    }
                    let v: Vec<f64> = toks[1..].iter().map(|t| num(t, line)).collect::<Result<_>>()?;
                    spec.slits.push([[v[0], v[1]], [v[2], v[3]]]);
                }
                "name" => {
                    in_polygon = false;
                    spec.name = toks[1..].join(" ");
                }
                _ if in_polygon => {
                    if toks.len() != 2 {
                        return Err(Error::Parse { line, msg: "polygon vertex expects 'x y'".into() });
                    }
                    spec.outer.push([num(toks[0], line)?, num(toks[1], line)?]);
                }
                other => return Err(Error::Parse { line, msg: format!("unexpected token '{other}'") }),
            }
        }
        if spec.outer.is_empty() {
            return Err(Error::Parse { line: 0, msg: "missing 'polygon' block".into() });
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.name.is_empty() {
            let _ = writeln!(out, "name {}", self.name);
        }
        out.push_str("polygon\n");
        for p in &self.outer {
            let _ = writeln!(out, "{:?} {:?}", p[0], p[1]);
        }
        for s in &self.slits {
            let _ = writeln!(out, "slit {:?} {:?} {:?} {:?}", s[0][0], s[0][1], s[1][0], s[1][1]);
        }
        out
    }
}

fn lattice_index(x: f64, n: usize) -> Option<i64> {
    let s = x * n as f64;
    let r = s.round();
    ((s - r).abs() <= 1e-9).then_some(r as i64)
}

/// Builds the uniform criss-cross mesh with `n` subdivisions per unit length.
///
/// Each lattice square inside the polygon is split along its
/// lower-left-to-upper-right diagonal; the diagonal is the refinement edge of
/// both halves. Slit endpoints off the lattice are realized by moving the
/// nearest lattice node onto them.
pub fn initial_mesh(spec: &DomainSpec, n: usize) -> Result<Triangulation> {
    if n == 0 {
        return Err(Error::Geometry("subdivisions per unit length must be at least 1".into()));
    }
    spec.validate()?;
    let nf = n as f64;
    let m = spec.outer.len();
    let mut lattice_outer = Vec::with_capacity(m);
    for p in &spec.outer {
        match (lattice_index(p[0], n), lattice_index(p[1], n)) {
            (Some(i), Some(j)) => lattice_outer.push((i, j)),
            _ => return Err(Error::Geometry(format!("polygon vertex ({}, {}) is not on the 1/{n} lattice", p[0], p[1]))),
        }
    }
    for k in 0..m {
        let (a, b) = (lattice_outer[k], lattice_outer[(k + 1) % m]);
        if a.0 != b.0 && a.1 != b.1 {
            return Err(Error::Geometry("outer polygon must be axis-aligned".into()));
        }
    }
    let imin = lattice_outer.iter().map(|p| p.0).min().unwrap();
    let imax = lattice_outer.iter().map(|p| p.0).max().unwrap();
    let jmin = lattice_outer.iter().map(|p| p.1).min().unwrap();
    let jmax = lattice_outer.iter().map(|p| p.1).max().unwrap();

    let mut active = Vec::new();
    for j in jmin..jmax {
        for i in imin..imax {
            let c = [(i as f64 + 0.5) / nf, (j as f64 + 0.5) / nf];
            if point_in_polygon(c, &spec.outer) {
                active.push((i, j));
            }
        }
    }
    let mut used = std::collections::BTreeSet::new();
    for &(i, j) in &active {
        for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
            // row-major ordering: sort key (j, i)
            used.insert((j + dj, i + di));
        }
    }
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut coords: Vec<Point> = Vec::with_capacity(used.len());
    for &(j, i) in &used {
        index.insert((i, j), coords.len());
        coords.push([i as f64 / nf, j as f64 / nf]);
    }
    let mut tris = Vec::with_capacity(2 * active.len());
    for &(i, j) in &active {
        let p00 = index[&(i, j)];
        let p10 = index[&(i + 1, j)];
        let p11 = index[&(i + 1, j + 1)];
        let p01 = index[&(i, j + 1)];
        // peak (right-angle vertex) first; refinement edge is the diagonal
        tris.push([p10, p11, p00]);
        tris.push([p01, p00, p11]);
    }

    // snap slit endpoints that are off the lattice
    let mut slits = spec.slits.clone();
    for slit in slits.iter_mut() {
        for end in slit.iter_mut() {
            if lattice_index(end[0], n).is_some() && lattice_index(end[1], n).is_some() {
                continue;
            }
            let key = ((end[0] * nf).round() as i64, (end[1] * nf).round() as i64);
            let v = *index
                .get(&key)
                .ok_or_else(|| Error::Geometry(format!("slit endpoint ({}, {}) has no nearby lattice node", end[0], end[1])))?;
            let dist = ((coords[v][0] - end[0]).powi(2) + (coords[v][1] - end[1]).powi(2)).sqrt();
            if dist > 0.25 / nf {
                return Err(Error::Geometry(format!("slit endpoint ({}, {}) is too far from the lattice to snap", end[0], end[1])));
            }
            coords[v] = *end;
        }
    }
    for (t, tri) in tris.iter().enumerate() {
        if cross(coords[tri[0]], coords[tri[1]], coords[tri[2]]) <= 0.0 {
            return Err(Error::Geometry(format!("triangle {t} is inverted after snapping slit endpoints")));
        }
    }

    let tol = 1e-12;
    let snapped = DomainSpec { name: spec.name.clone(), outer: spec.outer.clone(), slits: slits.clone() };
    let mut dirichlet: Vec<bool> = coords
        .iter()
        .map(|&p| snapped.on_outer_boundary(p, tol) || slits.iter().any(|s| point_segment_distance(p, s[0], s[1]) <= tol))
        .collect();

    // duplicate slit nodes (except interior tips) for triangles on the positive side
    for slit in &slits {
        let dir = [slit[1][0] - slit[0][0], slit[1][1] - slit[0][1]];
        let on_slit: Vec<usize> = (0..coords.len()).filter(|&v| point_segment_distance(coords[v], slit[0], slit[1]) <= tol).collect();
        if on_slit.len() < 2 {
            return Err(Error::Geometry("slit does not follow lattice lines".into()));
        }
        let is_axis = dir[0].abs() <= tol || dir[1].abs() <= tol;
        if !is_axis {
            return Err(Error::Geometry("slits must be axis-aligned".into()));
        }
        let mut copies: HashMap<usize, usize> = HashMap::new();
        for &v in &on_slit {
            let interior_tip = !snapped.on_outer_boundary(coords[v], tol)
                && slit.iter().any(|e| (e[0] - coords[v][0]).abs() <= tol && (e[1] - coords[v][1]).abs() <= tol);
            if interior_tip {
                continue;
            }
            let copy = coords.len();
            coords.push(coords[v]);
            dirichlet.push(true);
            copies.insert(v, copy);
        }
        for tri in tris.iter_mut() {
            if !tri.iter().any(|v| copies.contains_key(v)) {
                continue;
            }
            let c = [
                (coords[tri[0]][0] + coords[tri[1]][0] + coords[tri[2]][0]) / 3.0,
                (coords[tri[0]][1] + coords[tri[1]][1] + coords[tri[2]][1]) / 3.0,
            ];
            // the slit's supporting line; triangles touching only an endpoint
            // beyond the slit extent are handled by the same side test
            if cross(slit[0], slit[1], c) > 0.0 {
                for v in tri.iter_mut() {
                    if let Some(&copy) = copies.get(v) {
                        *v = copy;
                    }
                }
            }
        }
    }

    Triangulation::from_initial(coords, tris, dirichlet, snapped.boundary_segments())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_ids() {
        for id in BUILTIN_DOMAINS {
            let spec = builtin_domain(id).unwrap();
            spec.validate().unwrap();
            assert_eq!(DomainSpec::parse(&spec.to_text()).unwrap(), spec);
        }
        assert!(matches!(builtin_domain("omega9"), Err(Error::Config(_))));
    }

    #[test]
    fn omega1_geometry() {
        let s = builtin_domain("omega1").unwrap();
        assert_eq!(s.outer, vec![[0.0, 0.0], [0.5, 0.0], [0.5, 0.5], [1.0, 0.5], [1.0, 1.0], [0.0, 1.0]]);
        assert!((s.signed_area() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn omega1_initial_mesh_counts() {
        let mesh = initial_mesh(&builtin_domain("omega1").unwrap(), 8).unwrap();
        assert_eq!(mesh.n_elements(), 96);
        assert_eq!(mesh.n_vertices(), 65);
        assert_eq!(mesh.dirichlet().iter().filter(|d| !**d).count(), 33);
        for t in 0..mesh.n_elements() {
            assert_eq!(mesh.area(t), 1.0 / 128.0);
            assert!((mesh.h(t) - 2f64.sqrt() / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn unit_square_n2() {
        let mesh = initial_mesh(&builtin_domain("unit_square").unwrap(), 2).unwrap();
        assert_eq!(mesh.n_elements(), 8);
        assert_eq!(mesh.n_vertices(), 9);
        assert_eq!(mesh.dirichlet().iter().filter(|d| !**d).count(), 1);
    }

    #[test]
    fn omega2_slits_are_doubled() {
        let spec = builtin_domain("omega2").unwrap();
        let mesh = initial_mesh(&spec, 8).unwrap();
        mesh.check_conformity().unwrap();
        // each slit of length 1/2 has 4 lattice nodes besides the tip, all duplicated
        assert_eq!(mesh.n_vertices(), 17 * 17 + 4 * 4);
        let mut by_point: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (v, p) in mesh.coords().iter().enumerate() {
            by_point.entry(((p[0] * 64.0) as i64, (p[1] * 64.0) as i64)).or_default().push(v);
        }
        for (_, verts) in by_point.iter().filter(|(_, v)| v.len() > 1) {
            assert_eq!(verts.len(), 2);
            let p = mesh.coords()[verts[0]];
            assert!(spec.slits.iter().any(|s| point_segment_distance(p, s[0], s[1]) < 1e-12));
            assert!(verts.iter().all(|&v| mesh.dirichlet()[v]));
        }
        // tips are single Dirichlet vertices
        for tip in spec.interior_tips() {
            let hits: Vec<_> = mesh.coords().iter().enumerate().filter(|(_, p)| **p == tip).collect();
            assert_eq!(hits.len(), 1);
            assert!(mesh.dirichlet()[hits[0].0]);
        }
        // slit faces are boundary edges: 4 slits x 4 segments x 2 faces
        let n_boundary_edges =
            (0..mesh.n_elements()).flat_map(|t| (0..3).map(move |k| (t, k))).filter(|&(t, k)| mesh.neighbors()[t][k].is_none()).count();
        assert_eq!(n_boundary_edges, 4 * 16 + 32);
    }

    #[test]
    fn omega3_snaps_tips() {
        let spec = builtin_domain("omega3").unwrap();
        let mesh = initial_mesh(&spec, 8).unwrap();
        mesh.check_conformity().unwrap();
        for tip in spec.interior_tips() {
            assert!(mesh.coords().contains(&tip));
        }
        assert!((0..mesh.n_elements()).all(|t| mesh.area(t) > 0.0));
    }

    #[test]
    fn rejects_off_lattice_polygon() {
        let spec = DomainSpec { name: "bad".into(), outer: vec![[0.0, 0.0], [0.3, 0.0], [0.3, 1.0], [0.0, 1.0]], slits: vec![] };
        assert!(matches!(initial_mesh(&spec, 8), Err(Error::Geometry(_))));
    }

    #[test]
    fn rejects_clockwise_polygon() {
        let mut spec = builtin_domain("unit_square").unwrap();
        spec.outer.reverse();
        assert!(matches!(spec.validate(), Err(Error::Geometry(_))));
    }

    #[test]
    fn parse_reports_line() {
        let err = DomainSpec::parse("polygon\n0 0\n1 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }
}

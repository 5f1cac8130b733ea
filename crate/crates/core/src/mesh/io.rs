//! Plain-text mesh format:
//!
//! ```text
//! vertices N
//! triangles M
//! x y dirichlet_flag      (N lines, 17 significant digits)
//! v0 v1 v2 gen            (M lines, v0 is the peak vertex)
//! ```

use std::fmt::Write as _;

use super::Triangulation;
use crate::{Error, Result};

pub fn write_mesh(mesh: &Triangulation) -> String {
    let mut out = String::with_capacity(64 * (mesh.n_vertices() + mesh.n_elements()));
    let _ = writeln!(out, "vertices {}", mesh.n_vertices());
    let _ = writeln!(out, "triangles {}", mesh.n_elements());
    for (p, &d) in mesh.coords().iter().zip(mesh.dirichlet()) {
        let _ = writeln!(out, "{:.16e} {:.16e} {}", p[0], p[1], u8::from(d));
    }
    for (t, g) in mesh.triangles().iter().zip(mesh.generations()) {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], g);
    }
    out
}

pub fn read_mesh(text: &str) -> Result<Triangulation> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut header = |key: &str| -> Result<usize> {
        let (i, l) = lines.next().ok_or(Error::Parse { line: 0, msg: format!("missing '{key}' header") })?;
        let mut toks = l.split_whitespace();
        match (toks.next(), toks.next().and_then(|n| n.parse().ok())) {
            (Some(k), Some(n)) if k == key => Ok(n),
            _ => Err(Error::Parse { line: i + 1, msg: format!("expected '{key} <count>'") }),
        }
    };
    let nv = header("vertices")?;
    let nt = header("triangles")?;
    let bad = |i: usize, what: &str| Error::Parse { line: i + 1, msg: format!("malformed {what} line") };
    let mut coords = Vec::with_capacity(nv);
    let mut dirichlet = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (i, l) = lines.next().ok_or(Error::Parse { line: 0, msg: "truncated vertex block".into() })?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(bad(i, "vertex"));
        }
        let x: f64 = toks[0].parse().map_err(|_| bad(i, "vertex"))?;
        let y: f64 = toks[1].parse().map_err(|_| bad(i, "vertex"))?;
        let d = match toks[2] {
            "0" => false,
            "1" => true,
            _ => return Err(bad(i, "vertex")),
        };
        coords.push([x, y]);
        dirichlet.push(d);
    }
    let mut tris = Vec::with_capacity(nt);
    let mut gen = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (i, l) = lines.next().ok_or(Error::Parse { line: 0, msg: "truncated triangle block".into() })?;
        let v: Vec<u64> =
            l.split_whitespace().map(|t| t.parse::<u64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad(i, "triangle"))?;
        if v.len() != 4 {
            return Err(bad(i, "triangle"));
        }
        tris.push([v[0] as usize, v[1] as usize, v[2] as usize]);
        gen.push(v[3] as u32);
    }
    Triangulation::from_parts(coords, tris, dirichlet, gen)
}

use std::fmt::Write as _;
use std::path::Path;

use crate::mesh::Triangulation;
use crate::Result;

/// Stroke-only SVG of a triangulation: one closed path per triangle, view
/// box equal to the bounding box of the vertices, y axis pointing up.
pub fn render_mesh_svg(mesh: &Triangulation) -> String {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in mesh.coords() {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
    let stroke = 0.002 * w.max(h);
    let mut s = String::with_capacity(64 * mesh.n_elements() + 256);
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="{}">"#,
        lo[0],
        lo[1],
        w,
        h,
        (800.0 * h / w).round()
    );
    // mirror y so that the picture matches the mathematical orientation
    let _ = writeln!(s, r#"<g transform="matrix(1 0 0 -1 0 {})" fill="none" stroke="black" stroke-width="{stroke}">"#, lo[1] + hi[1]);
    for tri in mesh.triangles() {
        let [a, b, c] = tri.map(|v| mesh.coords()[v]);
        let _ = writeln!(s, r#"<path d="M{} {} L{} {} L{} {} Z"/>"#, a[0], a[1], b[0], b[1], c[0], c[1]);
    }
    s.push_str("</g>\n</svg>\n");
    s
}

pub fn write_mesh_svg(mesh: &Triangulation, path: &Path) -> Result<()> {
    std::fs::write(path, render_mesh_svg(mesh))?;
    Ok(())
}

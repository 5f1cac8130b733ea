//! Uniform refinement on the unit square: discrete λ₁ against 2π², the
//! observed order, and the pointwise error of Λ_l u after Ritz projection.

use std::f64::consts::PI;
use std::sync::Arc;

use eigenadapt::eigen::{solve_smallest, ClusterSelection, SolverOptions};
use eigenadapt::fem::{assemble, FeSpace};
use eigenadapt::geometry::{builtin_domain, initial_mesh};
use eigenadapt::mesh::uniform_refine;
use eigenadapt::verify::{lambda_project_with_mass, linf_error, ritz_project, ExactEigenpair};

fn main() -> eigenadapt::Result<()> {
    let u = ExactEigenpair::new(1, 1)?;
    let cluster = ClusterSelection::new(1, 1)?;
    let mut mesh = initial_mesh(&builtin_domain("unit_square")?, 4)?;
    let mut previous: Option<f64> = None;
    println!("{:>8} {:>14} {:>10} {:>7} {:>12}", "N", "lambda_1", "error", "order", "linf error");
    for _ in 0..5 {
        let space = Arc::new(FeSpace::new(Arc::new(mesh.clone()), 1)?);
        let (a, m) = assemble(&space)?;
        let pairs = solve_smallest(&a, &m, 2, &SolverOptions::default())?;
        let err = pairs.value(1) - 2.0 * PI * PI;
        let order = previous.map_or(f64::NAN, |p| (p / err).log2());
        let projected = lambda_project_with_mass(&ritz_project(&u, &space)?, &pairs, cluster, &m)?;
        let linf = linf_error(&u, &projected, 8)?;
        println!("{:>8} {:>14.8} {err:>10.3e} {order:>7.3} {linf:>12.3e}", space.n_free(), pairs.value(1));
        previous = Some(err);
        mesh = uniform_refine(&mesh);
    }
    Ok(())
}

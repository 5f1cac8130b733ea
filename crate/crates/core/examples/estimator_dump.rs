//! Per-element pointwise and energy estimators on the level-0 L-shape mesh
//! for the cluster {12, 13}, written as CSV.
//!
//! cargo run --release --example estimator_dump [-- out_dir]

use std::path::PathBuf;
use std::sync::Arc;

use eigenadapt::eigen::{solve_smallest, ClusterSelection, SolverOptions};
use eigenadapt::estimator::{eta_energy, eta_pointwise};
use eigenadapt::fem::{assemble, FeSpace};
use eigenadapt::geometry::{builtin_domain, initial_mesh};

fn main() -> eigenadapt::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out".into()));
    std::fs::create_dir_all(&out)?;
    let mesh = initial_mesh(&builtin_domain("omega1")?, 8)?;
    let space = Arc::new(FeSpace::new(Arc::new(mesh), 1)?);
    let (a, m) = assemble(&space)?;
    let cluster = ClusterSelection::new(12, 13)?;
    let pairs = solve_smallest(&a, &m, cluster.pairs_to_request(), &SolverOptions::default())?;
    let pointwise = eta_pointwise(&space, &pairs, cluster)?;
    let energy = eta_energy(&space, &pairs, cluster)?;
    std::fs::write(out.join("eta_pointwise.csv"), pointwise.to_csv(&space))?;
    std::fs::write(out.join("eta_energy.csv"), energy.to_csv(&space))?;
    println!("{} dofs, {} elements", space.n_free(), space.mesh().n_elements());
    println!("lambda_12 = {:.6}, lambda_13 = {:.6}", pairs.value(12), pairs.value(13));
    println!("eta_l = {:.4} (max), eta^a = {:.4} (l2)", pointwise.global(), energy.global());
    println!("wrote {}", out.join("eta_*.csv").display());
    Ok(())
}

//! Adaptive run on the L-shaped domain for the cluster {12, 13}, printing
//! dofs, the pointwise estimator and their product per level.
//!
//! cargo run --release --example table1 [-- max_dof]

use eigenadapt::adapt::{fit_rate, run, AdaptConfig, RateWindow};
use eigenadapt::estimator::EstimatorKind;
use eigenadapt::marking::Marking;
use eigenadapt::mesh::Strategy;

fn main() -> eigenadapt::Result<()> {
    let max_dof = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let config = AdaptConfig {
        domain: "omega1".into(),
        cluster_lo: 12,
        cluster_hi: 13,
        theta: 0.5,
        estimator: EstimatorKind::Pointwise,
        marking: Marking::Max,
        refine: Strategy::BisecLg1,
        max_dof,
        ..AdaptConfig::default()
    };
    let start = std::time::Instant::now();
    let history = run(&config)?;
    println!("{:>5} {:>8} {:>12} {:>10} {:>12} {:>12}", "level", "N", "eta", "N*eta", "lambda_12", "lambda_13");
    for r in &history.rows {
        let eta = r.eta_pointwise.unwrap_or(f64::NAN);
        println!("{:>5} {:>8} {:>12.5} {:>10.1} {:>12.6} {:>12.6}", r.level, r.ndof, eta, r.ndof as f64 * eta, r.lambdas[0], r.lambdas[1]);
    }
    let slope = fit_rate(&history, "eta_pointwise", RateWindow::default())?;
    println!("slope of eta over N >= 1000: {slope:.3}");
    println!("stop: {}  elapsed: {:.1}s", history.stop, start.elapsed().as_secs_f64());
    Ok(())
}

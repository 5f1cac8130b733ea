//! The double eigenvalue λ₂ = λ₃ on the four-slit domain: per-level gap
//! between the two discrete eigenvalues and the mesh size at each slit tip.
//!
//! cargo run --release --example slit_multiple [-- max_dof]

use eigenadapt::adapt::{fit_rate, run_observed, RateWindow};
use eigenadapt::cli::{tip_report, Preset, TIP_RADIUS};
use eigenadapt::geometry::builtin_domain;

fn main() -> eigenadapt::Result<()> {
    let max_dof = std::env::args().nth(1).and_then(|s| s.parse().ok());
    let (_, config) = Preset::SlitMultiple.configs(max_dof).remove(0);
    let tips = builtin_domain("omega2")?.interior_tips();
    println!("{:>5} {:>8} {:>12} {:>12} {:>10} {:>10}", "level", "N", "eta", "lambda_2", "gap", "tip min-h");
    let history = run_observed(&config, |v| {
        let worst = tip_report(v.space.mesh(), &tips, TIP_RADIUS).iter().map(|t| t.min_h).fold(0.0, f64::max);
        let l = &v.row.lambdas;
        println!(
            "{:>5} {:>8} {:>12.5} {:>12.8} {:>10.1e} {:>10.2e}",
            v.level,
            v.row.ndof,
            v.row.eta_pointwise.unwrap_or(f64::NAN),
            l[0],
            l[1] - l[0],
            worst
        );
        Ok(())
    })?;
    println!("slope: {:.3}", fit_rate(&history, "eta_pointwise", RateWindow::default())?);
    println!("multiple groups at the last level: {:?}", history.multiple_groups);
    Ok(())
}

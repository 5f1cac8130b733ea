//! Slit domain with perturbed tips: nvb against bisec_lg1 for J = {2} and
//! J = {2, 3}, with the final mesh size near each tip.
//!
//! cargo run --release --example slit_perturbed [-- max_dof]

use eigenadapt::adapt::{fit_rate, run_observed, RateWindow};
use eigenadapt::cli::{tip_report, Preset, TIP_RADIUS};
use eigenadapt::geometry::builtin_domain;

fn main() -> eigenadapt::Result<()> {
    let max_dof = std::env::args().nth(1).and_then(|s| s.parse().ok());
    let tips = builtin_domain("omega3")?.interior_tips();
    for preset in [Preset::SlitPerturbedJ2, Preset::SlitPerturbedCluster] {
        for (name, config) in preset.configs(max_dof) {
            let mut last = Vec::new();
            let h = run_observed(&config, |v| {
                last = tip_report(v.space.mesh(), &tips, TIP_RADIUS);
                Ok(())
            })?;
            let slope = fit_rate(&h, "eta_pointwise", RateWindow::default())?;
            let hs: Vec<String> = last.iter().map(|t| format!("({:.3}, {:.3}) {:.1e}", t.tip[0], t.tip[1], t.min_h)).collect();
            println!("{preset} {name}: slope {slope:.3}, tips {}", hs.join("  "));
        }
    }
    Ok(())
}

//! Energy estimator with Dörfler marking against the pointwise estimator
//! with max marking on the L-shaped domain; both runs record both
//! estimators and the fitted slopes are printed side by side.
//!
//! cargo run --release --example lshape_compare [-- max_dof]

use eigenadapt::adapt::{fit_rate, run, RateWindow};
use eigenadapt::cli::Preset;

fn main() -> eigenadapt::Result<()> {
    let max_dof = std::env::args().nth(1).and_then(|s| s.parse().ok());
    println!("{:<16} {:>7} {:>8} {:>14} {:>12}", "run", "levels", "N", "slope eta_l", "slope eta^a");
    for (name, config) in Preset::LshapeCompare.configs(max_dof) {
        let h = run(&config)?;
        let pw = fit_rate(&h, "eta_pointwise", RateWindow::default())?;
        let en = fit_rate(&h, "eta_energy", RateWindow::default())?;
        println!("{name:<16} {:>7} {:>8} {pw:>14.3} {en:>12.3}", h.rows.len(), h.rows.last().map_or(0, |r| r.ndof));
    }
    Ok(())
}

//! Experiment presets and artifact writing behind the `eigenadapt` binary.
//!
//! A run writes `<out>/<preset>/<run>/` containing `history.csv`,
//! `summary.json`, `mesh_L<level>.svg` snapshots (the first level whose
//! element count exceeds each power of four, plus the last level) and, on
//! domains with interior slit tips, `tips.csv`.

mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::adapt::{run_observed, AdaptConfig, AdaptHistory, RunSummary};
use crate::estimator::EstimatorKind;
use crate::geometry::resolve_domain;
use crate::marking::Marking;
use crate::mesh::{Strategy, Triangulation};
use crate::{Error, Point, Result};

pub use svg::{render_mesh_svg, write_mesh_svg};

/// Radius around a slit tip inside which the minimum `h_T` is reported.
pub const TIP_RADIUS: f64 = 0.05;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "EIGENADAPT_THREADS";

/// Applies [`THREADS_ENV`] to the global thread pool. Returns the cap if one
/// was set.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(None) };
    let n: usize =
        v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| Error::Config(format!("{THREADS_ENV}={v} is not a positive integer")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    LshapeCompare,
    SlitMultiple,
    SlitPerturbedJ2,
    SlitPerturbedCluster,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::Table1, Preset::LshapeCompare, Preset::SlitMultiple, Preset::SlitPerturbedJ2, Preset::SlitPerturbedCluster];

    /// Named run configurations; `max_dof` overrides the default budget.
    pub fn configs(&self, max_dof: Option<usize>) -> Vec<(String, AdaptConfig)> {
        let base = AdaptConfig { theta: 0.5, max_dof: max_dof.unwrap_or(20_000), ..AdaptConfig::default() };
        let lshape = AdaptConfig { domain: "omega1".into(), cluster_lo: 12, cluster_hi: 13, ..base.clone() };
        let perturbed = |lo, hi| {
            [Strategy::Nvb, Strategy::BisecLg1]
                .map(|refine| {
                    (refine.to_string(), AdaptConfig { domain: "omega3".into(), cluster_lo: lo, cluster_hi: hi, refine, ..base.clone() })
                })
                .to_vec()
        };
        match self {
            Preset::Table1 => vec![("table1".into(), lshape)],
            Preset::LshapeCompare => vec![
                ("energy_doerfler".into(), AdaptConfig { estimator: EstimatorKind::Energy, marking: Marking::Doerfler, ..lshape.clone() }),
                ("pointwise_max".into(), lshape),
            ],
            Preset::SlitMultiple => {
                vec![("omega2_j23".into(), AdaptConfig { domain: "omega2".into(), cluster_lo: 2, cluster_hi: 3, ..base })]
            }
            Preset::SlitPerturbedJ2 => perturbed(2, 2),
            Preset::SlitPerturbedCluster => perturbed(2, 3),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Table1 => "table1",
            Preset::LshapeCompare => "lshape_compare",
            Preset::SlitMultiple => "slit_multiple",
            Preset::SlitPerturbedJ2 => "slit_perturbed_j2",
            Preset::SlitPerturbedCluster => "slit_perturbed_cluster",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.to_string() == s).ok_or_else(|| Error::Config(format!("unknown preset '{s}'")))
    }
}

/// Smallest `h_T` among elements with a vertex within `radius` of a tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TipReport {
    pub tip: Point,
    pub min_h: f64,
}

pub fn tip_report(mesh: &Triangulation, tips: &[Point], radius: f64) -> Vec<TipReport> {
    tips.iter()
        .map(|&tip| {
            let min_h = (0..mesh.n_elements())
                .filter(|&t| mesh.vertices_of(t).iter().any(|p| (p[0] - tip[0]).hypot(p[1] - tip[1]) <= radius))
                .map(|t| mesh.h(t))
                .fold(f64::INFINITY, f64::min);
            TipReport { tip, min_h }
        })
        .collect()
}

/// `level, N_l, η_l, N_l·η_l` as an aligned text table.
pub fn product_table(history: &AdaptHistory) -> String {
    let mut s = format!("{:>5} {:>8} {:>12} {:>10}\n", "level", "N", "eta", "N*eta");
    for r in &history.rows {
        if let Some(eta) = r.eta_pointwise {
            s.push_str(&format!("{:>5} {:>8} {:>12.5} {:>10.1}\n", r.level, r.ndof, eta, r.ndof as f64 * eta));
        }
    }
    s
}

/// Files written by one run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub history: AdaptHistory,
    pub summary: RunSummary,
    pub svg_levels: Vec<usize>,
    /// Per-level tip reports (empty on domains without interior tips).
    pub tips: Vec<(usize, usize, Vec<TipReport>)>,
}

/// Runs `config` and writes its artifacts into `dir`.
pub fn run_to_dir(config: &AdaptConfig, dir: &Path) -> Result<RunArtifacts> {
    fs::create_dir_all(dir)?;
    let tips_at = resolve_domain(&config.domain)?.interior_tips();
    let mut next_power = 4usize;
    let mut svg_levels = Vec::new();
    let mut tips = Vec::new();
    let mut last_mesh: Option<(usize, std::sync::Arc<Triangulation>)> = None;
    let history = run_observed(config, |view| {
        let mesh = view.space.mesh_arc();
        if mesh.n_elements() > next_power {
            while next_power < mesh.n_elements() {
                next_power *= 4;
            }
            write_mesh_svg(mesh, &dir.join(format!("mesh_L{}.svg", view.level)))?;
            svg_levels.push(view.level);
        }
        if !tips_at.is_empty() {
            tips.push((view.level, view.row.ndof, tip_report(mesh, &tips_at, TIP_RADIUS)));
        }
        last_mesh = Some((view.level, std::sync::Arc::clone(mesh)));
        Ok(())
    })?;
    if let Some((level, mesh)) = last_mesh {
        if svg_levels.last() != Some(&level) {
            write_mesh_svg(&mesh, &dir.join(format!("mesh_L{level}.svg")))?;
            svg_levels.push(level);
        }
    }
    fs::write(dir.join("history.csv"), history.to_csv())?;
    let summary = RunSummary::new(config, &history);
    let mut json = serde_json::to_value(&summary).expect("summary serializes");
    json["partial"] = serde_json::Value::Bool(history.failure.is_some());
    json["svg_levels"] = serde_json::to_value(&svg_levels).expect("levels serialize");
    if let Some((_, _, last)) = tips.last() {
        json["tips"] = serde_json::to_value(last).expect("tips serialize");
        json["tip_radius"] = TIP_RADIUS.into();
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&json).expect("json") + "\n")?;
    if !tips.is_empty() {
        let mut csv = String::from("level,ndof,tip,x,y,min_h\n");
        for (level, ndof, reports) in &tips {
            for (k, r) in reports.iter().enumerate() {
                csv.push_str(&format!("{level},{ndof},{k},{},{},{}\n", r.tip[0], r.tip[1], r.min_h));
            }
        }
        fs::write(dir.join("tips.csv"), csv)?;
    }
    Ok(RunArtifacts { dir: dir.to_path_buf(), history, summary, svg_levels, tips })
}

/// Expands and runs a preset under `<out>/<preset>/`.
pub fn run_preset(preset: Preset, out: &Path, max_dof: Option<usize>) -> Result<Vec<RunArtifacts>> {
    let root = out.join(preset.to_string());
    let mut runs = Vec::new();
    for (name, config) in preset.configs(max_dof) {
        let dir = root.join(&name);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("config.txt"), config.to_text())?;
        runs.push(run_to_dir(&config, &dir)?);
    }
    if preset == Preset::Table1 {
        fs::write(root.join("table1.txt"), product_table(&runs[0].history))?;
    }
    Ok(runs)
}

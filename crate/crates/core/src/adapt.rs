//! The adaptive Solve / Estimate / Mark / Refine loop, its history and rate fits.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::eigen::{
    separation_diagnostic, solve_smallest, ClusterSelection, EigenPairSet, SeparationDiagnostic, SolverOptions, DEFAULT_SEED,
};
use crate::estimator::{eta_energy, eta_pointwise, EstimatorKind, EstimatorReport};
use crate::fem::{assemble, FeSpace};
use crate::geometry::{initial_mesh, resolve_domain, DIAGONAL_ORIENTATION};
use crate::marking::{mark, MarkStatus, Marking};
use crate::mesh::{refine, Strategy, Triangulation};
use crate::{Error, Result};

/// Hard cap on the number of levels of one run.
pub const LEVEL_CAP: usize = 60;

/// Default lower bound on `N_l` for rate fits.
pub const DEFAULT_RATE_MIN_NDOF: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptConfig {
    /// Builtin domain id or path to a domain file.
    pub domain: String,
    pub initial_n: usize,
    pub degree: u8,
    pub cluster_lo: usize,
    pub cluster_hi: usize,
    pub theta: f64,
    pub estimator: EstimatorKind,
    pub marking: Marking,
    pub refine: Strategy,
    pub max_dof: usize,
    pub max_levels: Option<usize>,
    pub eta_target: Option<f64>,
    pub eig_tol: f64,
    pub record_secondary_estimator: bool,
    pub seed: u64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            domain: "omega1".into(),
            initial_n: 8,
            degree: 1,
            cluster_lo: 1,
            cluster_hi: 1,
            theta: 0.5,
            estimator: EstimatorKind::Pointwise,
            marking: Marking::Max,
            refine: Strategy::BisecLg1,
            max_dof: 20_000,
            max_levels: None,
            eta_target: None,
            eig_tol: 1e-9,
            record_secondary_estimator: true,
            seed: DEFAULT_SEED,
        }
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse { line, msg: format!("bad value '{v}' for '{key}'") })
}

impl AdaptConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unset keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = AdaptConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) =
                body.split_once('=').ok_or_else(|| Error::Parse { line, msg: format!("expected 'key = value', got '{body}'") })?;
            let (key, v) = (key.trim(), value.trim());
            match key {
                "domain" => c.domain = v.to_string(),
                "initial_n" => c.initial_n = parse_value(line, key, v)?,
                "degree" => c.degree = parse_value(line, key, v)?,
                "cluster_lo" => c.cluster_lo = parse_value(line, key, v)?,
                "cluster_hi" => c.cluster_hi = parse_value(line, key, v)?,
                "theta" => c.theta = parse_value(line, key, v)?,
                "estimator" => c.estimator = v.parse()?,
                "marking" => c.marking = v.parse()?,
                "refine" => c.refine = v.parse()?,
                "max_dof" => c.max_dof = parse_value::<f64>(line, key, v)? as usize,
                "max_levels" => c.max_levels = Some(parse_value(line, key, v)?),
                "eta_target" => c.eta_target = Some(parse_value(line, key, v)?),
                "eig_tol" => c.eig_tol = parse_value(line, key, v)?,
                "record_secondary_estimator" => c.record_secondary_estimator = parse_value(line, key, v)?,
                "seed" => c.seed = parse_value(line, key, v)?,
                _ => return Err(Error::Parse { line, msg: format!("unknown key '{key}'") }),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "domain = {}\ninitial_n = {}\ndegree = {}\ncluster_lo = {}\ncluster_hi = {}\ntheta = {}\n\
             estimator = {}\nmarking = {}\nrefine = {}\nmax_dof = {}\neig_tol = {:e}\n\
             record_secondary_estimator = {}\nseed = {}\n",
            self.domain,
            self.initial_n,
            self.degree,
            self.cluster_lo,
            self.cluster_hi,
            self.theta,
            self.estimator,
            self.marking,
            self.refine,
            self.max_dof,
            self.eig_tol,
            self.record_secondary_estimator,
            self.seed
        );
        if let Some(l) = self.max_levels {
            s.push_str(&format!("max_levels = {l}\n"));
        }
        if let Some(e) = self.eta_target {
            s.push_str(&format!("eta_target = {e:e}\n"));
        }
        s
    }

    pub fn cluster(&self) -> Result<ClusterSelection> {
        ClusterSelection::new(self.cluster_lo, self.cluster_hi).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.cluster()?;
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta = {} outside (0, 1]", self.theta)));
        }
        if self.degree != 1 && self.degree != 2 {
            return Err(Error::Config(format!("degree {} not supported (1 or 2)", self.degree)));
        }
        if self.initial_n == 0 {
            return Err(Error::Config("initial_n must be positive".into()));
        }
        if !(self.eig_tol > 0.0 && self.eig_tol < 1e-2) {
            return Err(Error::Config(format!("eig_tol = {} outside (0, 1e-2)", self.eig_tol)));
        }
        Ok(())
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxDof,
    MaxLevels,
    EtaTarget,
    LevelCap,
    NothingMarked,
    SolverFailure,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

/// One level of the loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryRow {
    pub level: usize,
    pub ndof: usize,
    pub nelem: usize,
    pub eta_pointwise: Option<f64>,
    pub eta_energy: Option<f64>,
    /// `λ_{l,j}` for `j ∈ J`.
    pub lambdas: Vec<f64>,
    pub marked: usize,
    pub h_max: f64,
    pub h_min: f64,
    pub t_solve_ms: f64,
    pub t_estimate_ms: f64,
    pub t_refine_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptHistory {
    pub cluster: ClusterSelection,
    pub rows: Vec<HistoryRow>,
    pub stop: StopReason,
    /// Solver message when `stop` is [`StopReason::SolverFailure`].
    pub failure: Option<String>,
    /// Separation diagnostic of the last solved level.
    pub separation: Option<SeparationDiagnostic>,
    /// Numerically multiple discrete eigenvalues (1-based ranges) at the last level.
    pub multiple_groups: Vec<(usize, usize)>,
}

/// Columns that vary between otherwise identical runs.
pub const TIMING_COLUMNS: [&str; 3] = ["t_solve_ms", "t_estimate_ms", "t_refine_ms"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl AdaptHistory {
    pub fn csv_header(cluster: ClusterSelection) -> String {
        let mut h = String::from("level,ndof,nelem,eta_pointwise,eta_energy");
        for j in cluster.indices() {
            h.push_str(&format!(",lambda_{j}"));
        }
        h.push_str(",marked,h_max,h_min,t_solve_ms,t_estimate_ms,t_refine_ms");
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.cluster);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}", r.level, r.ndof, r.nelem, opt(r.eta_pointwise), opt(r.eta_energy)));
            for l in &r.lambdas {
                out.push_str(&format!(",{l}"));
            }
            out.push_str(&format!(
                ",{},{},{},{:.3},{:.3},{:.3}\n",
                r.marked, r.h_max, r.h_min, r.t_solve_ms, r.t_estimate_ms, r.t_refine_ms
            ));
        }
        out
    }

    /// Reads a history CSV written by [`AdaptHistory::to_csv`]. The stop
    /// reason is not stored in the CSV and is reported as `MaxDof`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or(Error::Parse { line: 1, msg: "empty history".into() })?.split(',').collect();
        let lambda_cols: Vec<usize> = header
            .iter()
            .filter_map(|h| h.strip_prefix("lambda_"))
            .map(|j| j.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse { line: 1, msg: "bad lambda column".into() })?;
        let (lo, hi) = match (lambda_cols.first(), lambda_cols.last()) {
            (Some(&lo), Some(&hi)) if hi - lo + 1 == lambda_cols.len() => (lo, hi),
            _ => return Err(Error::Parse { line: 1, msg: "history needs contiguous lambda_<j> columns".into() }),
        };
        let cluster = ClusterSelection::new(lo, hi)?;
        if header.join(",") != Self::csv_header(cluster) {
            return Err(Error::Parse { line: 1, msg: "unexpected history header".into() });
        }
        let mut rows = Vec::new();
        for (i, l) in lines.enumerate() {
            let line = i + 2;
            if l.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != header.len() {
                return Err(Error::Parse { line, msg: format!("expected {} fields, got {}", header.len(), f.len()) });
            }
            let num = |k: usize| -> Result<f64> { f[k].parse().map_err(|_| Error::Parse { line, msg: format!("bad number '{}'", f[k]) }) };
            let optnum = |k: usize| -> Result<Option<f64>> {
                if f[k].is_empty() {
                    Ok(None)
                } else {
                    num(k).map(Some)
                }
            };
            let n = cluster.len();
            rows.push(HistoryRow {
                level: num(0)? as usize,
                ndof: num(1)? as usize,
                nelem: num(2)? as usize,
                eta_pointwise: optnum(3)?,
                eta_energy: optnum(4)?,
                lambdas: (5..5 + n).map(num).collect::<Result<_>>()?,
                marked: num(5 + n)? as usize,
                h_max: num(6 + n)?,
                h_min: num(7 + n)?,
                t_solve_ms: num(8 + n)?,
                t_estimate_ms: num(9 + n)?,
                t_refine_ms: num(10 + n)?,
            });
        }
        Ok(AdaptHistory { cluster, rows, stop: StopReason::MaxDof, failure: None, separation: None, multiple_groups: vec![] })
    }

    /// Values of a named CSV column per row (`eta_pointwise`, `eta_energy`,
    /// `lambda_<j>`, `h_max`, `h_min`).
    pub fn field(&self, name: &str) -> Result<Vec<Option<f64>>> {
        type Pick = Box<dyn Fn(&HistoryRow) -> Option<f64>>;
        let pick: Pick = match name {
            "eta_pointwise" => Box::new(|r| r.eta_pointwise),
            "eta_energy" => Box::new(|r| r.eta_energy),
            "h_max" => Box::new(|r| Some(r.h_max)),
            "h_min" => Box::new(|r| Some(r.h_min)),
            _ => {
                let j: usize = name
                    .strip_prefix("lambda_")
                    .and_then(|j| j.parse().ok())
                    .filter(|j| self.cluster.contains(*j))
                    .ok_or_else(|| Error::Argument(format!("unknown history field '{name}'")))?;
                let k = j - self.cluster.lo;
                Box::new(move |r| Some(r.lambdas[k]))
            }
        };
        Ok(self.rows.iter().map(pick.as_ref()).collect())
    }
}

/// Rows that enter a rate fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateWindow {
    /// All levels with `N_l ≥ min_ndof`.
    MinDof(usize),
    /// Levels `first..=last`.
    Levels(usize, usize),
}

impl Default for RateWindow {
    fn default() -> Self {
        RateWindow::MinDof(DEFAULT_RATE_MIN_NDOF)
    }
}

/// Least-squares slope of `log₁₀ y` against `log₁₀ x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::Argument(format!("rate fit needs at least 3 levels, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Argument("rate fit needs positive values".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("rate fit needs distinct dof counts".into()));
    }
    Ok(sxy / sxx)
}

/// Fitted slope of `log₁₀(field)` against `log₁₀ N_l` over `window`.
pub fn fit_rate(history: &AdaptHistory, field: &str, window: RateWindow) -> Result<f64> {
    let values = history.field(field)?;
    let points: Vec<(f64, f64)> = history
        .rows
        .iter()
        .zip(values)
        .filter(|(r, _)| match window {
            RateWindow::MinDof(n) => r.ndof >= n,
            RateWindow::Levels(a, b) => (a..=b).contains(&r.level),
        })
        .filter_map(|(r, v)| v.map(|v| (r.ndof as f64, v)))
        .collect();
    loglog_slope(&points)
}

/// Everything available at the end of one solved and estimated level.
pub struct LevelView<'a> {
    pub level: usize,
    pub space: &'a Arc<FeSpace>,
    pub pairs: &'a EigenPairSet,
    /// Report of the estimator that drives marking.
    pub report: &'a EstimatorReport,
    pub row: &'a HistoryRow,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs the adaptive loop from the configured initial mesh.
pub fn run(config: &AdaptConfig) -> Result<AdaptHistory> {
    run_observed(config, |_| Ok(()))
}

/// Runs the loop, calling `observe` once per level after estimation.
pub fn run_observed(config: &AdaptConfig, observe: impl FnMut(&LevelView) -> Result<()>) -> Result<AdaptHistory> {
    config.validate()?;
    let spec = resolve_domain(&config.domain)?;
    let mesh = initial_mesh(&spec, config.initial_n)?;
    run_from_mesh(config, mesh, observe)
}

/// Runs the loop from a given initial triangulation; `config.domain` and
/// `config.initial_n` are ignored.
pub fn run_from_mesh(config: &AdaptConfig, mesh: Triangulation, mut observe: impl FnMut(&LevelView) -> Result<()>) -> Result<AdaptHistory> {
    config.validate()?;
    let cluster = config.cluster()?;
    let opts = SolverOptions { tol: config.eig_tol, seed: config.seed, ..SolverOptions::default() };
    let level_limit = config.max_levels.unwrap_or(LEVEL_CAP).min(LEVEL_CAP);
    let mut mesh = Arc::new(mesh);
    let mut history =
        AdaptHistory { cluster, rows: Vec::new(), stop: StopReason::LevelCap, failure: None, separation: None, multiple_groups: vec![] };

    for level in 0..=level_limit {
        let space = Arc::new(FeSpace::new(Arc::clone(&mesh), config.degree)?);
        let ndof = space.n_free();
        if level == 0 && ndof >= config.max_dof {
            return Err(Error::Config(format!("max_dof = {} does not exceed the initial {ndof} dofs", config.max_dof)));
        }
        let want = cluster.pairs_to_request();
        if want >= ndof {
            return Err(Error::Config(format!("cluster needs {want} eigenpairs but the mesh has only {ndof} dofs")));
        }

        let t0 = Instant::now();
        let pairs = match assemble(&space).and_then(|(a, m)| solve_smallest(&a, &m, want, &opts)) {
            Ok(p) => p,
            Err(e @ (Error::Solver { .. } | Error::NotPositiveDefinite { .. })) => {
                history.stop = StopReason::SolverFailure;
                history.failure = Some(e.to_string());
                return Ok(history);
            }
            Err(e) => return Err(e),
        };
        let t_solve_ms = ms(t0);

        let t1 = Instant::now();
        let pointwise = if config.estimator == EstimatorKind::Pointwise || config.record_secondary_estimator {
            Some(eta_pointwise(&space, &pairs, cluster)?)
        } else {
            None
        };
        let energy = if config.estimator == EstimatorKind::Energy || config.record_secondary_estimator {
            Some(eta_energy(&space, &pairs, cluster)?)
        } else {
            None
        };
        let t_estimate_ms = ms(t1);
        let driving = match config.estimator {
            EstimatorKind::Pointwise => pointwise.as_ref(),
            EstimatorKind::Energy => energy.as_ref(),
        }
        .expect("driving estimator is always computed");

        let hs: Vec<f64> = (0..mesh.n_elements()).map(|t| mesh.h(t)).collect();
        let mut row = HistoryRow {
            level,
            ndof,
            nelem: mesh.n_elements(),
            eta_pointwise: pointwise.as_ref().map(|r| r.eta_max),
            eta_energy: energy.as_ref().map(|r| r.eta_l2),
            lambdas: cluster.indices().map(|j| pairs.value(j)).collect(),
            marked: 0,
            h_max: hs.iter().fold(0.0f64, |a, b| a.max(*b)),
            h_min: hs.iter().fold(f64::INFINITY, |a, b| a.min(*b)),
            t_solve_ms,
            t_estimate_ms,
            t_refine_ms: 0.0,
        };
        history.separation = separation_diagnostic(&pairs, cluster, &[]).ok();
        history.multiple_groups = pairs.near_multiple_groups();

        let stop = if ndof >= config.max_dof {
            Some(StopReason::MaxDof)
        } else if config.eta_target.is_some_and(|target| driving.global() <= target) {
            Some(StopReason::EtaTarget)
        } else if level == level_limit {
            Some(if config.max_levels.is_some_and(|l| l <= LEVEL_CAP) { StopReason::MaxLevels } else { StopReason::LevelCap })
        } else {
            None
        };

        let mut next = None;
        if stop.is_none() {
            let t2 = Instant::now();
            let (marks, status) = mark(config.marking, driving, config.theta)?;
            if status == MarkStatus::AllZero || marks.is_empty() {
                history.stop = StopReason::NothingMarked;
                observe(&LevelView { level, space: &space, pairs: &pairs, report: driving, row: &row })?;
                history.rows.push(row);
                return Ok(history);
            }
            next = Some(refine(&mesh, &marks, config.refine)?);
            row.marked = marks.len();
            row.t_refine_ms = ms(t2);
        }
        observe(&LevelView { level, space: &space, pairs: &pairs, report: driving, row: &row })?;
        history.rows.push(row);
        match (stop, next) {
            (Some(reason), _) => {
                history.stop = reason;
                return Ok(history);
            }
            (None, Some(m)) => mesh = Arc::new(m),
            (None, None) => unreachable!(),
        }
    }
    Ok(history)
}

/// Run summary written next to the history.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config: AdaptConfig,
    pub stop_reason: StopReason,
    pub failure: Option<String>,
    pub levels: usize,
    pub final_ndof: Option<usize>,
    pub final_lambdas: Vec<f64>,
    pub slope_eta_pointwise: Option<f64>,
    pub slope_eta_energy: Option<f64>,
    pub rate_window_min_ndof: usize,
    pub separation: Option<SeparationDiagnostic>,
    pub multiple_eigenvalue_groups: Vec<(usize, usize)>,
    pub solver_seed: u64,
    pub estimator: EstimatorKind,
    pub marking: Marking,
    pub refine: Strategy,
    pub diagonal_orientation: &'static str,
}

impl RunSummary {
    pub fn new(config: &AdaptConfig, history: &AdaptHistory) -> Self {
        let last = history.rows.last();
        RunSummary {
            config: config.clone(),
            stop_reason: history.stop,
            failure: history.failure.clone(),
            levels: history.rows.len(),
            final_ndof: last.map(|r| r.ndof),
            final_lambdas: last.map(|r| r.lambdas.clone()).unwrap_or_default(),
            slope_eta_pointwise: fit_rate(history, "eta_pointwise", RateWindow::default()).ok(),
            slope_eta_energy: fit_rate(history, "eta_energy", RateWindow::default()).ok(),
            rate_window_min_ndof: DEFAULT_RATE_MIN_NDOF,
            separation: history.separation,
            multiple_eigenvalue_groups: history.multiple_groups.clone(),
            solver_seed: config.seed,
            estimator: config.estimator,
            marking: config.marking,
            refine: config.refine,
            diagonal_orientation: DIAGONAL_ORIENTATION,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> AdaptConfig {
        AdaptConfig { domain: "omega1".into(), cluster_lo: 1, cluster_hi: 2, max_dof: 400, ..AdaptConfig::default() }
    }

    #[test]
    fn config_round_trip_and_errors() {
        let c = AdaptConfig::parse(
            "# table 1\ndomain = omega1\ncluster_lo = 12\ncluster_hi = 13\ntheta = 0.5\nestimator = pointwise\n\
             marking = max\nrefine = bisec_lg1\nmax_dof = 2e4\nmax_levels = 30\n",
        )
        .unwrap();
        assert_eq!(c.max_dof, 20_000);
        assert_eq!(c.max_levels, Some(30));
        assert_eq!(AdaptConfig::parse(&c.to_text()).unwrap(), c);
        assert!(matches!(AdaptConfig::parse("colour = red"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(AdaptConfig::parse("theta = 1.5"), Err(Error::Config(_))));
        assert!(matches!(AdaptConfig::parse("cluster_lo = 3\ncluster_hi = 2"), Err(Error::Config(_))));
        assert!(matches!(AdaptConfig::parse("degree = 3"), Err(Error::Config(_))));
        assert!(AdaptConfig::parse("theta 0.5").is_err());
    }

    #[test]
    fn max_dof_must_exceed_initial() {
        let c = AdaptConfig { max_dof: 33, ..small_config() };
        assert!(matches!(run(&c), Err(Error::Config(_))));
    }

    #[test]
    fn one_level_gives_two_rows() {
        let c = AdaptConfig { max_levels: Some(1), ..small_config() };
        let h = run(&c).unwrap();
        assert_eq!(h.rows.len(), 2);
        assert_eq!(h.stop, StopReason::MaxLevels);
        assert!(h.rows[1].ndof > h.rows[0].ndof);
        assert!(h.rows[0].marked > 0);
        assert_eq!(h.rows[1].marked, 0);
    }

    #[test]
    fn small_run_invariants() {
        let h = run(&small_config()).unwrap();
        assert_eq!(h.stop, StopReason::MaxDof);
        assert!(h.rows.last().unwrap().ndof >= 400);
        for w in h.rows.windows(2) {
            assert_eq!(w[1].level, w[0].level + 1);
            assert!(w[1].ndof > w[0].ndof);
            for (a, b) in w[0].lambdas.iter().zip(&w[1].lambdas) {
                assert!(*b <= a * (1.0 + 1e-9));
            }
        }
        assert!(h.rows.iter().all(|r| r.lambdas.iter().all(|l| *l > 0.0)));
        assert!(h.rows.iter().all(|r| r.eta_pointwise.is_some() && r.eta_energy.is_some()));
    }

    #[test]
    fn csv_round_trip() {
        let h = run(&small_config()).unwrap();
        let csv = h.to_csv();
        assert!(csv.starts_with(
            "level,ndof,nelem,eta_pointwise,eta_energy,lambda_1,lambda_2,marked,h_max,h_min,t_solve_ms,t_estimate_ms,t_refine_ms\n"
        ));
        let back = AdaptHistory::from_csv(&csv).unwrap();
        assert_eq!(back.rows.len(), h.rows.len());
        for (a, b) in back.rows.iter().zip(&h.rows) {
            assert_eq!(a.eta_pointwise, b.eta_pointwise);
            assert_eq!(a.lambdas, b.lambdas);
            assert_eq!(a.ndof, b.ndof);
        }
        assert!(AdaptHistory::from_csv("level,ndof\n1,2\n").is_err());
    }

    #[test]
    fn secondary_estimator_optional() {
        let c = AdaptConfig { record_secondary_estimator: false, max_levels: Some(2), ..small_config() };
        let h = run(&c).unwrap();
        assert!(h.rows.iter().all(|r| r.eta_energy.is_none() && r.eta_pointwise.is_some()));
        let back = AdaptHistory::from_csv(&h.to_csv()).unwrap();
        assert!(back.rows.iter().all(|r| r.eta_energy.is_none()));
    }

    #[test]
    fn eta_target_stops() {
        let c = AdaptConfig { eta_target: Some(1e9), ..small_config() };
        let h = run(&c).unwrap();
        assert_eq!(h.stop, StopReason::EtaTarget);
        assert_eq!(h.rows.len(), 1);
    }

    fn synthetic(etas: &[(usize, f64)]) -> AdaptHistory {
        let rows = etas
            .iter()
            .enumerate()
            .map(|(l, &(n, e))| HistoryRow {
                level: l,
                ndof: n,
                nelem: 2 * n,
                eta_pointwise: Some(e),
                eta_energy: Some(e.sqrt()),
                lambdas: vec![1.0],
                marked: 1,
                h_max: 1.0,
                h_min: 1.0,
                t_solve_ms: 0.0,
                t_estimate_ms: 0.0,
                t_refine_ms: 0.0,
            })
            .collect();
        AdaptHistory {
            cluster: ClusterSelection::new(1, 1).unwrap(),
            rows,
            stop: StopReason::MaxDof,
            failure: None,
            separation: None,
            multiple_groups: vec![],
        }
    }

    #[test]
    fn rate_fits() {
        let h = synthetic(&[(1000, 3.0 / 1000.0), (2000, 3.0 / 2000.0), (5000, 3.0 / 5000.0), (9000, 3.0 / 9000.0)]);
        assert!((fit_rate(&h, "eta_pointwise", RateWindow::default()).unwrap() + 1.0).abs() < 1e-12);
        assert!((fit_rate(&h, "eta_energy", RateWindow::default()).unwrap() + 0.5).abs() < 1e-12);
        assert!(fit_rate(&h, "eta_pointwise", RateWindow::Levels(0, 1)).is_err());
        assert!(fit_rate(&h, "lambda_7", RateWindow::default()).is_err());
    }

    #[test]
    fn published_rows_slope() {
        // independent closed form: slope = cov(log N, log η) / var(log N)
        let rows = [(469.0, 2.2696), (2625.0, 0.47195), (7508.0, 0.17591), (18981.0, 0.068936)];
        let x: Vec<f64> = rows.iter().map(|r| f64::log10(r.0)).collect();
        let y: Vec<f64> = rows.iter().map(|r| f64::log10(r.1)).collect();
        let (mx, my) = (x.iter().sum::<f64>() / 4.0, y.iter().sum::<f64>() / 4.0);
        let cov: f64 = (0..4).map(|i| (x[i] - mx) * (y[i] - my)).sum();
        let var: f64 = (0..4).map(|i| (x[i] - mx).powi(2)).sum();
        let s = loglog_slope(&rows).unwrap();
        assert!((s - cov / var).abs() < 1e-12);
        assert!((s + 0.94).abs() < 0.02, "{s}");
    }
}

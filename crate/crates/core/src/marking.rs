//! Element selection from an estimator report.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::estimator::EstimatorReport;
use crate::mesh::MarkSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marking {
    Max,
    Doerfler,
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Marking::Max => "max",
            Marking::Doerfler => "doerfler",
        })
    }
}

impl FromStr for Marking {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Marking::Max),
            "doerfler" | "dorfler" => Ok(Marking::Doerfler),
            _ => Err(Error::Config(format!("unknown marking '{s}' (expected max or doerfler)"))),
        }
    }
}

/// Outcome flag of a marking pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkStatus {
    Ok,
    /// Every η(T) was zero; nothing was marked.
    AllZero,
}

pub const BULK_SLACK: f64 = 1e-12;

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Argument(format!("bulk parameter {theta} outside (0, 1]")));
    }
    Ok(())
}

/// `{ T : η(T) ≥ θ · max_T η(T) }`.
pub fn mark_max(report: &EstimatorReport, theta: f64) -> Result<MarkSet> {
    check_theta(theta)?;
    let threshold = theta * report.eta.iter().fold(0.0f64, |m, v| m.max(*v));
    Ok(MarkSet::new((0..report.eta.len()).filter(|&t| report.eta[t] >= threshold).collect()))
}

/// Smallest greedy set `S` with `Σ_S η(T)² ≥ θ² Σ_T η(T)²`; ties broken by
/// element index. The comparison allows a relative slack of [`BULK_SLACK`]
/// so that exact equality survives rounding of `θ²`.
pub fn mark_doerfler(report: &EstimatorReport, theta: f64) -> Result<(MarkSet, MarkStatus)> {
    check_theta(theta)?;
    let total: f64 = report.eta.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return Ok((MarkSet::new(Vec::new()), MarkStatus::AllZero));
    }
    let mut order: Vec<usize> = (0..report.eta.len()).filter(|&t| report.eta[t] > 0.0).collect();
    order.sort_by(|&a, &b| report.eta[b].total_cmp(&report.eta[a]).then(a.cmp(&b)));
    let goal = theta * theta * total * (1.0 - BULK_SLACK);
    let mut acc = 0.0;
    let mut chosen = Vec::new();
    for t in order {
        chosen.push(t);
        acc += report.eta[t] * report.eta[t];
        if acc >= goal {
            break;
        }
    }
    Ok((MarkSet::new(chosen), MarkStatus::Ok))
}

/// Dispatches on `strategy`.
pub fn mark(strategy: Marking, report: &EstimatorReport, theta: f64) -> Result<(MarkSet, MarkStatus)> {
    match strategy {
        Marking::Max => {
            let set = mark_max(report, theta)?;
            let status = if report.eta_max == 0.0 { MarkStatus::AllZero } else { MarkStatus::Ok };
            Ok((set, status))
        }
        Marking::Doerfler => mark_doerfler(report, theta),
    }
}

//! Benchmark tasks: online bin packing (OBP) and constructive TSP.
//!
//! A candidate program is a priority function. The simulators call it once per
//! decision with a vector-valued view of the feasible actions and take the
//! argmax. Fitness is the negated percentage gap to a reference value, so
//! larger is better.

mod obp;
mod suite;
mod tsp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{EvalError, InputDecl, ParseError};

pub use obp::{gen_obp, obp_lower_bound, pack_obp, simulate_obp, ObpInstance, ObpRun};
pub use suite::{
    evaluate_candidate, evaluate_suite, parse_setting, BenchmarkSuite, Instance, InstanceReport,
    SuiteEntry, SuiteReport, SuiteSpec,
};
pub use tsp::{
    construct_tsp, gen_tsp, nearest_neighbor_tour, simulate_tsp, tour_length, tsp_reference,
    two_opt, TspInstance, TspMode, TspRun,
};

/// Outcome of running one program on one instance (or a suite mean).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// OBP: bins used. TSP: tour length.
    pub raw_metric: f64,
    /// OBP: lower bound. TSP: reference tour length.
    pub reference: f64,
    pub gap_percent: f64,
    pub fitness: f64,
}

impl EvalReport {
    pub fn new(raw_metric: f64, reference: f64) -> Self {
        let gap_percent = gap_percent(raw_metric, reference);
        Self {
            raw_metric,
            reference,
            gap_percent,
            fitness: -gap_percent,
        }
    }
}

pub fn gap_percent(metric: f64, reference: f64) -> f64 {
    100.0 * (metric - reference) / reference
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// Why a candidate program could not be scored. The message is meant to be
/// shown verbatim to the model during repair.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CandidateFailure {
    #[error("{0}")]
    Parse(ParseError),
    #[error("evaluation failed: {0}")]
    Eval(EvalError),
    #[error("wrong result shape: {0}")]
    WrongShape(String),
}

impl From<ParseError> for CandidateFailure {
    fn from(e: ParseError) -> Self {
        CandidateFailure::Parse(e)
    }
}

impl From<EvalError> for CandidateFailure {
    fn from(e: EvalError) -> Self {
        CandidateFailure::Eval(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Obp,
    Tsp,
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "obp" => Ok(TaskKind::Obp),
            "tsp" => Ok(TaskKind::Tsp),
            other => Err(format!("unknown task `{other}` (expected obp or tsp)")),
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskKind::Obp => "obp",
            TaskKind::Tsp => "tsp",
        })
    }
}

impl TaskKind {
    /// Inputs a candidate program for this task may reference.
    pub fn signature(self) -> Vec<InputDecl> {
        match self {
            TaskKind::Obp => vec![
                InputDecl::scalar("item"),
                InputDecl::vector("cap_remaining"),
                InputDecl::vector("bin_index"),
            ],
            TaskKind::Tsp => vec![
                InputDecl::vector("dist_to_current"),
                InputDecl::vector("dist_to_start"),
                InputDecl::vector("mean_dist_remaining"),
                InputDecl::scalar("visited_fraction"),
            ],
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            TaskKind::Obp => OBP_DESCRIPTION,
            TaskKind::Tsp => TSP_DESCRIPTION,
        }
    }

    /// Built-in baseline heuristics as `(name, source)`.
    pub fn baselines(self) -> &'static [(&'static str, &'static str)] {
        match self {
            TaskKind::Obp => &[
                ("first-fit", "return -bin_index"),
                ("best-fit", "return -(cap_remaining - item)"),
            ],
            TaskKind::Tsp => &[("nearest-neighbor", "return 0 - dist_to_current")],
        }
    }
}

const OBP_DESCRIPTION: &str = "\
Online bin packing. Items arrive one at a time and must be placed immediately into a bin of \
fixed capacity; the goal is to use as few bins as possible. For each arriving item the \
simulator collects the open bins that can still hold it and calls your priority function once. \
The item goes into the feasible bin with the highest priority (ties go to the lowest bin \
index); a new bin is opened only when no open bin fits. NaN priorities count as -infinity, and \
if every priority is -infinity a new bin is opened.

Inputs:
  item           scalar  size of the arriving item
  cap_remaining  vector  remaining capacity of each feasible bin
  bin_index      vector  index of each feasible bin (in opening order)
Output: a vector with one priority per feasible bin (same length as cap_remaining).";

const TSP_DESCRIPTION: &str = "\
Traveling salesman, constructive. Cities lie in the unit square and the tour starts at city 0. \
At every step the simulator calls your priority function over the cities not yet visited and \
moves to the one with the highest priority (ties go to the lowest city index; NaN counts as \
-infinity). The tour returns to city 0 at the end; the goal is the shortest closed tour.

Inputs (vectors have one entry per unvisited city):
  dist_to_current      vector  distance from the current city
  dist_to_start        vector  distance from city 0
  mean_dist_remaining  vector  mean distance to the other unvisited cities
  visited_fraction     scalar  fraction of cities already visited
Output: a vector with one priority per unvisited city.";

/// Index of the largest priority, treating NaN as -inf and breaking ties
/// toward the lowest index. `None` when every priority is -inf.
pub(crate) fn argmax_priority(priorities: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &p) in priorities.iter().enumerate() {
        let p = if p.is_nan() { f64::NEG_INFINITY } else { p };
        if p == f64::NEG_INFINITY {
            continue;
        }
        match best {
            Some((_, b)) if p <= b => {}
            _ => best = Some((i, p)),
        }
    }
    best.map(|(i, _)| i)
}

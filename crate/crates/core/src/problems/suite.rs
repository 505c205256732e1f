use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::obp::{gen_obp, simulate_obp, ObpInstance};
use super::tsp::{gen_tsp, simulate_tsp, TspInstance, TspMode};
use super::{CandidateFailure, EvalReport, ProblemError, TaskKind};
use crate::dsl::Program;

pub const DEFAULT_OBP_SETTINGS: [&str; 6] =
    ["1kC100", "1kC500", "5kC100", "5kC500", "10kC100", "10kC500"];
pub const DEFAULT_TSP_SIZES: [&str; 4] = ["50", "100", "200", "500"];
pub const DEFAULT_WEIBULL_SHAPE: f64 = 3.0;
pub const DEFAULT_WEIBULL_SCALE: f64 = 45.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Obp(ObpInstance),
    Tsp(TspInstance),
}

impl Instance {
    pub fn task(&self) -> TaskKind {
        match self {
            Instance::Obp(_) => TaskKind::Obp,
            Instance::Tsp(_) => TaskKind::Tsp,
        }
    }

    pub fn simulate(&self, program: &Program) -> Result<EvalReport, CandidateFailure> {
        match self {
            Instance::Obp(i) => simulate_obp(i, program),
            Instance::Tsp(i) => simulate_tsp(i, program),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    /// Setting label, e.g. `1kC100` or `200`.
    pub setting: String,
    pub instance: Instance,
}

/// A non-empty set of same-task instances; fitness is the mean over them.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSuite {
    task: TaskKind,
    entries: Vec<SuiteEntry>,
}

impl BenchmarkSuite {
    pub fn new(task: TaskKind, entries: Vec<SuiteEntry>) -> Result<Self, ProblemError> {
        if entries.is_empty() {
            return Err(ProblemError::InvalidParameter(
                "benchmark suite is empty".into(),
            ));
        }
        if let Some(e) = entries.iter().find(|e| e.instance.task() != task) {
            return Err(ProblemError::InvalidParameter(format!(
                "suite for {task} contains a {} instance ({})",
                e.instance.task(),
                e.setting
            )));
        }
        Ok(Self { task, entries })
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn entries(&self) -> &[SuiteEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Loads a suite file: `{"task": "obp"|"tsp", "instances": ["path", ...]}`.
    /// Relative instance paths resolve against the suite file's directory.
    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct SuiteFile {
            task: TaskKind,
            instances: Vec<PathBuf>,
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProblemError::InvalidParameter(format!("{}: {e}", path.display())))?;
        let file: SuiteFile = serde_json::from_str(&text)
            .map_err(|e| ProblemError::InvalidParameter(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let entries = load_instance_files(file.task, &file.instances, base)?;
        Self::new(file.task, entries)
    }

    /// Builds a suite from generator parameters (plus any instance files).
    pub fn from_spec(
        task: TaskKind,
        spec: &SuiteSpec,
        base_dir: &Path,
    ) -> Result<Self, ProblemError> {
        spec.validate(task)?;
        let mut entries = Vec::new();
        for setting in spec.settings(task) {
            for &seed in &spec.seeds(task) {
                let instance = match task {
                    TaskKind::Obp => {
                        let (n, cap) = parse_setting(task, &setting)?;
                        Instance::Obp(gen_obp(
                            seed,
                            n,
                            cap as u32,
                            spec.weibull_shape,
                            spec.weibull_scale,
                        )?)
                    }
                    TaskKind::Tsp => {
                        let (n, _) = parse_setting(task, &setting)?;
                        Instance::Tsp(gen_tsp(seed, n, spec.tsp_mode)?)
                    }
                };
                entries.push(SuiteEntry {
                    setting: setting.clone(),
                    instance,
                });
            }
        }
        entries.extend(load_instance_files(task, &spec.instance_files, base_dir)?);
        Self::new(task, entries)
    }
}

fn load_instance_files(
    task: TaskKind,
    files: &[PathBuf],
    base: &Path,
) -> Result<Vec<SuiteEntry>, ProblemError> {
    files
        .iter()
        .map(|rel| {
            let path = if rel.is_absolute() {
                rel.clone()
            } else {
                base.join(rel)
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ProblemError::InvalidInstance(format!("{}: {e}", path.display())))?;
            let bad = |e: serde_json::Error| {
                ProblemError::InvalidInstance(format!("{}: {e}", path.display()))
            };
            let instance = match task {
                TaskKind::Obp => {
                    let inst: ObpInstance = serde_json::from_str(&text).map_err(bad)?;
                    inst.validate()?;
                    Instance::Obp(inst)
                }
                TaskKind::Tsp => Instance::Tsp(serde_json::from_str(&text).map_err(bad)?),
            };
            let setting = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            Ok(SuiteEntry { setting, instance })
        })
        .collect()
}

/// Generator parameters for a benchmark suite.
///
/// `settings` are OBP names like `5kC500` (items, capacity) or TSP city
/// counts like `200`. Omitted settings and seeds fall back to the defaults
/// (six OBP settings × 5 seeds, four TSP sizes × 4 seeds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub tsp_mode: TspMode,
    #[serde(default = "default_shape")]
    pub weibull_shape: f64,
    #[serde(default = "default_scale")]
    pub weibull_scale: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instance_files: Vec<PathBuf>,
}

fn default_shape() -> f64 {
    DEFAULT_WEIBULL_SHAPE
}

fn default_scale() -> f64 {
    DEFAULT_WEIBULL_SCALE
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            settings: None,
            seeds: None,
            tsp_mode: TspMode::Uniform,
            weibull_shape: DEFAULT_WEIBULL_SHAPE,
            weibull_scale: DEFAULT_WEIBULL_SCALE,
            instance_files: Vec::new(),
        }
    }
}

impl SuiteSpec {
    pub fn with_settings(settings: &[&str], seeds: &[u64]) -> Self {
        Self {
            settings: Some(settings.iter().map(|s| s.to_string()).collect()),
            seeds: Some(seeds.to_vec()),
            ..Self::default()
        }
    }

    pub fn settings(&self, task: TaskKind) -> Vec<String> {
        match &self.settings {
            Some(s) => s.clone(),
            None if !self.instance_files.is_empty() => Vec::new(),
            None => match task {
                TaskKind::Obp => DEFAULT_OBP_SETTINGS.iter().map(|s| s.to_string()).collect(),
                TaskKind::Tsp => DEFAULT_TSP_SIZES.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    pub fn seeds(&self, task: TaskKind) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => match task {
                TaskKind::Obp => (1..=5).collect(),
                TaskKind::Tsp => (1..=4).collect(),
            },
        }
    }

    /// Checks every setting name and generator parameter without generating.
    pub fn validate(&self, task: TaskKind) -> Result<(), ProblemError> {
        let settings = self.settings(task);
        let seeds = self.seeds(task);
        if (settings.is_empty() || seeds.is_empty()) && self.instance_files.is_empty() {
            return Err(ProblemError::InvalidParameter(
                "suite is empty: give at least one setting and one seed".into(),
            ));
        }
        for s in &settings {
            parse_setting(task, s)?;
        }
        if task == TaskKind::Obp
            && !(self.weibull_shape > 0.0
                && self.weibull_shape.is_finite()
                && self.weibull_scale > 0.0
                && self.weibull_scale.is_finite())
        {
            return Err(ProblemError::InvalidParameter(
                "Weibull shape and scale must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Parses a setting name into `(size, capacity)`; capacity is 0 for TSP.
///
/// OBP accepts `<items>C<capacity>` where items may use a `k` suffix
/// (`1kC100`, `250C50`). TSP accepts a city count, optionally prefixed with
/// `n` or `size` (`200`, `n200`, `size200`).
pub fn parse_setting(task: TaskKind, name: &str) -> Result<(usize, usize), ProblemError> {
    let bad = || ProblemError::InvalidParameter(format!("cannot parse {task} setting `{name}`"));
    let count = |s: &str| -> Option<usize> {
        match s.strip_suffix(['k', 'K']) {
            Some(k) => k.parse::<usize>().ok()?.checked_mul(1000),
            None => s.parse().ok(),
        }
    };
    match task {
        TaskKind::Obp => {
            let (items, cap) = name.split_once(['C', 'c']).ok_or_else(bad)?;
            let n = count(items).ok_or_else(bad)?;
            let cap: usize = cap.parse().map_err(|_| bad())?;
            if n == 0 || cap < 2 || cap > u32::MAX as usize {
                return Err(bad());
            }
            Ok((n, cap))
        }
        TaskKind::Tsp => {
            let digits = name
                .strip_prefix("size")
                .or_else(|| name.strip_prefix('n'))
                .unwrap_or(name);
            let n = count(digits).ok_or_else(bad)?;
            if n < 3 {
                return Err(bad());
            }
            Ok((n, 0))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub setting: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub instances: Vec<InstanceReport>,
    pub aggregate: EvalReport,
}

impl SuiteReport {
    fn from_instances(instances: Vec<InstanceReport>) -> Self {
        let aggregate = mean_report(instances.iter().map(|r| &r.report));
        Self {
            instances,
            aggregate,
        }
    }

    /// Mean report per setting, in first-appearance order.
    pub fn per_setting(&self) -> Vec<(String, EvalReport)> {
        let mut order: Vec<&str> = Vec::new();
        for r in &self.instances {
            if !order.contains(&r.setting.as_str()) {
                order.push(&r.setting);
            }
        }
        order
            .into_iter()
            .map(|s| {
                let rep = mean_report(
                    self.instances
                        .iter()
                        .filter(|r| r.setting == s)
                        .map(|r| &r.report),
                );
                (s.to_string(), rep)
            })
            .collect()
    }
}

fn mean_report<'a>(reports: impl Iterator<Item = &'a EvalReport>) -> EvalReport {
    let (mut raw, mut reference, mut gap, mut n) = (0.0, 0.0, 0.0, 0usize);
    for r in reports {
        raw += r.raw_metric;
        reference += r.reference;
        gap += r.gap_percent;
        n += 1;
    }
    let n = n as f64;
    let gap_percent = gap / n;
    EvalReport {
        raw_metric: raw / n,
        reference: reference / n,
        gap_percent,
        fitness: -gap_percent,
    }
}

/// Runs `program` on every instance (in parallel) and returns per-instance
/// reports plus their mean. The first failure in instance order is returned.
pub fn evaluate_suite(
    suite: &BenchmarkSuite,
    program: &Program,
) -> Result<SuiteReport, CandidateFailure> {
    let results: Vec<Result<EvalReport, CandidateFailure>> = suite
        .entries
        .par_iter()
        .map(|e| e.instance.simulate(program))
        .collect();
    let mut instances = Vec::with_capacity(results.len());
    for (entry, res) in suite.entries.iter().zip(results) {
        instances.push(InstanceReport {
            setting: entry.setting.clone(),
            report: res?,
        });
    }
    Ok(SuiteReport::from_instances(instances))
}

/// Mean gap over the suite; fitness is its negation.
pub fn evaluate_candidate(
    suite: &BenchmarkSuite,
    program: &Program,
) -> Result<EvalReport, CandidateFailure> {
    evaluate_suite(suite, program).map(|r| r.aggregate)
}

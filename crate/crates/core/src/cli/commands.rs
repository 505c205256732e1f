use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::config::RunConfig;
use super::report::{report_csv, report_md, summary_csv, ReportSummary};
use super::runlog::{first_divergence, read_log, to_records, RunLogWriter, EVENTS_FILE};
use super::CliError;
use crate::dsl::parse;
use crate::evolution::{run_evolution, Candidate, EvolutionError, RunEvent};
use crate::llm::{build_provider, ProviderConfig, RecordingProvider, ScriptedProvider};
use crate::problems::{
    evaluate_suite, nearest_neighbor_tour, tour_length, tsp_reference, BenchmarkSuite, EvalReport,
    Instance, SuiteSpec, TaskKind,
};

const CONFIG_FILE: &str = "config.json";
const TRANSCRIPT_FILE: &str = "transcript.jsonl";
const BEST_FILE: &str = "best.json";
const SUMMARY_FILE: &str = "summary.csv";

/// What `cdeoh run` reports on success.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub best: Candidate,
    pub samples_used: u64,
    pub generations: usize,
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "run directory: {}", self.run_dir.display())?;
        writeln!(
            f,
            "generations: {}  samples: {}",
            self.generations.saturating_sub(1),
            self.samples_used
        )?;
        writeln!(
            f,
            "best: id {} [{}] gap {:.4}%",
            self.best.id,
            self.best.category,
            self.best.gap_percent()
        )?;
        writeln!(f, "{}", self.best.code)
    }
}

fn fresh_run_dir(output_dir: &Path) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(output_dir)?;
    let stamp = chrono::Utc::now().format("run-%Y%m%d-%H%M%S").to_string();
    for n in 0.. {
        let name = if n == 0 {
            stamp.clone()
        } else {
            format!("{stamp}-{n}")
        };
        let dir = output_dir.join(name);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!()
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Executes a configured run and writes its artifacts into a new
/// timestamped directory under `output_dir`.
///
/// Every provider reply is recorded to `transcript.jsonl`, so any run (live
/// or scripted) can be replayed.
pub fn cmd_run(config_path: &Path) -> Result<RunSummary, CliError> {
    let config = RunConfig::load(config_path)?;
    let suite = config.build_suite()?;
    let provider = RecordingProvider::new(
        build_provider(&config.provider, Path::new("."))
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?,
    );
    let run_dir = fresh_run_dir(&config.output_dir)?;
    write_json(&run_dir.join(CONFIG_FILE), &config)?;

    let mut log = RunLogWriter::create(&run_dir)?;
    let result = run_evolution(
        &config.evolution,
        &config.provider,
        &provider,
        &suite,
        &mut log,
    );
    let events = log.finish()?;
    provider.transcript().save(&run_dir.join(TRANSCRIPT_FILE))?;
    std::fs::write(run_dir.join(SUMMARY_FILE), summary_csv(&events))?;
    let outcome = result?;
    write_json(&run_dir.join(BEST_FILE), &outcome.best)?;
    Ok(RunSummary {
        run_dir,
        best: outcome.best,
        samples_used: outcome.samples_used,
        generations: outcome.stats.len(),
    })
}

/// Re-runs `run_dir` from its recorded transcript and compares event logs,
/// ignoring timestamps.
pub fn cmd_replay(run_dir: &Path) -> Result<String, CliError> {
    let config_path = run_dir.join(CONFIG_FILE);
    if !config_path.is_file() {
        return Err(CliError::Usage(format!(
            "{} not found",
            config_path.display()
        )));
    }
    let transcript = run_dir.join(TRANSCRIPT_FILE);
    if !transcript.is_file() {
        return Err(CliError::Usage(format!(
            "{} not found",
            transcript.display()
        )));
    }
    let text = std::fs::read_to_string(&config_path)?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    config
        .suite
        .validate(config.task)
        .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let suite = config.build_suite()?;
    let provider =
        ScriptedProvider::from_file(&transcript).map_err(|e| CliError::Usage(e.to_string()))?;
    let llm = ProviderConfig {
        transcript_path: Some(transcript),
        ..config.provider.clone()
    };
    let mut events: Vec<RunEvent> = Vec::new();
    let replayed = run_evolution(&config.evolution, &llm, &provider, &suite, &mut events);
    if let Err(EvolutionError::InvalidConfig(m)) = &replayed {
        return Err(CliError::ConfigInvalid(m.clone()));
    }
    let recorded = read_log(&run_dir.join(EVENTS_FILE))?;
    let fresh = to_records(&events);
    match first_divergence(&recorded, &fresh) {
        None => Ok(format!("replay identical: {} events\n", recorded.len())),
        Some(seq) => {
            let i = seq as usize - 1;
            let show = |r: Option<&super::LoggedEvent>| {
                r.map_or("<end of log>".to_string(), |e| e.record.to_string())
            };
            Err(CliError::Divergence {
                seq,
                detail: format!(
                    "recorded {} vs replayed {}",
                    show(recorded.get(i)),
                    show(fresh.get(i))
                ),
            })
        }
    }
}

/// Writes `report.csv` and `report.md` into `run_dir`.
pub fn cmd_report(run_dir: &Path) -> Result<String, CliError> {
    let events_path = run_dir.join(EVENTS_FILE);
    let events: Vec<RunEvent> = read_log(&events_path)?
        .iter()
        .map(|e| e.event())
        .collect::<Result<_, _>>()?;
    let summary = ReportSummary::from_events(&events);
    if !summary.is_complete() || !run_dir.join(BEST_FILE).is_file() {
        return Err(CliError::IncompleteRun(format!(
            "{} has no finished generation or no {BEST_FILE}",
            run_dir.display()
        )));
    }
    let max_samples = std::fs::read_to_string(run_dir.join(CONFIG_FILE))
        .ok()
        .and_then(|t| serde_json::from_str::<RunConfig>(&t).ok())
        .map(|c| c.evolution.max_samples);
    std::fs::write(run_dir.join("report.csv"), report_csv(&summary))?;
    std::fs::write(run_dir.join("report.md"), report_md(&summary, max_samples))?;
    let best = summary.best.as_ref().expect("complete");
    Ok(format!(
        "wrote report.csv and report.md ({} generations, best gap {:.4}%)\n",
        summary.generations.len(),
        -best.fitness
    ))
}

/// Reads a heuristic file: either a best.json-style object with a `code`
/// field or raw DSL text.
pub fn load_heuristic(path: &Path) -> Result<String, CliError> {
    #[derive(Deserialize)]
    struct WithCode {
        code: String,
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        if let Ok(w) = serde_json::from_str::<WithCode>(&text) {
            return Ok(w.code);
        }
    }
    Ok(text)
}

fn build_suite(task: TaskKind, spec: &SuiteSpec) -> Result<BenchmarkSuite, CliError> {
    spec.validate(task)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    BenchmarkSuite::from_spec(task, spec, Path::new("."))
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn fmt_report_rows(
    out: &mut String,
    csv_rows: &mut Vec<Vec<String>>,
    name: &str,
    setting: &str,
    idx: &str,
    r: &EvalReport,
) {
    let _ = writeln!(
        out,
        "{name:<18} {setting:<10} {idx:>4} {:>14.4} {:>14.4} {:>12.4}",
        r.raw_metric, r.reference, r.gap_percent
    );
    csv_rows.push(vec![
        name.to_string(),
        setting.to_string(),
        idx.to_string(),
        r.raw_metric.to_string(),
        r.reference.to_string(),
        r.gap_percent.to_string(),
    ]);
}

fn table_header() -> String {
    format!(
        "{:<18} {:<10} {:>4} {:>14} {:>14} {:>12}\n",
        "heuristic", "setting", "#", "metric", "reference", "gap %"
    )
}

fn csv_text(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "heuristic",
        "setting",
        "instance",
        "metric",
        "reference",
        "gap_percent",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Scores one heuristic on a suite; prints a table followed by CSV.
pub fn cmd_evaluate(
    heuristic: &Path,
    task: TaskKind,
    spec: &SuiteSpec,
) -> Result<String, CliError> {
    let code = load_heuristic(heuristic)?;
    let suite = build_suite(task, spec)?;
    let program = parse(&code, &task.signature())
        .map_err(|e| CliError::Candidate(format!("parse error: {e}")))?;
    let report =
        evaluate_suite(&suite, &program).map_err(|e| CliError::Candidate(e.to_string()))?;
    let name = heuristic
        .file_name()
        .map_or("heuristic".into(), |n| n.to_string_lossy().into_owned());
    let mut out = table_header();
    let mut rows = Vec::new();
    for (i, r) in report.instances.iter().enumerate() {
        fmt_report_rows(
            &mut out,
            &mut rows,
            &name,
            &r.setting,
            &i.to_string(),
            &r.report,
        );
    }
    fmt_report_rows(&mut out, &mut rows, &name, "mean", "", &report.aggregate);
    out.push('\n');
    out.push_str(&csv_text(rows));
    Ok(out)
}

/// Scores the built-in baselines on a suite. For TSP the reference tour
/// itself is listed too (gap 0 by construction).
pub fn cmd_bench(task: TaskKind, spec: &SuiteSpec) -> Result<String, CliError> {
    let suite = build_suite(task, spec)?;
    let mut out = String::from("mean gap per setting\n");
    out.push_str(&table_header());
    let mut rows = Vec::new();
    for (name, src) in task.baselines() {
        let program = parse(src, &task.signature()).expect("baselines parse");
        let report = evaluate_suite(&suite, &program)
            .map_err(|e| CliError::Candidate(format!("{name}: {e}")))?;
        for (setting, r) in report.per_setting() {
            fmt_report_rows(&mut out, &mut rows, name, &setting, "", &r);
        }
        fmt_report_rows(&mut out, &mut rows, name, "all", "", &report.aggregate);
    }
    if task == TaskKind::Tsp {
        let mut by_setting: Vec<(String, Vec<EvalReport>)> = Vec::new();
        for e in suite.entries() {
            if let Instance::Tsp(inst) = &e.instance {
                let reference = tsp_reference(inst);
                let nn = tour_length(inst, &nearest_neighbor_tour(inst));
                debug_assert!(reference <= nn + 1e-9);
                let r = EvalReport::new(reference, reference);
                match by_setting.iter_mut().find(|(s, _)| *s == e.setting) {
                    Some((_, v)) => v.push(r),
                    None => by_setting.push((e.setting.clone(), vec![r])),
                }
            }
        }
        for (setting, reps) in &by_setting {
            let n = reps.len() as f64;
            let len = reps.iter().map(|r| r.raw_metric).sum::<f64>() / n;
            fmt_report_rows(
                &mut out,
                &mut rows,
                "nn+2opt-reference",
                setting,
                "",
                &EvalReport::new(len, len),
            );
        }
    }
    out.push('\n');
    out.push_str(&csv_text(rows));
    Ok(out)
}

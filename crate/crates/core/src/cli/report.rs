use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::evolution::{GenerationStats, RunEvent, SettingGap};
use crate::llm::PromptKind;

/// The best candidate as recorded in the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct BestRecord {
    pub id: u64,
    pub kind: PromptKind,
    pub thought: String,
    pub code: String,
    pub category: String,
    pub fitness: f64,
    pub setting_gaps: Vec<SettingGap>,
}

/// Everything the report shows, derived from the event log alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub generations: Vec<GenerationStats>,
    pub best: Option<BestRecord>,
    /// Candidates ever given each label.
    pub category_counts: BTreeMap<String, u64>,
    /// Labels in order of first appearance.
    pub category_order: Vec<String>,
    pub samples_used: u64,
    pub abandoned: u64,
}

impl ReportSummary {
    pub fn from_events(events: &[RunEvent]) -> Self {
        let mut generations = Vec::new();
        let mut evaluated = BTreeMap::new();
        let mut category_counts = BTreeMap::new();
        let mut category_order = Vec::new();
        let mut samples_used = 0;
        let mut abandoned = 0;
        for e in events {
            match e {
                RunEvent::Sample { sample, .. } => samples_used = samples_used.max(*sample),
                RunEvent::Evaluation {
                    kind,
                    thought,
                    code,
                    candidate_id: Some(id),
                    category: Some(category),
                    fitness: Some(fitness),
                    setting_gaps,
                    ..
                } => {
                    *category_counts.entry(category.clone()).or_insert(0) += 1;
                    evaluated.insert(
                        *id,
                        BestRecord {
                            id: *id,
                            kind: *kind,
                            thought: thought.clone(),
                            code: code.clone(),
                            category: category.clone(),
                            fitness: *fitness,
                            setting_gaps: setting_gaps.clone(),
                        },
                    );
                }
                RunEvent::Reflection {
                    abandoned: true, ..
                } => abandoned += 1,
                RunEvent::CategoryNew { label, .. } => category_order.push(label.clone()),
                RunEvent::GenerationSummary(s) => generations.push(s.clone()),
                _ => {}
            }
        }
        let best = generations
            .last()
            .and_then(|g: &GenerationStats| evaluated.remove(&g.best_id));
        Self {
            generations,
            best,
            category_counts,
            category_order,
            samples_used,
            abandoned,
        }
    }

    pub fn is_complete(&self) -> bool {
        !self.generations.is_empty() && self.best.is_some()
    }
}

fn gap(fitness: f64) -> f64 {
    0.0 - fitness
}

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// One row per generation: budget use, all-time best and category counts.
pub fn summary_csv(events: &[RunEvent]) -> String {
    let mut rows = vec![[
        "generation",
        "samples_used",
        "samples_total",
        "feasible_new",
        "reflection_calls",
        "abandoned",
        "best_fitness",
        "best_gap_percent",
        "best_id",
        "population_size",
        "pool_size",
        "new_categories",
    ]
    .map(String::from)
    .to_vec()];
    for e in events {
        if let RunEvent::GenerationSummary(s) = e {
            rows.push(vec![
                s.generation.to_string(),
                s.samples_used.to_string(),
                s.samples_total.to_string(),
                s.feasible_new.to_string(),
                s.reflection_calls.to_string(),
                s.abandoned.to_string(),
                s.best_fitness.to_string(),
                gap(s.best_fitness).to_string(),
                s.best_id.to_string(),
                s.population_size.to_string(),
                s.pool_size.to_string(),
                s.new_categories.join(";"),
            ]);
        }
    }
    csv_string(rows)
}

/// Best-fitness trajectory plus the population's category histogram, one
/// column per label ever seen.
pub fn report_csv(summary: &ReportSummary) -> String {
    let labels: BTreeSet<&str> = summary
        .generations
        .iter()
        .flat_map(|g| g.category_histogram.keys().map(String::as_str))
        .chain(summary.category_order.iter().map(String::as_str))
        .collect();
    let mut header: Vec<String> = [
        "generation",
        "samples_total",
        "best_fitness",
        "best_gap_percent",
        "pool_size",
    ]
    .map(String::from)
    .to_vec();
    header.extend(labels.iter().map(|l| format!("pop:{l}")));
    let mut rows = vec![header];
    for g in &summary.generations {
        let mut row = vec![
            g.generation.to_string(),
            g.samples_total.to_string(),
            g.best_fitness.to_string(),
            gap(g.best_fitness).to_string(),
            g.pool_size.to_string(),
        ];
        row.extend(labels.iter().map(|l| {
            g.category_histogram
                .get(*l)
                .copied()
                .unwrap_or(0)
                .to_string()
        }));
        rows.push(row);
    }
    csv_string(rows)
}

/// Markdown report: the best heuristic in full, then categories, trajectory
/// and budget use. `max_samples` is shown when known.
pub fn report_md(summary: &ReportSummary, max_samples: Option<u64>) -> String {
    let mut s = String::from("# Run report\n\n");
    if let Some(b) = &summary.best {
        let _ = writeln!(s, "## Best heuristic\n");
        let _ = writeln!(s, "- id: {}", b.id);
        let _ = writeln!(s, "- category: {}", b.category);
        let _ = writeln!(s, "- fitness: {}", b.fitness);
        let _ = writeln!(s, "- mean gap: {:.4}%", gap(b.fitness));
        let _ = writeln!(s, "- produced by: {} prompt\n", b.kind);
        let _ = writeln!(s, "Thought: {}\n", b.thought);
        let _ = writeln!(s, "```\n{}\n```\n", b.code);
        if !b.setting_gaps.is_empty() {
            let _ = writeln!(s, "| setting | gap % |\n|---|---|");
            for g in &b.setting_gaps {
                let _ = writeln!(s, "| {} | {:.4} |", g.setting, g.gap_percent);
            }
            s.push('\n');
        }
    }
    let _ = writeln!(s, "## Categories\n\n| category | candidates |\n|---|---|");
    for label in &summary.category_order {
        let n = summary.category_counts.get(label).copied().unwrap_or(0);
        let _ = writeln!(s, "| {label} | {n} |");
    }
    let _ = writeln!(
        s,
        "\n## Trajectory\n\n| generation | samples | best gap % | population categories |\n|---|---|---|---|"
    );
    for g in &summary.generations {
        let hist: Vec<String> = g
            .category_histogram
            .iter()
            .map(|(k, v)| format!("{k} ×{v}"))
            .collect();
        let _ = writeln!(
            s,
            "| {} | {} | {:.4} | {} |",
            g.generation,
            g.samples_total,
            gap(g.best_fitness),
            hist.join(", ")
        );
    }
    let _ = writeln!(s, "\n## Sample budget\n");
    match max_samples {
        Some(m) => {
            let _ = writeln!(s, "{} of {} samples used.", summary.samples_used, m);
        }
        None => {
            let _ = writeln!(s, "{} samples used.", summary.samples_used);
        }
    }
    let _ = writeln!(
        s,
        "{} candidates abandoned after failed repair.",
        summary.abandoned
    );
    s
}

//! A full evolutionary run driven by a scripted provider, so it needs no
//! network. Replace the provider with an HTTP one for a real run.

use std::path::Path;

use cdeoh::evolution::{run_evolution, EvolutionConfig, RunEvent};
use cdeoh::llm::{PromptKind, ProviderConfig, ScriptedProvider, Transcript};
use cdeoh::problems::{BenchmarkSuite, SuiteSpec, TaskKind};

const IDEAS: &[(&str, &str, &str)] = &[
    ("first fit", "oldest bin first", "return -bin_index"),
    ("best fit", "tightest bin", "return -(cap_remaining - item)"),
    ("worst fit", "emptiest bin", "return cap_remaining"),
    (
        "threshold",
        "prefer near-perfect fits",
        "let s = cap_remaining - item; return where(s < 8, 100 - s, 0 - bin_index)",
    ),
    (
        "ratio",
        "fill ratio squared",
        "return pow(item / cap_remaining, 2) - 0.001 * bin_index",
    ),
    (
        "best fit",
        "best fit with age penalty",
        "return -(cap_remaining - item) - 0.01 * bin_index",
    ),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SuiteSpec::with_settings(&["1kC100"], &[1, 2, 3]);
    let suite = BenchmarkSuite::from_spec(TaskKind::Obp, &spec, Path::new("."))?;

    let mut script = Transcript::new();
    for (i, (label, thought, code)) in IDEAS.iter().cycle().take(40).enumerate() {
        let kind = match i {
            0..4 => PromptKind::Initialization,
            _ if i % 2 == 0 => PromptKind::Refinement,
            _ => PromptKind::Innovation,
        };
        script.push_program(kind, thought, code);
        script.push(PromptKind::CategoryInduction, *label);
    }

    let config = EvolutionConfig {
        population_size: 4,
        elite_categories: 2,
        max_samples: 20,
        ..EvolutionConfig::default()
    };
    let mut events: Vec<RunEvent> = Vec::new();
    let provider = ScriptedProvider::new(&script);
    let out = run_evolution(
        &config,
        &ProviderConfig::scripted("script"),
        &provider,
        &suite,
        &mut events,
    )?;

    for s in &out.stats {
        println!(
            "gen {:>2}  samples {:>3}  best gap {:.3}%  categories {:?}",
            s.generation, s.samples_total, -s.best_fitness, s.category_histogram
        );
    }
    println!(
        "\nbest: [{}] {}\n  {}",
        out.best.category, out.best.thought, out.best.code
    );
    println!(
        "{} events, category pool {:?}",
        events.len(),
        out.pool.labels().collect::<Vec<_>>()
    );
    Ok(())
}

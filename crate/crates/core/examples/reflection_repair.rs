//! A candidate that fails evaluation is sent back with its error and repaired.

use std::path::Path;

use cdeoh::evolution::{run_evolution, EvolutionConfig, RunEvent};
use cdeoh::llm::{PromptKind, ProviderConfig, ScriptedProvider, Transcript};
use cdeoh::problems::{BenchmarkSuite, SuiteSpec, TaskKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = BenchmarkSuite::from_spec(
        TaskKind::Obp,
        &SuiteSpec::with_settings(&["1kC100"], &[1]),
        Path::new("."),
    )?;

    let mut script = Transcript::new();
    // Returns a scalar where one priority per bin is required.
    script.push_program(
        PromptKind::Initialization,
        "double the item",
        "return item * 2",
    );
    script.push_program(
        PromptKind::Reflection,
        "still scalar",
        "return sum(cap_remaining)",
    );
    script.push_program(
        PromptKind::Reflection,
        "one score per bin",
        "return -(cap_remaining - item)",
    );
    script.push(PromptKind::CategoryInduction, "best fit");

    let config = EvolutionConfig {
        population_size: 1,
        elite_categories: 1,
        max_samples: 3,
        ..EvolutionConfig::default()
    };
    let mut events = Vec::new();
    let out = run_evolution(
        &config,
        &ProviderConfig::scripted("script"),
        &ScriptedProvider::new(&script),
        &suite,
        &mut events,
    )?;

    for e in &events {
        match e {
            RunEvent::Evaluation {
                kind, code, error, ..
            } => {
                println!(
                    "{kind:?}: {code}\n  -> {}",
                    error.as_deref().unwrap_or("ok")
                )
            }
            RunEvent::Reflection {
                attempt,
                error,
                abandoned,
                ..
            } => {
                println!("reflection attempt {attempt} (abandoned: {abandoned}) for: {error}")
            }
            _ => {}
        }
    }
    println!(
        "\nrepaired after {} attempt(s): {} ({:?})",
        out.best.reflection_attempts, out.best.code, out.best.origin
    );
    Ok(())
}

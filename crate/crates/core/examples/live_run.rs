//! A short run against an OpenAI-compatible endpoint.
//!
//! ```text
//! CDEOH_API_KEY=... CDEOH_BASE_URL=https://api.deepseek.com \
//!     cargo run --release --example live_run -- deepseek-chat
//! ```
//!
//! Every reply is recorded, so the run can be replayed offline afterwards.

use std::path::Path;

use cdeoh::evolution::{run_evolution, EvolutionConfig};
use cdeoh::llm::{build_provider, ProviderConfig, RecordingProvider, API_KEY_ENV, BASE_URL_ENV};
use cdeoh::problems::{BenchmarkSuite, SuiteSpec, TaskKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if std::env::var(API_KEY_ENV).is_err() {
        eprintln!("set {API_KEY_ENV} (and optionally {BASE_URL_ENV}) to run this example");
        return Ok(());
    }
    let model = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "deepseek-chat".into());
    let base = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| "https://api.deepseek.com".into());
    let llm = ProviderConfig::http(base, model);
    llm.validate()?;

    let suite = BenchmarkSuite::from_spec(
        TaskKind::Obp,
        &SuiteSpec::with_settings(&["1kC100"], &[1, 2, 3, 4, 5]),
        Path::new("."),
    )?;
    let config = EvolutionConfig {
        population_size: 5,
        elite_categories: 4,
        max_samples: 20,
        ..EvolutionConfig::default()
    };

    let provider = RecordingProvider::new(build_provider(&llm, Path::new("."))?);
    let result = run_evolution(&config, &llm, &provider, &suite, &mut Vec::new());
    provider
        .transcript()
        .save(Path::new("live_transcript.jsonl"))?;

    let out = result?;
    println!(
        "best gap {:.3}% [{}]\n{}",
        out.best.gap_percent(),
        out.best.category,
        out.best.code
    );
    println!("transcript saved to live_transcript.jsonl");
    Ok(())
}

//! Runs from a config file, replays the run from its transcript and builds
//! the report, the same way `cdeoh run`, `cdeoh replay` and `cdeoh report` do.

use cdeoh::cli::{cmd_replay, cmd_report, cmd_run};
use cdeoh::llm::{PromptKind, Transcript};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("cdeoh-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let mut script = Transcript::new();
    let programs = [
        "return -bin_index",
        "return -(cap_remaining - item)",
        "return cap_remaining",
        "return -(cap_remaining - item) - 0.02 * bin_index",
        "let s = cap_remaining - item; return where(s < 6, 100 - s, 0 - bin_index)",
        "return pow(item / cap_remaining, 3)",
    ];
    for (i, code) in programs.iter().cycle().take(24).enumerate() {
        let kind = match i {
            0..3 => PromptKind::Initialization,
            _ if i % 2 == 1 => PromptKind::Refinement,
            _ => PromptKind::Innovation,
        };
        script.push_program(kind, &format!("idea {i}"), code);
        script.push(
            PromptKind::CategoryInduction,
            ["greedy", "look-ahead", "threshold"][i % 3],
        );
    }
    script.save(&dir.join("transcript.jsonl"))?;

    let config = r#"{
  "task": "obp",
  "suite": {"settings": ["1kC100"], "seeds": [1, 2]},
  "evolution": {"population_size": 3, "elite_categories": 2, "max_samples": 12},
  "provider": {"provider": "scripted", "transcript_path": "transcript.jsonl"},
  "output_dir": "runs"
}"#;
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, config)?;

    let summary = cmd_run(&config_path)?;
    println!("{summary}\n");
    println!("{}", cmd_replay(&summary.run_dir)?);
    println!("{}", cmd_report(&summary.run_dir)?);
    println!(
        "\n{}",
        std::fs::read_to_string(summary.run_dir.join("report.md"))?
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

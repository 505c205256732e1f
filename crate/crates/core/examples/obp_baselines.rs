//! First fit and best fit on a generated online bin packing suite.
//!
//! ```text
//! cargo run --release --example obp_baselines
//! ```

use std::path::Path;

use cdeoh::dsl::parse;
use cdeoh::problems::{evaluate_suite, BenchmarkSuite, SuiteSpec, TaskKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SuiteSpec::with_settings(&["1kC100", "1kC500", "5kC100"], &[1, 2, 3, 4, 5]);
    let suite = BenchmarkSuite::from_spec(TaskKind::Obp, &spec, Path::new("."))?;
    println!(
        "{} instances, gap measured against the L2 lower bound\n",
        suite.len()
    );

    for (name, src) in TaskKind::Obp.baselines() {
        let program = parse(src, &TaskKind::Obp.signature())?;
        let report = evaluate_suite(&suite, &program)?;
        println!("{name}  ({src})");
        for (setting, r) in report.per_setting() {
            println!(
                "  {setting:<8} bins {:>8.1}  bound {:>8.1}  gap {:>6.3}%",
                r.raw_metric, r.reference, r.gap_percent
            );
        }
        println!("  mean gap {:.3}%\n", report.aggregate.gap_percent);
    }
    Ok(())
}

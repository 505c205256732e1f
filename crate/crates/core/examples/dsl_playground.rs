//! Parse, pretty-print and evaluate heuristic programs.
//!
//! ```text
//! cargo run --example dsl_playground -- "let s = cap_remaining - item; return where(s < 5, 100 - s, 0 - bin_index)"
//! ```

use std::collections::HashMap;

use cdeoh::dsl::{evaluate, parse, pretty_print, EvalLimits, Value};
use cdeoh::problems::TaskKind;

fn main() {
    let src = std::env::args().nth(1).unwrap_or_else(|| {
        "let slack = cap_remaining - item; return where(slack == 0, 1000, 0 - slack)".into()
    });

    let program = match parse(&src, &TaskKind::Obp.signature()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("parse error: {e}");
            std::process::exit(1);
        }
    };
    println!("canonical form:\n{}\n", pretty_print(&program));

    let mut inputs = HashMap::new();
    inputs.insert("item", Value::Scalar(30.0));
    inputs.insert(
        "cap_remaining",
        Value::Vector(vec![30.0, 45.0, 70.0, 100.0]),
    );
    inputs.insert("bin_index", Value::Vector(vec![0.0, 1.0, 2.0, 3.0]));
    match evaluate(&program, &inputs, &EvalLimits::default()) {
        Ok(v) => println!("priorities for item=30, cap_remaining=[30,45,70,100]: {v:?}"),
        Err(e) => println!("evaluation error: {e}"),
    }

    // Errors carry positions so they can be fed back to the model.
    for bad in [
        "return cap_remaining +",
        "return undefined_name",
        "let x = 1; let x = 2; return x",
    ] {
        println!(
            "{bad:<36} -> {}",
            parse(bad, &TaskKind::Obp.signature()).unwrap_err()
        );
    }
}

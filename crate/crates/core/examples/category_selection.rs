//! The two-stage selection on a hand-built candidate set, with and without
//! category elites.

use cdeoh::evolution::{plan_selection, Candidate, Origin};

fn cand(id: u64, fitness: f64, category: &str) -> Candidate {
    Candidate {
        id,
        thought: String::new(),
        code: String::new(),
        category: category.into(),
        fitness,
        setting_gaps: Vec::new(),
        parent_id: None,
        origin: Origin::Init,
        generation_born: 0,
        reflection_attempts: 0,
    }
}

fn main() {
    let cands = vec![
        cand(0, -1.10, "best fit"),
        cand(1, -1.15, "best fit"),
        cand(2, -1.20, "best fit"),
        cand(3, -1.25, "best fit"),
        cand(4, -2.40, "threshold"),
        cand(5, -2.90, "threshold"),
        cand(6, -4.00, "first fit"),
        cand(7, -6.50, "harmonic"),
    ];
    let n = 4;

    for (k, lambda) in [(0, 0.0), (0, 0.7), (2, 0.7), (4, 0.7)] {
        let plan = plan_selection(&cands, n, k, lambda);
        let show = |ix: &[usize]| {
            ix.iter()
                .map(|&i| format!("{}({})", cands[i].id, cands[i].category))
                .collect::<Vec<_>>()
                .join(", ")
        };
        println!("k={k} lambda={lambda}");
        println!("  elites: [{}]", show(&plan.elites));
        println!("  rest:   [{}]", show(&plan.rest));
        for &i in &plan.rest {
            println!(
                "    id {} score {:.4}",
                cands[i].id,
                plan.scores[i].unwrap()
            );
        }
    }
}

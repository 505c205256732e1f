//! Constructive TSP heuristics against the nearest-neighbour + 2-opt reference,
//! and an exact check on a tiny instance.

use cdeoh::dsl::parse;
use cdeoh::problems::{
    construct_tsp, gen_tsp, nearest_neighbor_tour, tour_length, tsp_reference, TaskKind, TspMode,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sig = TaskKind::Tsp.signature();
    let heuristics = [
        ("nearest", "return 0 - dist_to_current"),
        (
            "homeward",
            "return dist_to_start * visited_fraction - dist_to_current",
        ),
        (
            "central",
            "return 0 - dist_to_current - 0.3 * mean_dist_remaining",
        ),
    ];

    for (mode, n) in [
        (TspMode::Uniform, 100),
        (TspMode::GaussianMixture, 100),
        (TspMode::Uniform, 200),
    ] {
        let inst = gen_tsp(7, n, mode)?;
        let reference = tsp_reference(&inst);
        let nn = tour_length(&inst, &nearest_neighbor_tour(&inst));
        println!("{mode:?} n={n}: reference {reference:.4}, plain nearest neighbour {nn:.4}");
        for (name, src) in heuristics {
            let run = construct_tsp(&inst, &parse(src, &sig)?)?;
            let gap = 100.0 * (run.length - reference) / reference;
            println!("  {name:<9} {:.4}  gap {gap:+.2}%", run.length);
        }
    }
    Ok(())
}

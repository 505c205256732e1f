//! Independent oracles and scripted fixtures shared by the integration tests
//! and the acceptance harness.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use cdeoh::evolution::{Candidate, RunEvent};
use cdeoh::llm::{PromptKind, Transcript};
use cdeoh::problems::{BenchmarkSuite, SuiteSpec, TaskKind, TspInstance};
use rand::Rng;

/// Exact minimum bin count by depth-first branch and bound.
pub fn bnb_bin_packing(items: &[u32], capacity: u32) -> usize {
    let mut sorted = items.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut best = sorted.len();
    let mut loads = Vec::new();
    fn go(i: usize, items: &[u32], cap: u32, loads: &mut Vec<u32>, best: &mut usize) {
        if loads.len() >= *best {
            return;
        }
        if i == items.len() {
            *best = loads.len();
            return;
        }
        for b in 0..loads.len() {
            // Bins with equal load are interchangeable.
            if loads[..b].contains(&loads[b]) {
                continue;
            }
            if loads[b] + items[i] <= cap {
                loads[b] += items[i];
                go(i + 1, items, cap, loads, best);
                loads[b] -= items[i];
            }
        }
        loads.push(items[i]);
        go(i + 1, items, cap, loads, best);
        loads.pop();
    }
    go(0, &sorted, capacity, &mut loads, &mut best);
    best
}

/// Online best fit written directly: tightest feasible bin, lowest index on
/// ties, new bin when nothing fits.
pub fn hand_best_fit(items: &[u32], capacity: u32) -> usize {
    let mut remaining: Vec<u32> = Vec::new();
    for &item in items {
        let mut pick: Option<usize> = None;
        for (b, &r) in remaining.iter().enumerate() {
            if r >= item && pick.is_none_or(|p| r < remaining[p]) {
                pick = Some(b);
            }
        }
        match pick {
            Some(b) => remaining[b] -= item,
            None => remaining.push(capacity - item),
        }
    }
    remaining.len()
}

/// Optimal closed tour length by Held-Karp dynamic programming.
pub fn held_karp(inst: &TspInstance) -> f64 {
    let n = inst.len();
    let m = n - 1;
    let full = 1usize << m;
    let mut dp = vec![f64::INFINITY; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = inst.dist(0, j + 1);
    }
    for set in 1..full {
        for j in 0..m {
            let cur = dp[set * m + j];
            if set & (1 << j) == 0 || !cur.is_finite() {
                continue;
            }
            for k in 0..m {
                if set & (1 << k) != 0 {
                    continue;
                }
                let next = set | (1 << k);
                let v = cur + inst.dist(j + 1, k + 1);
                if v < dp[next * m + k] {
                    dp[next * m + k] = v;
                }
            }
        }
    }
    (0..m)
        .map(|j| dp[(full - 1) * m + j] + inst.dist(j + 1, 0))
        .fold(f64::INFINITY, f64::min)
}

fn random_vector_expr(rng: &mut impl Rng, depth: u32) -> String {
    let leaf = |rng: &mut dyn rand::RngCore| -> String {
        match rng.random_range(0..5) {
            0 => "cap_remaining".into(),
            1 => "bin_index".into(),
            2 => "(cap_remaining - item)".into(),
            3 => format!("(bin_index * {:.2})", rng.random_range(-2.0..2.0)),
            _ => format!("(cap_remaining + {:.1})", rng.random_range(-10.0..10.0)),
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    let a = random_vector_expr(rng, depth - 1);
    let b = random_vector_expr(rng, depth - 1);
    match rng.random_range(0..9) {
        0 => format!("({a} + {b})"),
        1 => format!("({a} - {b})"),
        2 => format!("({a} * {b})"),
        3 => format!("({a} / ({b} + 0.5))"),
        4 => format!("min({a}, {b})"),
        5 => format!("max({a}, {b})"),
        6 => format!("-abs({a})"),
        7 => format!("where({a} > {b}, {a}, item - {b})"),
        _ => format!(
            "({a} * {:.3} - sum({b}) / (len({b}) + 1))",
            rng.random_range(-1.0..1.0)
        ),
    }
}

/// A random OBP priority program that always returns a vector.
pub fn random_obp_program(rng: &mut impl Rng) -> String {
    let depth = rng.random_range(0..4);
    format!("return {}", random_vector_expr(rng, depth))
}

/// Ids of the `n` fittest candidates, ties to the lowest id.
pub fn top_n_by_fitness(candidates: &[(u64, f64)], n: usize) -> Vec<u64> {
    let mut v = candidates.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.into_iter().take(n).map(|c| c.0).collect()
}

/// A small OBP suite that evaluates in milliseconds.
pub fn small_obp_suite() -> BenchmarkSuite {
    let spec = SuiteSpec::with_settings(&["200C100"], &[1, 2]);
    BenchmarkSuite::from_spec(TaskKind::Obp, &spec, Path::new(".")).unwrap()
}

/// A family of valid OBP programs with varied quality.
pub fn obp_program(i: usize) -> String {
    let a = (i / 6) as f64 * 0.05;
    match i % 6 {
        0 => format!("return -(cap_remaining - item) - {a} * bin_index"),
        1 => format!("return -bin_index + {a} * cap_remaining"),
        2 => format!("return cap_remaining - {a} * bin_index"),
        3 => format!(
            "let slack = cap_remaining - item; return where((slack < {}), 100 - slack, 0 - bin_index)",
            5.0 + 10.0 * a
        ),
        4 => format!("return -abs(cap_remaining - item - {})", 3.0 * a),
        _ => format!("return pow(item / cap_remaining, 2) - {} * bin_index", 0.01 + a),
    }
}

pub const BROKEN_PROGRAM: &str = "return item * 2";

pub const LABELS: [&str; 5] = [
    "best fit",
    "first fit",
    "worst fit",
    "exact fit",
    "ratio scoring",
];

/// Transcript for a run with `n` initial programs and `gens` generations of
/// `n` parents each. Every fourth innovation is broken and repaired by the
/// next reflection entry. Category replies cycle through [`LABELS`].
pub fn growth_transcript(n: usize, gens: usize) -> Transcript {
    let mut t = Transcript::new();
    for i in 0..n {
        t.push_program(
            PromptKind::Initialization,
            &format!("initial idea {i}"),
            &obp_program(i),
        );
    }
    let mut k = n;
    for i in 0..n * gens {
        t.push_program(
            PromptKind::Refinement,
            &format!("refined {i}"),
            &obp_program(k),
        );
        k += 1;
        if i % 4 == 3 {
            t.push_program(
                PromptKind::Innovation,
                &format!("broken {i}"),
                BROKEN_PROGRAM,
            );
            t.push_program(
                PromptKind::Reflection,
                &format!("repaired {i}"),
                &obp_program(k),
            );
        } else {
            t.push_program(PromptKind::Innovation, &format!("new {i}"), &obp_program(k));
        }
        k += 1;
    }
    for i in 0..n * (1 + 2 * gens) {
        t.push(PromptKind::CategoryInduction, LABELS[i % LABELS.len()]);
    }
    t
}

/// `(id, fitness, category)` of every candidate, and the ids kept.
pub type SelectionRecord = (Vec<(u64, f64, String)>, Vec<u64>);

/// Candidate sets and selections recorded in a run's events.
pub fn selections(events: &[RunEvent]) -> Vec<SelectionRecord> {
    events
        .iter()
        .filter_map(|e| match e {
            RunEvent::Selection {
                candidates,
                selected,
                ..
            } => Some((
                candidates
                    .iter()
                    .map(|c| (c.id, c.fitness, c.category.clone()))
                    .collect(),
                selected.clone(),
            )),
            _ => None,
        })
        .collect()
}

/// Best member of each category ranked by fitness, as ids.
pub fn category_elites(candidates: &[(u64, f64, String)]) -> Vec<u64> {
    let mut best: BTreeMap<&str, (u64, f64)> = BTreeMap::new();
    for (id, f, cat) in candidates {
        let e = best.entry(cat).or_insert((*id, *f));
        if *f > e.1 || (*f == e.1 && *id < e.0) {
            *e = (*id, *f);
        }
    }
    let v: Vec<(u64, f64)> = best.into_values().collect();
    top_n_by_fitness(&v, v.len())
}

pub fn make_candidate(id: u64, fitness: f64, category: &str) -> Candidate {
    Candidate {
        id,
        thought: String::new(),
        code: String::new(),
        category: category.into(),
        fitness,
        setting_gaps: Vec::new(),
        parent_id: None,
        origin: cdeoh::evolution::Origin::Init,
        generation_born: 0,
        reflection_attempts: 0,
    }
}

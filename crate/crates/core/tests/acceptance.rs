//! Acceptance harness: one PASS/FAIL line per criterion, with the time each
//! took against its limit. Exits nonzero if anything fails.

// NaN must fail a check, so conditions are negated as written.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cdeoh::cli::cmd_run;
use cdeoh::dsl::parse;
use cdeoh::evolution::{
    joint_score, run_evolution, select_next_generation, EvolutionConfig, GenerationStats, Origin,
    RunEvent,
};
use cdeoh::llm::{
    PromptKind, ProviderConfig, ScriptedProvider, Transcript, API_KEY_ENV, BASE_URL_ENV,
};
use cdeoh::problems::{
    construct_tsp, gen_obp, gen_tsp, nearest_neighbor_tour, obp_lower_bound, pack_obp, tour_length,
    tsp_reference, BenchmarkSuite, ObpInstance, SuiteSpec, TaskKind, TspMode,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn selection_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..500 {
        let m = rng.random_range(1..=20);
        let cands: Vec<_> = (0..m)
            .map(|i| {
                let f = rng.random_range(-40..=0) as f64;
                make_candidate(i as u64, f, &format!("c{}", rng.random_range(0..6)))
            })
            .collect();
        let n = rng.random_range(1..=12);
        let base = EvolutionConfig {
            population_size: n,
            ..EvolutionConfig::default()
        };

        let plain = EvolutionConfig {
            elite_categories: 0,
            lambda: 0.0,
            ..base.clone()
        };
        let got: Vec<u64> = select_next_generation(&cands, &plain)
            .members()
            .iter()
            .map(|c| c.id)
            .collect();
        let pairs: Vec<(u64, f64)> = cands.iter().map(|c| (c.id, c.fitness)).collect();
        ensure!(
            got == top_n_by_fitness(&pairs, n),
            "trial {trial}: k=0, lambda=0 is not top-N"
        );

        let k = rng.random_range(1..=n.min(6));
        let cfg = EvolutionConfig {
            elite_categories: k,
            lambda: 0.7,
            ..base
        };
        let pop = select_next_generation(&cands, &cfg);
        let triples: Vec<(u64, f64, String)> = cands
            .iter()
            .map(|c| (c.id, c.fitness, c.category.clone()))
            .collect();
        for id in category_elites(&triples).into_iter().take(k) {
            ensure!(
                pop.members().iter().any(|c| c.id == id),
                "trial {trial}: elite {id} missing"
            );
        }
    }

    let cfg = |n, k| EvolutionConfig {
        population_size: n,
        elite_categories: k,
        lambda: 0.7,
        ..EvolutionConfig::default()
    };
    let ids =
        |p: cdeoh::evolution::Population| p.members().iter().map(|c| c.id).collect::<Vec<_>>();
    let ex1 = [
        make_candidate(0, 30.0, "B"),
        make_candidate(1, 20.0, "A"),
        make_candidate(2, 10.0, "A"),
    ];
    ensure!(
        ids(select_next_generation(&ex1, &cfg(2, 1))) == [0, 1],
        "example 1"
    );
    ensure!(
        joint_score(20.0, 10.0, 30.0, 2, 0.7) == 0.85,
        "example 1 score f20"
    );
    ensure!(
        joint_score(10.0, 10.0, 30.0, 2, 0.7) == 0.35,
        "example 1 score f10"
    );
    let ex2 = [
        make_candidate(0, 30.0, "A"),
        make_candidate(1, 29.0, "A"),
        make_candidate(2, 28.0, "A"),
        make_candidate(3, 5.0, "B"),
    ];
    ensure!(
        ids(select_next_generation(&ex2, &cfg(2, 2))) == [0, 3],
        "example 2"
    );
    Ok("500 random sets + 2 hand examples".into())
}

fn joint_score_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let a: f64 = rng.random_range(-100.0..100.0);
        let b: f64 = rng.random_range(-100.0..100.0);
        let (f_min, f_max) = if i % 10 == 0 {
            (a, a)
        } else {
            (a.min(b), a.max(b))
        };
        let f = if f_max > f_min {
            rng.random_range(f_min..=f_max)
        } else {
            f_min
        };
        let c = rng.random_range(1..=20usize);
        let lambda = rng.random_range(0.0..2.0);
        let norm = if f_max == f_min {
            0.0
        } else {
            (f - f_min) / (f_max - f_min)
        };
        let direct = norm + lambda / c as f64;
        let got = joint_score(f, f_min, f_max, c, lambda);
        worst = worst.max((got - direct).abs());
        if f_max == f_min {
            ensure!(
                got == lambda / c as f64,
                "degenerate case: {got} != {}",
                lambda / c as f64
            );
        }
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    Ok(format!("10000 tuples, max deviation {worst:e}"))
}

fn obp_validity() -> Outcome {
    let sig = TaskKind::Obp.signature();
    let mut programs = vec![
        parse("return -bin_index", &sig).unwrap(),
        parse("return -(cap_remaining - item)", &sig).unwrap(),
    ];
    let probe = gen_obp(0, 200, 100, 3.0, 45.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    while programs.len() < 22 {
        let src = random_obp_program(&mut rng);
        let p = parse(&src, &sig).map_err(|e| format!("{src}: {e}"))?;
        if pack_obp(&probe, &p).is_ok() {
            programs.push(p);
        }
    }
    let mut runs = 0;
    for seed in 0..200u64 {
        let cap = if seed % 2 == 0 { 100 } else { 500 };
        let inst = gen_obp(1000 + seed, 500, cap, 3.0, 45.0).unwrap();
        let lb = obp_lower_bound(&inst) as usize;
        for (pi, p) in programs.iter().enumerate() {
            let run = pack_obp(&inst, p).map_err(|e| format!("program {pi} seed {seed}: {e}"))?;
            let mut loads = vec![0u32; run.loads.len()];
            for (&item, &b) in inst.items.iter().zip(&run.assignment) {
                loads[b] += item;
            }
            ensure!(
                loads.iter().all(|&l| l <= cap),
                "program {pi} seed {seed}: bin over capacity"
            );
            ensure!(
                loads.len() >= lb,
                "program {pi} seed {seed}: {} bins < bound {lb}",
                loads.len()
            );
            runs += 1;
        }
    }
    Ok(format!("{runs} packings"))
}

fn lower_bound_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for t in 0..30 {
        let cap = rng.random_range(10..=100u32);
        let n = rng.random_range(1..=10);
        let items: Vec<u32> = (0..n).map(|_| rng.random_range(1..=cap)).collect();
        let lb = obp_lower_bound(&ObpInstance::new(cap, items.clone()).unwrap()) as usize;
        let opt = bnb_bin_packing(&items, cap);
        let l1 = items
            .iter()
            .map(|&x| x as u64)
            .sum::<u64>()
            .div_ceil(cap as u64) as usize;
        ensure!(lb <= opt, "instance {t}: bound {lb} > optimum {opt}");
        ensure!(lb >= l1, "instance {t}: bound {lb} < ceil(sum/cap) {l1}");
    }
    Ok("30 instances".into())
}

fn best_fit_equivalence() -> Outcome {
    let bf = parse("return -(cap_remaining - item)", &TaskKind::Obp.signature()).unwrap();
    for seed in 0..100 {
        let inst = gen_obp(seed, 1000, 100, 3.0, 45.0).unwrap();
        let dsl = pack_obp(&inst, &bf).map_err(|e| e.to_string())?.loads.len();
        let hand = hand_best_fit(&inst.items, 100);
        ensure!(dsl == hand, "seed {seed}: DSL {dsl} bins vs hand {hand}");
    }
    Ok("100 instances identical".into())
}

fn tsp_validity() -> Outcome {
    let sig = TaskKind::Tsp.signature();
    let programs = [
        parse("return 0 - dist_to_current", &sig).unwrap(),
        parse(
            "return dist_to_start * visited_fraction - dist_to_current",
            &sig,
        )
        .unwrap(),
        parse(
            "return 0 - dist_to_current - 0.5 * mean_dist_remaining",
            &sig,
        )
        .unwrap(),
    ];
    for seed in 0..20 {
        let mode = if seed % 2 == 0 {
            TspMode::Uniform
        } else {
            TspMode::GaussianMixture
        };
        let inst = gen_tsp(seed, 10, mode).unwrap();
        let opt = held_karp(&inst);
        for (pi, p) in programs.iter().enumerate() {
            let run = construct_tsp(&inst, p).map_err(|e| e.to_string())?;
            let mut sorted = run.tour.clone();
            sorted.sort_unstable();
            ensure!(
                sorted == (0..10).collect::<Vec<_>>(),
                "seed {seed} program {pi}: not a permutation"
            );
            ensure!(
                run.length >= opt - 1e-9,
                "seed {seed} program {pi}: below optimum"
            );
        }
        let reference = tsp_reference(&inst);
        let nn = tour_length(&inst, &nearest_neighbor_tour(&inst));
        ensure!(
            reference >= opt - 1e-9 && reference <= nn + 1e-9,
            "seed {seed}: reference {reference} outside [{opt}, {nn}]"
        );
    }
    Ok("20 instances, n=10".into())
}

fn suite() -> BenchmarkSuite {
    small_obp_suite()
}

fn reflection_loop(trajectories: &mut Vec<Vec<GenerationStats>>) -> Outcome {
    let mut t = Transcript::new();
    t.push_program(
        PromptKind::Initialization,
        "double the item",
        BROKEN_PROGRAM,
    );
    t.push_program(
        PromptKind::Reflection,
        "tightest bin",
        "return -(cap_remaining - item)",
    );
    t.push(PromptKind::CategoryInduction, "best fit");
    let llm = ProviderConfig::scripted("fixture");
    let cfg = EvolutionConfig {
        population_size: 1,
        elite_categories: 1,
        max_samples: 2,
        ..EvolutionConfig::default()
    };
    let provider = ScriptedProvider::new(&t);
    let out = run_evolution(&cfg, &llm, &provider, &suite(), &mut Vec::new())
        .map_err(|e| e.to_string())?;
    ensure!(
        out.best.origin == Origin::ReflectionRepair,
        "origin {:?}",
        out.best.origin
    );
    ensure!(
        out.best.reflection_attempts == 1,
        "attempts {}",
        out.best.reflection_attempts
    );
    trajectories.push(out.stats);

    let off = EvolutionConfig {
        enable_reflection: false,
        max_samples: 1,
        ..cfg
    };
    let provider = ScriptedProvider::new(&t);
    let mut events = Vec::new();
    let res = run_evolution(&off, &llm, &provider, &suite(), &mut events);
    ensure!(
        res.is_err(),
        "run without reflection should find no viable candidate"
    );
    ensure!(
        provider.calls(PromptKind::Reflection) == 0,
        "reflection was called"
    );
    let abandoned = events.iter().any(|e| {
        matches!(
            e,
            RunEvent::Reflection {
                abandoned: true,
                attempt: 0,
                ..
            }
        )
    });
    ensure!(abandoned, "no abandonment logged");
    Ok("repaired on attempt 1; disabled -> abandoned, 0 reflection calls".into())
}

fn category_growth(trajectories: &mut Vec<Vec<GenerationStats>>) -> Outcome {
    let t = growth_transcript(5, 3);
    let llm = ProviderConfig::scripted("fixture");
    let cfg = EvolutionConfig {
        population_size: 5,
        elite_categories: 4,
        max_generations: Some(3),
        max_samples: 1000,
        ..EvolutionConfig::default()
    };
    let mut events = Vec::new();
    let out = run_evolution(
        &cfg,
        &llm,
        &ScriptedProvider::new(&t),
        &suite(),
        &mut events,
    )
    .map_err(|e| e.to_string())?;
    ensure!(out.pool.len() == 5, "pool has {} labels", out.pool.len());
    ensure!(out.stats.len() == 4, "{} generations", out.stats.len() - 1);
    for (g, (cands, selected)) in selections(&events).into_iter().enumerate() {
        for id in category_elites(&cands).into_iter().take(4) {
            ensure!(selected.contains(&id), "generation {g}: elite {id} dropped");
        }
    }
    trajectories.push(out.stats);

    let off = EvolutionConfig {
        enable_categories: false,
        ..cfg
    };
    let mut events = Vec::new();
    let out = run_evolution(
        &off,
        &llm,
        &ScriptedProvider::new(&t),
        &suite(),
        &mut events,
    )
    .map_err(|e| e.to_string())?;
    for (g, (cands, selected)) in selections(&events).into_iter().enumerate() {
        let pairs: Vec<(u64, f64)> = cands.iter().map(|c| (c.0, c.1)).collect();
        let mut expect = top_n_by_fitness(&pairs, 5);
        let mut got = selected;
        expect.sort_unstable();
        got.sort_unstable();
        ensure!(got == expect, "generation {g}: not pure fitness selection");
    }
    trajectories.push(out.stats);
    Ok("5 labels, top-4 elites kept; ablation = fitness top-N".into())
}

fn replay_determinism(trajectories: &mut Vec<Vec<GenerationStats>>) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    growth_transcript(5, 3)
        .save(&dir.path().join("transcript.jsonl"))
        .map_err(|e| e.to_string())?;
    let config = r#"{
  "task": "obp",
  "suite": {"settings": ["200C100"], "seeds": [1, 2]},
  "evolution": {"population_size": 5, "elite_categories": 4, "max_generations": 3, "max_samples": 100},
  "provider": {"provider": "scripted", "transcript_path": "transcript.jsonl"},
  "output_dir": "runs"
}"#;
    let path = dir.path().join("config.json");
    std::fs::write(&path, config).map_err(|e| e.to_string())?;
    let a = cmd_run(&path).map_err(|e| e.to_string())?;
    let b = cmd_run(&path).map_err(|e| e.to_string())?;
    let strip = |p: &Path| -> Result<Vec<serde_json::Value>, String> {
        let text = std::fs::read_to_string(p.join("events.jsonl")).map_err(|e| e.to_string())?;
        text.lines()
            .map(|l| {
                let mut v: serde_json::Value =
                    serde_json::from_str(l).map_err(|e| e.to_string())?;
                v.as_object_mut()
                    .ok_or("not an object")?
                    .remove("timestamp");
                Ok(v)
            })
            .collect()
    };
    let (ea, eb) = (strip(&a.run_dir)?, strip(&b.run_dir)?);
    ensure!(ea == eb, "event streams differ");
    let status = Command::new(env!("CARGO_BIN_EXE_cdeoh"))
        .arg("replay")
        .arg(&a.run_dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        status.status.success(),
        "cdeoh replay failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    let events =
        cdeoh::cli::read_events(&a.run_dir.join("events.jsonl")).map_err(|e| e.to_string())?;
    trajectories.push(
        events
            .into_iter()
            .filter_map(|e| match e {
                RunEvent::GenerationSummary(s) => Some(s),
                _ => None,
            })
            .collect(),
    );
    Ok(format!("{} events identical; replay exit 0", ea.len()))
}

fn monotone_best(trajectories: &[Vec<GenerationStats>]) -> Outcome {
    let mut extra = Vec::new();
    for (n, gens, budget) in [(3usize, 6usize, 40u64), (4, 4, 30), (6, 2, 1000)] {
        let cfg = EvolutionConfig {
            population_size: n,
            elite_categories: 2,
            max_samples: budget,
            max_generations: Some(gens as u32),
            ..EvolutionConfig::default()
        };
        let out = run_evolution(
            &cfg,
            &ProviderConfig::scripted("fixture"),
            &ScriptedProvider::new(&growth_transcript(n, gens)),
            &suite(),
            &mut Vec::new(),
        )
        .map_err(|e| e.to_string())?;
        extra.push(out.stats);
    }
    let all: Vec<&Vec<GenerationStats>> = trajectories.iter().chain(&extra).collect();
    for (r, stats) in all.iter().enumerate() {
        for w in stats.windows(2) {
            ensure!(
                w[1].best_fitness >= w[0].best_fitness,
                "run {r}: best fell from {} to {} at generation {}",
                w[0].best_fitness,
                w[1].best_fitness,
                w[1].generation
            );
        }
    }
    Ok(format!("{} scripted runs", all.len()))
}

fn live_smoke() -> Option<Outcome> {
    std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty())?;
    let base = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| "https://api.deepseek.com".into());
    let model = std::env::var("CDEOH_MODEL").unwrap_or_else(|_| "deepseek-chat".into());
    let run = || -> Outcome {
        let llm = ProviderConfig::http(base, model);
        let provider =
            cdeoh::llm::build_provider(&llm, Path::new(".")).map_err(|e| e.to_string())?;
        let spec = SuiteSpec::with_settings(&["1kC100"], &[1, 2, 3, 4, 5]);
        let suite = BenchmarkSuite::from_spec(TaskKind::Obp, &spec, Path::new("."))
            .map_err(|e| e.to_string())?;
        let cfg = EvolutionConfig {
            population_size: 5,
            elite_categories: 4,
            max_samples: 20,
            ..EvolutionConfig::default()
        };
        let mut events = Vec::new();
        let result = run_evolution(&cfg, &llm, &provider, &suite, &mut events);
        let best = events
            .iter()
            .filter_map(|e| match e {
                RunEvent::Evaluation {
                    candidate_id: Some(_),
                    fitness: Some(f),
                    ..
                } => Some(*f),
                _ => None,
            })
            .fold(f64::NEG_INFINITY, f64::max);
        ensure!(best.is_finite(), "no valid candidate ({:?})", result.err());
        Ok(format!(
            "best gap {:.3}% ({})",
            -best,
            if result.is_ok() {
                "completed"
            } else {
                "partial"
            }
        ))
    };
    Some(run())
}

fn report(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panic: {msg}"))
    });
    let took = start.elapsed();
    let limit_text = limit.map_or(String::new(), |l| {
        format!(" / limit {:.0}s", l.as_secs_f64())
    });
    let res = match (res, limit) {
        (Ok(_), Some(l)) if took > l => Err(format!("took {:.2}s", took.as_secs_f64())),
        (r, _) => r,
    };
    let ok = res.is_ok();
    let (tag, detail) = match res {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!(
        "{tag} {name} [{:.2}s{limit_text}] {detail}",
        took.as_secs_f64()
    );
    ok
}

fn main() {
    let s = Duration::from_secs;
    let mut trajectories = Vec::new();
    let mut ok = true;
    ok &= report("selection-correctness", Some(s(5)), selection_correctness);
    ok &= report("joint-score-formula", Some(s(1)), joint_score_formula);
    ok &= report("obp-validity", Some(s(30)), obp_validity);
    ok &= report("lower-bound-soundness", Some(s(10)), lower_bound_soundness);
    ok &= report(
        "best-fit-oracle-equivalence",
        Some(s(10)),
        best_fit_equivalence,
    );
    ok &= report(
        "tsp-validity-and-optimality-bound",
        Some(s(20)),
        tsp_validity,
    );
    ok &= report("reflection-loop", Some(s(5)), || {
        reflection_loop(&mut trajectories)
    });
    ok &= report("category-pool-growth-and-ablation", Some(s(10)), || {
        category_growth(&mut trajectories)
    });
    ok &= report("end-to-end-replay-determinism", Some(s(20)), || {
        replay_determinism(&mut trajectories)
    });
    ok &= report("monotone-best", None, || monotone_best(&trajectories));
    match live_smoke() {
        None => println!("SKIP live-smoke (set {API_KEY_ENV} to enable)"),
        Some(res) => ok &= report("live-smoke", None, || res),
    }
    if !ok {
        std::process::exit(1);
    }
}

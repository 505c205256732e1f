mod common;

use cdeoh::evolution::{run_evolution, EvolutionConfig, EvolutionError, Origin, RunEvent};
use cdeoh::llm::{PromptKind, ProviderConfig, ScriptedProvider, Transcript};
use common::*;

fn growth_config(n: usize, gens: u32) -> EvolutionConfig {
    EvolutionConfig {
        population_size: n,
        elite_categories: 4.min(n),
        max_generations: Some(gens),
        max_samples: 1000,
        ..EvolutionConfig::default()
    }
}

fn run(
    t: &Transcript,
    cfg: &EvolutionConfig,
) -> (
    Result<cdeoh::evolution::RunOutcome, EvolutionError>,
    Vec<RunEvent>,
) {
    let provider = ScriptedProvider::new(t);
    let llm = ProviderConfig::scripted("fixture");
    let mut events = Vec::new();
    let out = run_evolution(cfg, &llm, &provider, &small_obp_suite(), &mut events);
    (out, events)
}

#[test]
fn category_pool_grows_to_five_and_keeps_elites() {
    let t = growth_transcript(5, 3);
    let (out, events) = run(&t, &growth_config(5, 3));
    let out = out.unwrap();
    assert_eq!(out.pool.len(), 5);
    assert_eq!(out.stats.len(), 4);
    for (cands, selected) in selections(&events) {
        for id in category_elites(&cands).into_iter().take(4) {
            assert!(selected.contains(&id));
        }
    }
    let new: usize = events
        .iter()
        .filter(|e| matches!(e, RunEvent::CategoryNew { .. }))
        .count();
    assert_eq!(new, 5);
}

#[test]
fn categories_disabled_reduces_to_fitness_ranking() {
    let t = growth_transcript(5, 3);
    for lambda in [0.0, 0.7] {
        let cfg = EvolutionConfig {
            enable_categories: false,
            lambda,
            ..growth_config(5, 3)
        };
        let (out, events) = run(&t, &cfg);
        let out = out.unwrap();
        assert_eq!(out.pool.labels().collect::<Vec<_>>(), ["all"]);
        let sels = selections(&events);
        assert_eq!(sels.len(), 4);
        for (cands, selected) in sels {
            let pairs: Vec<(u64, f64)> = cands.iter().map(|c| (c.0, c.1)).collect();
            let mut expect = top_n_by_fitness(&pairs, 5);
            let mut got = selected.clone();
            expect.sort();
            got.sort();
            assert_eq!(got, expect);
        }
    }
}

#[test]
fn reflection_repairs_broken_initial_program() {
    let mut t = Transcript::new();
    t.push_program(PromptKind::Initialization, "broken", BROKEN_PROGRAM);
    t.push_program(PromptKind::Reflection, "repaired", &obp_program(0));
    t.push(PromptKind::CategoryInduction, "best fit");
    let cfg = EvolutionConfig {
        population_size: 1,
        elite_categories: 1,
        max_samples: 2,
        ..EvolutionConfig::default()
    };
    let provider = ScriptedProvider::new(&t);
    let llm = ProviderConfig::scripted("fixture");
    let out = run_evolution(
        &cfg,
        &llm,
        &provider,
        &small_obp_suite(),
        &mut cdeoh::evolution::NullSink,
    )
    .unwrap();
    assert_eq!(out.best.origin, Origin::ReflectionRepair);
    assert_eq!(out.best.reflection_attempts, 1);
    assert_eq!(provider.calls(PromptKind::Reflection), 1);

    let no_reflect = EvolutionConfig {
        enable_reflection: false,
        max_samples: 1,
        ..cfg
    };
    let provider = ScriptedProvider::new(&t);
    let mut events = Vec::new();
    let err = run_evolution(
        &no_reflect,
        &llm,
        &provider,
        &small_obp_suite(),
        &mut events,
    )
    .unwrap_err();
    assert!(matches!(
        err,
        EvolutionError::BudgetExhausted { viable: 0, .. }
    ));
    assert_eq!(provider.calls(PromptKind::Reflection), 0);
    assert!(events.iter().any(|e| matches!(
        e,
        RunEvent::Reflection {
            abandoned: true,
            attempt: 0,
            ..
        }
    )));
}

#[test]
fn budget_accounting_and_monotone_best() {
    let t = growth_transcript(5, 6);
    for max_samples in [5, 6, 13, 24, 40] {
        let cfg = EvolutionConfig {
            max_samples,
            max_generations: None,
            ..growth_config(5, 0)
        };
        let provider = ScriptedProvider::new(&t);
        let llm = ProviderConfig::scripted("fixture");
        let mut events = Vec::new();
        let out = run_evolution(&cfg, &llm, &provider, &small_obp_suite(), &mut events).unwrap();
        let calls: u64 = [
            PromptKind::Initialization,
            PromptKind::Refinement,
            PromptKind::Innovation,
            PromptKind::Reflection,
        ]
        .iter()
        .map(|&k| provider.calls(k))
        .sum();
        assert_eq!(calls, out.samples_used);
        assert!(calls <= max_samples);
        assert_eq!(out.stats.iter().map(|s| s.samples_used).sum::<u64>(), calls);
        let samples = events
            .iter()
            .filter(|e| matches!(e, RunEvent::Sample { .. }))
            .count() as u64;
        assert_eq!(samples, calls);
        for w in out.stats.windows(2) {
            assert!(w[1].best_fitness >= w[0].best_fitness);
        }
        for s in &out.stats {
            assert!(s.population_size <= 5);
            assert!(s.generation == 0 || s.feasible_new <= 10);
        }
    }
}

#[test]
fn population_snapshots_are_sorted() {
    struct Snap(Vec<Vec<(f64, u64)>>);
    impl cdeoh::evolution::EventSink for Snap {
        fn emit(&mut self, _e: &RunEvent) -> std::io::Result<()> {
            Ok(())
        }
        fn population(&mut self, _g: u32, p: &cdeoh::evolution::Population) -> std::io::Result<()> {
            self.0
                .push(p.members().iter().map(|c| (c.fitness, c.id)).collect());
            Ok(())
        }
    }
    let t = growth_transcript(5, 2);
    let provider = ScriptedProvider::new(&t);
    let mut snap = Snap(Vec::new());
    run_evolution(
        &growth_config(5, 2),
        &ProviderConfig::scripted("fixture"),
        &provider,
        &small_obp_suite(),
        &mut snap,
    )
    .unwrap();
    assert_eq!(snap.0.len(), 3);
    for pop in snap.0 {
        for w in pop.windows(2) {
            assert!(w[0].0 > w[1].0 || (w[0].0 == w[1].0 && w[0].1 < w[1].1));
        }
    }
}

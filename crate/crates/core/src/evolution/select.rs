use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{Candidate, EvolutionConfig, Population};

/// `(f - f_min) / (f_max - f_min) + lambda / category_count`, with the
/// normalized term taken as 0 when `f_max == f_min`.
pub fn joint_score(
    fitness: f64,
    f_min: f64,
    f_max: f64,
    category_count: usize,
    lambda: f64,
) -> f64 {
    debug_assert!(category_count >= 1);
    let normalized = if f_max > f_min {
        (fitness - f_min) / (f_max - f_min)
    } else {
        0.0
    };
    normalized + lambda / category_count as f64
}

/// Indices chosen by the two-stage selection, plus the Stage II score of
/// every non-elite candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPlan {
    /// Stage I survivors, best first.
    pub elites: Vec<usize>,
    /// Stage II survivors, highest score first.
    pub rest: Vec<usize>,
    /// `scores[i]` is `None` for elites.
    pub scores: Vec<Option<f64>>,
}

impl SelectionPlan {
    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.elites.iter().chain(&self.rest).copied()
    }
}

fn by_fitness_then_id(a: &Candidate, b: &Candidate) -> Ordering {
    b.fitness.total_cmp(&a.fitness).then(a.id.cmp(&b.id))
}

/// Two-stage selection over `candidates`.
///
/// Stage I keeps the best member of each of the `k` best categories. Stage II
/// fills the remaining `n - elites` slots by joint score, with fitness range
/// and category sizes measured over the whole candidate set. Score ties go to
/// the fitter candidate, then the lower id.
pub fn plan_selection(candidates: &[Candidate], n: usize, k: usize, lambda: f64) -> SelectionPlan {
    let mut best_of: BTreeMap<&str, usize> = BTreeMap::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, c) in candidates.iter().enumerate() {
        *counts.entry(&c.category).or_insert(0) += 1;
        best_of
            .entry(&c.category)
            .and_modify(|j| {
                if by_fitness_then_id(c, &candidates[*j]) == Ordering::Less {
                    *j = i;
                }
            })
            .or_insert(i);
    }

    let mut elites: Vec<usize> = best_of.into_values().collect();
    elites.sort_by(|&a, &b| by_fitness_then_id(&candidates[a], &candidates[b]));
    elites.truncate(k.min(n));

    let (f_min, f_max) = candidates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c.fitness), hi.max(c.fitness))
        });

    let mut scores = vec![None; candidates.len()];
    let mut rest = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if !elites.contains(&i) {
            scores[i] = Some(joint_score(
                c.fitness,
                f_min,
                f_max,
                counts[c.category.as_str()],
                lambda,
            ));
            rest.push(i);
        }
    }
    rest.sort_by(|&a, &b| {
        let (sa, sb) = (scores[a].unwrap(), scores[b].unwrap());
        sb.total_cmp(&sa)
            .then_with(|| by_fitness_then_id(&candidates[a], &candidates[b]))
    });
    rest.truncate(n - elites.len());

    SelectionPlan {
        elites,
        rest,
        scores,
    }
}

/// Forms the next population from the previous one plus offspring.
pub fn select_next_generation(candidates: &[Candidate], config: &EvolutionConfig) -> Population {
    let plan = plan_selection(
        candidates,
        config.population_size,
        config.effective_k(),
        config.lambda,
    );
    Population::new(
        plan.selected().map(|i| candidates[i].clone()).collect(),
        config.population_size,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Origin;
    use proptest::prelude::*;

    fn cand(id: u64, fitness: f64, category: &str) -> Candidate {
        Candidate {
            id,
            thought: String::new(),
            code: String::new(),
            category: category.to_string(),
            fitness,
            setting_gaps: Vec::new(),
            parent_id: None,
            origin: Origin::Init,
            generation_born: 0,
            reflection_attempts: 0,
        }
    }

    fn config(n: usize, k: usize, lambda: f64) -> EvolutionConfig {
        EvolutionConfig {
            population_size: n,
            elite_categories: k,
            lambda,
            ..EvolutionConfig::default()
        }
    }

    fn ids(p: &Population) -> Vec<u64> {
        p.members().iter().map(|c| c.id).collect()
    }

    #[test]
    fn score_formula() {
        assert_eq!(joint_score(30.0, 10.0, 30.0, 1, 0.7), 1.7);
        assert_eq!(joint_score(10.0, 10.0, 30.0, 2, 0.7), 0.35);
        assert_eq!(joint_score(20.0, 10.0, 30.0, 3, 0.0), 0.5);
        assert_eq!(joint_score(5.0, 5.0, 5.0, 4, 0.8), 0.2);
    }

    #[test]
    fn diversity_term_picks_second() {
        let c = [cand(0, 30.0, "B"), cand(1, 20.0, "A"), cand(2, 10.0, "A")];
        let plan = plan_selection(&c, 2, 1, 0.7);
        assert_eq!(plan.elites, vec![0]);
        assert_eq!(plan.scores[1], Some(0.85));
        assert_eq!(plan.scores[2], Some(0.35));
        assert_eq!(
            ids(&select_next_generation(&c, &config(2, 1, 0.7))),
            vec![0, 1]
        );
    }

    #[test]
    fn elites_preserve_minor_category() {
        let c = [
            cand(0, 30.0, "A"),
            cand(1, 29.0, "A"),
            cand(2, 28.0, "A"),
            cand(3, 5.0, "B"),
        ];
        assert_eq!(
            ids(&select_next_generation(&c, &config(2, 2, 0.7))),
            vec![0, 3]
        );
    }

    #[test]
    fn fewer_candidates_than_capacity() {
        let c = [cand(4, 1.0, "A"), cand(2, 3.0, "B")];
        assert_eq!(
            ids(&select_next_generation(&c, &config(10, 4, 0.7))),
            vec![2, 4]
        );
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let c = [cand(5, 1.0, "A"), cand(3, 1.0, "A"), cand(4, 1.0, "A")];
        assert_eq!(
            ids(&select_next_generation(&c, &config(2, 0, 0.0))),
            vec![3, 4]
        );
        assert_eq!(
            ids(&select_next_generation(&c, &config(1, 1, 0.0))),
            vec![3]
        );
    }

    #[test]
    fn categories_disabled_is_fitness_ranking() {
        let mut cfg = config(2, 4, 0.7);
        cfg.enable_categories = false;
        let c = [
            cand(0, 30.0, "all"),
            cand(1, 29.0, "all"),
            cand(2, 5.0, "all"),
        ];
        assert_eq!(ids(&select_next_generation(&c, &cfg)), vec![0, 1]);
    }

    fn arb_candidates() -> impl Strategy<Value = Vec<Candidate>> {
        prop::collection::vec((-50i32..50, 0usize..6), 1..=20).prop_map(|v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (f, c))| cand(i as u64, f as f64, &format!("c{c}")))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn k0_lambda0_is_top_n(cands in arb_candidates(), n in 1usize..12) {
            let pop = select_next_generation(&cands, &config(n, 0, 0.0));
            let mut sorted = cands.clone();
            sorted.sort_by(by_fitness_then_id);
            sorted.truncate(n);
            prop_assert_eq!(ids(&pop), sorted.iter().map(|c| c.id).collect::<Vec<_>>());
        }

        #[test]
        fn top_k_category_elites_survive(cands in arb_candidates(), n in 1usize..12, k in 0usize..6, lambda in 0.0f64..2.0) {
            let k = k.min(n);
            let pop = select_next_generation(&cands, &config(n, k, lambda));
            prop_assert!(pop.len() <= n);
            prop_assert_eq!(pop.len(), n.min(cands.len()));
            let mut bests: Vec<&Candidate> = Vec::new();
            for c in &cands {
                match bests.iter_mut().find(|b| b.category == c.category) {
                    Some(b) => if by_fitness_then_id(c, b) == Ordering::Less { *b = c },
                    None => bests.push(c),
                }
            }
            bests.sort_by(|a, b| by_fitness_then_id(a, b));
            for b in bests.iter().take(k) {
                prop_assert!(pop.members().iter().any(|m| m.id == b.id));
            }
        }

        #[test]
        fn shift_invariant(cands in arb_candidates(), n in 1usize..12, k in 0usize..4, shift in -100i32..100) {
            let k = k.min(n);
            let cfg = config(n, k, 0.7);
            let shifted: Vec<Candidate> = cands
                .iter()
                .map(|c| Candidate { fitness: c.fitness + shift as f64, ..c.clone() })
                .collect();
            let mut a = ids(&select_next_generation(&cands, &cfg));
            let mut b = ids(&select_next_generation(&shifted, &cfg));
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}

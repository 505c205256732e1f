//! The evolutionary loop: sampling, repair, category bookkeeping and the
//! category-aware two-stage selection.

mod engine;
mod events;
mod select;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::LlmError;

pub use engine::{run_evolution, Evolution, RunOutcome};
pub use events::{EventSink, NullSink, RunEvent, SelectionEntry};
pub use select::{joint_score, plan_selection, select_next_generation, SelectionPlan};

/// Label shared by every candidate when categories are disabled.
pub const SINGLE_CATEGORY: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Init,
    Refinement,
    Innovation,
    ReflectionRepair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingGap {
    pub setting: String,
    pub gap_percent: f64,
}

/// An evaluated, categorized heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: u64,
    pub thought: String,
    pub code: String,
    pub category: String,
    /// Negated mean gap over the suite.
    pub fitness: f64,
    /// Mean gap per benchmark setting.
    #[serde(default)]
    pub setting_gaps: Vec<SettingGap>,
    pub parent_id: Option<u64>,
    pub origin: Origin,
    pub generation_born: u32,
    pub reflection_attempts: u32,
}

impl Candidate {
    pub fn gap_percent(&self) -> f64 {
        -self.fitness
    }
}

/// Members sorted by fitness (desc), then id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    members: Vec<Candidate>,
    capacity: usize,
}

impl Population {
    pub fn new(mut members: Vec<Candidate>, capacity: usize) -> Self {
        members.sort_by(|a, b| b.fitness.total_cmp(&a.fitness).then(a.id.cmp(&b.id)));
        members.truncate(capacity);
        Self { members, capacity }
    }

    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.members.first()
    }

    pub fn category_histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for m in &self.members {
            *h.entry(m.category.clone()).or_insert(0) += 1;
        }
        h
    }
}

/// Every label seen so far, with the number of candidates ever given it.
/// Labels are never removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryPool {
    counts: BTreeMap<String, u64>,
}

impl CategoryPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one member of `label`; returns true if the label is new.
    pub fn record(&mut self, label: &str) -> bool {
        match self.counts.get_mut(label) {
            Some(c) => {
                *c += 1;
                false
            }
            None => {
                self.counts.insert(label.to_string(), 1);
                true
            }
        }
    }

    pub fn contains(&self, label: &str) -> bool {
        self.counts.contains_key(label)
    }

    pub fn count(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub elite_categories: usize,
    pub lambda: f64,
    pub reflection_budget: u32,
    pub max_samples: u64,
    /// Defaults to `ceil(max_samples / (2 * population_size))`.
    pub max_generations: Option<u32>,
    pub enable_categories: bool,
    pub enable_reflection: bool,
    pub rng_seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            elite_categories: 4,
            lambda: 0.7,
            reflection_budget: 3,
            max_samples: 200,
            max_generations: None,
            enable_categories: true,
            enable_reflection: true,
            rng_seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |m: String| Err(EvolutionError::InvalidConfig(m));
        if self.population_size == 0 {
            return bad("population_size must be at least 1".into());
        }
        if self.elite_categories > self.population_size {
            return bad(format!(
                "elite_categories ({}) must not exceed population_size ({})",
                self.elite_categories, self.population_size
            ));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!(
                "lambda must be a finite number >= 0, got {}",
                self.lambda
            ));
        }
        Ok(())
    }

    pub fn generation_limit(&self) -> u32 {
        self.max_generations.unwrap_or_else(|| {
            let per_gen = 2 * self.population_size as u64;
            self.max_samples.div_ceil(per_gen).min(u32::MAX as u64) as u32
        })
    }

    /// Number of Stage I elites; 0 when categories are disabled.
    pub fn effective_k(&self) -> usize {
        if self.enable_categories {
            self.elite_categories
        } else {
            0
        }
    }
}

/// Per-generation bookkeeping. Generation 0 is initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: u32,
    /// Candidate-producing calls (generation and reflection) this generation.
    pub samples_used: u64,
    pub samples_total: u64,
    /// Candidates that evaluated successfully this generation.
    pub feasible_new: u64,
    pub reflection_calls: u64,
    pub abandoned: u64,
    /// All-time best.
    pub best_fitness: f64,
    pub best_id: u64,
    pub population_size: usize,
    pub category_histogram: BTreeMap<String, usize>,
    pub new_categories: Vec<String>,
    pub pool_size: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("sample budget exhausted after {samples_used} samples with {viable} of {needed} initial candidates")]
    BudgetExhausted {
        samples_used: u64,
        viable: usize,
        needed: usize,
    },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("event log: {0}")]
    Sink(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = EvolutionConfig::default();
        assert_eq!(
            (
                c.population_size,
                c.elite_categories,
                c.lambda,
                c.max_samples
            ),
            (10, 4, 0.7, 200)
        );
        assert_eq!(c.generation_limit(), 10);
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs() {
        for c in [
            EvolutionConfig {
                lambda: -1.0,
                ..Default::default()
            },
            EvolutionConfig {
                lambda: f64::NAN,
                ..Default::default()
            },
            EvolutionConfig {
                population_size: 0,
                elite_categories: 0,
                ..Default::default()
            },
            EvolutionConfig {
                elite_categories: 11,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                c.validate(),
                Err(EvolutionError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(serde_json::from_str::<EvolutionConfig>(r#"{"lamda": 0.5}"#).is_err());
        let c: EvolutionConfig = serde_json::from_str(r#"{"lambda": 0.5}"#).unwrap();
        assert_eq!(c.population_size, 10);
    }

    #[test]
    fn pool_is_append_only() {
        let mut p = CategoryPool::new();
        assert!(p.record("greedy"));
        assert!(!p.record("greedy"));
        assert!(p.record("look-ahead"));
        assert_eq!(p.count("greedy"), 2);
        assert_eq!(p.labels().collect::<Vec<_>>(), ["greedy", "look-ahead"]);
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::events::{EventSink, RunEvent, SelectionEntry};
use super::select::plan_selection;
use super::{
    Candidate, CategoryPool, EvolutionConfig, EvolutionError, GenerationStats, Origin, Population,
    SettingGap, SINGLE_CATEGORY,
};
use crate::dsl::{parse, render_grammar};
use crate::llm::{
    complete_prompt, induce_category, parse_generation, salvage_generation, PromptContext,
    PromptKind, Provider, ProviderConfig, UNCATEGORIZED,
};
use crate::problems::{evaluate_suite, BenchmarkSuite};

/// Result of a complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Best candidate ever evaluated, even if later evicted.
    pub best: Candidate,
    pub stats: Vec<GenerationStats>,
    pub population: Population,
    pub pool: CategoryPool,
    pub samples_used: u64,
}

/// A scored program, or the error that stopped it plus whatever could be
/// salvaged for a repair prompt.
enum Assessment {
    Ok {
        thought: String,
        code: String,
        fitness: f64,
        setting_gaps: Vec<SettingGap>,
    },
    Failed {
        thought: String,
        code: String,
        error: String,
    },
}

#[derive(Default)]
struct GenCounters {
    samples: u64,
    feasible: u64,
    reflections: u64,
    abandoned: u64,
    new_categories: Vec<String>,
}

/// State of one evolutionary run. Calls to the provider happen in a fixed
/// order, so a scripted provider reproduces a run exactly.
pub struct Evolution<'a> {
    config: EvolutionConfig,
    llm: &'a ProviderConfig,
    provider: &'a dyn Provider,
    suite: &'a BenchmarkSuite,
    sink: &'a mut dyn EventSink,
    base_ctx: PromptContext,
    rng: ChaCha8Rng,
    next_id: u64,
    samples: u64,
    generation: u32,
    pool: CategoryPool,
    best: Option<Candidate>,
    counters: GenCounters,
    stats: Vec<GenerationStats>,
}

impl<'a> Evolution<'a> {
    pub fn new(
        config: EvolutionConfig,
        llm: &'a ProviderConfig,
        provider: &'a dyn Provider,
        suite: &'a BenchmarkSuite,
        sink: &'a mut dyn EventSink,
    ) -> Result<Self, EvolutionError> {
        config.validate()?;
        let task = suite.task();
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            config,
            llm,
            provider,
            suite,
            sink,
            base_ctx: PromptContext::new(task.description(), render_grammar()),
            next_id: 0,
            samples: 0,
            generation: 0,
            pool: CategoryPool::new(),
            best: None,
            counters: GenCounters::default(),
            stats: Vec::new(),
        })
    }

    pub fn samples_used(&self) -> u64 {
        self.samples
    }

    pub fn pool(&self) -> &CategoryPool {
        &self.pool
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.best.as_ref()
    }

    fn budget_left(&self) -> bool {
        self.samples < self.config.max_samples
    }

    fn emit(&mut self, event: RunEvent) -> Result<(), EvolutionError> {
        self.sink
            .emit(&event)
            .map_err(|e| EvolutionError::Sink(e.to_string()))
    }

    /// Makes one candidate-producing call and logs it. Returns the sample
    /// number and the raw reply.
    fn call(
        &mut self,
        kind: PromptKind,
        ctx: PromptContext,
        parent_id: Option<u64>,
    ) -> Result<(u64, String), EvolutionError> {
        let seed: u64 = self.rng.random();
        let ctx = PromptContext { seed, ..ctx };
        self.samples += 1;
        self.counters.samples += 1;
        let sample = self.samples;
        let response = complete_prompt(self.provider, self.llm, kind, &ctx)?;
        self.emit(RunEvent::Sample {
            sample,
            generation: self.generation,
            kind,
            parent_id,
            seed,
            response: response.clone(),
        })?;
        Ok((sample, response))
    }

    fn assess(&self, raw: &str) -> Assessment {
        let (thought, code) = match parse_generation(raw) {
            Ok(tc) => tc,
            Err(e) => {
                let (thought, code) = salvage_generation(raw);
                return Assessment::Failed {
                    thought,
                    code,
                    error: e.to_string(),
                };
            }
        };
        let failed = |error: String| Assessment::Failed {
            thought: thought.clone(),
            code: code.clone(),
            error,
        };
        let program = match parse(&code, &self.suite.task().signature()) {
            Ok(p) => p,
            Err(e) => return failed(format!("parse error: {e}")),
        };
        let report = match evaluate_suite(self.suite, &program) {
            Ok(r) => r,
            Err(e) => return failed(e.to_string()),
        };
        let fitness = report.aggregate.fitness;
        if !fitness.is_finite() {
            return failed(format!("fitness is not finite ({fitness})"));
        }
        let setting_gaps = report
            .per_setting()
            .into_iter()
            .map(|(setting, r)| SettingGap {
                setting,
                gap_percent: r.gap_percent,
            })
            .collect();
        Assessment::Ok {
            thought,
            code,
            fitness,
            setting_gaps,
        }
    }

    fn categorize(&mut self, thought: &str, code: &str) -> String {
        if !self.config.enable_categories {
            return SINGLE_CATEGORY.to_string();
        }
        let ctx = self
            .base_ctx
            .clone()
            .with_parent(thought, code)
            .with_categories(self.pool.labels().map(str::to_string));
        induce_category(self.provider, self.llm, &ctx).unwrap_or_else(|_| UNCATEGORIZED.to_string())
    }

    #[allow(clippy::too_many_arguments)]
    fn admit(
        &mut self,
        sample: u64,
        kind: PromptKind,
        thought: String,
        code: String,
        fitness: f64,
        setting_gaps: Vec<SettingGap>,
        parent_id: Option<u64>,
        origin: Origin,
        reflection_attempts: u32,
    ) -> Result<Candidate, EvolutionError> {
        let category = self.categorize(&thought, &code);
        let id = self.next_id;
        self.next_id += 1;
        let candidate = Candidate {
            id,
            thought,
            code,
            category,
            fitness,
            setting_gaps,
            parent_id,
            origin,
            generation_born: self.generation,
            reflection_attempts,
        };
        self.counters.feasible += 1;
        self.emit(RunEvent::Evaluation {
            sample,
            generation: self.generation,
            kind,
            thought: candidate.thought.clone(),
            code: candidate.code.clone(),
            candidate_id: Some(id),
            category: Some(candidate.category.clone()),
            fitness: Some(fitness),
            setting_gaps: candidate.setting_gaps.clone(),
            error: None,
        })?;
        if self.pool.record(&candidate.category) {
            self.counters
                .new_categories
                .push(candidate.category.clone());
            self.emit(RunEvent::CategoryNew {
                generation: self.generation,
                label: candidate.category.clone(),
                candidate_id: id,
            })?;
        }
        if self.best.as_ref().is_none_or(|b| fitness > b.fitness) {
            self.best = Some(candidate.clone());
        }
        Ok(candidate)
    }

    fn log_failure(
        &mut self,
        sample: u64,
        kind: PromptKind,
        thought: &str,
        code: &str,
        error: &str,
    ) -> Result<(), EvolutionError> {
        self.emit(RunEvent::Evaluation {
            sample,
            generation: self.generation,
            kind,
            thought: thought.to_string(),
            code: code.to_string(),
            candidate_id: None,
            category: None,
            fitness: None,
            setting_gaps: Vec::new(),
            error: Some(error.to_string()),
        })
    }

    /// One generation call of `kind`, repaired by reflection if it fails.
    /// `None` when the budget is spent or the candidate is abandoned.
    fn produce(
        &mut self,
        kind: PromptKind,
        parent: Option<&Candidate>,
    ) -> Result<Option<Candidate>, EvolutionError> {
        if !self.budget_left() {
            return Ok(None);
        }
        let mut ctx = self.base_ctx.clone();
        if let Some(p) = parent {
            ctx = ctx.with_parent(&p.thought, &p.code);
        }
        let parent_id = parent.map(|p| p.id);
        let (sample, raw) = self.call(kind, ctx, parent_id)?;
        let origin = match kind {
            PromptKind::Refinement => Origin::Refinement,
            PromptKind::Innovation => Origin::Innovation,
            _ => Origin::Init,
        };
        match self.assess(&raw) {
            Assessment::Ok {
                thought,
                code,
                fitness,
                setting_gaps,
            } => self
                .admit(
                    sample,
                    kind,
                    thought,
                    code,
                    fitness,
                    setting_gaps,
                    parent_id,
                    origin,
                    0,
                )
                .map(Some),
            Assessment::Failed {
                thought,
                code,
                error,
            } => {
                self.log_failure(sample, kind, &thought, &code, &error)?;
                self.try_reflect(thought, code, error, parent_id)
            }
        }
    }

    /// Repairs a failed program with up to `reflection_budget` reflection
    /// calls, each counted as a sample. Returns `None` when abandoned.
    pub fn try_reflect(
        &mut self,
        mut thought: String,
        mut code: String,
        mut error: String,
        parent_id: Option<u64>,
    ) -> Result<Option<Candidate>, EvolutionError> {
        let budget = if self.config.enable_reflection {
            self.config.reflection_budget
        } else {
            0
        };
        let mut attempts = 0;
        while attempts < budget && self.budget_left() {
            attempts += 1;
            let ctx = self
                .base_ctx
                .clone()
                .with_parent(&thought, &code)
                .with_error(&error);
            self.counters.reflections += 1;
            let (sample, raw) = self.call(PromptKind::Reflection, ctx, parent_id)?;
            self.emit(RunEvent::Reflection {
                generation: self.generation,
                attempt: attempts,
                sample: Some(sample),
                error: error.clone(),
                abandoned: false,
            })?;
            match self.assess(&raw) {
                Assessment::Ok {
                    thought,
                    code,
                    fitness,
                    setting_gaps,
                } => {
                    return self
                        .admit(
                            sample,
                            PromptKind::Reflection,
                            thought,
                            code,
                            fitness,
                            setting_gaps,
                            parent_id,
                            Origin::ReflectionRepair,
                            attempts,
                        )
                        .map(Some);
                }
                Assessment::Failed {
                    thought: t,
                    code: c,
                    error: e,
                } => {
                    self.log_failure(sample, PromptKind::Reflection, &t, &c, &e)?;
                    // Keep the last non-empty thought; an empty one gives the model nothing.
                    if !t.is_empty() {
                        thought = t;
                    }
                    code = c;
                    error = e;
                }
            }
        }
        self.counters.abandoned += 1;
        self.emit(RunEvent::Reflection {
            generation: self.generation,
            attempt: attempts,
            sample: None,
            error,
            abandoned: true,
        })?;
        Ok(None)
    }

    /// Calls the initialization prompt until `population_size` candidates
    /// evaluate successfully.
    pub fn initialize(&mut self) -> Result<Population, EvolutionError> {
        self.generation = 0;
        let n = self.config.population_size;
        let mut members = Vec::with_capacity(n);
        while members.len() < n {
            if !self.budget_left() {
                return Err(EvolutionError::BudgetExhausted {
                    samples_used: self.samples,
                    viable: members.len(),
                    needed: n,
                });
            }
            if let Some(c) = self.produce(PromptKind::Initialization, None)? {
                members.push(c);
            }
        }
        self.select(members)
    }

    /// One refinement and one innovation offspring of `parent`.
    pub fn sample_offspring(
        &mut self,
        parent: &Candidate,
    ) -> Result<Vec<Candidate>, EvolutionError> {
        let mut out = Vec::with_capacity(2);
        for kind in [PromptKind::Refinement, PromptKind::Innovation] {
            if let Some(c) = self.produce(kind, Some(parent))? {
                out.push(c);
            }
        }
        Ok(out)
    }

    /// Selects from `candidates`, logs the decision and closes the generation.
    fn select(&mut self, candidates: Vec<Candidate>) -> Result<Population, EvolutionError> {
        let n = self.config.population_size;
        let plan = plan_selection(
            &candidates,
            n,
            self.config.effective_k(),
            self.config.lambda,
        );
        let entries = candidates
            .iter()
            .zip(&plan.scores)
            .map(|(c, s)| SelectionEntry {
                id: c.id,
                category: c.category.clone(),
                fitness: c.fitness,
                score: *s,
            })
            .collect();
        let elites = plan.elites.iter().map(|&i| candidates[i].id).collect();
        let selected_idx: Vec<usize> = plan.selected().collect();
        let selected = selected_idx.iter().map(|&i| candidates[i].id).collect();
        self.emit(RunEvent::Selection {
            generation: self.generation,
            candidates: entries,
            elites,
            selected,
        })?;
        let population = Population::new(
            selected_idx
                .into_iter()
                .map(|i| candidates[i].clone())
                .collect(),
            n,
        );

        let counters = std::mem::take(&mut self.counters);
        let best = self
            .best
            .as_ref()
            .expect("a generation always has candidates");
        let stats = GenerationStats {
            generation: self.generation,
            samples_used: counters.samples,
            samples_total: self.samples,
            feasible_new: counters.feasible,
            reflection_calls: counters.reflections,
            abandoned: counters.abandoned,
            best_fitness: best.fitness,
            best_id: best.id,
            population_size: population.len(),
            category_histogram: population.category_histogram(),
            new_categories: counters.new_categories,
            pool_size: self.pool.len(),
        };
        self.stats.push(stats.clone());
        self.emit(RunEvent::GenerationSummary(stats))?;
        self.sink
            .population(self.generation, &population)
            .map_err(|e| EvolutionError::Sink(e.to_string()))?;
        Ok(population)
    }

    /// Initialization followed by generations until the sample budget or the
    /// generation limit is reached.
    pub fn run(mut self) -> Result<RunOutcome, EvolutionError> {
        let mut population = self.initialize()?;
        let limit = self.config.generation_limit();
        while self.generation < limit && self.budget_left() {
            self.generation += 1;
            let mut candidates = population.members().to_vec();
            for parent in population.members() {
                let offspring = self.sample_offspring(parent)?;
                candidates.extend(offspring);
            }
            population = self.select(candidates)?;
        }
        Ok(RunOutcome {
            best: self.best.clone().expect("initialized"),
            stats: std::mem::take(&mut self.stats),
            population,
            pool: self.pool.clone(),
            samples_used: self.samples,
        })
    }

    /// Statistics of every generation closed so far.
    pub fn stats(&self) -> &[GenerationStats] {
        &self.stats
    }
}

/// Runs the whole loop and returns the best candidate with per-generation
/// statistics.
pub fn run_evolution(
    config: &EvolutionConfig,
    llm: &ProviderConfig,
    provider: &dyn Provider,
    suite: &BenchmarkSuite,
    sink: &mut dyn EventSink,
) -> Result<RunOutcome, EvolutionError> {
    Evolution::new(config.clone(), llm, provider, suite, sink)?.run()
}

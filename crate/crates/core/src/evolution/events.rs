use serde::{Deserialize, Serialize};

use super::{GenerationStats, Population, SettingGap};
use crate::llm::PromptKind;

/// One entry of the run log. Serialized as `{"event": <tag>, "payload": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", content = "payload", rename_all = "kebab-case")]
pub enum RunEvent {
    /// A candidate-producing provider call and its raw reply.
    Sample {
        sample: u64,
        generation: u32,
        kind: PromptKind,
        parent_id: Option<u64>,
        seed: u64,
        response: String,
    },
    /// The outcome of parsing and scoring one sample.
    Evaluation {
        sample: u64,
        generation: u32,
        kind: PromptKind,
        thought: String,
        code: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        candidate_id: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        category: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fitness: Option<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        setting_gaps: Vec<SettingGap>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    /// A repair attempt (`abandoned == false`, `sample` set) or the decision
    /// to give up on a broken candidate (`abandoned == true`).
    Reflection {
        generation: u32,
        attempt: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample: Option<u64>,
        error: String,
        abandoned: bool,
    },
    CategoryNew {
        generation: u32,
        label: String,
        candidate_id: u64,
    },
    Selection {
        generation: u32,
        candidates: Vec<SelectionEntry>,
        elites: Vec<u64>,
        selected: Vec<u64>,
    },
    GenerationSummary(GenerationStats),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub id: u64,
    pub category: String,
    pub fitness: f64,
    /// Stage II joint score; absent for elites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Receives the engine's events in order.
pub trait EventSink {
    fn emit(&mut self, event: &RunEvent) -> std::io::Result<()>;

    /// Called with the population after each selection.
    fn population(&mut self, _generation: u32, _population: &Population) -> std::io::Result<()> {
        Ok(())
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _event: &RunEvent) -> std::io::Result<()> {
        Ok(())
    }
}

impl EventSink for Vec<RunEvent> {
    fn emit(&mut self, event: &RunEvent) -> std::io::Result<()> {
        self.push(event.clone());
        Ok(())
    }
}

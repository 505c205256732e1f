use std::fmt;

use serde::{Deserialize, Serialize};

use super::LlmError;

/// Byte budget applied by [`render_prompt`].
pub const DEFAULT_PROMPT_BUDGET: usize = 32 * 1024;

const HEADER_PREFIX: &str = "### cdeoh-prompt kind=";
const TRUNCATION_MARKER: &str = "\n... [truncated]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    #[serde(alias = "init")]
    Initialization,
    Refinement,
    Innovation,
    CategoryInduction,
    Reflection,
}

impl PromptKind {
    pub const ALL: [PromptKind; 5] = [
        PromptKind::Initialization,
        PromptKind::Refinement,
        PromptKind::Innovation,
        PromptKind::CategoryInduction,
        PromptKind::Reflection,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PromptKind::Initialization => "initialization",
            PromptKind::Refinement => "refinement",
            PromptKind::Innovation => "innovation",
            PromptKind::CategoryInduction => "category-induction",
            PromptKind::Reflection => "reflection",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "init" => Some(PromptKind::Initialization),
            _ => Self::ALL.into_iter().find(|k| k.tag() == tag),
        }
    }

    /// Kinds whose response is a new candidate program.
    pub fn produces_program(self) -> bool {
        self != PromptKind::CategoryInduction
    }

    /// Recovers the kind from the first line of a rendered prompt.
    pub fn from_prompt_header(prompt: &str) -> Option<Self> {
        let first = prompt.lines().next()?;
        Self::from_tag(first.strip_prefix(HEADER_PREFIX)?.trim())
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Everything a prompt template may interpolate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromptContext {
    pub task_description: String,
    pub dsl_grammar: String,
    pub parent_thought: Option<String>,
    pub parent_code: Option<String>,
    pub error_message: Option<String>,
    pub known_categories: Vec<String>,
    pub seed: u64,
}

impl PromptContext {
    pub fn new(task_description: impl Into<String>, dsl_grammar: impl Into<String>) -> Self {
        Self {
            task_description: task_description.into(),
            dsl_grammar: dsl_grammar.into(),
            ..Self::default()
        }
    }

    pub fn with_parent(mut self, thought: impl Into<String>, code: impl Into<String>) -> Self {
        self.parent_thought = Some(thought.into());
        self.parent_code = Some(code.into());
        self
    }

    pub fn with_error(mut self, error: impl Into<String>) -> Self {
        self.error_message = Some(error.into());
        self
    }

    pub fn with_categories(mut self, labels: impl IntoIterator<Item = String>) -> Self {
        self.known_categories = labels.into_iter().collect();
        self
    }

    fn check(&self, kind: PromptKind) -> Result<(), LlmError> {
        let needs_parent = kind != PromptKind::Initialization;
        if needs_parent && (self.parent_thought.is_none() || self.parent_code.is_none()) {
            return Err(LlmError::MissingContext(format!(
                "{kind} prompt needs the parent thought and code"
            )));
        }
        if kind == PromptKind::Reflection && self.error_message.is_none() {
            return Err(LlmError::MissingContext(
                "reflection prompt needs an error message".into(),
            ));
        }
        Ok(())
    }
}

const OUTPUT_FORMAT: &str = "\
Answer format:
1. Describe the idea of your heuristic in one to three sentences inside a single pair of \
braces, for example {prefer the bin that the item fills most tightly}.
2. Then give the complete program in a single fenced code block that starts with ``` and ends \
with ```.
Do not use braces anywhere else and do not add any other code block.";

/// Renders the prompt for `kind` within [`DEFAULT_PROMPT_BUDGET`].
pub fn render_prompt(kind: PromptKind, ctx: &PromptContext) -> Result<String, LlmError> {
    render_prompt_with_budget(kind, ctx, DEFAULT_PROMPT_BUDGET)
}

/// Renders the prompt for `kind`, never exceeding `budget` bytes.
///
/// When the full prompt is too long the parent code is cut from the tail
/// first, then the parent thought and error message; a marker shows where.
pub fn render_prompt_with_budget(
    kind: PromptKind,
    ctx: &PromptContext,
    budget: usize,
) -> Result<String, LlmError> {
    ctx.check(kind)?;
    let mut ctx = ctx.clone();
    let mut text = template(kind, &ctx);
    for field in [Field::Code, Field::Thought, Field::Error] {
        if text.len() <= budget {
            return Ok(text);
        }
        let slot = match field {
            Field::Code => &mut ctx.parent_code,
            Field::Thought => &mut ctx.parent_thought,
            Field::Error => &mut ctx.error_message,
        };
        if let Some(value) = slot.as_mut() {
            let excess = text.len() - budget;
            let keep = value.len().saturating_sub(excess + TRUNCATION_MARKER.len());
            *value = truncate_with_marker(value, keep);
        }
        text = template(kind, &ctx);
    }
    if text.len() > budget {
        let cut = floor_char_boundary(&text, budget);
        text.truncate(cut);
    }
    Ok(text)
}

enum Field {
    Code,
    Thought,
    Error,
}

fn floor_char_boundary(s: &str, mut i: usize) -> usize {
    i = i.min(s.len());
    while !s.is_char_boundary(i) {
        i -= 1;
    }
    i
}

fn truncate_with_marker(s: &str, keep: usize) -> String {
    let cut = floor_char_boundary(s, keep);
    format!("{}{TRUNCATION_MARKER}", &s[..cut])
}

fn template(kind: PromptKind, ctx: &PromptContext) -> String {
    let mut out = String::new();
    out.push_str(HEADER_PREFIX);
    out.push_str(kind.tag());
    out.push_str("\n\n");
    out.push_str("You are an expert in designing heuristics for combinatorial optimization.\n\n");
    out.push_str("Task:\n");
    out.push_str(&ctx.task_description);
    out.push_str("\n\nHeuristics are written in the following language.\n\n");
    out.push_str(&ctx.dsl_grammar);
    out.push('\n');

    let parent = |label: &str| -> String {
        format!(
            "{label}\nIdea: {}\nCode:\n```\n{}\n```\n\n",
            ctx.parent_thought.as_deref().unwrap_or_default(),
            ctx.parent_code.as_deref().unwrap_or_default()
        )
    };

    match kind {
        PromptKind::Initialization => {
            out.push_str("Design a new heuristic for this task.\n\n");
            out.push_str(OUTPUT_FORMAT);
        }
        PromptKind::Refinement => {
            out.push_str(&parent("Here is an existing heuristic."));
            out.push_str(
                "Keep the core idea of this heuristic and improve its parameters and details so \
                 that it performs better.\n\n",
            );
            out.push_str(OUTPUT_FORMAT);
        }
        PromptKind::Innovation => {
            out.push_str(&parent("Here is an existing heuristic."));
            out.push_str(
                "Propose a fundamentally different idea from the heuristic above and write new \
                 code for it.\n\n",
            );
            out.push_str(OUTPUT_FORMAT);
        }
        PromptKind::Reflection => {
            out.push_str(&parent("The heuristic below failed when it was evaluated."));
            out.push_str("Error:\n");
            out.push_str(ctx.error_message.as_deref().unwrap_or_default());
            out.push_str(
                "\n\nFix the program so that it runs correctly, keeping its idea where \
                 possible.\n\n",
            );
            out.push_str(OUTPUT_FORMAT);
        }
        PromptKind::CategoryInduction => {
            out.push_str(&parent(
                "Classify the algorithmic paradigm of this heuristic.",
            ));
            out.push_str("Known categories:\n");
            if ctx.known_categories.is_empty() {
                out.push_str("(none yet)\n");
            }
            for label in &ctx.known_categories {
                out.push_str("- ");
                out.push_str(label);
                out.push('\n');
            }
            out.push_str(
                "\nReuse an existing label when applicable, else coin a new 1–4 word label. \
                 Reply with the label alone on the first line.",
            );
        }
    }
    out.push('\n');
    out
}

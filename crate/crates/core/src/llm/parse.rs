use thiserror::Error;

pub const UNCATEGORIZED: &str = "uncategorized";
const MAX_LABEL_CHARS: usize = 48;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseFailure {
    #[error("response has no idea description in braces {{...}}")]
    MissingThought,
    #[error("response has no fenced code block (```...```)")]
    MissingCode,
}

/// Splits a generation response into `(thought, code)`.
///
/// The thought is the first balanced `{...}` span and the code is the body of
/// the first ``` fence (its language tag is ignored). Both are trimmed.
pub fn parse_generation(raw: &str) -> Result<(String, String), ParseFailure> {
    let thought = first_brace_span(raw).ok_or(ParseFailure::MissingThought)?;
    let code = first_fence(raw).ok_or(ParseFailure::MissingCode)?;
    Ok((thought.trim().to_string(), code.trim().to_string()))
}

/// Best-effort pieces of a response that failed [`parse_generation`], for
/// building a repair prompt.
pub fn salvage_generation(raw: &str) -> (String, String) {
    let thought = first_brace_span(raw).map(str::trim).unwrap_or("");
    let code = first_fence(raw).map(str::trim).unwrap_or(raw.trim());
    (thought.to_string(), code.to_string())
}

fn first_brace_span(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let mut depth = 0usize;
    for (i, c) in raw[start..].char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&raw[start + 1..start + i]);
                }
            }
            _ => {}
        }
    }
    None
}

fn first_fence(raw: &str) -> Option<&str> {
    let open = raw.find("```")?;
    let after_ticks = &raw[open + 3..];
    // The rest of the opening line is an optional language tag.
    let body_start = after_ticks.find('\n').map_or(after_ticks.len(), |i| i + 1);
    let body = &after_ticks[body_start..];
    let close = body.find("```")?;
    let code = &body[..close];
    (!code.trim().is_empty()).then_some(code)
}

/// Normalizes a category response into a pool label: first nonempty line,
/// lowercased, whitespace collapsed, punctuation trimmed from both ends and
/// at most 48 characters. An empty result becomes `uncategorized`.
pub fn canonical_label(response: &str) -> String {
    let line = response
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    let collapsed = line
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    let trimmed = trim_label(&collapsed);
    let truncated: String = trimmed.chars().take(MAX_LABEL_CHARS).collect();
    let label = trim_label(&truncated);
    if label.is_empty() {
        UNCATEGORIZED.to_string()
    } else {
        label.to_string()
    }
}

fn trim_label(s: &str) -> &str {
    s.trim_matches(|c: char| c.is_whitespace() || is_punctuation(c))
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c, '…' | '“' | '”' | '‘' | '’' | '«' | '»' | '–' | '—' | '·')
}

//! Numbered plan text: `1. step` items, one per line or run together on a line.

use crate::fast::step::{parse_step, resolve_step};
use crate::model::{Plan, PlanSource, Predicate, Scene};
use crate::sim::apply_all;

use super::PlanError;

/// Length of a `<n>.` or `<n>)` marker at the start of `s`, if one is followed by space or the end.
fn marker(s: &str, n: usize) -> Option<usize> {
    let digits = n.to_string();
    let rest = s.strip_prefix(digits.as_str())?;
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    (rest.is_empty() || rest.starts_with(char::is_whitespace)).then_some(s.len() - rest.len())
}

/// Byte offset of the next whitespace-preceded marker for step `n` in `s`.
fn find_marker(s: &str, n: usize) -> Option<usize> {
    s.char_indices()
        .filter(|(i, c)| c.is_ascii_digit() && s[..*i].ends_with(char::is_whitespace))
        .map(|(i, _)| i)
        .find(|&i| marker(&s[i..], n).is_some())
}

/// Splits numbered plan text into step texts with the 1-based line each starts on.
///
/// Numbering must start at 1 and increase by one. Text that does not begin a new step continues the
/// current one. Blank input is an empty plan.
pub fn parse_plan(text: &str) -> Result<Vec<(usize, String)>, PlanError> {
    let mut steps: Vec<(usize, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let mut rest = line.trim();
        while !rest.is_empty() {
            let next = steps.len() + 1;
            if let Some(len) = marker(rest, next) {
                steps.push((ln, String::new()));
                rest = rest[len..].trim_start();
                continue;
            }
            let Some((_, current)) = steps.last_mut() else {
                return Err(PlanError::PlanParse { line: ln, reason: "expected a step numbered 1".into() });
            };
            let end = find_marker(rest, next).unwrap_or(rest.len());
            if !current.is_empty() {
                current.push(' ');
            }
            current.push_str(rest[..end].trim());
            rest = &rest[end..];
        }
    }
    for (ln, s) in &mut steps {
        *s = s.trim().to_string();
        if s.is_empty() {
            return Err(PlanError::PlanParse { line: *ln, reason: "empty step".into() });
        }
    }
    Ok(steps)
}

pub fn render_plan(plan: &Plan) -> String {
    plan.steps.iter().map(|s| format!("{}. {}\n", s.index + 1, s.text)).collect()
}

/// Parses plan text and derives each step's predicate by grounding it on a simulated copy of the scene.
pub fn plan_from_text(text: &str, scene: &Scene, source: PlanSource) -> Result<Plan, PlanError> {
    let mut sim = scene.clone();
    let mut steps: Vec<(String, Predicate)> = Vec::new();
    for (line, step) in parse_plan(text)? {
        let fail = |reason: String| PlanError::PlanParse { line, reason };
        let cmd = parse_step(&step).map_err(|e| fail(format!("`{step}`: {e}")))?;
        let r = resolve_step(&cmd, &sim).map_err(|e| fail(format!("`{step}`: {e}")))?;
        sim = apply_all(&sim, &r.actions).map_err(|e| fail(format!("`{step}`: {e}")))?;
        steps.push((step, r.predicate));
    }
    Ok(Plan::from_steps(source, steps))
}

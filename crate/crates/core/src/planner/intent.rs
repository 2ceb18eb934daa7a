use serde::{Deserialize, Serialize};

/// The lexicon shipped with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("../../data/intent_lexicon.jsonl");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directive {
    MoveToFarZone,
    MoveToNearZone,
    RemoveFromTable,
}

impl Directive {
    pub fn zone(self) -> &'static str {
        match self {
            Directive::MoveToFarZone => "far_zone",
            Directive::MoveToNearZone => "near_zone",
            Directive::RemoveFromTable => "bin",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentRule {
    pub trigger: String,
    pub attribute: String,
    pub directive: Directive,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {source}")]
    Schema { line: usize, source: serde_json::Error },
    #[error("lexicon line {line}: empty trigger")]
    EmptyTrigger { line: usize },
}

/// Ordered intent rules; the first whose trigger occurs in the instruction wins.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IntentLexicon {
    pub rules: Vec<IntentRule>,
}

impl IntentLexicon {
    pub fn bundled() -> Self {
        IntentLexicon::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }

    /// One JSON object per line; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rule: IntentRule = serde_json::from_str(line).map_err(|source| LexiconError::Schema { line: i + 1, source })?;
            if rule.trigger.trim().is_empty() {
                return Err(LexiconError::EmptyTrigger { line: i + 1 });
            }
            rules.push(rule);
        }
        Ok(IntentLexicon { rules })
    }

    pub fn find(&self, instruction: &str) -> Option<&IntentRule> {
        let text = instruction.to_lowercase();
        self.rules.iter().find(|r| text.contains(&r.trigger.to_lowercase()))
    }
}

//! Growing a bank from seeds by repeated paraphrasing.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use crate::embedding::fnv1a64;
use crate::planner::{chat_request, decode_chat_reply};
use crate::provider::{HttpClient, ProviderError};

use super::{BankEntry, EntrySource};

pub trait Paraphraser: Send + Sync {
    fn paraphrase(&self, text: &str) -> Result<Vec<String>, ProviderError>;
}

const PREFIXES: &[&str] = &["please ", "could you ", "can you ", "I need you to "];
const SUFFIXES: &[&str] = &[" for me", " now", " please"];
const SYNONYMS: &[(&str, &str)] = &[
    ("pick up", "grab"),
    ("put", "place"),
    ("place", "set"),
    ("cube", "block"),
    ("rotate", "turn"),
    ("stack", "pile"),
    ("sort", "organise"),
    ("solve", "work out"),
    ("spell", "form"),
    ("fix", "correct"),
    ("objects", "items"),
    ("food", "stuff"),
];

/// Rule-based rewrites: a politeness prefix, one synonym swap, a clause swap at a comma, or a suffix.
#[derive(Clone, Debug)]
pub struct TemplateParaphraser {
    branching: usize,
}

impl TemplateParaphraser {
    pub fn new(branching: usize) -> Self {
        TemplateParaphraser { branching }
    }

    /// Every rewrite of `text`, in rule order.
    pub fn candidates(text: &str) -> Vec<String> {
        let t = text.trim();
        let lower = t.to_lowercase();
        let mut out = Vec::new();
        let statement = lower.starts_with("i ") || lower.starts_with("i'm ");
        if !statement && !PREFIXES.iter().any(|p| lower.starts_with(&p.to_lowercase())) {
            out.extend(PREFIXES.iter().map(|p| format!("{p}{t}")));
        }
        for (from, to) in SYNONYMS {
            if let Some(s) = replace_word(t, from, to) {
                out.push(s);
            }
        }
        if let Some((a, b)) = t.split_once(", ") {
            if !a.is_empty() && !b.is_empty() && !b.contains(", ") {
                out.push(format!("{b}, {a}"));
            }
        }
        if !SUFFIXES.iter().any(|s| lower.ends_with(s)) {
            out.extend(SUFFIXES.iter().map(|s| format!("{t}{s}")));
        }
        out.retain(|s| s != t);
        out
    }
}

impl Default for TemplateParaphraser {
    fn default() -> Self {
        TemplateParaphraser::new(4)
    }
}

impl Paraphraser for TemplateParaphraser {
    fn paraphrase(&self, text: &str) -> Result<Vec<String>, ProviderError> {
        let all = TemplateParaphraser::candidates(text);
        if all.is_empty() {
            return Ok(Vec::new());
        }
        let start = (fnv1a64(text.as_bytes()) % all.len() as u64) as usize;
        Ok((0..all.len().min(self.branching)).map(|i| all[(start + i) % all.len()].clone()).collect())
    }
}

/// Replaces occurrences of `from` that begin a word. `None` if there are none.
fn replace_word(text: &str, from: &str, to: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut out = String::new();
    let mut last = 0;
    for (i, _) in text.match_indices(from) {
        if i < last || (i > 0 && bytes[i - 1].is_ascii_alphanumeric()) {
            continue;
        }
        out.push_str(&text[last..i]);
        out.push_str(to);
        last = i + from.len();
    }
    (last > 0).then(|| {
        out.push_str(&text[last..]);
        out
    })
}

/// Paraphrases through a chat model: one rewrite per reply line.
pub struct RemoteParaphraser {
    client: HttpClient,
    endpoint: String,
    model: String,
    branching: usize,
}

impl RemoteParaphraser {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, branching: usize, timeout: Duration) -> Self {
        RemoteParaphraser { client: HttpClient::new(timeout), endpoint: endpoint.into(), model: model.into(), branching }
    }
}

impl Paraphraser for RemoteParaphraser {
    fn paraphrase(&self, text: &str) -> Result<Vec<String>, ProviderError> {
        let prompt = format!(
            "Rewrite this robot instruction {} different ways, one per line, keeping its meaning:\n{text}",
            self.branching
        );
        let reply = self.client.post_json(&self.endpoint, &chat_request(&self.model, &prompt))?;
        let content = decode_chat_reply(&reply)?;
        Ok(content
            .lines()
            .map(|l| l.trim().trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c == ')' || c == '-').trim())
            .filter(|l| !l.is_empty())
            .take(self.branching)
            .map(str::to_string)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentFailure {
    pub id: u64,
    pub text: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Augmentation {
    /// Seeds first, then new entries in creation order.
    pub entries: Vec<BankEntry>,
    /// Child id to parent id.
    pub parents: BTreeMap<u64, u64>,
    pub failures: Vec<AugmentFailure>,
}

impl Augmentation {
    pub fn added(&self) -> usize {
        self.parents.len()
    }

    /// The seed an entry descends from.
    pub fn root(&self, mut id: u64) -> u64 {
        while let Some(p) = self.parents.get(&id) {
            id = *p;
        }
        id
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AugmentError {
    #[error("iterations must be at least 1")]
    ZeroIterations,
}

/// Each iteration paraphrases every entry present at its start. Children inherit the parent label,
/// exact duplicates are dropped, and no entries are added once `cap` is reached.
pub fn augment(seeds: &[BankEntry], iterations: usize, provider: &dyn Paraphraser, cap: Option<usize>) -> Result<Augmentation, AugmentError> {
    if iterations == 0 {
        return Err(AugmentError::ZeroIterations);
    }
    let mut out = Augmentation { entries: seeds.to_vec(), ..Default::default() };
    let mut texts: BTreeSet<String> = seeds.iter().map(|e| e.text.clone()).collect();
    let mut next_id = seeds.iter().map(|e| e.id + 1).max().unwrap_or(0);
    let full = |n: usize| cap.is_some_and(|c| n >= c);
    'outer: for _ in 0..iterations {
        let current = out.entries.clone();
        for parent in &current {
            if full(out.entries.len()) {
                break 'outer;
            }
            let children = match provider.paraphrase(&parent.text) {
                Ok(c) => c,
                Err(e) => {
                    out.failures.push(AugmentFailure { id: parent.id, text: parent.text.clone(), error: e.to_string() });
                    continue;
                }
            };
            for child in children {
                let child = child.trim().to_string();
                if full(out.entries.len()) {
                    break 'outer;
                }
                if child.is_empty() || !texts.insert(child.clone()) {
                    continue;
                }
                out.entries.push(BankEntry::new(next_id, child, parent.label, EntrySource::Augmented));
                out.parents.insert(next_id, parent.id);
                next_id += 1;
            }
        }
    }
    Ok(out)
}

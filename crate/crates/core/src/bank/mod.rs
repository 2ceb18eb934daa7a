//! The think bank: labelled exemplar instructions and nearest-neighbour FAST/SLOW routing.

mod augment;
mod starter;

pub use augment::{augment, AugmentError, AugmentFailure, Augmentation, Paraphraser, RemoteParaphraser, TemplateParaphraser};
pub use starter::{heldout_set, seed_entries, starter_bank_text, STARTER_BANK, STARTER_BRANCHING, STARTER_ITERATIONS};

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbedError, Embedder, EmbedderSpec, EmbeddingVector};
use crate::model::codec::{self, SchemaViolation};
use crate::model::SystemLabel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntrySource {
    Seed,
    Augmented,
    Manual,
}

impl fmt::Display for EntrySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntrySource::Seed => "seed",
            EntrySource::Augmented => "augmented",
            EntrySource::Manual => "manual",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankEntry {
    pub id: u64,
    pub text: String,
    pub label: SystemLabel,
    pub source: EntrySource,
}

impl BankEntry {
    pub fn new(id: u64, text: impl Into<String>, label: SystemLabel, source: EntrySource) -> Self {
        BankEntry { id, text: text.into(), label, source }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BankError {
    #[error("the bank is empty")]
    EmptyBank,
    #[error("k must be between 1 and the bank size {size}, got {k}")]
    InvalidK { k: usize, size: usize },
    #[error("duplicate entry id {0}")]
    DuplicateId(u64),
    #[error("bank was built with embedder {file:?} but {configured:?} is configured")]
    EmbedderMismatch { file: EmbedderSpec, configured: EmbedderSpec },
    #[error("best neighbour score {score:.3} is below the floor {floor}")]
    LowConfidence { label: SystemLabel, score: f64, floor: f64 },
    #[error("line {line}: {source}")]
    Schema { line: usize, source: SchemaViolation },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// What to do when a bank file names a different embedder than the configured one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MismatchMode {
    #[default]
    Strict,
    /// Log a warning and embed with the configured embedder.
    Recompute,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub id: u64,
    pub score: f64,
    pub label: SystemLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: SystemLabel,
    pub neighbors: Vec<Neighbor>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub k: usize,
    pub floor: Option<f64>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { k: 1, floor: None }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    embedder: EmbedderSpec,
}

/// Immutable after construction; `classify` may be called from many threads.
#[derive(Clone)]
pub struct ThinkBank {
    entries: Vec<BankEntry>,
    vectors: Vec<EmbeddingVector>,
    embedder: Arc<dyn Embedder>,
}

impl fmt::Debug for ThinkBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThinkBank").field("entries", &self.entries.len()).field("embedder", self.embedder.spec()).finish()
    }
}

impl PartialEq for ThinkBank {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.embedder.spec() == other.embedder.spec()
    }
}

impl ThinkBank {
    pub fn new(entries: Vec<BankEntry>, embedder: Arc<dyn Embedder>) -> Result<Self, BankError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id) {
                return Err(BankError::DuplicateId(e.id));
            }
        }
        let texts: Vec<String> = entries.iter().map(|e| e.text.clone()).collect();
        let vectors = if texts.is_empty() { Vec::new() } else { embedder.embed_batch(&texts)? };
        Ok(ThinkBank { entries, vectors, embedder })
    }

    /// The shipped starter bank under `embedder`.
    pub fn starter(embedder: Arc<dyn Embedder>) -> Result<Self, BankError> {
        let (_, entries) = parse_bank(STARTER_BANK.as_bytes())?;
        ThinkBank::new(entries, embedder)
    }

    pub fn entries(&self) -> &[BankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    pub fn spec(&self) -> &EmbedderSpec {
        self.embedder.spec()
    }

    pub fn embedding(&self, index: usize) -> Option<&EmbeddingVector> {
        self.vectors.get(index)
    }

    pub fn classify(&self, text: &str, opts: ClassifyOptions) -> Result<Classification, BankError> {
        if self.entries.is_empty() {
            return Err(BankError::EmptyBank);
        }
        if opts.k == 0 || opts.k > self.entries.len() {
            return Err(BankError::InvalidK { k: opts.k, size: self.entries.len() });
        }
        let q = self.embedder.embed_one(text)?;
        let mut scored: Vec<Neighbor> = self
            .entries
            .iter()
            .zip(&self.vectors)
            .map(|(e, v)| Ok(Neighbor { id: e.id, score: cosine(&q, v)?, label: e.label }))
            .collect::<Result<_, EmbedError>>()?;
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
        scored.truncate(opts.k);
        let fast = scored.iter().filter(|n| n.label == SystemLabel::Fast).count();
        let slow = scored.len() - fast;
        let label = match fast.cmp(&slow) {
            std::cmp::Ordering::Greater => SystemLabel::Fast,
            std::cmp::Ordering::Less => SystemLabel::Slow,
            std::cmp::Ordering::Equal => scored[0].label,
        };
        if let Some(floor) = opts.floor {
            if scored[0].score < floor {
                return Err(BankError::LowConfidence { label, score: scored[0].score, floor });
            }
        }
        Ok(Classification { label, neighbors: scored })
    }

    pub fn write<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_bank(out, self.embedder.spec(), &self.entries)
    }

    pub fn save(&self, path: &Path) -> Result<(), BankError> {
        let io = |source| BankError::Io { path: path.display().to_string(), source };
        let mut buf = Vec::new();
        self.write(&mut buf).map_err(io)?;
        std::fs::write(path, buf).map_err(io)
    }

    pub fn read<R: BufRead>(input: R, embedder: Arc<dyn Embedder>, mode: MismatchMode) -> Result<Self, BankError> {
        let (file, entries) = parse_bank(input)?;
        if let Some(file) = file {
            if &file != embedder.spec() {
                match mode {
                    MismatchMode::Strict => {
                        return Err(BankError::EmbedderMismatch { file, configured: embedder.spec().clone() })
                    }
                    MismatchMode::Recompute => {
                        log::warn!("bank embedder {file:?} differs from configured {:?}; recomputing", embedder.spec())
                    }
                }
            }
        }
        ThinkBank::new(entries, embedder)
    }

    pub fn load(path: &Path, embedder: Arc<dyn Embedder>, mode: MismatchMode) -> Result<Self, BankError> {
        let f = std::fs::File::open(path).map_err(|source| BankError::Io { path: path.display().to_string(), source })?;
        ThinkBank::read(std::io::BufReader::new(f), embedder, mode)
    }
}

pub fn write_bank<W: Write>(mut out: W, spec: &EmbedderSpec, entries: &[BankEntry]) -> std::io::Result<()> {
    writeln!(out, "{}", codec::encode_tagged("bank", &Header { embedder: spec.clone() }))?;
    for e in entries {
        writeln!(out, "{}", serde_json::to_string(e).expect("entries serialise"))?;
    }
    Ok(())
}

/// Decodes one bank entry line.
pub fn decode_entry(line: &str) -> Result<BankEntry, SchemaViolation> {
    let v: serde_json::Value = serde_json::from_str(line).map_err(|e| SchemaViolation::new("", format!("not JSON: {e}")))?;
    codec::decode_body(v)
}

/// Reads an optional header line and then one entry per line.
pub fn parse_bank<R: BufRead>(input: R) -> Result<(Option<EmbedderSpec>, Vec<BankEntry>), BankError> {
    let mut spec = None;
    let mut entries = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|source| BankError::Io { path: "<input>".into(), source })?;
        let schema = |source| BankError::Schema { line: i + 1, source };
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 && line.contains("\"record\"") {
            let h: Header = codec::decode_tagged(&line, "bank").map_err(schema)?;
            spec = Some(h.embedder);
            continue;
        }
        entries.push(decode_entry(&line).map_err(schema)?);
    }
    Ok((spec, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::BuiltinEmbedder;

    fn emb() -> Arc<dyn Embedder> {
        Arc::new(BuiltinEmbedder::default())
    }

    fn small() -> ThinkBank {
        let entries = vec![
            BankEntry::new(1, "pick up the red cube", SystemLabel::Fast, EntrySource::Seed),
            BankEntry::new(2, "I'm allergic to spicy food", SystemLabel::Slow, EntrySource::Seed),
            BankEntry::new(3, "fix the word to spell ICRA", SystemLabel::Slow, EntrySource::Seed),
        ];
        ThinkBank::new(entries, emb()).unwrap()
    }

    #[test]
    fn exact_match_scores_one() {
        let c = small().classify("pick up the red cube", ClassifyOptions::default()).unwrap();
        assert_eq!(c.label, SystemLabel::Fast);
        assert_eq!(c.neighbors[0].id, 1);
        assert!((c.neighbors[0].score - 1.0).abs() < 1e-9);
        let c = small().classify("I'm allergic to spicy food", ClassifyOptions::default()).unwrap();
        assert_eq!(c.label, SystemLabel::Slow);
    }

    #[test]
    fn empty_bank_and_bad_k() {
        let b = ThinkBank::new(Vec::new(), emb()).unwrap();
        assert!(matches!(b.classify("x", ClassifyOptions::default()), Err(BankError::EmptyBank)));
        assert!(matches!(small().classify("x", ClassifyOptions { k: 4, floor: None }), Err(BankError::InvalidK { .. })));
        assert!(matches!(small().classify("x", ClassifyOptions { k: 0, floor: None }), Err(BankError::InvalidK { .. })));
    }

    #[test]
    fn majority_and_tie_break() {
        let entries = vec![
            BankEntry::new(5, "pick up the red cube", SystemLabel::Fast, EntrySource::Manual),
            BankEntry::new(2, "pick up the red cube", SystemLabel::Slow, EntrySource::Manual),
            BankEntry::new(9, "pick up the blue cube", SystemLabel::Slow, EntrySource::Manual),
        ];
        let b = ThinkBank::new(entries, emb()).unwrap();
        let c = b.classify("pick up the red cube", ClassifyOptions::default()).unwrap();
        assert_eq!(c.neighbors[0].id, 2, "equal scores break by ascending id");
        assert_eq!(c.label, SystemLabel::Slow);
        let c = b.classify("pick up the red cube", ClassifyOptions { k: 2, floor: None }).unwrap();
        assert_eq!(c.label, SystemLabel::Slow, "a 1-1 vote falls back to the nearest");
        let c = b.classify("pick up the red cube", ClassifyOptions { k: 3, floor: None }).unwrap();
        assert_eq!(c.label, SystemLabel::Slow);
        assert_eq!(c.neighbors.iter().map(|n| n.id).collect::<Vec<_>>(), [2, 5, 9]);
    }

    #[test]
    fn floor_reports_low_confidence() {
        let r = small().classify("zzzz qqqq", ClassifyOptions { k: 1, floor: Some(0.9) });
        assert!(matches!(r, Err(BankError::LowConfidence { .. })));
        assert!(small().classify("pick up the red cube", ClassifyOptions { k: 1, floor: Some(0.9) }).is_ok());
    }

    #[test]
    fn save_load_round_trip() {
        let entries: Vec<BankEntry> = (0..10)
            .map(|i| BankEntry::new(i, format!("pick up cube number {i}"), SystemLabel::Fast, EntrySource::Manual))
            .collect();
        let b = ThinkBank::new(entries, emb()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.jsonl");
        b.save(&path).unwrap();
        let back = ThinkBank::load(&path, emb(), MismatchMode::Strict).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.embedding(3), b.embedding(3));
    }

    #[test]
    fn missing_label_is_located() {
        let text = "{\"id\":1,\"text\":\"a\",\"source\":\"seed\"}\n";
        match parse_bank(text.as_bytes()) {
            Err(BankError::Schema { line: 1, source }) => assert_eq!(source.path, "label"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_change_is_a_mismatch() {
        let mut buf = Vec::new();
        small().write(&mut buf).unwrap();
        let other: Arc<dyn Embedder> = Arc::new(BuiltinEmbedder::new(256));
        assert!(matches!(ThinkBank::read(&buf[..], other.clone(), MismatchMode::Strict), Err(BankError::EmbedderMismatch { .. })));
        let b = ThinkBank::read(&buf[..], other, MismatchMode::Recompute).unwrap();
        assert_eq!(b.embedding(0).unwrap().dim(), 256);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let e = BankEntry::new(1, "a", SystemLabel::Fast, EntrySource::Seed);
        assert!(matches!(ThinkBank::new(vec![e.clone(), e], emb()), Err(BankError::DuplicateId(1))));
    }
}

//! Text embeddings: a deterministic character-trigram embedder and a remote client.
//!
//! Builtin algorithm: lowercase, collapse whitespace runs to one space and trim, wrap in
//! `\u{2}` … `\u{3}`, take every window of three characters, hash its UTF-8 bytes with
//! FNV-1a 64 and add 1 to bucket `hash % D`, then L2-normalise.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::provider::{HttpClient, ProviderError};

pub const DEFAULT_DIM: usize = 512;
pub const MIN_DIM: usize = 16;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("text is empty after normalisation")]
    EmptyText,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero vector cannot be normalised")]
    ZeroVector,
    #[error("invalid embedder spec: {0}")]
    InvalidSpec(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Provider(ProviderError),
}

impl From<ProviderError> for EmbedError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::Shape(s) => EmbedError::ShapeMismatch(s),
            other => EmbedError::Provider(other),
        }
    }
}

/// Unit-norm vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn normalized(mut values: Vec<f64>) -> Result<Self, EmbedError> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbedError::ZeroVector);
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(EmbeddingVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn negated(&self) -> Self {
        EmbeddingVector(self.0.iter().map(|v| -v).collect())
    }
}

pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Text after the fold rules, before padding.
pub fn normalize_text(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn embed(text: &str) -> Result<EmbeddingVector, EmbedError> {
    embed_dim(text, DEFAULT_DIM)
}

pub fn embed_dim(text: &str, dim: usize) -> Result<EmbeddingVector, EmbedError> {
    if dim < MIN_DIM {
        return Err(EmbedError::InvalidSpec(format!("dimension {dim} is below {MIN_DIM}")));
    }
    let norm = normalize_text(text);
    if norm.is_empty() {
        return Err(EmbedError::EmptyText);
    }
    let chars: Vec<char> = std::iter::once('\u{2}').chain(norm.chars()).chain(std::iter::once('\u{3}')).collect();
    let mut v = vec![0.0; dim];
    let mut buf = [0u8; 12];
    for w in chars.windows(3) {
        let mut n = 0;
        for c in w {
            n += c.encode_utf8(&mut buf[n..]).len();
        }
        v[(fnv1a64(&buf[..n]) % dim as u64) as usize] += 1.0;
    }
    EmbeddingVector::normalized(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    Builtin,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedderSpec {
    pub kind: EmbedderKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
}

impl EmbedderSpec {
    pub fn builtin(dimension: usize) -> Self {
        EmbedderSpec { kind: EmbedderKind::Builtin, dimension, endpoint: None, model_name: None }
    }

    pub fn remote(dimension: usize, endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        EmbedderSpec {
            kind: EmbedderKind::Remote,
            dimension,
            endpoint: Some(endpoint.into()),
            model_name: Some(model.into()),
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dimension < MIN_DIM {
            return Err(EmbedError::InvalidSpec(format!("dimension {} is below {MIN_DIM}", self.dimension)));
        }
        let remote = self.kind == EmbedderKind::Remote;
        if remote != (self.endpoint.is_some() && self.model_name.is_some()) {
            return Err(EmbedError::InvalidSpec("endpoint and model_name are required exactly for remote".into()));
        }
        Ok(())
    }
}

impl Default for EmbedderSpec {
    fn default() -> Self {
        EmbedderSpec::builtin(DEFAULT_DIM)
    }
}

pub trait Embedder: Send + Sync {
    fn spec(&self) -> &EmbedderSpec;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed_batch(&[text.to_string()])?;
        out.pop().ok_or_else(|| EmbedError::ShapeMismatch("empty response".into()))
    }
}

#[derive(Clone, Debug)]
pub struct BuiltinEmbedder {
    spec: EmbedderSpec,
}

impl BuiltinEmbedder {
    pub fn new(dimension: usize) -> Self {
        BuiltinEmbedder { spec: EmbedderSpec::builtin(dimension) }
    }
}

impl Default for BuiltinEmbedder {
    fn default() -> Self {
        BuiltinEmbedder::new(DEFAULT_DIM)
    }
}

impl Embedder for BuiltinEmbedder {
    fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| embed_dim(t, self.spec.dimension)).collect()
    }

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        embed_dim(text, self.spec.dimension)
    }
}

/// Client for `POST {model, input: [text]}` → `{data: [{index, embedding}]}` services.
#[derive(Clone, Debug)]
pub struct RemoteEmbedder {
    spec: EmbedderSpec,
    client: HttpClient,
}

impl RemoteEmbedder {
    pub fn new(spec: EmbedderSpec, timeout: Duration) -> Result<Self, EmbedError> {
        spec.validate()?;
        if spec.kind != EmbedderKind::Remote {
            return Err(EmbedError::InvalidSpec("remote embedder needs a remote spec".into()));
        }
        Ok(RemoteEmbedder { spec, client: HttpClient::new(timeout) })
    }
}

impl Embedder for RemoteEmbedder {
    fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::ShapeMismatch("empty batch".into()));
        }
        let endpoint = self.spec.endpoint.as_deref().expect("validated");
        let body = json!({ "model": self.spec.model_name, "input": texts });
        let reply = self.client.post_json(endpoint, &body)?;
        decode_embeddings(&reply, texts.len(), self.spec.dimension)
    }
}

/// Parses an embeddings response, ordering by `index` when present.
pub fn decode_embeddings(reply: &Value, count: usize, dim: usize) -> Result<Vec<EmbeddingVector>, EmbedError> {
    let shape = |m: &str| EmbedError::ShapeMismatch(m.to_string());
    let data = reply.get("data").and_then(Value::as_array).ok_or_else(|| shape("missing `data` array"))?;
    if data.len() != count {
        return Err(EmbedError::ShapeMismatch(format!("expected {count} vectors, got {}", data.len())));
    }
    let mut slots: Vec<Option<EmbeddingVector>> = vec![None; count];
    for (pos, item) in data.iter().enumerate() {
        let index = match item.get("index") {
            Some(i) => i.as_u64().map(|i| i as usize).ok_or_else(|| shape("`index` must be an integer"))?,
            None => pos,
        };
        let values: Vec<f64> = item
            .get("embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| shape("missing `embedding` array"))?
            .iter()
            .map(|v| v.as_f64().ok_or_else(|| shape("embedding values must be numbers")))
            .collect::<Result<_, _>>()?;
        if values.len() != dim {
            return Err(EmbedError::ShapeMismatch(format!("expected dimension {dim}, got {}", values.len())));
        }
        let slot = slots.get_mut(index).ok_or_else(|| shape("`index` out of range"))?;
        if slot.is_some() {
            return Err(shape("duplicate `index`"));
        }
        *slot = Some(EmbeddingVector::normalized(values)?);
    }
    Ok(slots.into_iter().map(|s| s.expect("every index filled")).collect())
}

pub fn embedder_from_spec(spec: &EmbedderSpec, timeout: Duration) -> Result<Box<dyn Embedder>, EmbedError> {
    spec.validate()?;
    Ok(match spec.kind {
        EmbedderKind::Builtin => Box::new(BuiltinEmbedder::new(spec.dimension)),
        EmbedderKind::Remote => Box::new(RemoteEmbedder::new(spec.clone(), timeout)?),
    })
}

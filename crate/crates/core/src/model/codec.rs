//! Line-delimited JSON records.
//!
//! Every record is one JSON object on one line carrying `"record"` (its type tag) and
//! `"version"` ahead of the body fields. See `docs/formats.md`.

use std::io::BufRead;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::{parse_caption, Plan, Scene, Trajectory};

pub const FORMAT_VERSION: u64 = 1;

/// Malformed input, located by a dotted field path (`objects[2].kind`).
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("schema violation at `{path}`: {reason}")]
pub struct SchemaViolation {
    pub path: String,
    pub reason: String,
}

impl SchemaViolation {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        SchemaViolation { path: path.into(), reason: reason.into() }
    }
}

/// A violation on a specific line of a record file (1-based).
#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("line {line}: {source}")]
    Schema { line: usize, source: SchemaViolation },
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Serialises `body` as a tagged record line (no trailing newline).
pub fn encode_tagged<T: Serialize>(record: &str, body: &T) -> String {
    let inner = serde_json::to_string(body).expect("record bodies serialise to JSON");
    let head = format!("{{\"record\":{},\"version\":{FORMAT_VERSION}", Value::from(record));
    match inner.strip_prefix('{') {
        Some("}") => format!("{head}}}"),
        Some(rest) => format!("{head},{rest}"),
        None => panic!("record bodies must serialise to JSON objects"),
    }
}

/// Checks the tag and version of a record line and deserialises its body.
pub fn decode_tagged<T: DeserializeOwned>(line: &str, record: &str) -> Result<T, SchemaViolation> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| SchemaViolation::new("", format!("not JSON: {e}")))?;
    let body = strip_header(value, Some(record))?.1;
    decode_body(body)
}

/// Returns the record tag and the remaining body fields.
pub fn strip_header(value: Value, expect: Option<&str>) -> Result<(String, Value), SchemaViolation> {
    let Value::Object(mut map) = value else {
        return Err(SchemaViolation::new("", "record must be a JSON object"));
    };
    let tag = match map.remove("record") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(SchemaViolation::new("record", "must be a string")),
        None => return Err(SchemaViolation::new("record", "missing field")),
    };
    if let Some(expect) = expect {
        if tag != expect {
            return Err(SchemaViolation::new("record", format!("expected `{expect}`, found `{tag}`")));
        }
    }
    match map.remove("version") {
        Some(Value::Number(n)) if n.as_u64() == Some(FORMAT_VERSION) => {}
        Some(v) => return Err(SchemaViolation::new("version", format!("unsupported version {v}"))),
        None => return Err(SchemaViolation::new("version", "missing field")),
    }
    Ok((tag, Value::Object(map)))
}

/// Deserialises a record body, mapping serde errors to field paths.
pub fn decode_body<T: DeserializeOwned>(body: Value) -> Result<T, SchemaViolation> {
    serde_path_to_error::deserialize(body).map_err(|e| {
        let parent = e.path().to_string();
        let parent = if parent == "." { String::new() } else { parent };
        let message = e.inner().to_string();
        let path = match missing_field(&message) {
            Some(field) if parent.is_empty() => field.to_string(),
            Some(field) => format!("{parent}.{field}"),
            None => parent,
        };
        SchemaViolation::new(path, message)
    })
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Record {
    Scene(Scene),
    Trajectory(Trajectory),
    Plan(Plan),
}

pub fn encode_scene(scene: &Scene) -> String {
    encode_tagged("scene", scene)
}

pub fn decode_scene(line: &str) -> Result<Scene, SchemaViolation> {
    let scene: Scene = decode_tagged(line, "scene")?;
    validate_scene(&scene, "")?;
    Ok(scene)
}

pub fn encode_trajectory(t: &Trajectory) -> String {
    encode_tagged("trajectory", t)
}

pub fn decode_trajectory(line: &str) -> Result<Trajectory, SchemaViolation> {
    let t: Trajectory = decode_tagged(line, "trajectory")?;
    validate_trajectory(&t)?;
    Ok(t)
}

pub fn encode_plan(plan: &Plan) -> String {
    encode_tagged("plan", plan)
}

pub fn decode_plan(line: &str) -> Result<Plan, SchemaViolation> {
    let plan: Plan = decode_tagged(line, "plan")?;
    validate_plan(&plan, "")?;
    Ok(plan)
}

pub fn encode_record(r: &Record) -> String {
    match r {
        Record::Scene(s) => encode_scene(s),
        Record::Trajectory(t) => encode_trajectory(t),
        Record::Plan(p) => encode_plan(p),
    }
}

/// Decodes a record of any known type.
pub fn decode_record(line: &str) -> Result<Record, SchemaViolation> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| SchemaViolation::new("", format!("not JSON: {e}")))?;
    let (tag, body) = strip_header(value, None)?;
    match tag.as_str() {
        "scene" => {
            let s: Scene = decode_body(body)?;
            validate_scene(&s, "")?;
            Ok(Record::Scene(s))
        }
        "trajectory" => {
            let t: Trajectory = decode_body(body)?;
            validate_trajectory(&t)?;
            Ok(Record::Trajectory(t))
        }
        "plan" => {
            let p: Plan = decode_body(body)?;
            validate_plan(&p, "")?;
            Ok(Record::Plan(p))
        }
        other => Err(SchemaViolation::new("record", format!("unknown record type `{other}`"))),
    }
}

/// Reads every non-blank line of a record stream.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<Record>, ReadError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(decode_record(&line).map_err(|source| ReadError::Schema { line: i + 1, source })?);
    }
    Ok(out)
}

fn validate_scene(s: &Scene, prefix: &str) -> Result<(), SchemaViolation> {
    s.validate().map_err(|e| SchemaViolation::new(join(prefix, &e.path), e.reason))
}

fn validate_plan(p: &Plan, prefix: &str) -> Result<(), SchemaViolation> {
    for (i, step) in p.steps.iter().enumerate() {
        if step.index != i {
            return Err(SchemaViolation::new(join(prefix, &format!("steps[{i}].index")), "step indices must be 0..n-1"));
        }
    }
    Ok(())
}

fn validate_trajectory(t: &Trajectory) -> Result<(), SchemaViolation> {
    if t.frames.is_empty() {
        return Err(SchemaViolation::new("frames", "a trajectory needs at least one frame"));
    }
    if t.width == 0 || t.height == 0 {
        return Err(SchemaViolation::new("width", "grid dimensions must be positive"));
    }
    for (i, f) in t.frames.iter().enumerate() {
        let ((w, h), _) = parse_caption(&f.caption)
            .map_err(|e| SchemaViolation::new(format!("frames[{i}].caption"), e.to_string()))?;
        if (w, h) != (t.width, t.height) {
            return Err(SchemaViolation::new(format!("frames[{i}].caption"), "table size disagrees with the record"));
        }
    }
    if let Some(plan) = &t.plan {
        validate_plan(plan, "plan")?;
    }
    Ok(())
}

fn join(prefix: &str, path: &str) -> String {
    match (prefix.is_empty(), path.is_empty()) {
        (true, _) => path.to_string(),
        (false, true) => prefix.to_string(),
        (false, false) => format!("{prefix}.{path}"),
    }
}

//! Pairs plan steps with trajectory frames by text similarity, and monitors steps online by predicate.
//!
//! A frame is scored against a step as the better of two cosines: one with the full caption and
//! one with the frame's change text, the clauses that differ from the previous caption.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbedError, Embedder, EmbedderSpec, EmbeddingVector};
use crate::model::codec::{self, ReadError, Record, SchemaViolation};
use crate::model::{Plan, Scene, Trajectory};

pub const DEFAULT_ALPHA: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentConfig {
    pub alpha: f64,
    #[serde(default)]
    pub embedder: EmbedderSpec,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig { alpha: DEFAULT_ALPHA, embedder: EmbedderSpec::default() }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AlignError {
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("{0}")]
    Schema(SchemaViolation),
}

impl AlignmentConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        AlignmentConfig { alpha, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), AlignError> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(AlignError::BadAlpha(self.alpha));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub step_index: usize,
    pub frame_index: usize,
    pub score: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub pairs: Vec<Pair>,
    pub gaps: Vec<usize>,
}

fn clauses(caption: &str) -> Vec<&str> {
    caption.split_once("; ").map_or(Vec::new(), |(_, rest)| rest.split("; ").filter(|c| !c.is_empty()).collect())
}

/// Clauses of `caption` absent from `previous`, joined by `; `. The first frame changes everything.
pub fn change_text(previous: Option<&str>, caption: &str) -> String {
    let Some(prev) = previous else { return caption.to_string() };
    let before: BTreeSet<&str> = clauses(prev).into_iter().collect();
    clauses(caption).into_iter().filter(|c| !before.contains(c)).collect::<Vec<_>>().join("; ")
}

/// Best score of each step against each frame, `scores[step][frame]`.
pub fn score_matrix(steps: &[String], captions: &[String], embedder: &dyn Embedder) -> Result<Vec<Vec<f64>>, AlignError> {
    if steps.is_empty() || captions.is_empty() {
        return Ok(vec![Vec::new(); steps.len()]);
    }
    let changes: Vec<String> =
        captions.iter().enumerate().map(|(i, c)| change_text(i.checked_sub(1).map(|p| captions[p].as_str()), c)).collect();
    let step_vecs = embedder.embed_batch(steps)?;
    let cap_vecs = embedder.embed_batch(captions)?;
    let non_empty: Vec<String> = changes.iter().filter(|c| !c.trim().is_empty()).cloned().collect();
    let mut change_vecs = if non_empty.is_empty() { Vec::new() } else { embedder.embed_batch(&non_empty)? }.into_iter();
    let change_vecs: Vec<Option<EmbeddingVector>> =
        changes.iter().map(|c| if c.trim().is_empty() { None } else { change_vecs.next() }).collect();
    step_vecs
        .iter()
        .map(|s| {
            cap_vecs
                .iter()
                .zip(&change_vecs)
                .map(|(c, d)| {
                    let whole = cosine(s, c)?;
                    Ok(match d {
                        Some(d) => whole.max(cosine(s, d)?),
                        None => whole,
                    })
                })
                .collect()
        })
        .collect()
}

/// Greedy first-qualifying pairing with strictly increasing frame indices.
pub fn pair_scores(scores: &[Vec<f64>], alpha: f64) -> AlignmentReport {
    let mut report = AlignmentReport::default();
    let mut next_frame = 0;
    for (step, row) in scores.iter().enumerate() {
        match (next_frame..row.len()).find(|&f| row[f] >= alpha) {
            Some(f) => {
                report.pairs.push(Pair { step_index: step, frame_index: f, score: row[f] });
                next_frame = f + 1;
            }
            None => report.gaps.push(step),
        }
    }
    report
}

pub fn pair_steps(plan: &Plan, trajectory: &Trajectory, cfg: &AlignmentConfig, embedder: &dyn Embedder) -> Result<AlignmentReport, AlignError> {
    cfg.validate()?;
    let steps: Vec<String> = plan.steps.iter().map(|s| s.text.clone()).collect();
    let captions: Vec<String> = trajectory.frames.iter().map(|f| f.caption.clone()).collect();
    Ok(pair_scores(&score_matrix(&steps, &captions, embedder)?, cfg.alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    StepDone,
    StepPending,
    PlanDone,
}

/// Evaluates the predicate of step `cursor`. A cursor past the end reports `PlanDone`.
pub fn monitor(plan: &Plan, scene: &Scene, cursor: usize) -> StepStatus {
    match plan.steps.get(cursor) {
        None => StepStatus::PlanDone,
        Some(s) if !s.predicate.holds(scene) => StepStatus::StepPending,
        Some(_) if cursor + 1 == plan.len() => StepStatus::PlanDone,
        Some(_) => StepStatus::StepDone,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedRecord {
    pub step_text: String,
    pub caption: String,
    pub score: f64,
    pub trajectory_id: String,
    pub step_index: usize,
    pub frame_index: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapStats {
    pub trajectories: usize,
    pub steps: usize,
    pub paired: usize,
    pub gaps: usize,
    pub trajectories_with_gaps: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub records: Vec<AnnotatedRecord>,
    pub stats: GapStats,
}

/// Pairs every trajectory with its own plan. Trajectories without a plan are schema violations.
pub fn annotate_dataset(batch: &[Trajectory], cfg: &AlignmentConfig, embedder: &dyn Embedder) -> Result<Annotation, AlignError> {
    cfg.validate()?;
    for (i, t) in batch.iter().enumerate() {
        if t.plan.is_none() {
            return Err(AlignError::Schema(SchemaViolation::new(format!("[{i}].plan"), format!("trajectory `{}` has no plan", t.id))));
        }
    }
    let reports: Vec<AlignmentReport> = batch
        .par_iter()
        .map(|t| pair_steps(t.plan.as_ref().expect("checked"), t, cfg, embedder))
        .collect::<Result<_, _>>()?;
    let mut out = Annotation::default();
    for (t, r) in batch.iter().zip(reports) {
        let plan = t.plan.as_ref().expect("checked");
        out.stats.trajectories += 1;
        out.stats.steps += plan.len();
        out.stats.paired += r.pairs.len();
        out.stats.gaps += r.gaps.len();
        out.stats.trajectories_with_gaps += usize::from(!r.gaps.is_empty());
        for p in r.pairs {
            out.records.push(AnnotatedRecord {
                step_text: plan.steps[p.step_index].text.clone(),
                caption: t.frames[p.frame_index].caption.clone(),
                score: p.score,
                trajectory_id: t.id.clone(),
                step_index: p.step_index,
                frame_index: p.frame_index,
            });
        }
    }
    Ok(out)
}

pub fn encode_annotated(r: &AnnotatedRecord) -> String {
    codec::encode_tagged("annotated", r)
}

pub fn decode_annotated(line: &str) -> Result<AnnotatedRecord, SchemaViolation> {
    codec::decode_tagged(line, "annotated")
}

#[derive(Debug, thiserror::Error)]
pub enum AnnotateFileError {
    #[error(transparent)]
    Read(#[from] ReadError),
    #[error("record {0} is not a trajectory")]
    NotATrajectory(usize),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Reads trajectory records, annotates them and writes one annotated record per line.
pub fn annotate_stream<R: BufRead, W: Write>(input: R, mut out: W, cfg: &AlignmentConfig, embedder: &dyn Embedder) -> Result<GapStats, AnnotateFileError> {
    let mut batch = Vec::new();
    for (i, r) in codec::read_records(input)?.into_iter().enumerate() {
        match r {
            Record::Trajectory(t) => batch.push(t),
            _ => return Err(AnnotateFileError::NotATrajectory(i + 1)),
        }
    }
    let a = annotate_dataset(&batch, cfg, embedder)?;
    for r in &a.records {
        writeln!(out, "{}", encode_annotated(r))?;
    }
    Ok(a.stats)
}

//! System-2 planning: oracle planners per slow family, a remote chat-model planner and the
//! numbered-step text format both share.

mod arrange;
mod intent;
mod math;
mod remote;
mod sort;
mod text;
mod word;

use std::num::NonZeroI32;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::fast::step::{parse_step, resolve_step};
use crate::fast::ObjectPhrase;
use crate::model::{Cell, Family, Instruction, ObjectId, Plan, PlanSource, Predicate, PrimitiveAction, Scene};
use crate::provider::ProviderError;
use crate::sim::apply_all;

pub use intent::{Directive, IntentLexicon, IntentRule, LexiconError, DEFAULT_LEXICON};
pub use math::plan_math;
pub use remote::{chat_request, decode_chat_reply, default_exemplars, PromptTemplate, RemotePlanner, DEFAULT_TEMPLATE};
pub use text::{parse_plan, plan_from_text, render_plan};
pub use word::{plan_word, word_moves, WordMove};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("no planner recognises the instruction `{0}`")]
    UnrecognizedTask(String),
    #[error("ungrammatical equation at {position}: {reason}")]
    UngrammaticalEquation { position: usize, reason: String },
    #[error("no integer solution for `{0}`")]
    NoIntegerSolution(String),
    #[error("no free tile labelled '{0}' on the table")]
    MissingDigitTile(String),
    #[error("the equation is not laid out on the table: {0}")]
    EquationNotOnTable(String),
    #[error("tiles spell a different letter multiset: have `{have}`, need `{need}`")]
    LetterMultisetMismatch { have: String, need: String },
    #[error("zone `{0}` is full")]
    ZoneFull(String),
    #[error("scene has no zone `{0}`")]
    MissingZone(String),
    #[error("no intent rule matches `{0}`")]
    UnrecognizedIntent(String),
    #[error("no free buffer cell")]
    NoBufferCell,
    #[error("goal cannot be reached: {0}")]
    GoalInfeasible(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("plan text line {line}: {reason}")]
    PlanParse { line: usize, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Oracle,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    pub kind: PlannerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    /// Path to a prompt template; the bundled template when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template: Option<PathBuf>,
    /// Path to an intent lexicon; the bundled lexicon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent_lexicon: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum PlannerSpecError {
    #[error("remote planner needs `{0}`")]
    MissingField(&'static str),
    #[error("oracle planner does not take `{0}`")]
    UnexpectedField(&'static str),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("prompt template: {0}")]
    Template(String),
}

impl PlannerSpec {
    pub fn oracle() -> Self {
        PlannerSpec { kind: PlannerKind::Oracle, endpoint: None, model_name: None, prompt_template: None, intent_lexicon: None }
    }

    pub fn remote(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        PlannerSpec { kind: PlannerKind::Remote, endpoint: Some(endpoint.into()), model_name: Some(model.into()), ..Self::oracle() }
    }

    pub fn validate(&self) -> Result<(), PlannerSpecError> {
        match self.kind {
            PlannerKind::Remote => {
                self.endpoint.as_ref().ok_or(PlannerSpecError::MissingField("endpoint"))?;
                self.model_name.as_ref().ok_or(PlannerSpecError::MissingField("model_name"))?;
            }
            PlannerKind::Oracle => {
                if self.endpoint.is_some() {
                    return Err(PlannerSpecError::UnexpectedField("endpoint"));
                }
                if self.model_name.is_some() {
                    return Err(PlannerSpecError::UnexpectedField("model_name"));
                }
                if self.prompt_template.is_some() {
                    return Err(PlannerSpecError::UnexpectedField("prompt_template"));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self, timeout: Duration) -> Result<Box<dyn Planner>, PlannerSpecError> {
        self.validate()?;
        let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|source| PlannerSpecError::Io { path: p.clone(), source });
        let lexicon = match &self.intent_lexicon {
            Some(p) => IntentLexicon::parse(&read(p)?)?,
            None => IntentLexicon::bundled(),
        };
        Ok(match self.kind {
            PlannerKind::Oracle => Box::new(OraclePlanner::new(lexicon)),
            PlannerKind::Remote => {
                let template = match &self.prompt_template {
                    Some(p) => PromptTemplate::new(read(p)?).map_err(PlannerSpecError::Template)?,
                    None => PromptTemplate::bundled(),
                };
                let endpoint = self.endpoint.clone().expect("validated");
                let model = self.model_name.clone().expect("validated");
                Box::new(RemotePlanner::new(endpoint, model, template, timeout))
            }
        })
    }
}

pub trait Planner: Send + Sync {
    fn plan(&self, instruction: &Instruction, scene: &Scene) -> Result<Plan, PlanError>;
}

/// Deterministic planner that recognises the slow families from instruction wording.
#[derive(Clone, Debug)]
pub struct OraclePlanner {
    lexicon: IntentLexicon,
}

impl Default for OraclePlanner {
    fn default() -> Self {
        OraclePlanner::new(IntentLexicon::bundled())
    }
}

impl OraclePlanner {
    pub fn new(lexicon: IntentLexicon) -> Self {
        OraclePlanner { lexicon }
    }

    pub fn lexicon(&self) -> &IntentLexicon {
        &self.lexicon
    }

    /// The family the instruction wording points at, if any.
    pub fn detect(&self, text: &str) -> Option<Family> {
        let t = text.to_lowercase();
        let has = |w: &str| t.contains(w);
        Some(if has("texture") {
            Family::StackTexture
        } else if has("square") && has("corner") {
            Family::VisualReasoningSquare
        } else if has("stack") {
            Family::StackOrder
        } else if has("rearrange") && has(" is at (") {
            Family::Rearrange
        } else if has("spell") {
            Family::WordCorrection
        } else if has("solve") || has("equation") || math::find_equation(text).is_some() {
            Family::MathReasoning
        } else if (has("sort") || has("group")) && has("color") {
            Family::ColorSort
        } else if self.lexicon.find(text).is_some() {
            Family::IntentRecognition
        } else {
            return None;
        })
    }
}

impl Planner for OraclePlanner {
    fn plan(&self, instruction: &Instruction, scene: &Scene) -> Result<Plan, PlanError> {
        let text = instruction.text.as_str();
        let family = self.detect(text).ok_or_else(|| PlanError::UnrecognizedTask(text.to_string()))?;
        match family {
            Family::MathReasoning => plan_math(text, scene),
            Family::WordCorrection => word::plan_word_instruction(text, scene),
            Family::ColorSort => sort::plan_color_sort(scene),
            Family::IntentRecognition => sort::plan_intent(text, scene, &self.lexicon),
            Family::Rearrange => arrange::plan_rearrange(text, scene),
            Family::VisualReasoningSquare => arrange::plan_square(text, scene),
            Family::StackOrder => arrange::plan_stack_order(text, scene),
            Family::StackTexture => arrange::plan_stack_texture(scene),
            fast => unreachable!("detect never yields {fast}"),
        }
    }
}

/// Primitive actions for each step of `plan`, grounded in turn on the evolving scene.
pub fn ground_plan(plan: &Plan, scene: &Scene) -> Result<(Vec<Vec<PrimitiveAction>>, Scene), StepFailure> {
    let mut s = scene.clone();
    let mut out = Vec::with_capacity(plan.len());
    for step in &plan.steps {
        let fail = |detail: String| StepFailure { step: step.index, detail };
        let cmd = parse_step(&step.text).map_err(|e| fail(e.to_string()))?;
        let r = resolve_step(&cmd, &s).map_err(|e| fail(e.to_string()))?;
        s = apply_all(&s, &r.actions).map_err(|e| fail(e.to_string()))?;
        if !step.predicate.holds(&s) {
            return Err(fail("step predicate unmet after its actions".into()));
        }
        out.push(r.actions);
    }
    Ok((out, s))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("step {step}: {detail}")]
pub struct StepFailure {
    pub step: usize,
    pub detail: String,
}

/// Accumulates caption-worded steps while simulating them, so every emitted text grounds to the
/// intended object under the step grammar.
/// The single-step plan equivalent to a fast command, for corpora that need a plan per trajectory.
pub fn plan_fast(text: &str, scene: &Scene) -> Result<Plan, PlanError> {
    let cmd = crate::fast::parse(text).map_err(|e| PlanError::UnrecognizedTask(format!("{text}: {e}")))?;
    let actions = crate::fast::emit(&cmd, scene).map_err(|e| PlanError::GoalInfeasible(e.to_string()))?;
    let mut b = Builder::new(scene);
    match actions.as_slice() {
        [PrimitiveAction::Pick { object }] => b.pick(*object)?,
        [PrimitiveAction::Pick { object }, PrimitiveAction::Place { cell }] => b.put(*object, *cell)?,
        [PrimitiveAction::Rotate { object, degrees }] => b.rotate(*object, *degrees)?,
        other => return Err(PlanError::GoalInfeasible(format!("unexpected fast actions {other:?}"))),
    }
    Ok(b.finish())
}

pub(crate) struct Builder {
    pub scene: Scene,
    steps: Vec<(String, Predicate)>,
}

impl Builder {
    pub fn new(scene: &Scene) -> Self {
        Builder { scene: scene.clone(), steps: Vec::new() }
    }

    pub fn finish(self) -> Plan {
        Plan::from_steps(PlanSource::Oracle, self.steps)
    }

    fn object_phrase(&self, id: ObjectId) -> Result<ObjectPhrase, PlanError> {
        self.scene
            .object(id)
            .map(ObjectPhrase::describing)
            .ok_or_else(|| PlanError::GoalInfeasible(format!("object {id} is not on the table")))
    }

    /// Tries the plain phrase first, then the phrase qualified by the object's cell.
    fn commit(&mut self, id: ObjectId, texts: [String; 2]) -> Result<(), PlanError> {
        for text in texts {
            let cmd = parse_step(&text).map_err(|e| PlanError::GoalInfeasible(format!("`{text}`: {e}")))?;
            let Ok(r) = resolve_step(&cmd, &self.scene) else { continue };
            if r.object != id {
                continue;
            }
            let next = apply_all(&self.scene, &r.actions)
                .map_err(|e| PlanError::GoalInfeasible(format!("`{text}`: {e}")))?;
            self.scene = next;
            self.steps.push((text, r.predicate));
            return Ok(());
        }
        Err(PlanError::GoalInfeasible(format!("no step wording grounds to object {id}")))
    }

    /// `put the <phrase> at (x,y,z)`.
    pub fn put(&mut self, id: ObjectId, cell: Cell) -> Result<(), PlanError> {
        let phrase = self.object_phrase(id)?;
        let own = self.scene.object(id).expect("checked").cell;
        let z = self.scene.column(cell).iter().filter(|o| o.id != id).count();
        let dest = format!("at ({},{},{z})", cell.x, cell.y);
        let plain = format!("put the {phrase} {dest}");
        let qualified = format!("put the {} {dest}", phrase.from_cell(own));
        self.commit(id, [plain, qualified])
    }

    /// `pick the <phrase> at (x,y,z)`.
    pub fn pick(&mut self, id: ObjectId) -> Result<(), PlanError> {
        let phrase = self.object_phrase(id)?;
        let o = self.scene.object(id).expect("checked");
        let text = format!("pick the {phrase} at ({},{},{})", o.cell.x, o.cell.y, o.z);
        self.commit(id, [text.clone(), text])
    }

    /// `rotate the <phrase> by <d> degrees`.
    pub fn rotate(&mut self, id: ObjectId, degrees: NonZeroI32) -> Result<(), PlanError> {
        let phrase = self.object_phrase(id)?;
        let own = self.scene.object(id).expect("checked").cell;
        let plain = format!("rotate the {phrase} by {degrees} degrees");
        let qualified = format!("rotate the {} by {degrees} degrees", phrase.from_cell(own));
        self.commit(id, [plain, qualified])
    }

    /// Whether placing `id` on `cell` would be legal right now.
    pub fn can_place(&self, id: ObjectId, cell: Cell) -> bool {
        let mut actions = Vec::new();
        if !self.scene.is_held(id) {
            actions.push(PrimitiveAction::Pick { object: id });
        }
        actions.push(PrimitiveAction::Place { cell });
        apply_all(&self.scene, &actions).is_ok()
    }

    /// First free table cell in row-major order outside `reserved`.
    pub fn buffer_cell(&self, reserved: &[Cell]) -> Result<Cell, PlanError> {
        (0..self.scene.height)
            .flat_map(|y| (0..self.scene.width).map(move |x| Cell::new(x, y)))
            .find(|c| self.scene.is_free(*c) && !reserved.contains(c) && self.scene.zones_at(*c).next().is_none())
            .ok_or(PlanError::NoBufferCell)
    }

    /// Moves everything stacked above level `keep - 1` at `cell` to buffer cells, top first.
    pub fn clear_above(&mut self, cell: Cell, keep: u32, reserved: &[Cell]) -> Result<(), PlanError> {
        while self.scene.column_height(cell) > keep {
            let top = self.scene.top_at(cell).expect("non-empty column").id;
            let buffer = self.buffer_cell(reserved)?;
            self.put(top, buffer)?;
        }
        Ok(())
    }

    /// Clears whatever sits on top of `id`.
    pub fn uncover(&mut self, id: ObjectId, reserved: &[Cell]) -> Result<(), PlanError> {
        if self.scene.is_held(id) {
            return Ok(());
        }
        let o = self.scene.object(id).expect("exists");
        let (cell, z) = (o.cell, o.z);
        self.clear_above(cell, z + 1, reserved)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{check_success, gen_scene};

    pub(crate) fn execute(plan: &Plan, scene: &Scene) -> Scene {
        let mut s = scene.clone();
        for (i, step) in plan.steps.iter().enumerate() {
            let cmd = parse_step(&step.text).unwrap_or_else(|e| panic!("step {i} `{}`: {e}", step.text));
            let r = resolve_step(&cmd, &s).unwrap_or_else(|e| panic!("step {i} `{}`: {e}", step.text));
            assert_eq!(r.predicate, step.predicate, "step {i} `{}`", step.text);
            s = apply_all(&s, &r.actions).unwrap();
        }
        s
    }

    fn slow_families() -> impl Iterator<Item = Family> {
        Family::ALL.iter().copied().filter(|f| !f.is_fast())
    }

    #[test]
    fn fast_commands_become_one_step_plans() {
        for f in Family::ALL.iter().copied().filter(|f| f.is_fast()) {
            for seed in 0..30 {
                let (scene, spec) = gen_scene(seed, f);
                let plan = plan_fast(&spec.instruction_text, &scene).unwrap_or_else(|e| panic!("{f} {seed}: {e}"));
                assert_eq!(plan.len(), 1);
                assert!(check_success(&spec, &execute(&plan, &scene)), "{f} {seed}: {:?}", plan.steps);
            }
        }
    }

    #[test]
    fn oracle_solves_every_slow_family() {
        let planner = OraclePlanner::default();
        for f in slow_families() {
            for seed in 0..100 {
                let (scene, spec) = gen_scene(seed, f);
                let ins = Instruction::new("t", &spec.instruction_text).unwrap();
                assert_eq!(planner.detect(&ins.text), Some(f), "{}", ins.text);
                let plan = planner.plan(&ins, &scene).unwrap_or_else(|e| panic!("{f} seed {seed}: {e}"));
                assert!(!plan.is_empty(), "{f} seed {seed}");
                let end = execute(&plan, &scene);
                assert!(check_success(&spec, &end), "{f} seed {seed}: {:#?}", plan.steps);
            }
        }
    }

    #[test]
    fn predicates_flip_in_step_order() {
        let planner = OraclePlanner::default();
        for f in slow_families() {
            for seed in 0..40 {
                let (scene, spec) = gen_scene(seed, f);
                let plan = planner.plan(&Instruction::new("t", &spec.instruction_text).unwrap(), &scene).unwrap();
                let mut s = scene.clone();
                for (i, step) in plan.steps.iter().enumerate() {
                    assert!(!step.predicate.holds(&s), "{f} seed {seed}: step {i} holds early");
                    let r = resolve_step(&parse_step(&step.text).unwrap(), &s).unwrap();
                    s = apply_all(&s, &r.actions).unwrap();
                    assert!(step.predicate.holds(&s), "{f} seed {seed}: step {i} unmet");
                }
            }
        }
    }

    #[test]
    fn oracle_is_deterministic() {
        let planner = OraclePlanner::default();
        for f in slow_families() {
            let (scene, spec) = gen_scene(3, f);
            let ins = Instruction::new("t", &spec.instruction_text).unwrap();
            assert_eq!(planner.plan(&ins, &scene), planner.plan(&ins, &scene));
        }
    }

    #[test]
    fn solved_scene_yields_empty_plan() {
        let planner = OraclePlanner::default();
        for f in slow_families() {
            let (scene, spec) = gen_scene(5, f);
            let ins = Instruction::new("t", &spec.instruction_text).unwrap();
            let end = execute(&planner.plan(&ins, &scene).unwrap(), &scene);
            assert_eq!(planner.plan(&ins, &end).unwrap().len(), 0, "{f}");
        }
    }

    #[test]
    fn unrecognised_instruction() {
        let planner = OraclePlanner::default();
        let err = planner.plan(&Instruction::new("t", "dance for me").unwrap(), &Scene::new(8, 8)).unwrap_err();
        assert_eq!(err, PlanError::UnrecognizedTask("dance for me".into()));
    }

    #[test]
    fn spec_validation() {
        assert!(PlannerSpec::oracle().validate().is_ok());
        assert!(PlannerSpec::remote("http://x", "m").validate().is_ok());
        let mut s = PlannerSpec::remote("http://x", "m");
        s.model_name = None;
        assert!(matches!(s.validate(), Err(PlannerSpecError::MissingField("model_name"))));
        let mut o = PlannerSpec::oracle();
        o.endpoint = Some("http://x".into());
        assert!(matches!(o.validate(), Err(PlannerSpecError::UnexpectedField("endpoint"))));
    }
}

//! The executive loop: classify, then run the fast or slow pipeline against the session scene.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bank::{ClassifyOptions, Neighbor, ThinkBank};
use crate::fast::step::{parse_step, resolve_step};
use crate::fast::{emit, parse};
use crate::model::{caption, codec, Instruction, Plan, PrimitiveAction, Scene, SubGoal, SystemLabel};
use crate::planner::Planner;
use crate::sim::{apply, apply_all, check_success, gen_scene_sized, TaskSpec, UnsupportedFamily};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Classify,
    Parse,
    Ground,
    Plan,
    Execute,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Classify => "classify",
            Stage::Parse => "parse",
            Stage::Ground => "ground",
            Stage::Plan => "plan",
            Stage::Execute => "execute",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepState {
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub status: StepState,
    pub actions: Vec<PrimitiveAction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode: u64,
    pub instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<SystemLabel>,
    pub neighbors: Vec<Neighbor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Plan>,
    pub steps: Vec<StepRecord>,
    pub success: bool,
    #[serde(default)]
    pub aborted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub start_scene: Scene,
    pub final_caption: String,
}

impl EpisodeResult {
    pub fn trace(&self) -> Vec<PrimitiveAction> {
        self.steps.iter().flat_map(|s| s.actions.iter().copied()).collect()
    }

    /// Re-applies the action trace to the starting scene.
    pub fn replay(&self) -> Result<Scene, crate::sim::SimError> {
        apply_all(&self.start_scene, &self.trace())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    SceneUpdate { caption: String, scene: Scene },
    Classified { episode: u64, label: SystemLabel, neighbors: Vec<Neighbor> },
    PlanReady { episode: u64, steps: Vec<SubGoal> },
    ActionPending { episode: u64, step: Option<usize>, action: PrimitiveAction },
    StepStatus { episode: u64, step: usize, status: StepState, actions: Vec<PrimitiveAction> },
    EpisodeDone { episode: u64, success: bool, aborted: bool, failure: Option<Failure> },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SceneUpdate { .. } => "scene_update",
            EventKind::Classified { .. } => "classified",
            EventKind::PlanReady { .. } => "plan_ready",
            EventKind::ActionPending { .. } => "action_pending",
            EventKind::StepStatus { .. } => "step_status",
            EventKind::EpisodeDone { .. } => "episode_done",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub session: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Decides whether the next primitive may run. Used for step-through pacing and aborts.
pub trait Gate: Send + Sync {
    /// True if the executive should announce each action and wait here.
    fn paced(&self) -> bool {
        false
    }

    /// False aborts the episode before the action runs.
    fn admit(&self, action: &PrimitiveAction) -> bool;
}

/// Admits everything immediately.
pub struct Unpaced;

impl Gate for Unpaced {
    fn admit(&self, _: &PrimitiveAction) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnStepFailure {
    /// Stop the episode and record the failing stage and step. The only policy for now.
    #[default]
    Abort,
}

pub struct Executive {
    pub bank: Arc<ThinkBank>,
    pub planner: Arc<dyn Planner>,
    pub k: usize,
    /// Best-neighbour scores below this route to SLOW.
    pub floor: Option<f64>,
    pub on_step_failure: OnStepFailure,
}

impl Executive {
    pub fn new(bank: Arc<ThinkBank>, planner: Arc<dyn Planner>) -> Self {
        Executive { bank, planner, k: 1, floor: None, on_step_failure: OnStepFailure::Abort }
    }

    pub fn classify(&self, text: &str) -> Result<(SystemLabel, Vec<Neighbor>), String> {
        let c = self.bank.classify(text, ClassifyOptions { k: self.k.min(self.bank.len().max(1)), floor: None }).map_err(|e| e.to_string())?;
        let low = self.floor.is_some_and(|f| c.neighbors[0].score < f);
        Ok((if low { SystemLabel::Slow } else { c.label }, c.neighbors))
    }

    /// Runs one episode. The scene is mutated action by action; every stage error lands in the result.
    pub fn run(&self, episode: u64, text: &str, scene: &mut Scene, task: Option<&TaskSpec>, gate: &dyn Gate, emit_event: &mut dyn FnMut(EventKind)) -> EpisodeResult {
        let mut r = EpisodeResult {
            episode,
            instruction: text.to_string(),
            label: None,
            neighbors: Vec::new(),
            plan: None,
            steps: Vec::new(),
            success: false,
            aborted: false,
            failure: None,
            start_scene: scene.clone(),
            final_caption: String::new(),
        };
        self.drive(&mut r, scene, gate, emit_event);
        if r.failure.is_none() {
            r.success = task.is_none_or(|t| check_success(t, scene));
            if !r.success {
                r.failure = Some(Failure { stage: Stage::Execute, step: None, detail: "task goal not reached".into() });
            }
        }
        r.final_caption = caption(scene);
        emit_event(EventKind::EpisodeDone { episode, success: r.success, aborted: r.aborted, failure: r.failure.clone() });
        r
    }

    fn drive(&self, r: &mut EpisodeResult, scene: &mut Scene, gate: &dyn Gate, ev: &mut dyn FnMut(EventKind)) {
        let fail = |r: &mut EpisodeResult, stage, step, detail: String| r.failure = Some(Failure { stage, step, detail });
        let (label, neighbors) = match Instruction::new(format!("e{}", r.episode), &r.instruction)
            .map_err(|e| e.to_string())
            .and_then(|_| self.classify(&r.instruction))
        {
            Ok(x) => x,
            Err(e) => return fail(r, Stage::Classify, None, e),
        };
        r.label = Some(label);
        r.neighbors = neighbors.clone();
        ev(EventKind::Classified { episode: r.episode, label, neighbors });
        match label {
            SystemLabel::Fast => {
                let cmd = match parse(&r.instruction) {
                    Ok(c) => c,
                    Err(e) => return fail(r, Stage::Parse, None, e.to_string()),
                };
                let actions = match emit(&cmd, scene) {
                    Ok(a) => a,
                    Err(e) => return fail(r, Stage::Ground, None, e.to_string()),
                };
                let (done, err) = self.execute(r.episode, None, &actions, scene, gate, ev);
                let status = if err.is_none() { StepState::Done } else { StepState::Failed };
                r.steps.push(StepRecord { index: 0, status, actions: done });
                if let Some((aborted, e)) = err {
                    r.aborted = aborted;
                    fail(r, Stage::Execute, None, e);
                }
            }
            SystemLabel::Slow => {
                let ins = Instruction { id: format!("e{}", r.episode), text: r.instruction.clone() };
                let plan = match self.planner.plan(&ins, scene) {
                    Ok(p) => p,
                    Err(e) => return fail(r, Stage::Plan, None, e.to_string()),
                };
                ev(EventKind::PlanReady { episode: r.episode, steps: plan.steps.clone() });
                r.plan = Some(plan.clone());
                for step in &plan.steps {
                    let i = step.index;
                    let resolved = match parse_step(&step.text) {
                        Ok(cmd) => resolve_step(&cmd, scene).map_err(|e| e.to_string()),
                        Err(e) => Err(e.to_string()),
                    };
                    let resolved = match resolved {
                        Ok(x) => x,
                        Err(e) => {
                            r.steps.push(StepRecord { index: i, status: StepState::Failed, actions: Vec::new() });
                            ev(EventKind::StepStatus { episode: r.episode, step: i, status: StepState::Failed, actions: Vec::new() });
                            return fail(r, Stage::Ground, Some(i), format!("`{}`: {e}", step.text));
                        }
                    };
                    let (done, err) = self.execute(r.episode, Some(i), &resolved.actions, scene, gate, ev);
                    let err = err.or_else(|| {
                        (!step.predicate.holds(scene)).then(|| (false, format!("`{}`: sub-goal not reached: {:?}", step.text, step.predicate)))
                    });
                    let status = if err.is_none() { StepState::Done } else { StepState::Failed };
                    r.steps.push(StepRecord { index: i, status, actions: done.clone() });
                    ev(EventKind::StepStatus { episode: r.episode, step: i, status, actions: done });
                    if let Some((aborted, e)) = err {
                        r.aborted = aborted;
                        return match self.on_step_failure {
                            OnStepFailure::Abort => fail(r, Stage::Execute, Some(i), e),
                        };
                    }
                }
            }
        }
    }

    /// Applies actions one at a time. Returns the applied prefix and, on error, whether it was an abort.
    fn execute(&self, episode: u64, step: Option<usize>, actions: &[PrimitiveAction], scene: &mut Scene, gate: &dyn Gate, ev: &mut dyn FnMut(EventKind)) -> (Vec<PrimitiveAction>, Option<(bool, String)>) {
        let mut done = Vec::new();
        for a in actions {
            if gate.paced() {
                ev(EventKind::ActionPending { episode, step, action: *a });
            }
            if !gate.admit(a) {
                return (done, Some((true, "aborted".into())));
            }
            match apply(scene, *a) {
                Ok(s) => *scene = s,
                Err(e) => return (done, Some((false, format!("{a}: {e}")))),
            }
            done.push(*a);
            ev(EventKind::SceneUpdate { caption: caption(scene), scene: scene.clone() });
        }
        (done, None)
    }
}

pub type Listener = Arc<dyn Fn(&Event) + Send + Sync>;

/// One live scene, its episode log and its ordered event feed.
pub struct Session {
    pub id: String,
    pub scene: Scene,
    pub task: Option<TaskSpec>,
    pub episodes: Vec<EpisodeResult>,
    executive: Arc<Executive>,
    width: u32,
    height: u32,
    next_seq: u64,
    events: Vec<Event>,
    listener: Option<Listener>,
    log_dir: Option<PathBuf>,
}

impl Session {
    pub fn new(id: impl Into<String>, executive: Arc<Executive>, width: u32, height: u32) -> Self {
        Session {
            id: id.into(),
            scene: Scene::new(width, height),
            task: None,
            episodes: Vec::new(),
            executive,
            width,
            height,
            next_seq: 1,
            events: Vec::new(),
            listener: None,
            log_dir: None,
        }
    }

    pub fn with_listener(mut self, l: Listener) -> Self {
        self.listener = Some(l);
        self
    }

    /// Appends each finished episode to `<dir>/<session>.episodes.jsonl`.
    pub fn with_log_dir(mut self, dir: PathBuf) -> Self {
        self.log_dir = Some(dir);
        self
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    fn push(&mut self, kind: EventKind) {
        let e = Event { seq: self.next_seq, session: self.id.clone(), kind };
        self.next_seq += 1;
        if let Some(l) = &self.listener {
            l(&e);
        }
        self.events.push(e);
    }

    pub fn reset(&mut self, seed: u64, family: &str) -> Result<&Scene, UnsupportedFamily> {
        let family = family.parse().map_err(|_| UnsupportedFamily(family.to_string()))?;
        let (scene, task) = gen_scene_sized(seed, family, self.width, self.height);
        self.scene = scene;
        self.task = Some(task);
        self.push(EventKind::SceneUpdate { caption: caption(&self.scene), scene: self.scene.clone() });
        Ok(&self.scene)
    }

    /// Replaces the scene without a task.
    pub fn load_scene(&mut self, scene: Scene) {
        self.scene = scene;
        self.task = None;
        self.push(EventKind::SceneUpdate { caption: caption(&self.scene), scene: self.scene.clone() });
    }

    pub fn handle_instruction(&mut self, text: &str, gate: &dyn Gate) -> &EpisodeResult {
        let episode = self.episodes.len() as u64 + 1;
        let mut scene = self.scene.clone();
        let mut pending = Vec::new();
        let exec = self.executive.clone();
        let listener = self.listener.clone();
        let (id, mut seq) = (self.id.clone(), self.next_seq);
        let mut sink = |kind: EventKind| {
            let e = Event { seq, session: id.clone(), kind };
            seq += 1;
            if let Some(l) = &listener {
                l(&e);
            }
            pending.push(e);
        };
        let r = exec.run(episode, text, &mut scene, self.task.as_ref(), gate, &mut sink);
        self.next_seq = seq;
        self.events.extend(pending);
        self.scene = scene;
        if let Some(dir) = &self.log_dir {
            let line = codec::encode_tagged("episode", &r);
            let path = dir.join(format!("{}.episodes.jsonl", self.id));
            let res = std::fs::OpenOptions::new().create(true).append(true).open(&path).and_then(|mut f| writeln!(f, "{line}"));
            if let Err(e) = res {
                log::error!("episode log {}: {e}", path.display());
            }
        }
        self.episodes.push(r);
        self.episodes.last().expect("just pushed")
    }

    pub fn episode(&self, n: u64) -> Option<&EpisodeResult> {
        n.checked_sub(1).and_then(|i| self.episodes.get(i as usize))
    }
}

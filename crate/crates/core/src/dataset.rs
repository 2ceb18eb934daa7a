//! Synthetic trajectory corpus: oracle plans executed in the simulator, one record per trajectory.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::episode_seed;
use crate::model::{caption, codec, Family, Instruction, PrimitiveAction, Trajectory};
use crate::planner::{ground_plan, plan_fast, OraclePlanner, Planner};
use crate::sim::{apply, check_success, gen_scene_sized, record, MIN_GRID};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_trajectories: usize,
    pub weights: Vec<(Family, f64)>,
    pub base_seed: u64,
    pub width: u32,
    pub height: u32,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            n_trajectories: 200,
            weights: Family::ALL.iter().filter(|f| !f.is_fast()).map(|f| (*f, 1.0)).collect(),
            base_seed: 1,
            width: MIN_GRID,
            height: MIN_GRID,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub count: usize,
    pub per_family: BTreeMap<String, usize>,
    /// Mean frames per trajectory.
    pub mean_length: f64,
    pub seed: u64,
    pub format_version: u64,
}

impl Manifest {
    pub fn of(trajectories: &[Trajectory], seed: u64) -> Self {
        let mut per_family = BTreeMap::new();
        for t in trajectories {
            *per_family.entry(t.family.clone()).or_insert(0) += 1;
        }
        let frames: usize = trajectories.iter().map(|t| t.frames.len()).sum();
        let mean_length = if trajectories.is_empty() { 0.0 } else { frames as f64 / trajectories.len() as f64 };
        Manifest { count: trajectories.len(), per_family, mean_length, seed, format_version: codec::FORMAT_VERSION }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("weights must be positive and finite, got {0} for {1}")]
    BadWeight(f64, Family),
    #[error("no families weighted")]
    NoFamilies,
    #[error("{family} seed {seed}: {detail}")]
    Generation { family: Family, seed: u64, detail: String },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

/// Plans with the oracle (or the fast-command equivalent), executes and records one trajectory.
pub fn trajectory_for(family: Family, seed: u64, width: u32, height: u32) -> Result<Trajectory, DatasetError> {
    let fail = |detail: String| DatasetError::Generation { family, seed, detail };
    let (scene, spec) = gen_scene_sized(seed, family, width, height);
    let plan = if family.is_fast() {
        plan_fast(&spec.instruction_text, &scene)
    } else {
        let ins = Instruction::new(format!("{family}-{seed}"), &spec.instruction_text).map_err(|e| fail(e.to_string()))?;
        OraclePlanner::default().plan(&ins, &scene)
    }
    .map_err(|e| fail(e.to_string()))?;
    let (actions, _) = ground_plan(&plan, &scene).map_err(|e| fail(e.to_string()))?;
    let (frames, end) = record(&scene, &actions.concat()).map_err(|e| fail(e.to_string()))?;
    if !check_success(&spec, &end) {
        return Err(fail("oracle plan did not reach the goal".into()));
    }
    Ok(Trajectory {
        id: format!("{family}-{seed:016x}"),
        family: family.to_string(),
        seed,
        width: scene.width,
        height: scene.height,
        instruction: spec.instruction_text,
        frames,
        plan: Some(plan),
    })
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("unknown family `{0}`")]
    Family(String),
    #[error("frame {0}: caption differs from the simulated scene")]
    Caption(usize),
    #[error("frame {0}: {1}")]
    Action(usize, String),
}

/// Regenerates the starting scene, re-applies every recorded action checking captions, and reports
/// whether the task goal holds at the end.
pub fn replay(t: &Trajectory) -> Result<bool, ReplayError> {
    let family: Family = t.family.parse().map_err(|_| ReplayError::Family(t.family.clone()))?;
    let (mut scene, spec) = gen_scene_sized(t.seed, family, t.width, t.height);
    for (i, f) in t.frames.iter().enumerate() {
        if caption(&scene) != f.caption {
            return Err(ReplayError::Caption(i));
        }
        if let Some(a) = f.action {
            scene = apply(&scene, a).map_err(|e| ReplayError::Action(i, e.to_string()))?;
        }
    }
    Ok(check_success(&spec, &scene))
}

pub fn actions_of(t: &Trajectory) -> Vec<PrimitiveAction> {
    t.frames.iter().filter_map(|f| f.action).collect()
}

/// Draws each trajectory's family from the weights with a generator seeded by `base_seed`.
pub fn gen_dataset(spec: &DatasetSpec) -> Result<(Vec<Trajectory>, Manifest), DatasetError> {
    if spec.weights.is_empty() {
        return Err(DatasetError::NoFamilies);
    }
    for &(f, w) in &spec.weights {
        if !(w.is_finite() && w > 0.0) {
            return Err(DatasetError::BadWeight(w, f));
        }
    }
    let dist = WeightedIndex::new(spec.weights.iter().map(|(_, w)| *w)).expect("weights checked");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.base_seed);
    let mut counts: BTreeMap<Family, usize> = BTreeMap::new();
    let jobs: Vec<(Family, u64)> = (0..spec.n_trajectories)
        .map(|_| {
            let f = spec.weights[dist.sample(&mut rng)].0;
            let n = counts.entry(f).or_insert(0);
            *n += 1;
            (f, episode_seed(spec.base_seed, f, *n - 1))
        })
        .collect();
    let out: Vec<Trajectory> =
        jobs.par_iter().map(|&(f, seed)| trajectory_for(f, seed, spec.width, spec.height)).collect::<Result<_, _>>()?;
    let manifest = Manifest::of(&out, spec.base_seed);
    Ok((out, manifest))
}

pub const TRAJECTORIES_FILE: &str = "trajectories.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `trajectories.jsonl` and `manifest.json` into `dir`, creating it if needed.
pub fn write_dataset(spec: &DatasetSpec, dir: &Path) -> Result<Manifest, DatasetError> {
    let (trajectories, manifest) = gen_dataset(spec)?;
    let werr = |path: PathBuf| move |source| DatasetError::Write { path, source };
    std::fs::create_dir_all(dir).map_err(werr(dir.to_path_buf()))?;
    let tpath = dir.join(TRAJECTORIES_FILE);
    let mut buf = Vec::new();
    for t in &trajectories {
        writeln!(buf, "{}", codec::encode_trajectory(t)).expect("in-memory write");
    }
    std::fs::write(&tpath, buf).map_err(werr(tpath.clone()))?;
    let mpath = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises") + "\n";
    std::fs::write(&mpath, json).map_err(werr(mpath.clone()))?;
    Ok(manifest)
}

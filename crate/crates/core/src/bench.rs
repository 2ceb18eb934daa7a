//! Seeded success-rate benchmark over task families.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bank::ThinkBank;
use crate::embedding::fnv1a64;
use crate::model::{Family, Instruction, Plan, Scene, SubGoal};
use crate::orchestrator::{Executive, Stage, Unpaced};
use crate::planner::{PlanError, Planner};
use crate::sim::{gen_scene_sized, MIN_GRID};

/// `base ^ fnv1a64("<family>:<index>")`.
pub fn episode_seed(base: u64, family: Family, index: usize) -> u64 {
    base ^ fnv1a64(format!("{family}:{index}").as_bytes())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Plans are executed last step first.
    ReversedSteps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub families: Vec<Family>,
    pub episodes_per_family: usize,
    pub base_seed: u64,
    pub width: u32,
    pub height: u32,
    pub fault: Option<Fault>,
    /// Row label in the markdown table.
    pub method: String,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            families: Family::ALL.to_vec(),
            episodes_per_family: 20,
            base_seed: 0,
            width: MIN_GRID,
            height: MIN_GRID,
            fault: None,
            method: "oracle".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("episodes per family must be at least 1")]
    ZeroEpisodes,
    #[error("no families selected")]
    NoFamilies,
    #[error("grid {0}x{1} is below the {MIN_GRID}x{MIN_GRID} minimum")]
    GridTooSmall(u32, u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeFailure {
    pub index: usize,
    pub seed: u64,
    pub stage: Stage,
    pub step: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub family: Family,
    pub episodes: usize,
    pub successes: usize,
    pub failures: Vec<EpisodeFailure>,
}

impl FamilyRow {
    pub fn rate_percent(&self) -> f64 {
        100.0 * self.successes as f64 / self.episodes as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchTable {
    pub method: String,
    pub rows: Vec<FamilyRow>,
}

/// Wraps a planner and reverses the order of its steps.
pub struct ReversedSteps(pub Arc<dyn Planner>);

impl Planner for ReversedSteps {
    fn plan(&self, instruction: &Instruction, scene: &Scene) -> Result<Plan, PlanError> {
        let p = self.0.plan(instruction, scene)?;
        let steps: Vec<SubGoal> =
            p.steps.into_iter().rev().enumerate().map(|(i, s)| SubGoal { index: i, ..s }).collect();
        Ok(Plan { steps, source: p.source })
    }
}

/// Runs every (family, index) episode through the executive. Rows are ordered by family name.
pub fn run_benchmark(spec: &BenchmarkSpec, bank: Arc<ThinkBank>, planner: Arc<dyn Planner>) -> Result<BenchTable, BenchError> {
    if spec.episodes_per_family == 0 {
        return Err(BenchError::ZeroEpisodes);
    }
    if spec.families.is_empty() {
        return Err(BenchError::NoFamilies);
    }
    if spec.width < MIN_GRID || spec.height < MIN_GRID {
        return Err(BenchError::GridTooSmall(spec.width, spec.height));
    }
    let planner: Arc<dyn Planner> = match spec.fault {
        Some(Fault::ReversedSteps) => Arc::new(ReversedSteps(planner)),
        None => planner,
    };
    let exec = Executive::new(bank, planner);
    let mut families = spec.families.clone();
    families.sort_by_key(|f| f.as_str());
    families.dedup();
    let jobs: Vec<(Family, usize)> =
        families.iter().flat_map(|&f| (0..spec.episodes_per_family).map(move |i| (f, i))).collect();
    let outcomes: Vec<(Family, Option<EpisodeFailure>)> = jobs
        .par_iter()
        .map(|&(family, index)| {
            let seed = episode_seed(spec.base_seed, family, index);
            let (mut scene, task) = gen_scene_sized(seed, family, spec.width, spec.height);
            let r = exec.run(index as u64 + 1, &task.instruction_text, &mut scene, Some(&task), &Unpaced, &mut |_| {});
            let failure = (!r.success).then(|| {
                let f = r.failure.expect("failed episodes carry a failure");
                EpisodeFailure { index, seed, stage: f.stage, step: f.step, detail: f.detail }
            });
            (family, failure)
        })
        .collect();
    let rows = families
        .iter()
        .map(|&family| {
            let failures: Vec<EpisodeFailure> =
                outcomes.iter().filter(|(f, _)| *f == family).filter_map(|(_, e)| e.clone()).collect();
            let episodes = spec.episodes_per_family;
            FamilyRow { family, episodes, successes: episodes - failures.len(), failures }
        })
        .collect();
    Ok(BenchTable { method: spec.method.clone(), rows })
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("family,episodes,successes,rate_percent\n");
        for r in &self.rows {
            writeln!(s, "{},{},{},{:.1}", r.family, r.episodes, r.successes, r.rate_percent()).expect("string write");
        }
        s
    }

    /// One row per method, one column per family.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| Method |");
        for r in &self.rows {
            write!(s, " {} |", r.family).expect("string write");
        }
        s.push_str("\n|---|");
        s.push_str(&"---:|".repeat(self.rows.len()));
        write!(s, "\n| {} |", self.method).expect("string write");
        for r in &self.rows {
            write!(s, " {:.1} |", r.rate_percent()).expect("string write");
        }
        let n = self.rows.first().map_or(0, |r| r.episodes);
        write!(
            s,
            "\n\nSuccess rate (%) over {n} seeded episodes per family on the simulated tabletop with the deterministic executor. Not comparable with results from learned policies.\n"
        )
        .expect("string write");
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Markdown => self.to_markdown(),
        }
    }

    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.successes == r.episodes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::BuiltinEmbedder;
    use crate::planner::OraclePlanner;

    fn parts() -> (Arc<ThinkBank>, Arc<dyn Planner>) {
        let bank = ThinkBank::starter(Arc::new(BuiltinEmbedder::default())).unwrap();
        (Arc::new(bank), Arc::new(OraclePlanner::default()))
    }

    #[test]
    fn oracle_is_perfect_and_deterministic() {
        let (bank, planner) = parts();
        let spec = BenchmarkSpec { episodes_per_family: 4, ..Default::default() };
        let a = run_benchmark(&spec, bank.clone(), planner.clone()).unwrap();
        assert!(a.all_succeeded(), "{:#?}", a.rows.iter().flat_map(|r| &r.failures).collect::<Vec<_>>());
        let b = run_benchmark(&spec, bank, planner).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.len(), 13);
        assert!(a.to_csv().lines().nth(1).unwrap().starts_with("color_sort,4,4,100.0"));
    }

    #[test]
    fn reversed_steps_fail_with_step_indices() {
        let (bank, planner) = parts();
        let spec = BenchmarkSpec {
            families: vec![Family::WordCorrection],
            episodes_per_family: 10,
            fault: Some(Fault::ReversedSteps),
            ..Default::default()
        };
        let t = run_benchmark(&spec, bank, planner).unwrap();
        assert!(t.rows[0].successes < 10);
        assert!(t.rows[0].failures.iter().all(|f| f.step.is_some()), "{:#?}", t.rows[0].failures);
    }

    #[test]
    fn bad_specs() {
        let (bank, planner) = parts();
        let zero = BenchmarkSpec { episodes_per_family: 0, ..Default::default() };
        assert_eq!(run_benchmark(&zero, bank.clone(), planner.clone()).unwrap_err(), BenchError::ZeroEpisodes);
        let none = BenchmarkSpec { families: vec![], ..Default::default() };
        assert_eq!(run_benchmark(&none, bank, planner).unwrap_err(), BenchError::NoFamilies);
    }

    #[test]
    fn markdown_shape() {
        let t = BenchTable {
            method: "oracle".into(),
            rows: vec![FamilyRow { family: Family::Rotate, episodes: 2, successes: 1, failures: vec![] }],
        };
        let md = t.to_markdown();
        assert!(md.starts_with("| Method | rotate |\n|---|---:|\n| oracle | 50.0 |"), "{md}");
        assert_ne!(episode_seed(0, Family::Rotate, 0), episode_seed(0, Family::Rotate, 1));
    }
}

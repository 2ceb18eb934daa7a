//! TOML configuration. Every section and key is optional.
//!
//! ```toml
//! [bank]      path, k, floor
//! [embed]     kind, dim, endpoint, model
//! [planner]   kind, endpoint, model, template, lexicon
//! [aligner]   alpha
//! [sim]       width, height
//! [server]    listen_addr, step_through, busy, queue_depth
//! [providers] timeout_s
//! [log]       dir
//! [executive] on_step_failure
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::aligner::{AlignmentConfig, DEFAULT_ALPHA};
use crate::bank::{BankError, MismatchMode, ThinkBank};
use crate::embedding::{embedder_from_spec, EmbedError, Embedder, EmbedderKind, EmbedderSpec, DEFAULT_DIM};
use crate::orchestrator::{Executive, OnStepFailure};
use crate::planner::{Planner, PlannerKind, PlannerSpec, PlannerSpecError};
use crate::sim::MIN_GRID;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankSection {
    /// The shipped starter bank when absent.
    pub path: Option<PathBuf>,
    pub k: usize,
    pub floor: Option<f64>,
    /// Re-embed with a warning when the file names another embedder.
    pub recompute_on_mismatch: bool,
}

impl Default for BankSection {
    fn default() -> Self {
        BankSection { path: None, k: 1, floor: None, recompute_on_mismatch: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub kind: EmbedderKind,
    pub dim: usize,
    pub endpoint: Option<String>,
    pub model: Option<String>,
}

impl Default for EmbedSection {
    fn default() -> Self {
        EmbedSection { kind: EmbedderKind::Builtin, dim: DEFAULT_DIM, endpoint: None, model: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSection {
    pub kind: PlannerKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub template: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
}

impl Default for PlannerSection {
    fn default() -> Self {
        PlannerSection { kind: PlannerKind::Oracle, endpoint: None, model: None, template: None, lexicon: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignerSection {
    pub alpha: f64,
}

impl Default for AlignerSection {
    fn default() -> Self {
        AlignerSection { alpha: DEFAULT_ALPHA }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub width: u32,
    pub height: u32,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection { width: MIN_GRID, height: MIN_GRID }
    }
}

/// What a session does with an instruction that arrives while one is running.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusyPolicy {
    /// Wait behind the running episode, up to `queue_depth` waiters.
    #[default]
    Queue,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSection {
    pub listen_addr: String,
    /// New sessions start in step-through mode.
    pub step_through: bool,
    pub busy: BusyPolicy,
    pub queue_depth: usize,
}

impl Default for ServerSection {
    fn default() -> Self {
        ServerSection { listen_addr: "127.0.0.1:8080".into(), step_through: false, busy: BusyPolicy::Queue, queue_depth: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProvidersSection {
    pub timeout_s: f64,
}

impl Default for ProvidersSection {
    fn default() -> Self {
        ProvidersSection { timeout_s: 30.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogSection {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutiveSection {
    pub on_step_failure: OnStepFailure,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bank: BankSection,
    pub embed: EmbedSection,
    pub planner: PlannerSection,
    pub aligner: AlignerSection,
    pub sim: SimSection,
    pub server: ServerSection,
    pub providers: ProvidersSection,
    pub log: LogSection,
    pub executive: ExecutiveSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Parse(String),
    #[error("config `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    Planner(#[from] PlannerSpecError),
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Config::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key, reason: &str| Err(ConfigError::Invalid { key, reason: reason.into() });
        if self.bank.k == 0 {
            return bad("bank.k", "must be at least 1");
        }
        if !(self.aligner.alpha > 0.0 && self.aligner.alpha <= 1.0) {
            return bad("aligner.alpha", "must lie in (0, 1]");
        }
        if self.sim.width < MIN_GRID || self.sim.height < MIN_GRID {
            return bad("sim.width", "grid must be at least 8x8");
        }
        if !(self.providers.timeout_s.is_finite() && self.providers.timeout_s > 0.0) {
            return bad("providers.timeout_s", "must be positive");
        }
        if self.server.queue_depth == 0 && self.server.busy == BusyPolicy::Queue {
            return bad("server.queue_depth", "must be at least 1 when busy = \"queue\"");
        }
        self.embedder_spec().validate()?;
        self.planner_spec().validate()?;
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.providers.timeout_s)
    }

    pub fn embedder_spec(&self) -> EmbedderSpec {
        EmbedderSpec {
            kind: self.embed.kind,
            dimension: self.embed.dim,
            endpoint: self.embed.endpoint.clone(),
            model_name: self.embed.model.clone(),
        }
    }

    pub fn planner_spec(&self) -> PlannerSpec {
        PlannerSpec {
            kind: self.planner.kind,
            endpoint: self.planner.endpoint.clone(),
            model_name: self.planner.model.clone(),
            prompt_template: self.planner.template.clone(),
            intent_lexicon: self.planner.lexicon.clone(),
        }
    }

    pub fn alignment(&self) -> AlignmentConfig {
        AlignmentConfig { alpha: self.aligner.alpha, embedder: self.embedder_spec() }
    }

    pub fn embedder(&self) -> Result<Arc<dyn Embedder>, ConfigError> {
        Ok(Arc::from(embedder_from_spec(&self.embedder_spec(), self.timeout())?))
    }

    pub fn bank(&self, embedder: Arc<dyn Embedder>) -> Result<ThinkBank, ConfigError> {
        let mode = if self.bank.recompute_on_mismatch { MismatchMode::Recompute } else { MismatchMode::Strict };
        Ok(match &self.bank.path {
            Some(p) => ThinkBank::load(p, embedder, mode)?,
            None => ThinkBank::starter(embedder)?,
        })
    }

    pub fn planner(&self) -> Result<Arc<dyn Planner>, ConfigError> {
        Ok(Arc::from(self.planner_spec().build(self.timeout())?))
    }

    /// A fresh executive snapshot: the embedder, bank and planner are built now and shared by
    /// every episode that uses it.
    pub fn executive(&self) -> Result<Executive, ConfigError> {
        let bank = Arc::new(self.bank(self.embedder()?)?);
        let mut ex = Executive::new(bank, self.planner()?);
        ex.k = self.bank.k;
        ex.floor = self.bank.floor;
        ex.on_step_failure = self.executive.on_step_failure;
        Ok(ex)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let c = Config::from_toml("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.aligner.alpha, 0.75);
        assert_eq!(c.server.queue_depth, 1);
        assert!(c.executive().unwrap().bank.len() >= 100);
    }

    #[test]
    fn every_documented_key_parses() {
        let text = r#"
            [bank]
            k = 3
            floor = 0.2
            [embed]
            kind = "builtin"
            dim = 256
            [planner]
            kind = "remote"
            endpoint = "http://127.0.0.1:9/v1/chat/completions"
            model = "m"
            [aligner]
            alpha = 0.9
            [sim]
            width = 10
            height = 9
            [server]
            listen_addr = "0.0.0.0:9000"
            step_through = true
            busy = "reject"
            queue_depth = 0
            [providers]
            timeout_s = 2.5
            [log]
            dir = "/tmp/episodes"
            [executive]
            on_step_failure = "abort"
        "#;
        let c = Config::from_toml(text).unwrap();
        assert_eq!(c.bank.k, 3);
        assert_eq!(c.embedder_spec(), EmbedderSpec::builtin(256));
        assert_eq!(c.planner_spec(), PlannerSpec::remote("http://127.0.0.1:9/v1/chat/completions", "m"));
        assert_eq!(c.timeout(), Duration::from_millis(2500));
        assert_eq!(c.server.busy, BusyPolicy::Reject);
    }

    #[test]
    fn invalid_values_name_their_key() {
        for (text, key) in [
            ("[bank]\nk = 0", "bank.k"),
            ("[aligner]\nalpha = 0.0", "aligner.alpha"),
            ("[sim]\nwidth = 4", "sim.width"),
            ("[providers]\ntimeout_s = -1.0", "providers.timeout_s"),
        ] {
            match Config::from_toml(text) {
                Err(ConfigError::Invalid { key: k, .. }) => assert_eq!(k, key),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(Config::from_toml("[bank]\nsize = 3"), Err(ConfigError::Parse(_))));
        assert!(matches!(Config::from_toml("[planner]\nkind = \"remote\""), Err(ConfigError::Planner(_))));
        assert!(matches!(Config::from_toml("[embed]\nkind = \"remote\""), Err(ConfigError::Embed(_))));
    }
}

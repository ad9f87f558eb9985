//! Game configuration.
//!
//! [`GameConfig`] is a flat key/value document: every field can be set from a
//! TOML config file and overridden individually from the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rating::TrueSkillParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse config {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
}

/// How a pair of p(correct) values is turned into a match outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RankingMode {
    /// Draw when the two scores are within `sigma_star`, else the higher one wins.
    #[default]
    Relative,
    /// Each player passes or fails against `p_thresh` independently.
    Absolute,
}

/// Whether pairwise rating updates happen once per question or once per round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairUpdateGranularity {
    #[default]
    PerQuestion,
    /// Mean p(correct) per player across the round's questions, then one
    /// update per pair.
    PerRound,
}

/// Which previously accepted questions a candidate must differ from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UniquenessScope {
    /// Only the setter's own accepted questions.
    #[default]
    Own,
    /// Every accepted question in the archive.
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub n_rounds: usize,
    pub n_attempts: usize,
    /// Stability threshold on the p(correct) standard error; also the draw
    /// band for relative ranking.
    pub sigma_star: f64,
    /// Cosine distance a new question must exceed against history.
    pub d_thresh: f64,
    /// Pass mark for absolute ranking and discriminatory questions.
    pub p_thresh: f64,
    pub n_distractors: usize,
    pub n_options: usize,
    /// Presentations per estimation batch.
    pub n_step: usize,
    /// Hard cap on presentations per estimate.
    pub max_samples: usize,
    pub temperature: f64,
    pub ranking_mode: RankingMode,
    pub pair_update_granularity: PairUpdateGranularity,
    pub rng_seed: u64,
    pub uniqueness_scope: UniquenessScope,
    /// Independent sandbox executions used to establish ground truth.
    pub verification_runs: usize,
    /// Command that launches one harness worker. Empty selects the offline
    /// fixture executor, which only knows scripted players' fixtures.
    pub sandbox_harness_cmd: String,
    pub sandbox_timeout_ms: u64,
    pub sandbox_memory_limit_bytes: u64,
    /// `stub` or `http`.
    pub embedding_provider: String,
    pub embedding_dim: usize,
    pub embedding_endpoint: String,
    pub embedding_model: String,
    pub embedding_credential_env: String,
    pub mu0: f64,
    pub sigma0: f64,
    pub beta: f64,
    pub tau: f64,
    pub draw_probability: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        let sigma0 = 25.0 / 3.0;
        Self {
            n_rounds: 50,
            n_attempts: 3,
            sigma_star: 0.05,
            d_thresh: 0.336,
            p_thresh: 0.55,
            n_distractors: 9,
            n_options: 4,
            n_step: 10,
            max_samples: 400,
            temperature: 0.7,
            ranking_mode: RankingMode::Relative,
            pair_update_granularity: PairUpdateGranularity::PerQuestion,
            rng_seed: 0,
            uniqueness_scope: UniquenessScope::Own,
            verification_runs: 2,
            sandbox_harness_cmd: String::new(),
            sandbox_timeout_ms: 5_000,
            sandbox_memory_limit_bytes: 256 * 1024 * 1024,
            embedding_provider: "stub".to_string(),
            embedding_dim: 256,
            embedding_endpoint: "https://api.openai.com/v1".to_string(),
            embedding_model: "text-embedding-3-small".to_string(),
            embedding_credential_env: "OPENAI_API_KEY".to_string(),
            mu0: 25.0,
            sigma0,
            beta: sigma0 / 2.0,
            tau: sigma0 / 100.0,
            draw_probability: 0.10,
        }
    }
}

/// The stock game configuration.
pub fn default_config() -> GameConfig {
    GameConfig::default()
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: &str| Err(ConfigError::Invalid(msg.to_string()));
        if !(self.sigma_star > 0.0 && self.sigma_star < 0.5) {
            return fail("sigma_star must lie in (0, 0.5)");
        }
        if !(self.p_thresh > 0.0 && self.p_thresh < 1.0) {
            return fail("p_thresh must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.d_thresh) {
            return fail("d_thresh must lie in [0, 1]");
        }
        if self.n_options < 2 {
            return fail("n_options must be at least 2");
        }
        if self.n_distractors + 1 < self.n_options {
            return fail("n_distractors must be at least n_options - 1");
        }
        if self.n_step < 1 {
            return fail("n_step must be at least 1");
        }
        if self.max_samples < self.n_step {
            return fail("max_samples must be at least n_step");
        }
        if self.n_attempts < 1 {
            return fail("n_attempts must be at least 1");
        }
        if self.verification_runs < 1 {
            return fail("verification_runs must be at least 1");
        }
        if self.sandbox_timeout_ms == 0 {
            return fail("sandbox_timeout_ms must be positive");
        }
        if self.embedding_dim == 0 {
            return fail("embedding_dim must be positive");
        }
        self.trueskill().validate()
    }

    pub fn trueskill(&self) -> TrueSkillParams {
        TrueSkillParams {
            mu0: self.mu0,
            sigma0: self.sigma0,
            beta: self.beta,
            tau: self.tau,
            draw_probability: self.draw_probability,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config = Self::from_toml_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("GameConfig always serializes")
    }
}

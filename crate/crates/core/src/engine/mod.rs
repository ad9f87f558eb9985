//! The game loop: setting, validating and scoring questions, rating updates,
//! persistence, and adding players to a finished game.

pub mod archive;
mod validate;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

pub use archive::{
    ArchiveError, ArchiveStore, GameArchive, MatchRecord, Provenance, RoundRecord, SetterRecord, TrajectoryEntry,
};
pub use validate::{validate_candidate, Services, Validation};

use crate::config::{ConfigError, GameConfig, UniquenessScope};
use crate::players::prompt::{build_setter_prompt, parse_setter_output};
use crate::players::{build_archive_view, Player, PlayerSpec, ProviderError};
use crate::rating::RatingError;
use crate::sandbox::{
    resolve_harness_cmd, ExecStatus, ExecutionResult, Executor, FixtureExecutor, ProcessExecutor, SandboxError,
};
use crate::scoring::{estimate_p_correct, PCorrectEstimate};
use crate::seed::derive_rng;
use crate::similarity::{EmbeddingService, SimilarityError};
use crate::types::{CandidateQuestion, FailureReason, PlayerId, Question, ValidationFailure};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid roster: {0}")]
    Roster(String),
    #[error("sandbox unavailable: {0}")]
    Sandbox(#[from] SandboxError),
    #[error("provider for player {player} failed: {source}")]
    Provider { player: PlayerId, source: ProviderError },
    #[error("embedding service failed: {0}")]
    Embedding(#[from] SimilarityError),
    #[error(transparent)]
    Rating(#[from] RatingError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
}

/// How players join an existing game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JoinMode {
    /// Answer every existing question; no new rounds.
    AnswerOnly,
    /// Answer existing questions, then play `n_rounds` more rounds as setters too.
    FullJoin,
}

/// Runs games against a code executor and an embedding service.
///
/// Game state lives entirely in [`GameArchive`]; the engine holds only the
/// external services, so one engine can drive any number of games.
pub struct Engine {
    executor: Arc<dyn Executor>,
    embeddings: Arc<EmbeddingService>,
    fixtures: Option<Arc<FixtureExecutor>>,
    record_time: bool,
}

impl Engine {
    pub fn new(executor: Arc<dyn Executor>, embeddings: Arc<EmbeddingService>) -> Self {
        Self { executor, embeddings, fixtures: None, record_time: false }
    }

    /// No sandbox: scripted fixtures are answered from their stored truths
    /// and any other code is reported as a runtime error.
    pub fn offline(config: &GameConfig) -> Result<Self, EngineError> {
        let fixtures = Arc::new(FixtureExecutor::new());
        let embeddings = Arc::new(EmbeddingService::from_config(config)?);
        Ok(Self { executor: fixtures.clone(), embeddings, fixtures: Some(fixtures), record_time: false })
    }

    /// Uses the harness named by `SKATE_SANDBOX_CMD` or the config, falling
    /// back to [`Engine::offline`] when neither is set.
    pub fn from_config(config: &GameConfig) -> Result<Self, EngineError> {
        match resolve_harness_cmd(config) {
            Some(argv) => {
                let embeddings = Arc::new(EmbeddingService::from_config(config)?);
                Ok(Self::new(Arc::new(ProcessExecutor::new(argv)?), embeddings))
            }
            None => Self::offline(config),
        }
    }

    pub fn has_harness(&self) -> bool {
        self.fixtures.is_none()
    }

    /// Records the wall-clock start time in new archives.
    pub fn with_timestamps(mut self, on: bool) -> Self {
        self.record_time = on;
        self
    }

    pub fn executor(&self) -> &dyn Executor {
        &*self.executor
    }

    pub fn embeddings(&self) -> &EmbeddingService {
        &self.embeddings
    }

    /// Teaches the offline executor the scripted players' fixtures. No-op
    /// when a real harness is in use.
    pub fn register_fixtures(&self, players: &[Player]) {
        let Some(table) = &self.fixtures else { return };
        for p in players {
            if let PlayerSpec::Scripted(profile) = &p.spec {
                for f in &profile.pool {
                    match &f.truth {
                        Some(t) => table.register(&f.code, &format!("{t}\n")),
                        None => table.register_result(
                            &f.code,
                            ExecutionResult::failed(ExecStatus::RuntimeError, "", "fixture marked as failing"),
                        ),
                    }
                }
            }
        }
    }

    fn check_roster(players: &[Player], config: &GameConfig) -> Result<(), EngineError> {
        let mut ids: Vec<&PlayerId> = players.iter().map(|p| &p.id).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(EngineError::Roster(format!("duplicate player id `{}`", w[0])));
        }
        for p in players {
            if p.id.as_str().is_empty() {
                return Err(EngineError::Roster("empty player id".into()));
            }
            match &p.spec {
                PlayerSpec::Scripted(profile) => {
                    profile.validate().map_err(|e| EngineError::Roster(format!("player `{}`: {e}", p.id)))?;
                    if profile.pool.iter().any(|f| f.distractors.len() < config.n_distractors && f.truth.is_some()) {
                        tracing::warn!(player = %p.id, "some fixtures carry fewer distractors than required");
                    }
                }
                PlayerSpec::Provider(cfg) => cfg
                    .check_credential()
                    .map_err(|source| EngineError::Provider { player: p.id.clone(), source })?,
            }
        }
        Ok(())
    }

    /// An empty archive for a new game.
    pub fn start(&self, config: &GameConfig, players: Vec<Player>) -> Result<GameArchive, EngineError> {
        config.validate()?;
        if players.len() < 2 {
            return Err(EngineError::Roster(format!("a game needs at least 2 players, got {}", players.len())));
        }
        Self::check_roster(&players, config)?;
        self.register_fixtures(&players);
        let created_unix = self.record_time.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        });
        let provenance = Provenance {
            seed: config.rng_seed,
            planned_rounds: config.n_rounds,
            generator: format!("skate {}", env!("CARGO_PKG_VERSION")),
            models: players.iter().map(|p| (p.id.clone(), model_label(p))).collect(),
            created_unix,
        };
        Ok(GameArchive::new(config.clone(), players, provenance))
    }

    /// Plays a whole game in memory.
    pub fn play_game(&self, config: &GameConfig, players: Vec<Player>) -> Result<GameArchive, EngineError> {
        let mut archive = self.start(config, players)?;
        self.run(&mut archive, None)?;
        Ok(archive)
    }

    /// Plays a whole game, writing the archive to `store` after every round.
    pub fn play_game_in(
        &self,
        store: &ArchiveStore,
        config: &GameConfig,
        players: Vec<Player>,
    ) -> Result<GameArchive, EngineError> {
        let mut archive = self.start(config, players)?;
        store.save(&archive)?;
        self.run(&mut archive, Some(store))?;
        Ok(archive)
    }

    /// Continues a game stored in `store` from its last complete round.
    pub fn resume(&self, store: &ArchiveStore) -> Result<GameArchive, EngineError> {
        let mut archive = store.load_for_resume()?;
        Self::check_roster(&archive.roster, &archive.config)?;
        self.register_fixtures(&archive.roster);
        self.run(&mut archive, Some(store))?;
        Ok(archive)
    }

    /// Plays rounds until the archive reaches its planned length, appending
    /// each completed round to `store`.
    pub fn run(&self, archive: &mut GameArchive, store: Option<&ArchiveStore>) -> Result<(), EngineError> {
        self.register_fixtures(&archive.roster);
        while !archive.is_complete() {
            let round = archive.rounds.len() + 1;
            let record = self.play_round(archive, round)?;
            archive.commit_round(record)?;
            if let Some(store) = store {
                store.append_last_round(archive)?;
            }
            tracing::info!(round, "round complete");
        }
        Ok(())
    }

    /// Plays round `round` (1-based) against the archive's current state.
    /// The returned record has estimates but no rating updates yet; pass it
    /// to [`GameArchive::commit_round`].
    pub fn play_round(&self, archive: &GameArchive, round: usize) -> Result<RoundRecord, EngineError> {
        let config = &archive.config;
        let services = Services { executor: &*self.executor, embeddings: &self.embeddings };
        let round_label = round.to_string();
        let mut setters = Vec::with_capacity(archive.roster.len());
        let mut accepted: Vec<Question> = Vec::new();

        for player in &archive.roster {
            let mut failures: Vec<ValidationFailure> = Vec::new();
            let mut question = None;
            let first_serial = archive.proposals_by(&player.id);
            for attempt in 1..=config.n_attempts {
                let attempt_label = attempt.to_string();
                let mut rng = derive_rng(config.rng_seed, &["view", &round_label, player.id.as_str(), &attempt_label]);
                let remaining = config.n_attempts - failures.len();
                let view = build_archive_view(archive, &player.id, player.strategy, &failures, remaining, &mut rng);
                let prompt = build_setter_prompt(&view, round, config);
                let raw = player
                    .propose(&prompt, first_serial + attempt - 1, config)
                    .map_err(|source| EngineError::Provider { player: player.id.clone(), source })?;

                let (rationale, code) = match parse_setter_output(&raw) {
                    Ok(parsed) => parsed,
                    Err(e) => {
                        failures.push(ValidationFailure {
                            attempt,
                            reason: FailureReason::NotVerifiable,
                            detail: format!("MALFORMED_OUTPUT: {}", e.0),
                            code: raw.trim().to_string(),
                        });
                        continue;
                    }
                };
                let candidate = CandidateQuestion {
                    setter: player.id.clone(),
                    round,
                    code,
                    rationale,
                    claimed_distractors: Vec::new(),
                };
                let history: Vec<&Question> = match config.uniqueness_scope {
                    UniquenessScope::Own => archive.questions().filter(|q| q.setter() == &player.id).collect(),
                    UniquenessScope::Global => archive.questions().chain(accepted.iter()).collect(),
                };
                match validate_candidate(candidate, attempt, player, &history, &services, config)? {
                    Validation::Accepted(q) => {
                        question = Some(q);
                        break;
                    }
                    Validation::Rejected(f) => {
                        tracing::debug!(setter = %player.id, round, %f, "attempt rejected");
                        failures.push(f);
                    }
                }
            }
            if let Some(q) = &question {
                accepted.push(q.clone());
            }
            setters.push(SetterRecord { setter: player.id.clone(), failures, question });
        }

        let mut estimates = BTreeMap::new();
        for q in &accepted {
            estimates.insert(q.id().clone(), self.score_question(q, &archive.roster, config)?);
        }
        Ok(RoundRecord { round, setters, estimates, matches: Vec::new() })
    }

    /// Estimates p(correct) on `question` for each of `players`, in parallel.
    /// Each player's presentations come from its own seeded stream, so the
    /// result does not depend on scheduling.
    pub fn score_question(
        &self,
        question: &Question,
        players: &[Player],
        config: &GameConfig,
    ) -> Result<BTreeMap<PlayerId, PCorrectEstimate>, EngineError> {
        let seed = config.rng_seed;
        let results: Vec<(PlayerId, PCorrectEstimate)> = std::thread::scope(|s| {
            let handles: Vec<_> = players
                .iter()
                .map(|p| {
                    s.spawn(move || {
                        let mut rng = derive_rng(seed, &["present", question.id().as_str(), p.id.as_str()]);
                        let est = estimate_p_correct(
                            |pres, i| p.answer(question, pres, i, seed, config),
                            question,
                            config,
                            &mut rng,
                        );
                        (p.id.clone(), est)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("scoring thread panicked")).collect()
        });
        for (id, e) in &results {
            if e.answer_failures == e.n_presented {
                return Err(EngineError::Provider {
                    player: id.clone(),
                    source: ProviderError::Transport(format!(
                        "no usable answer in {} presentations of {}",
                        e.n_presented,
                        question.id()
                    )),
                });
            }
        }
        Ok(results.into_iter().collect())
    }

    /// Adds `new_players` to a game.
    ///
    /// Every new player answers every existing question, then all ratings are
    /// recomputed from priors over the extended estimates. Under
    /// [`JoinMode::FullJoin`] the game then continues for another `n_rounds`
    /// rounds with everyone setting questions. When `store` is given the
    /// whole archive is rewritten there.
    pub fn add_players(
        &self,
        archive: &mut GameArchive,
        new_players: Vec<Player>,
        mode: JoinMode,
        store: Option<&ArchiveStore>,
    ) -> Result<(), EngineError> {
        if !archive.is_complete() {
            return Err(EngineError::Roster("players can only be added to a completed game".into()));
        }
        let mut all = archive.roster.clone();
        all.extend(new_players.iter().cloned());
        Self::check_roster(&all, &archive.config)?;
        self.register_fixtures(&new_players);

        let config = archive.config.clone();
        let questions: Vec<Question> = archive.questions().cloned().collect();
        for q in &questions {
            let fresh = self.score_question(q, &new_players, &config)?;
            let round = archive.rounds.iter_mut().find(|r| r.round == q.round()).expect("question's round exists");
            round.estimates.get_mut(q.id()).expect("estimates exist").extend(fresh);
        }
        for p in &new_players {
            archive.provenance.models.insert(p.id.clone(), model_label(p));
        }
        archive.roster = all;
        archive.roster.sort_by(|a, b| a.id.cmp(&b.id));
        archive.recompute_ratings()?;
        if mode == JoinMode::FullJoin {
            archive.provenance.planned_rounds += config.n_rounds;
        }
        if let Some(store) = store {
            store.save(archive)?;
        }
        if mode == JoinMode::FullJoin {
            self.run(archive, store)?;
        }
        Ok(())
    }
}

fn model_label(p: &Player) -> String {
    match &p.spec {
        PlayerSpec::Scripted(_) => "scripted".into(),
        PlayerSpec::Provider(cfg) => format!("{}/{}", cfg.name, cfg.model),
    }
}

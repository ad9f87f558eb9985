//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Mutex};

use serde_json::json;
use skate::engine::{GameArchive, Provenance, RoundRecord, SetterRecord};
use skate::players::{ChatClient, ProviderConfig, ProviderError};
use skate::similarity::EmbeddingService;
use skate::{default_config, AugmentationStrategy, GameConfig, PCorrectEstimate, Player, PlayerId, Question, QuestionId, ScriptedProfile};

/// A question built outside the validity pipeline, through its serialized
/// form.
pub fn question(round: usize, setter: &str, code: &str, truth: &str, distractors: &[&str]) -> Question {
    let emb = EmbeddingService::stub(16).embed(code).unwrap();
    serde_json::from_value(json!({
        "id": QuestionId::for_round(round, &PlayerId::new(setter)),
        "setter": setter,
        "round": round,
        "code": code,
        "rationale": "fixture",
        "truth": truth,
        "distractors": distractors,
        "embedding": emb,
    }))
    .unwrap()
}

pub fn nine_distractors() -> Vec<&'static str> {
    vec!["1", "2", "3", "4", "5", "6", "7", "8", "9"]
}

/// An archive with hand-chosen estimates. `rounds[r]` lists
/// `(setter, [(player, n_correct, n_presented)])` for round `r + 1`.
/// `(setter, [(player, n_correct, n_presented)])` for each question of a round.
pub type HandRound<'a> = Vec<(&'a str, Vec<(&'a str, usize, usize)>)>;

pub fn hand_archive(players: &[&str], rounds: &[HandRound<'_>]) -> GameArchive {
    let roster: Vec<Player> = players
        .iter()
        .map(|p| Player::scripted(*p, AugmentationStrategy::NoInfo, ScriptedProfile::generated(0.5, p, 1)))
        .collect();
    let provenance = Provenance {
        seed: 0,
        planned_rounds: rounds.len(),
        generator: "hand".into(),
        models: BTreeMap::new(),
        created_unix: None,
    };
    let mut archive = GameArchive::new(default_config(), roster, provenance);
    for (i, qs) in rounds.iter().enumerate() {
        let round = i + 1;
        let mut setters = Vec::new();
        let mut estimates = BTreeMap::new();
        for (setter, scores) in qs {
            let q = question(round, setter, &format!("print('{setter}', {round})"), "0", &nine_distractors());
            let per = scores
                .iter()
                .map(|(p, k, n)| (PlayerId::new(*p), PCorrectEstimate::from_counts(*k, *n)))
                .collect();
            estimates.insert(q.id().clone(), per);
            setters.push(SetterRecord { setter: PlayerId::new(*setter), failures: vec![], question: Some(q) });
        }
        setters.sort_by(|a, b| a.setter.cmp(&b.setter));
        archive.commit_round(RoundRecord { round, setters, estimates, matches: vec![] }).unwrap();
    }
    archive
}

pub fn scripted(id: &str, accuracy: f64) -> Player {
    Player::scripted(id, AugmentationStrategy::HistoricalPerformance, ScriptedProfile::generated(accuracy, id, 128))
}

pub fn config(rounds: usize, seed: u64) -> GameConfig {
    GameConfig { n_rounds: rounds, rng_seed: seed, ..default_config() }
}

/// Env var the mock provider players point their credential at.
pub const MOCK_KEY_ENV: &str = "SKATE_TEST_MOCK_KEY";

pub fn mock_provider_config() -> ProviderConfig {
    // Set once per process before any provider player is checked.
    std::env::set_var(MOCK_KEY_ENV, "test-key");
    ProviderConfig {
        name: "mock".into(),
        endpoint: "http://127.0.0.1:9".into(),
        model: "mock-1".into(),
        credential_env: MOCK_KEY_ENV.into(),
        max_concurrent: 1,
    }
}

/// A chat client that replays scripted setter outputs, returns a fixed
/// distractor list and always answers `A`. Every prompt is recorded.
pub struct MockClient {
    pub setter_replies: Mutex<VecDeque<String>>,
    pub distractors: Vec<String>,
    pub prompts: Mutex<Vec<String>>,
}

impl MockClient {
    pub fn new(setter_replies: &[&str], distractors: &[&str]) -> Arc<Self> {
        Arc::new(Self {
            setter_replies: Mutex::new(setter_replies.iter().map(|s| s.to_string()).collect()),
            distractors: distractors.iter().map(|s| s.to_string()).collect(),
            prompts: Mutex::new(Vec::new()),
        })
    }

    pub fn setter_prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().iter().filter(|p| p.contains("Game Context:")).cloned().collect()
    }
}

impl ChatClient for MockClient {
    fn complete(&self, prompt: &str, _temperature: f64) -> Result<String, ProviderError> {
        self.prompts.lock().unwrap().push(prompt.to_string());
        if prompt.contains("Game Context:") {
            return self
                .setter_replies
                .lock()
                .unwrap()
                .pop_front()
                .ok_or_else(|| ProviderError::Transport("no scripted setter reply left".into()));
        }
        if prompt.contains("incorrect outputs") {
            return Ok(self.distractors.join("\n"));
        }
        Ok("A".into())
    }
}

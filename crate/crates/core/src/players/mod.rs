//! Players: scripted stand-ins and chat-provider-backed models.

pub mod prompt;
pub mod provider;
pub mod scripted;
pub mod view;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use provider::{ChatClient, OpenAiChatClient, ProviderConfig, ProviderError};
pub use scripted::{generate_pool, Fixture, ScriptedProfile};
pub use view::{build_archive_view, ArchiveView, ViewEntry};

use crate::config::GameConfig;
use crate::scoring::{AnswerError, Presentation};
use crate::seed::derive_rng;
use crate::types::{PlayerId, Question};

/// How much of the archive a setter sees when writing its next question.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AugmentationStrategy {
    NoInfo,
    HistoricalTasks,
    #[default]
    HistoricalPerformance,
    FullPersonalContext,
    FullContext,
}

impl AugmentationStrategy {
    pub const ALL: [Self; 5] = [
        Self::NoInfo,
        Self::HistoricalTasks,
        Self::HistoricalPerformance,
        Self::FullPersonalContext,
        Self::FullContext,
    ];
}

impl fmt::Display for AugmentationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NoInfo => "NO_INFO",
            Self::HistoricalTasks => "HISTORICAL_TASKS",
            Self::HistoricalPerformance => "HISTORICAL_PERFORMANCE",
            Self::FullPersonalContext => "FULL_PERSONAL_CONTEXT",
            Self::FullContext => "FULL_CONTEXT",
        })
    }
}

impl std::str::FromStr for AugmentationStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown augmentation strategy `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlayerSpec {
    Scripted(ScriptedProfile),
    Provider(ProviderConfig),
}

/// A game participant. Serializes without its live client; call
/// [`Player::connect`] after loading a provider player.
#[derive(Clone, Serialize, Deserialize)]
pub struct Player {
    pub id: PlayerId,
    pub strategy: AugmentationStrategy,
    pub spec: PlayerSpec,
    #[serde(skip)]
    client: Option<Arc<dyn ChatClient>>,
}

impl fmt::Debug for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Player")
            .field("id", &self.id)
            .field("strategy", &self.strategy)
            .field("spec", &self.spec)
            .field("connected", &self.client.is_some())
            .finish()
    }
}

impl PartialEq for Player {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.strategy == other.strategy && self.spec == other.spec
    }
}

/// Retries for a distractor request that came back short or failed.
const DISTRACTOR_RETRIES: usize = 3;

impl Player {
    pub fn scripted(id: impl Into<String>, strategy: AugmentationStrategy, profile: ScriptedProfile) -> Self {
        Self { id: PlayerId::new(id), strategy, spec: PlayerSpec::Scripted(profile), client: None }
    }

    /// A provider player talking to an OpenAI-compatible endpoint.
    pub fn provider(id: impl Into<String>, strategy: AugmentationStrategy, config: ProviderConfig) -> Self {
        let client: Arc<dyn ChatClient> = Arc::new(OpenAiChatClient::new(config.clone()));
        Self { id: PlayerId::new(id), strategy, spec: PlayerSpec::Provider(config), client: Some(client) }
    }

    /// A provider player with a caller-supplied client.
    pub fn with_client(
        id: impl Into<String>,
        strategy: AugmentationStrategy,
        config: ProviderConfig,
        client: Arc<dyn ChatClient>,
    ) -> Self {
        Self { id: PlayerId::new(id), strategy, spec: PlayerSpec::Provider(config), client: Some(client) }
    }

    /// Attaches an HTTP client to a deserialized provider player.
    pub fn connect(&mut self) {
        if let (PlayerSpec::Provider(cfg), None) = (&self.spec, &self.client) {
            self.client = Some(Arc::new(OpenAiChatClient::new(cfg.clone())));
        }
    }

    pub fn is_scripted(&self) -> bool {
        matches!(self.spec, PlayerSpec::Scripted(_))
    }

    fn client(&self) -> Result<&Arc<dyn ChatClient>, ProviderError> {
        self.client
            .as_ref()
            .ok_or_else(|| ProviderError::Transport(format!("player `{}` has no connected client", self.id)))
    }

    /// Raw setter output for `prompt`. `serial` is the 0-based count of
    /// questions this player has proposed so far in the game; scripted
    /// players use it to walk their pool.
    pub fn propose(&self, prompt: &str, serial: usize, config: &GameConfig) -> Result<String, ProviderError> {
        match &self.spec {
            PlayerSpec::Scripted(profile) => Ok(profile.fixture_for_attempt(serial).as_setter_output()),
            PlayerSpec::Provider(_) => self.client()?.complete(prompt, config.temperature),
        }
    }

    /// Up to `n` cleaned wrong answers for a verified snippet.
    ///
    /// Provider players are re-asked up to three more times while the list
    /// is short. An error is returned only when every request failed.
    pub fn request_distractors(
        &self,
        code: &str,
        truth: &str,
        n: usize,
        config: &GameConfig,
    ) -> Result<Vec<String>, ProviderError> {
        match &self.spec {
            PlayerSpec::Scripted(profile) => {
                let raw = profile.fixture_by_code(code).map(|f| f.distractors.clone()).unwrap_or_default();
                Ok(clean_distractors(raw, truth))
            }
            PlayerSpec::Provider(_) => {
                let client = self.client()?;
                let text = prompt::build_distractor_prompt(code, truth, n);
                let mut collected: Vec<String> = Vec::new();
                let mut last_err = None;
                let mut any_ok = false;
                for _ in 0..=DISTRACTOR_RETRIES {
                    match client.complete(&text, config.temperature) {
                        Ok(reply) => {
                            any_ok = true;
                            collected.extend(prompt::parse_distractor_reply(&reply));
                            collected = clean_distractors(collected, truth);
                            if collected.len() >= n {
                                break;
                            }
                        }
                        Err(e) => last_err = Some(e),
                    }
                }
                match (any_ok, last_err) {
                    (false, Some(e)) => Err(e),
                    _ => Ok(collected),
                }
            }
        }
    }

    /// Picks an option for one presentation.
    ///
    /// `index` is the presentation's position within the current estimate;
    /// scripted players seed their draw from `(seed, question, player, index)`.
    pub fn answer(
        &self,
        question: &Question,
        presentation: &Presentation,
        index: usize,
        seed: u64,
        config: &GameConfig,
    ) -> Result<usize, AnswerError> {
        let n = presentation.options.len();
        match &self.spec {
            PlayerSpec::Scripted(profile) => {
                let idx = index.to_string();
                let mut rng = derive_rng(
                    seed,
                    &["answer", question.id().as_str(), self.id.as_str(), &idx],
                );
                let acc = profile.accuracy_for(question.rationale());
                Ok(scripted_choice(acc, presentation.truth_index, n, &mut rng))
            }
            PlayerSpec::Provider(_) => {
                let client = self.client().map_err(|e| AnswerError::Failed(e.to_string()))?;
                let text = prompt::build_answer_prompt(question.code(), presentation);
                let reply = client
                    .complete(&text, config.temperature)
                    .map_err(|e| AnswerError::Failed(e.to_string()))?;
                prompt::parse_answer(&reply, n)
                    .ok_or_else(|| AnswerError::Failed(format!("unparseable answer {:?}", reply.trim())))
            }
        }
    }
}

/// Bernoulli(`accuracy`) on the truth, otherwise a uniform wrong option.
pub fn scripted_choice<R: Rng + ?Sized>(accuracy: f64, truth_index: usize, n_options: usize, rng: &mut R) -> usize {
    let correct = rng.random::<f64>() < accuracy;
    if correct || n_options < 2 {
        return truth_index;
    }
    let k = rng.random_range(0..n_options - 1);
    if k >= truth_index {
        k + 1
    } else {
        k
    }
}

/// Trims trailing whitespace, drops exact duplicates (keeping first
/// occurrence), empty strings and anything equal to `truth`.
pub fn clean_distractors(raw: Vec<String>, truth: &str) -> Vec<String> {
    let truth = truth.trim_end();
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    for d in raw {
        let d = d.trim_end();
        if d.is_empty() || d == truth || out.iter().any(|o| o == d) {
            continue;
        }
        out.push(d.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use crate::scoring::make_presentation;
    use crate::seed::rng_from_seed;
    use crate::testutil::question_with;
    use std::sync::Mutex;

    fn distractors(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("d{i}")).collect()
    }

    #[test]
    fn cleaning_rules() {
        let raw: Vec<String> = ["1", "2 ", "2", "7", "3", "4", "5", "6", "8", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let got = clean_distractors(raw, "7\n");
        assert_eq!(got, vec!["1", "2", "3", "4", "5", "6", "8", "9"]);
        assert_eq!(clean_distractors(distractors(9), "x").len(), 9);
    }

    #[test]
    fn scripted_distractors_are_the_fixture_list() {
        let profile = ScriptedProfile::generated(0.5, "s", 3);
        let f = profile.pool[1].clone();
        let p = Player::scripted("s", AugmentationStrategy::NoInfo, profile);
        let got = p.request_distractors(&f.code, f.truth.as_deref().unwrap(), 9, &default_config()).unwrap();
        assert_eq!(got, f.distractors);
    }

    fn empirical_rate(acc: f64, n: usize) -> f64 {
        let q = question_with("42", distractors(9));
        let p = Player::scripted("s", AugmentationStrategy::NoInfo, ScriptedProfile::generated(acc, "s", 1));
        let cfg = default_config();
        let mut rng = rng_from_seed(9);
        let mut correct = 0;
        for i in 0..n {
            let pres = make_presentation(&q, 4, &mut rng);
            let a = p.answer(&q, &pres, i, 17, &cfg).unwrap();
            assert!(a < 4);
            correct += usize::from(a == pres.truth_index);
        }
        correct as f64 / n as f64
    }

    #[test]
    fn scripted_extremes() {
        assert_eq!(empirical_rate(1.0, 500), 1.0);
        assert_eq!(empirical_rate(0.0, 500), 0.0);
    }

    #[test]
    fn scripted_rate_tracks_accuracy() {
        let r = empirical_rate(0.7, 10_000);
        assert!((0.685..=0.715).contains(&r), "{r}");
    }

    #[test]
    fn scripted_wrong_answers_are_uniform() {
        let mut rng = rng_from_seed(3);
        let mut counts = [0usize; 4];
        for _ in 0..30_000 {
            counts[scripted_choice(0.0, 2, 4, &mut rng)] += 1;
        }
        assert_eq!(counts[2], 0);
        for c in [counts[0], counts[1], counts[3]] {
            assert!((9_500..10_500).contains(&c), "{counts:?}");
        }
    }

    struct Canned {
        replies: Mutex<Vec<Result<String, ProviderError>>>,
        prompts: Mutex<Vec<String>>,
    }

    impl Canned {
        fn new(replies: Vec<Result<String, ProviderError>>) -> Arc<Self> {
            Arc::new(Self { replies: Mutex::new(replies), prompts: Mutex::new(Vec::new()) })
        }
    }

    impl ChatClient for Canned {
        fn complete(&self, prompt: &str, _t: f64) -> Result<String, ProviderError> {
            self.prompts.lock().unwrap().push(prompt.to_string());
            let mut r = self.replies.lock().unwrap();
            if r.is_empty() {
                Err(ProviderError::Transport("exhausted".into()))
            } else {
                r.remove(0)
            }
        }
    }

    fn provider_player(client: Arc<Canned>) -> Player {
        let cfg = ProviderConfig {
            name: "mock".into(),
            endpoint: "http://localhost".into(),
            model: "m".into(),
            credential_env: "MOCK_KEY".into(),
            max_concurrent: 1,
        };
        Player::with_client("p", AugmentationStrategy::NoInfo, cfg, client)
    }

    #[test]
    fn provider_distractors_are_reasked_when_short() {
        let client = Canned::new(vec![
            Ok("1\n2\n3\n3\n42".into()),
            Err(ProviderError::Status { status: 500, body: String::new() }),
            Ok("4\n5\n6\n7\n8\n9\n10".into()),
        ]);
        let p = provider_player(client.clone());
        let got = p.request_distractors("print(42)", "42", 9, &default_config()).unwrap();
        assert_eq!(got, vec!["1", "2", "3", "4", "5", "6", "7", "8", "9", "10"]);
        assert_eq!(client.prompts.lock().unwrap().len(), 3);
    }

    #[test]
    fn provider_distractors_return_partial_list_after_retries() {
        let client = Canned::new(vec![Ok("1".into()), Ok("2".into()), Ok("2".into()), Ok("3".into())]);
        let got = provider_player(client).request_distractors("c", "0", 9, &default_config()).unwrap();
        assert_eq!(got, vec!["1", "2", "3"]);
    }

    #[test]
    fn provider_down_is_an_error() {
        let client = Canned::new(vec![]);
        assert!(provider_player(client).request_distractors("c", "0", 9, &default_config()).is_err());
    }

    #[test]
    fn provider_answer_parses_letter() {
        let q = question_with("42", distractors(9));
        let mut rng = rng_from_seed(1);
        let pres = make_presentation(&q, 4, &mut rng);
        let client = Canned::new(vec![Ok("C".into()), Ok("maybe".into())]);
        let p = provider_player(client.clone());
        assert_eq!(p.answer(&q, &pres, 0, 0, &default_config()), Ok(2));
        assert!(p.answer(&q, &pres, 1, 0, &default_config()).is_err());
        assert!(client.prompts.lock().unwrap()[0].contains("A) "));
    }

    #[test]
    fn player_round_trips_without_client() {
        let p = Player::scripted("alice", AugmentationStrategy::FullContext, ScriptedProfile::generated(0.8, "a", 2));
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"kind\":\"SCRIPTED\""));
        assert_eq!(serde_json::from_str::<Player>(&json).unwrap(), p);
    }

    #[test]
    fn strategy_names() {
        for s in AugmentationStrategy::ALL {
            assert_eq!(s.to_string().parse::<AugmentationStrategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{s}\""));
        }
    }
}

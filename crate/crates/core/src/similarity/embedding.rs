use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SimilarityError;
use crate::config::GameConfig;
use crate::seed::GameRng;
use rand::SeedableRng;

/// A question embedding tagged with the provider that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub provider: String,
    pub vector: Vec<f64>,
}

impl Embedding {
    pub fn new(provider: impl Into<String>, vector: Vec<f64>) -> Result<Self, SimilarityError> {
        if vector.is_empty() {
            return Err(SimilarityError::EmptyVector);
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(SimilarityError::NonFinite);
        }
        Ok(Self { provider: provider.into(), vector })
    }

    pub fn dimension(&self) -> usize {
        self.vector.len()
    }
}

/// Text in, vector out.
pub trait EmbeddingProvider: Send + Sync {
    fn tag(&self) -> &str;
    fn embed(&self, text: &str) -> Result<Vec<f64>, SimilarityError>;
}

/// Offline provider: a unit vector with Gaussian components seeded by the
/// SHA-256 of the text. Identical texts map to identical vectors; unrelated
/// texts are nearly orthogonal in high dimension.
#[derive(Clone, Debug)]
pub struct StubEmbedder {
    tag: String,
    dim: usize,
}

impl StubEmbedder {
    pub fn new(dim: usize) -> Self {
        Self { tag: format!("stub-{dim}"), dim }
    }
}

impl EmbeddingProvider for StubEmbedder {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, SimilarityError> {
        let seed: [u8; 32] = Sha256::digest(text.as_bytes()).into();
        let mut rng = GameRng::from_seed(seed);
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(v)
    }
}

/// OpenAI-compatible `POST {endpoint}/embeddings` adapter.
pub struct HttpEmbedder {
    tag: String,
    endpoint: String,
    model: String,
    credential_env: String,
    agent: ureq::Agent,
}

impl HttpEmbedder {
    pub fn new(endpoint: &str, model: &str, credential_env: &str) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            tag: format!("http:{model}"),
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            credential_env: credential_env.to_string(),
            agent,
        }
    }
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: &'a str,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f64>,
}

impl EmbeddingProvider for HttpEmbedder {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, SimilarityError> {
        let key = std::env::var(&self.credential_env).unwrap_or_default();
        let url = format!("{}/embeddings", self.endpoint);
        let mut response = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(EmbeddingRequest { model: &self.model, input: text })
            .map_err(|e| SimilarityError::ProviderUnavailable(e.to_string()))?;
        let status = response.status().as_u16();
        if status != 200 {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(SimilarityError::ProviderUnavailable(format!("HTTP {status}: {body}")));
        }
        let parsed: EmbeddingResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| SimilarityError::ProviderUnavailable(format!("bad response: {e}")))?;
        parsed
            .data
            .into_iter()
            .next()
            .map(|d| d.embedding)
            .ok_or_else(|| SimilarityError::ProviderUnavailable("empty response".into()))
    }
}

/// Caching, retrying front end to an [`EmbeddingProvider`].
///
/// Cache keys are `(provider tag, sha256(text))`. The first successful call
/// pins the dimension; later vectors of another size are rejected.
pub struct EmbeddingService {
    provider: Box<dyn EmbeddingProvider>,
    cache: Mutex<HashMap<(String, [u8; 32]), Embedding>>,
    dimension: Mutex<Option<usize>>,
    provider_calls: AtomicUsize,
    retries: usize,
    backoff: Duration,
}

impl EmbeddingService {
    pub fn new(provider: Box<dyn EmbeddingProvider>) -> Self {
        Self {
            provider,
            cache: Mutex::new(HashMap::new()),
            dimension: Mutex::new(None),
            provider_calls: AtomicUsize::new(0),
            retries: 3,
            backoff: Duration::from_millis(250),
        }
    }

    pub fn stub(dim: usize) -> Self {
        Self::new(Box::new(StubEmbedder::new(dim)))
    }

    pub fn from_config(config: &GameConfig) -> Result<Self, SimilarityError> {
        match config.embedding_provider.as_str() {
            "stub" => Ok(Self::stub(config.embedding_dim)),
            "http" => Ok(Self::new(Box::new(HttpEmbedder::new(
                &config.embedding_endpoint,
                &config.embedding_model,
                &config.embedding_credential_env,
            )))),
            other => Err(SimilarityError::ProviderUnavailable(format!(
                "unknown embedding provider `{other}` (expected `stub` or `http`)"
            ))),
        }
    }

    pub fn with_retry(mut self, retries: usize, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    pub fn provider_tag(&self) -> &str {
        self.provider.tag()
    }

    /// Number of calls that reached the provider (cache misses, including retries).
    pub fn provider_calls(&self) -> usize {
        self.provider_calls.load(Ordering::Relaxed)
    }

    pub fn embed(&self, text: &str) -> Result<Embedding, SimilarityError> {
        if text.trim().is_empty() {
            return Err(SimilarityError::EmptyText);
        }
        let key = (self.provider.tag().to_string(), Sha256::digest(text.as_bytes()).into());
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let vector = self.call_with_retry(text)?;
        {
            let mut dim = self.dimension.lock().expect("dimension poisoned");
            match *dim {
                Some(d) if d != vector.len() => {
                    return Err(SimilarityError::DimensionMismatch { expected: d, got: vector.len() })
                }
                _ => *dim = Some(vector.len()),
            }
        }
        let embedding = Embedding::new(self.provider.tag(), vector)?;
        self.cache.lock().expect("cache poisoned").insert(key, embedding.clone());
        Ok(embedding)
    }

    fn call_with_retry(&self, text: &str) -> Result<Vec<f64>, SimilarityError> {
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            self.provider_calls.fetch_add(1, Ordering::Relaxed);
            match self.provider.embed(text) {
                Ok(v) => return Ok(v),
                Err(SimilarityError::ProviderUnavailable(msg)) if attempt < self.retries => {
                    tracing::warn!(attempt, %msg, "embedding provider failed, retrying");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

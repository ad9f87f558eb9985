use crate::config::GameConfig;
use crate::players::Player;
use crate::sandbox::{verify_question, Executor};
use crate::similarity::{is_unique, EmbeddingService};
use crate::types::{CandidateQuestion, FailureReason, Question, ValidationFailure};

use super::EngineError;

/// Result of running one candidate through the validity checks.
#[derive(Clone, Debug, PartialEq)]
pub enum Validation {
    Accepted(Question),
    Rejected(ValidationFailure),
}

/// External services the checks call out to.
pub struct Services<'a> {
    pub executor: &'a dyn Executor,
    pub embeddings: &'a EmbeddingService,
}

/// Checks, in order and stopping at the first failure: the code runs to the
/// same non-empty output every time; the setter supplies enough distinct
/// wrong answers; the code is far enough from every question in `history`.
///
/// `attempt` is the 1-based attempt number recorded on a rejection.
/// Sandbox, provider and embedding outages are returned as errors rather
/// than rejections.
pub fn validate_candidate(
    candidate: CandidateQuestion,
    attempt: usize,
    setter: &Player,
    history: &[&Question],
    services: &Services<'_>,
    config: &GameConfig,
) -> Result<Validation, EngineError> {
    let reject = |reason: FailureReason, detail: String, code: &str| {
        Ok(Validation::Rejected(ValidationFailure { attempt, reason, detail, code: code.to_string() }))
    };

    let verification = verify_question(services.executor, &candidate.code, config.verification_runs, config)?;
    let truth = match (verification.verifiable, verification.truth, verification.failure_reason) {
        (true, Some(truth), _) => truth,
        (_, _, reason) => {
            let detail = reason.map_or_else(|| "verification failed".to_string(), |r| r.to_string());
            return reject(FailureReason::NotVerifiable, detail, &candidate.code);
        }
    };

    if matches!(truth.as_str(), "True" | "False") {
        return reject(
            FailureReason::NotDistractorRich,
            format!("the output {truth} is a boolean and has only one wrong alternative"),
            &candidate.code,
        );
    }
    let mut distractors = setter
        .request_distractors(&candidate.code, &truth, config.n_distractors, config)
        .map_err(|source| EngineError::Provider { player: setter.id.clone(), source })?;
    if distractors.len() < config.n_distractors {
        return reject(
            FailureReason::NotDistractorRich,
            format!(
                "only {} unique wrong answers distinct from the output {truth:?}; {} are required",
                distractors.len(),
                config.n_distractors
            ),
            &candidate.code,
        );
    }
    distractors.truncate(config.n_distractors);

    let embedding = services.embeddings.embed(&candidate.code)?;
    let prior: Vec<_> = history.iter().map(|q| q.embedding()).collect();
    let u = is_unique(&embedding, &prior, config.d_thresh)?;
    if !u.unique {
        let (d, i) = u.nearest.expect("a non-unique candidate has a nearest neighbour");
        return reject(
            FailureReason::NotUnique,
            format!(
                "embedding distance {d:.4} to earlier question {} is not above the threshold {}",
                history[i].id(),
                config.d_thresh
            ),
            &candidate.code,
        );
    }

    Ok(Validation::Accepted(Question::from_validated(candidate, truth, distractors, embedding)))
}

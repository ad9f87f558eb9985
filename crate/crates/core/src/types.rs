//! Domain identifiers and question types shared across the game.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::similarity::Embedding;

/// Opaque player identifier. Ordering on ids is the canonical order used for
/// setters, pair updates and archive records.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlayerId(String);

impl PlayerId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for PlayerId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for PlayerId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuestionId(String);

impl QuestionId {
    /// Ids sort by round, then by setter.
    pub fn for_round(round: usize, setter: &PlayerId) -> Self {
        Self(format!("r{round:04}-{setter}"))
    }

    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for QuestionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A parsed but not yet validated question.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateQuestion {
    pub setter: PlayerId,
    pub round: usize,
    pub code: String,
    /// The first comment line of the setter's output.
    pub rationale: String,
    pub claimed_distractors: Vec<String>,
}

/// A question that passed the verifiable, distractor-rich and unique checks.
///
/// Fields are private: the only way to build one is
/// [`validate_candidate`](crate::engine::validate_candidate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Question {
    id: QuestionId,
    setter: PlayerId,
    round: usize,
    code: String,
    rationale: String,
    truth: String,
    distractors: Vec<String>,
    embedding: Embedding,
}

impl Question {
    pub(crate) fn from_validated(
        candidate: CandidateQuestion,
        truth: String,
        distractors: Vec<String>,
        embedding: Embedding,
    ) -> Self {
        Self {
            id: QuestionId::for_round(candidate.round, &candidate.setter),
            setter: candidate.setter,
            round: candidate.round,
            code: candidate.code,
            rationale: candidate.rationale,
            truth,
            distractors,
            embedding,
        }
    }

    pub fn id(&self) -> &QuestionId {
        &self.id
    }

    pub fn setter(&self) -> &PlayerId {
        &self.setter
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn rationale(&self) -> &str {
        &self.rationale
    }

    pub fn truth(&self) -> &str {
        &self.truth
    }

    pub fn distractors(&self) -> &[String] {
        &self.distractors
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureReason {
    NotVerifiable,
    NotDistractorRich,
    NotUnique,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NotVerifiable => "NOT_VERIFIABLE",
            Self::NotDistractorRich => "NOT_DISTRACTOR_RICH",
            Self::NotUnique => "NOT_UNIQUE",
        })
    }
}

/// One rejected attempt by a setter within a round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationFailure {
    /// 1-based attempt number within the round.
    pub attempt: usize,
    pub reason: FailureReason,
    pub detail: String,
    /// The code that was submitted, shown back to the setter on retry.
    pub code: String,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "attempt {}: {} ({})", self.attempt, self.reason, self.detail)
    }
}

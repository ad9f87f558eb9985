//! SKATE: a peer-challenge game in which players set code-output-prediction
//! questions for each other and are ranked by how well they answer them.
//!
//! The pieces, bottom up:
//!
//! * [`scoring`] estimates a player's p(correct) on one question by repeated
//!   shuffled multiple-choice presentations.
//! * [`rating`] turns pairs of estimates into win/loss/draw outcomes and
//!   TrueSkill updates.
//! * [`similarity`] embeds question code and rejects near-duplicates.
//! * [`sandbox`] runs candidate code through an external harness to
//!   establish its output.
//! * [`players`] holds scripted and provider-backed players and the prompts
//!   they see.
//! * [`engine`] runs rounds, validates questions and keeps the archive.
//! * [`analysis`] computes post-hoc measurements over an archive.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod engine;
pub mod players;
pub mod rating;
pub mod sandbox;
pub mod scoring;
pub mod seed;
pub mod similarity;
pub mod types;

pub use config::{default_config, GameConfig, PairUpdateGranularity, RankingMode, UniquenessScope};
pub use engine::{ArchiveStore, Engine, EngineError, GameArchive, JoinMode};
pub use players::{AugmentationStrategy, Player, ScriptedProfile};
pub use rating::{Outcome, Rating, TrueSkillParams};
pub use scoring::PCorrectEstimate;
pub use types::{PlayerId, Question, QuestionId};

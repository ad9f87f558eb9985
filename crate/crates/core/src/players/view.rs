use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AugmentationStrategy;
use crate::engine::GameArchive;
use crate::types::{PlayerId, ValidationFailure};

/// One archived question as shown to a setter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    /// 1-based position in chronological order among the questions this view
    /// can show, assigned before shuffling.
    pub number: usize,
    pub setter: PlayerId,
    pub code: String,
    /// p(correct) values the strategy reveals, sorted by player id.
    pub scores: Vec<(PlayerId, f64)>,
}

/// The slice of game state a setter is allowed to see.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveView {
    pub strategy: AugmentationStrategy,
    pub player: PlayerId,
    pub entries: Vec<ViewEntry>,
    pub failed_attempts: Vec<ValidationFailure>,
    pub attempts_remaining: usize,
}

/// Filters the archive for `player` according to `strategy` and shuffles the
/// entries with `rng`.
///
/// | strategy                | questions | scores          |
/// |-------------------------|-----------|-----------------|
/// | `NoInfo`                | none      | none            |
/// | `HistoricalTasks`       | own       | none            |
/// | `HistoricalPerformance` | own       | own             |
/// | `FullPersonalContext`   | own       | all players'    |
/// | `FullContext`           | all       | all players'    |
pub fn build_archive_view<R: Rng + ?Sized>(
    archive: &GameArchive,
    player: &PlayerId,
    strategy: AugmentationStrategy,
    failed_attempts: &[ValidationFailure],
    attempts_remaining: usize,
    rng: &mut R,
) -> ArchiveView {
    use AugmentationStrategy::*;
    let mut entries: Vec<ViewEntry> = Vec::new();
    if strategy != NoInfo {
        let visible = archive.questions().filter(|q| strategy == FullContext || q.setter() == player);
        for q in visible {
            let estimates = archive.estimates(q.id());
            let scores: Vec<(PlayerId, f64)> = match (strategy, estimates) {
                (HistoricalPerformance, Some(est)) => {
                    est.get(player).map(|e| vec![(player.clone(), e.p)]).unwrap_or_default()
                }
                (FullPersonalContext | FullContext, Some(est)) => {
                    est.iter().map(|(id, e)| (id.clone(), e.p)).collect()
                }
                _ => Vec::new(),
            };
            entries.push(ViewEntry {
                number: entries.len() + 1,
                setter: q.setter().clone(),
                code: q.code().to_string(),
                scores,
            });
        }
    }
    entries.shuffle(rng);
    ArchiveView {
        strategy,
        player: player.clone(),
        entries,
        failed_attempts: failed_attempts.to_vec(),
        attempts_remaining,
    }
}

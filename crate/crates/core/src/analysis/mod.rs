//! Post-hoc measurements over a finished archive. Every function here is a
//! pure function of the archive.

mod report;
mod sensitivity;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use report::{export_report, load_preference_matrices, Analysis, ReportBundle, ReportError};
pub use sensitivity::{sensitivity, SensitivityReport, VariationResult};

use crate::engine::GameArchive;
use crate::rating::BOUNDARY_EPS;
use crate::types::{PlayerId, Question, QuestionId};

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// `(question, p by player)` for every accepted question in canonical order.
fn scored_questions(archive: &GameArchive) -> Vec<(&Question, BTreeMap<&PlayerId, f64>)> {
    archive
        .questions()
        .map(|q| {
            let ps = archive
                .estimates(q.id())
                .map(|e| e.iter().map(|(id, est)| (id, est.p)).collect())
                .unwrap_or_default();
            (q, ps)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillDecomposition {
    pub player: PlayerId,
    /// Mean p(correct) on questions set by others; absent if there are none.
    pub answering_skill: Option<f64>,
    /// One minus the others' mean p(correct) on this player's questions;
    /// absent if the player never had a question accepted.
    pub asking_skill: Option<f64>,
    pub questions_set: usize,
    pub questions_answered: usize,
}

pub fn skill_decomposition(archive: &GameArchive) -> Vec<SkillDecomposition> {
    let scored = scored_questions(archive);
    archive
        .player_ids()
        .into_iter()
        .map(|player| {
            let answered: Vec<f64> = scored
                .iter()
                .filter(|(q, _)| q.setter() != &player)
                .filter_map(|(_, ps)| ps.get(&player).copied())
                .collect();
            let own: Vec<&(&Question, BTreeMap<&PlayerId, f64>)> =
                scored.iter().filter(|(q, _)| q.setter() == &player).collect();
            let others_on_own = own.iter().flat_map(|(_, ps)| {
                ps.iter().filter(|(id, _)| ***id != player).map(|(_, p)| *p)
            });
            SkillDecomposition {
                answering_skill: mean(answered.iter().copied()),
                asking_skill: mean(others_on_own).map(|m| 1.0 - m),
                questions_set: own.len(),
                questions_answered: answered.len(),
                player,
            }
        })
        .collect()
}

/// Mean p(correct) advantage of each answering player (rows) over everyone
/// else, per setter tranche (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreferenceMatrix {
    /// Row labels: answering players.
    pub players: Vec<PlayerId>,
    /// Column labels: setters whose questions form each tranche.
    pub setters: Vec<PlayerId>,
    /// `cells[row][col]`; `None` marks a tranche with no valid questions.
    pub cells: Vec<Vec<Option<f64>>>,
    /// Tranche sizes after filtering, per column.
    pub tranche_sizes: Vec<usize>,
    /// Questions were kept only where the setter's own p exceeded this.
    pub filter: Option<f64>,
}

impl PreferenceMatrix {
    pub fn cell(&self, player: &PlayerId, setter: &PlayerId) -> Option<f64> {
        let r = self.players.iter().position(|p| p == player)?;
        let c = self.setters.iter().position(|p| p == setter)?;
        self.cells[r][c]
    }

    /// Setters whose tranche the filter left empty.
    pub fn empty_tranches(&self) -> Vec<&PlayerId> {
        self.setters.iter().zip(&self.tranche_sizes).filter(|(_, n)| **n == 0).map(|(s, _)| s).collect()
    }
}

/// Cell `(i, j)` is player i's mean p on setter j's questions minus the mean
/// p of every other player on those questions. With `filter = Some(t)` only
/// questions whose setter scored strictly above `t` on them are kept.
pub fn preference_matrix(archive: &GameArchive, filter: Option<f64>) -> PreferenceMatrix {
    let ids = archive.player_ids();
    let scored = scored_questions(archive);
    let tranches: Vec<Vec<&BTreeMap<&PlayerId, f64>>> = ids
        .iter()
        .map(|setter| {
            scored
                .iter()
                .filter(|(q, _)| q.setter() == setter)
                .filter(|(_, ps)| filter.is_none_or(|t| ps.get(setter).is_some_and(|p| *p > t)))
                .map(|(_, ps)| ps)
                .collect()
        })
        .collect();
    let cells = ids
        .iter()
        .map(|player| {
            tranches
                .iter()
                .map(|tranche| {
                    let own = mean(tranche.iter().filter_map(|ps| ps.get(player).copied()))?;
                    let others = mean(
                        tranche.iter().flat_map(|ps| ps.iter().filter(|(id, _)| **id != player).map(|(_, p)| *p)),
                    )?;
                    Some(own - others)
                })
                .collect()
        })
        .collect();
    PreferenceMatrix {
        players: ids.clone(),
        setters: ids,
        cells,
        tranche_sizes: tranches.iter().map(Vec::len).collect(),
        filter,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceEntry {
    pub question_id: QuestionId,
    pub setter: PlayerId,
    /// Population variance of the players' p(correct).
    pub variance: f64,
    pub mean_p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceRanking {
    /// Highest variance first; ties by question id.
    pub entries: Vec<VarianceEntry>,
    /// Equal-width bins over `[0, 0.25]`, the range of the variance of
    /// values in `[0, 1]`. Each is `(lower, upper, count)`.
    pub histogram: Vec<(f64, f64, usize)>,
}

impl VarianceRanking {
    /// The `k` questions that best separate the players.
    pub fn top_k(&self, k: usize) -> &[VarianceEntry] {
        &self.entries[..k.min(self.entries.len())]
    }
}

pub const VARIANCE_MAX: f64 = 0.25;

pub fn population_variance(xs: &[f64]) -> f64 {
    let Some(m) = mean(xs.iter().copied()) else { return 0.0 };
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn variance_ranking(archive: &GameArchive, n_bins: usize) -> VarianceRanking {
    let n_bins = n_bins.max(1);
    let mut entries: Vec<VarianceEntry> = scored_questions(archive)
        .into_iter()
        .map(|(q, ps)| {
            let xs: Vec<f64> = ps.values().copied().collect();
            VarianceEntry {
                question_id: q.id().clone(),
                setter: q.setter().clone(),
                variance: population_variance(&xs),
                mean_p: mean(xs).unwrap_or(0.0),
            }
        })
        .collect();
    entries.sort_by(|a, b| b.variance.total_cmp(&a.variance).then_with(|| a.question_id.cmp(&b.question_id)));
    let width = VARIANCE_MAX / n_bins as f64;
    let mut histogram: Vec<(f64, f64, usize)> =
        (0..n_bins).map(|i| (i as f64 * width, (i + 1) as f64 * width, 0)).collect();
    for e in &entries {
        let i = ((e.variance / width) as usize).min(n_bins - 1);
        histogram[i].2 += 1;
    }
    VarianceRanking { entries, histogram }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulativeCurves {
    pub player: PlayerId,
    /// The player's accepted questions in the order they were set.
    pub question_ids: Vec<QuestionId>,
    /// Running mean of the player's own p on its questions.
    pub self_series: Vec<f64>,
    /// Running mean of the per-question mean p of everyone else.
    pub others_series: Vec<f64>,
}

fn running_mean(xs: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            sum += x;
            sum / (i + 1) as f64
        })
        .collect()
}

/// `None` if `player` has no accepted questions.
pub fn cumulative_curves(archive: &GameArchive, player: &PlayerId) -> Option<CumulativeCurves> {
    let mut ids = Vec::new();
    let mut own = Vec::new();
    let mut others = Vec::new();
    for (q, ps) in scored_questions(archive) {
        if q.setter() != player {
            continue;
        }
        ids.push(q.id().clone());
        own.push(ps.get(player).copied().unwrap_or(0.0));
        others.push(mean(ps.iter().filter(|(id, _)| **id != player).map(|(_, p)| *p)).unwrap_or(0.0));
    }
    (!ids.is_empty()).then(|| CumulativeCurves {
        player: player.clone(),
        question_ids: ids,
        self_series: running_mean(&own),
        others_series: running_mean(&others),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingSummary {
    pub player: PlayerId,
    /// Means over the last `steps` trajectory entries.
    pub mu: f64,
    pub sigma: f64,
    pub steps: usize,
}

pub const DEFAULT_SUMMARY_WINDOW: usize = 100;

/// Per-player mean μ and σ over the final `min(window, len)` update steps,
/// sorted by mean μ, highest first. With no updates yet the current ratings
/// are reported with `steps = 0`.
pub fn rating_summary(archive: &GameArchive, window: usize) -> Vec<RatingSummary> {
    let traj = &archive.trajectory;
    let tail = &traj[traj.len() - window.min(traj.len())..];
    let mut out: Vec<RatingSummary> = archive
        .current_ratings()
        .into_iter()
        .map(|(player, current)| {
            let (mu, sigma) = if tail.is_empty() {
                (current.mu, current.sigma)
            } else {
                let at = |e: &crate::engine::TrajectoryEntry| e.ratings.get(&player).copied().unwrap_or(current);
                (
                    mean(tail.iter().map(|e| at(e).mu)).unwrap_or(current.mu),
                    mean(tail.iter().map(|e| at(e).sigma)).unwrap_or(current.sigma),
                )
            };
            RatingSummary { player, mu, sigma, steps: tail.len() }
        })
        .collect();
    out.sort_by(|a, b| b.mu.total_cmp(&a.mu).then_with(|| a.player.cmp(&b.player)));
    out
}

/// Questions set by `player` that it passes (p ≥ `p_thresh`) while every
/// other player fails.
pub fn discriminatory_count(archive: &GameArchive, player: &PlayerId, p_thresh: f64) -> usize {
    let pass = |p: f64| p >= p_thresh - BOUNDARY_EPS;
    scored_questions(archive)
        .iter()
        .filter(|(q, _)| q.setter() == player)
        .filter(|(_, ps)| {
            ps.get(player).is_some_and(|p| pass(*p))
                && ps.iter().filter(|(id, _)| **id != player).all(|(_, p)| !pass(*p))
        })
        .count()
}

//! TrueSkill skill beliefs and the two rules that turn p(correct) pairs into
//! match outcomes.

mod gaussian;

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{GameConfig, RankingMode};
use crate::scoring::PCorrectEstimate;
use crate::types::PlayerId;

pub use gaussian::{cdf, inverse_cdf, pdf};

/// Slack for comparisons against thresholds. p(correct) values are ratios of
/// small integers, so differences that are exactly at a threshold in exact
/// arithmetic can land a few ulps either side of it in floating point.
pub const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatingError {
    #[error("numeric underflow in TrueSkill correction (t = {t}, eps = {eps})")]
    NumericUnderflow { t: f64, eps: f64 },
    #[error("invalid TrueSkill parameters: {0}")]
    InvalidParams(String),
    #[error("no estimate for player {0}")]
    MissingEstimate(PlayerId),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub mu: f64,
    pub sigma: f64,
}

impl Rating {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrueSkillParams {
    pub mu0: f64,
    pub sigma0: f64,
    /// Per-player performance noise.
    pub beta: f64,
    /// Dynamics noise added to every rating before each update.
    pub tau: f64,
    pub draw_probability: f64,
}

impl Default for TrueSkillParams {
    fn default() -> Self {
        let sigma0 = 25.0 / 3.0;
        Self { mu0: 25.0, sigma0, beta: sigma0 / 2.0, tau: sigma0 / 100.0, draw_probability: 0.10 }
    }
}

impl TrueSkillParams {
    pub fn prior(&self) -> Rating {
        Rating::new(self.mu0, self.sigma0)
    }

    /// Half-width of the draw band on the performance difference.
    pub fn draw_margin(&self) -> f64 {
        inverse_cdf((1.0 + self.draw_probability) / 2.0) * SQRT_2 * self.beta
    }

    pub fn validate(&self) -> Result<(), crate::config::ConfigError> {
        let fail = |m: &str| Err(crate::config::ConfigError::Invalid(m.to_string()));
        if self.sigma0.is_nan() || self.sigma0 <= 0.0 {
            return fail("sigma0 must be positive");
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return fail("beta must be positive");
        }
        if self.tau.is_nan() || self.tau < 0.0 {
            return fail("tau must be non-negative");
        }
        if !(0.0..1.0).contains(&self.draw_probability) {
            return fail("draw_probability must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    AWins,
    BWins,
    Draw,
}

impl Outcome {
    /// The same result seen from the other player's side.
    pub fn mirrored(self) -> Self {
        match self {
            Self::AWins => Self::BWins,
            Self::BWins => Self::AWins,
            Self::Draw => Self::Draw,
        }
    }
}

/// Draw when the scores differ by less than `sigma_star`, else the higher
/// score wins. A difference of exactly `sigma_star` is a win.
pub fn derive_outcome_relative(p_a: f64, p_b: f64, sigma_star: f64) -> Outcome {
    let delta = p_a - p_b;
    if delta.abs() < sigma_star - BOUNDARY_EPS {
        Outcome::Draw
    } else if delta > 0.0 {
        Outcome::AWins
    } else {
        Outcome::BWins
    }
}

/// Each player passes iff `p >= p_thresh`; a passer beats a failer and equal
/// verdicts draw.
pub fn derive_outcome_absolute(p_a: f64, p_b: f64, p_thresh: f64) -> Outcome {
    let pass = |p: f64| p >= p_thresh - BOUNDARY_EPS;
    match (pass(p_a), pass(p_b)) {
        (true, false) => Outcome::AWins,
        (false, true) => Outcome::BWins,
        _ => Outcome::Draw,
    }
}

pub fn derive_outcome(p_a: f64, p_b: f64, config: &GameConfig) -> Outcome {
    match config.ranking_mode {
        RankingMode::Relative => derive_outcome_relative(p_a, p_b, config.sigma_star),
        RankingMode::Absolute => derive_outcome_absolute(p_a, p_b, config.p_thresh),
    }
}

/// Two-player TrueSkill update with draws.
pub fn update_pair(
    a: Rating,
    b: Rating,
    outcome: Outcome,
    params: &TrueSkillParams,
) -> Result<(Rating, Rating), RatingError> {
    if outcome == Outcome::BWins {
        let (nb, na) = update_pair(b, a, Outcome::AWins, params)?;
        return Ok((na, nb));
    }
    let tau2 = params.tau * params.tau;
    let var_a = a.sigma * a.sigma + tau2;
    let var_b = b.sigma * b.sigma + tau2;
    let c2 = 2.0 * params.beta * params.beta + var_a + var_b;
    let c = c2.sqrt();
    let t = (a.mu - b.mu) / c;
    let eps = params.draw_margin() / c;
    let (v, w) = match outcome {
        Outcome::AWins => (gaussian::v_win(t, eps), gaussian::w_win(t, eps)),
        Outcome::Draw => (gaussian::v_draw(t, eps), gaussian::w_draw(t, eps)),
        Outcome::BWins => unreachable!(),
    };
    if !(v.is_finite() && w.is_finite() && w > 0.0 && w <= 1.0 + 1e-12) {
        return Err(RatingError::NumericUnderflow { t, eps });
    }
    let w = w.min(1.0);
    let new_a = Rating::new(a.mu + var_a / c * v, (var_a * (1.0 - var_a / c2 * w)).sqrt());
    let new_b = Rating::new(b.mu - var_b / c * v, (var_b * (1.0 - var_b / c2 * w)).sqrt());
    Ok((new_a, new_b))
}

/// One pairwise update, with ratings after the update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairUpdate {
    pub a: PlayerId,
    pub b: PlayerId,
    pub outcome: Outcome,
    pub a_after: Rating,
    pub b_after: Rating,
}

/// Updates `ratings` once per unordered pair of players in `scores`, in
/// sorted-id order, using the outcome rule selected by `config`.
pub fn apply_pairwise(
    ratings: &mut BTreeMap<PlayerId, Rating>,
    scores: &BTreeMap<PlayerId, f64>,
    config: &GameConfig,
) -> Result<Vec<PairUpdate>, RatingError> {
    let params = config.trueskill();
    let ids: Vec<&PlayerId> = scores.keys().collect();
    let mut log = Vec::with_capacity(ids.len() * ids.len().saturating_sub(1) / 2);
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let outcome = derive_outcome(scores[*a], scores[*b], config);
            let ra = *ratings.entry((*a).clone()).or_insert_with(|| params.prior());
            let rb = *ratings.entry((*b).clone()).or_insert_with(|| params.prior());
            let (na, nb) = update_pair(ra, rb, outcome, &params)?;
            ratings.insert((*a).clone(), na);
            ratings.insert((*b).clone(), nb);
            log.push(PairUpdate {
                a: (*a).clone(),
                b: (*b).clone(),
                outcome,
                a_after: na,
                b_after: nb,
            });
        }
    }
    Ok(log)
}

/// Pairwise updates for one question's estimates.
pub fn apply_question_results(
    ratings: &mut BTreeMap<PlayerId, Rating>,
    estimates: &BTreeMap<PlayerId, PCorrectEstimate>,
    config: &GameConfig,
) -> Result<Vec<PairUpdate>, RatingError> {
    let scores = estimates.iter().map(|(id, e)| (id.clone(), e.p)).collect();
    apply_pairwise(ratings, &scores, config)
}

//! Adaptive multiple-choice estimation of p(correct).
//!
//! Each presentation shows the truth alongside `n_options - 1` distractors
//! drawn afresh from the question's pool, in a uniformly shuffled order.
//! Presentations are issued in batches of `n_step` until the binomial
//! standard error of the running accuracy is at most `sigma_star`, or the
//! `max_samples` cap is reached.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::GameConfig;
use crate::types::{Question, QuestionId};

/// Retries after a failed answer before the presentation is scored incorrect.
pub const ANSWER_RETRIES: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    pub question_id: QuestionId,
    pub options: Vec<String>,
    pub truth_index: usize,
}

impl Presentation {
    pub fn truth(&self) -> &str {
        &self.options[self.truth_index]
    }
}

/// Answerer failure for a single presentation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnswerError {
    #[error("answerer failed: {0}")]
    Failed(String),
    #[error("answer index {index} out of range for {n_options} options")]
    OutOfRange { index: usize, n_options: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PCorrectEstimate {
    pub p: f64,
    pub std: f64,
    pub n_presented: usize,
    pub n_correct: usize,
    /// False when the sample cap was reached before `std <= sigma_star`.
    pub stable: bool,
    /// Presentations scored incorrect because the answerer never produced a
    /// usable answer.
    pub answer_failures: usize,
}

impl PCorrectEstimate {
    /// `p` and `std` computed from the counts; `n_presented` must be positive.
    pub fn from_counts(n_correct: usize, n_presented: usize) -> Self {
        assert!(n_presented > 0 && n_correct <= n_presented);
        let (p, std) = p_and_std(n_correct, n_presented);
        Self { p, std, n_presented, n_correct, stable: true, answer_failures: 0 }
    }

    /// True when `p` and `std` are exactly what the counts imply.
    pub fn is_consistent(&self) -> bool {
        let (p, std) = p_and_std(self.n_correct, self.n_presented);
        p.to_bits() == self.p.to_bits() && std.to_bits() == self.std.to_bits()
    }
}

fn p_and_std(n_correct: usize, n_presented: usize) -> (f64, f64) {
    let n = n_presented as f64;
    let p = n_correct as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

/// Draws one shuffled option set for `question`.
///
/// With `n_options == 1` the only option is the truth.
pub fn make_presentation<R: Rng + ?Sized>(
    question: &Question,
    n_options: usize,
    rng: &mut R,
) -> Presentation {
    let pool = question.distractors();
    let k = n_options.saturating_sub(1).min(pool.len());
    let mut options: Vec<String> = Vec::with_capacity(k + 1);
    options.push(question.truth().to_string());
    options.extend(index::sample(rng, pool.len(), k).into_iter().map(|i| pool[i].clone()));
    // Track the truth through the shuffle by permuting indices.
    let mut order: Vec<usize> = (0..options.len()).collect();
    order.shuffle(rng);
    let truth_index = order.iter().position(|&i| i == 0).unwrap_or(0);
    let options = order.into_iter().map(|i| options[i].clone()).collect();
    Presentation { question_id: question.id().clone(), options, truth_index }
}

/// Runs the adaptive estimation loop.
///
/// `answer_fn` receives each presentation and its 0-based sequence index
/// within this estimate. A presentation whose answer fails on the first try
/// and on all [`ANSWER_RETRIES`] retries counts as incorrect.
pub fn estimate_p_correct<F, R>(
    mut answer_fn: F,
    question: &Question,
    config: &GameConfig,
    rng: &mut R,
) -> PCorrectEstimate
where
    F: FnMut(&Presentation, usize) -> Result<usize, AnswerError>,
    R: Rng + ?Sized,
{
    let n_step = config.n_step.max(1);
    let cap = config.max_samples.max(n_step);
    let mut n_presented = 0usize;
    let mut n_correct = 0usize;
    let mut answer_failures = 0usize;
    loop {
        let batch = n_step.min(cap - n_presented);
        for _ in 0..batch {
            let presentation = make_presentation(question, config.n_options, rng);
            match answer_with_retries(&mut answer_fn, &presentation, n_presented) {
                Some(choice) if choice == presentation.truth_index => n_correct += 1,
                Some(_) => {}
                None => answer_failures += 1,
            }
            n_presented += 1;
        }
        let (p, std) = p_and_std(n_correct, n_presented);
        let stable = std <= config.sigma_star;
        if stable || n_presented >= cap {
            if !stable {
                tracing::debug!(question = %question.id(), n_presented, "estimate hit sample cap");
            }
            return PCorrectEstimate { p, std, n_presented, n_correct, stable, answer_failures };
        }
    }
}

fn answer_with_retries<F>(answer_fn: &mut F, presentation: &Presentation, index: usize) -> Option<usize>
where
    F: FnMut(&Presentation, usize) -> Result<usize, AnswerError>,
{
    let n_options = presentation.options.len();
    for _ in 0..=ANSWER_RETRIES {
        match answer_fn(presentation, index) {
            Ok(choice) if choice < n_options => return Some(choice),
            Ok(choice) => {
                tracing::debug!(choice, n_options, "answer out of range");
            }
            Err(err) => {
                tracing::debug!(%err, "answer failed");
            }
        }
    }
    None
}

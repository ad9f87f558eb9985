//! How much an answerer's accuracy on one question depends on which
//! distractors it is shown and in what order.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scoring::{AnswerError, Presentation, ANSWER_RETRIES};
use crate::types::Question;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationResult {
    /// 1-based.
    pub variation: usize,
    pub options: Vec<String>,
    pub truth_index: usize,
    pub n_correct: usize,
    pub reps: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// A fresh distractor subset per variation.
    pub option_sets: Vec<VariationResult>,
    /// One fixed subset in a fresh order per variation.
    pub orderings: Vec<VariationResult>,
}

/// Shows `n_variations` different option sets, then `n_variations`
/// orderings of the first set, `reps` times each. `answer_fn` gets the
/// presentation and a running sample index; a sample whose answer fails on
/// every retry counts as incorrect.
pub fn sensitivity<F, R>(
    question: &Question,
    mut answer_fn: F,
    n_variations: usize,
    reps: usize,
    n_options: usize,
    rng: &mut R,
) -> SensitivityReport
where
    F: FnMut(&Presentation, usize) -> Result<usize, AnswerError>,
    R: Rng + ?Sized,
{
    let pool = question.distractors();
    let k = n_options.saturating_sub(1).min(pool.len());
    let mut sample = 0usize;
    let mut run = |options: Vec<String>, truth_index: usize, variation: usize| {
        let p = Presentation { question_id: question.id().clone(), options, truth_index };
        let mut n_correct = 0;
        for _ in 0..reps {
            let got = (0..=ANSWER_RETRIES).find_map(|_| answer_fn(&p, sample).ok());
            sample += 1;
            n_correct += usize::from(got == Some(truth_index));
        }
        let fraction = if reps == 0 { 0.0 } else { n_correct as f64 / reps as f64 };
        VariationResult { variation, options: p.options, truth_index, n_correct, reps, fraction }
    };
    let shuffled = |subset: &[String], rng: &mut R| -> (Vec<String>, usize) {
        let mut order: Vec<usize> = (0..=subset.len()).collect();
        order.shuffle(rng);
        let options = order
            .iter()
            .map(|&i| if i == 0 { question.truth().to_string() } else { subset[i - 1].clone() })
            .collect();
        (options, order.iter().position(|&i| i == 0).unwrap_or(0))
    };

    let mut subsets: Vec<Vec<String>> = Vec::with_capacity(n_variations);
    let mut option_sets = Vec::with_capacity(n_variations);
    for v in 0..n_variations {
        let subset: Vec<String> = index::sample(rng, pool.len(), k).into_iter().map(|i| pool[i].clone()).collect();
        let (options, truth) = shuffled(&subset, rng);
        option_sets.push(run(options, truth, v + 1));
        subsets.push(subset);
    }
    let mut orderings = Vec::with_capacity(n_variations);
    if let Some(fixed) = subsets.first() {
        for v in 0..n_variations {
            let (options, truth) = shuffled(fixed, rng);
            orderings.push(run(options, truth, v + 1));
        }
    }
    SensitivityReport { option_sets, orderings }
}

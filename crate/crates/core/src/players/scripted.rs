use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed::derive_rng;

/// A pre-verified question a scripted setter can submit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub rationale: String,
    pub code: String,
    /// Expected output. `None` marks a snippet that fails to run, for
    /// exercising the rejection path.
    pub truth: Option<String>,
    #[serde(default)]
    pub distractors: Vec<String>,
}

impl Fixture {
    /// The fixture in the setter output format: a comment line then code.
    pub fn as_setter_output(&self) -> String {
        format!("# {}\n{}", self.rationale, self.code)
    }
}

/// Deterministic stand-in for a model.
///
/// Answers correctly with probability `accuracy` (or the per-tag override,
/// keyed by question rationale) and otherwise picks a wrong option uniformly.
/// Sets questions by walking `pool` in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedProfile {
    pub accuracy: f64,
    #[serde(default)]
    pub accuracy_by_tag: BTreeMap<String, f64>,
    pub pool: Vec<Fixture>,
}

impl ScriptedProfile {
    pub fn new(accuracy: f64, pool: Vec<Fixture>) -> Self {
        Self { accuracy, accuracy_by_tag: BTreeMap::new(), pool }
    }

    /// A profile with `size` generated arithmetic fixtures. `salt` keeps
    /// different players' pools apart.
    pub fn generated(accuracy: f64, salt: &str, size: usize) -> Self {
        Self::new(accuracy, generate_pool(salt, size))
    }

    pub fn with_tag_accuracy(mut self, tag: impl Into<String>, accuracy: f64) -> Self {
        self.accuracy_by_tag.insert(tag.into(), accuracy);
        self
    }

    pub fn accuracy_for(&self, rationale: &str) -> f64 {
        self.accuracy_by_tag.get(rationale).copied().unwrap_or(self.accuracy)
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(self.accuracy) || !self.accuracy_by_tag.values().all(|p| ok(*p)) {
            return Err("scripted accuracies must lie in [0, 1]".into());
        }
        if self.pool.is_empty() {
            return Err("scripted question pool is empty".into());
        }
        Ok(())
    }

    /// The fixture submitted as the `n`-th attempt overall (0-based),
    /// wrapping around the pool.
    pub fn fixture_for_attempt(&self, n: usize) -> &Fixture {
        &self.pool[n % self.pool.len()]
    }

    pub fn fixture_by_code(&self, code: &str) -> Option<&Fixture> {
        self.pool.iter().find(|f| f.code == code)
    }
}

/// Builds `size` distinct deterministic snippets with computed outputs and
/// nine numeric distractors each.
pub fn generate_pool(salt: &str, size: usize) -> Vec<Fixture> {
    let mut rng = derive_rng(0, &["scripted-pool", salt]);
    (0..size)
        .map(|i| {
            let a: i64 = rng.random_range(2..60);
            let b: i64 = rng.random_range(2..60);
            let c: i64 = rng.random_range(3..12);
            let m: i64 = rng.random_range(7..97);
            let (rationale, code, truth) = match i % 4 {
                0 => (
                    "generator expression with modulo",
                    format!("# {salt} #{i}\nvalues = [{a}, {b}, {c}]\nprint(sum(v * {c} for v in values) % {m})"),
                    (a + b + c) * c % m,
                ),
                1 => (
                    "loop accumulation with integer division",
                    format!("# {salt} #{i}\ntotal = {a}\nfor k in range({c}):\n    total = (total + k * {b}) // 2 + {m}\nprint(total)"),
                    {
                        let mut t = a;
                        for k in 0..c {
                            t = (t + k * b).div_euclid(2) + m;
                        }
                        t
                    },
                ),
                2 => (
                    "list slicing with negative step",
                    format!("# {salt} #{i}\nxs = list(range({a}, {a} + {c} * {b}, {b}))\nprint(sum(xs[::-2]) - {m})"),
                    {
                        let xs: Vec<i64> = (0..c).map(|k| a + k * b).collect();
                        xs.iter().rev().step_by(2).sum::<i64>() - m
                    },
                ),
                _ => (
                    "dictionary comprehension and max by key",
                    format!("# {salt} #{i}\nd = {{k: (k * {a}) % {m} for k in range(1, {c} + 1)}}\nprint(max(d, key=d.get) * {b})"),
                    {
                        // Python's max returns the first key with the largest value
                        let mut best = (1, (a) % m);
                        for k in 2..=c {
                            let v = (k * a) % m;
                            if v > best.1 {
                                best = (k, v);
                            }
                        }
                        best.0 * b
                    },
                ),
            };
            let distractors = (1..=9)
                .map(|k| {
                    let offset = if k % 2 == 0 { k / 2 } else { -(k + 1) / 2 };
                    (truth + offset * (1 + i as i64 % 3)).to_string()
                })
                .collect();
            Fixture { rationale: rationale.to_string(), code, truth: Some(truth.to_string()), distractors }
        })
        .collect()
}

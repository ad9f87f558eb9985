//! Embedding-based question similarity.
//!
//! Distance between questions is `1 - cos(a, b)`, in `[0, 2]`. It is used for
//! the uniqueness rule on new questions and for single-linkage clustering of
//! an archive. It is not a metric and nothing here relies on the triangle
//! inequality.

mod embedding;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Question, QuestionId};

pub use embedding::{Embedding, EmbeddingProvider, EmbeddingService, HttpEmbedder, StubEmbedder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("embedding dimension changed from {expected} to {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot compute a distance to a zero vector")]
    ZeroVector,
    #[error("embedding is empty")]
    EmptyVector,
    #[error("embedding has non-finite components")]
    NonFinite,
    #[error("cannot embed empty text")]
    EmptyText,
}

/// `1 - cosine similarity`, clamped to `[0, 2]`.
pub fn distance(a: &Embedding, b: &Embedding) -> Result<f64, SimilarityError> {
    if a.dimension() != b.dimension() {
        return Err(SimilarityError::DimensionMismatch { expected: a.dimension(), got: b.dimension() });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.vector.iter().zip(&b.vector) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    let cos = dot / (na.sqrt() * nb.sqrt());
    Ok((1.0 - cos).clamp(0.0, 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Uniqueness {
    pub unique: bool,
    /// Distance to and index of the closest history entry.
    pub nearest: Option<(f64, usize)>,
}

/// Unique iff every history entry is strictly farther than `d_thresh`.
pub fn is_unique(
    candidate: &Embedding,
    history: &[&Embedding],
    d_thresh: f64,
) -> Result<Uniqueness, SimilarityError> {
    let mut nearest: Option<(f64, usize)> = None;
    for (i, h) in history.iter().enumerate() {
        let d = distance(candidate, h)?;
        if nearest.is_none_or(|(best, _)| d < best) {
            nearest = Some((d, i));
        }
    }
    let unique = nearest.is_none_or(|(d, _)| d > d_thresh);
    Ok(Uniqueness { unique, nearest })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    /// Sorted ascending.
    pub members: Vec<QuestionId>,
    pub medoid: QuestionId,
}

/// Connected components of the graph joining questions at distance
/// `<= d_thresh`, each with the member of least summed distance as medoid.
pub fn cluster(questions: &[Question], d_thresh: f64) -> Result<Vec<Cluster>, SimilarityError> {
    let items: Vec<(QuestionId, &Embedding)> =
        questions.iter().map(|q| (q.id().clone(), q.embedding())).collect();
    cluster_embeddings(&items, d_thresh)
}

/// [`cluster`] over bare `(id, embedding)` pairs.
///
/// Output is canonical: members sorted, clusters ordered by first member, and
/// medoid ties broken by the smaller id, so input order does not matter.
pub fn cluster_embeddings(
    items: &[(QuestionId, &Embedding)],
    d_thresh: f64,
) -> Result<Vec<Cluster>, SimilarityError> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&i, &j| items[i].0.cmp(&items[j].0));
    let sorted: Vec<&(QuestionId, &Embedding)> = order.iter().map(|&i| &items[i]).collect();
    let n = sorted.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(sorted[i].1, sorted[j].1)?;
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut component = vec![usize::MAX; n];
    let mut clusters = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let label = clusters.len();
        let mut members = vec![start];
        component[start] = label;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if component[j] == usize::MAX && dist[i * n + j] <= d_thresh {
                    component[j] = label;
                    members.push(j);
                    queue.push_back(j);
                }
            }
        }
        members.sort_unstable();
        let medoid = *members
            .iter()
            .min_by(|&&a, &&b| {
                let sa: f64 = members.iter().map(|&m| dist[a * n + m]).sum();
                let sb: f64 = members.iter().map(|&m| dist[b * n + m]).sum();
                sa.total_cmp(&sb).then(a.cmp(&b))
            })
            .expect("non-empty component");
        clusters.push(Cluster {
            members: members.iter().map(|&m| sorted[m].0.clone()).collect(),
            medoid: sorted[medoid].0.clone(),
        });
    }
    Ok(clusters)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    /// Left edges of equal-width bins spanning `[0, 2]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// All pairwise distances, ascending.
    pub distances: Vec<f64>,
}

impl DistanceHistogram {
    pub fn bin_width(&self) -> f64 {
        2.0 / self.counts.len() as f64
    }

    /// Index of the bin that holds distance `d`.
    pub fn bin_of(&self, d: f64) -> usize {
        ((d / self.bin_width()) as usize).min(self.counts.len() - 1)
    }

    /// `q`-th percentile (0..=100) with linear interpolation between
    /// closest ranks.
    pub fn percentile(&self, q: f64) -> f64 {
        let n = self.distances.len();
        let rank = (q.clamp(0.0, 100.0) / 100.0) * (n - 1) as f64;
        let lo = rank.floor() as usize;
        let hi = rank.ceil() as usize;
        let frac = rank - lo as f64;
        self.distances[lo] + (self.distances[hi] - self.distances[lo]) * frac
    }
}

/// Histogram of all pairwise distances between at least two embeddings.
pub fn distance_histogram(
    embeddings: &[&Embedding],
    n_bins: usize,
) -> Result<DistanceHistogram, SimilarityError> {
    assert!(embeddings.len() >= 2, "need at least two embeddings");
    assert!(n_bins >= 1, "need at least one bin");
    let mut distances = Vec::with_capacity(embeddings.len() * (embeddings.len() - 1) / 2);
    for (i, a) in embeddings.iter().enumerate() {
        for b in &embeddings[i + 1..] {
            distances.push(distance(a, b)?);
        }
    }
    distances.sort_by(f64::total_cmp);
    let width = 2.0 / n_bins as f64;
    let mut hist = DistanceHistogram {
        edges: (0..n_bins).map(|i| i as f64 * width).collect(),
        counts: vec![0; n_bins],
        distances,
    };
    for i in 0..hist.distances.len() {
        let b = hist.bin_of(hist.distances[i]);
        hist.counts[b] += 1;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding::new("t", v.to_vec()).unwrap()
    }

    fn qid(s: &str) -> QuestionId {
        QuestionId::new(s)
    }

    #[test]
    fn distance_examples() {
        let v = emb(&[1.0, 2.0, 3.0]);
        let neg = emb(&[-1.0, -2.0, -3.0]);
        assert!(distance(&v, &v).unwrap().abs() < 1e-15);
        assert!((distance(&v, &neg).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(distance(&emb(&[1.0, 0.0]), &emb(&[0.0, 1.0])).unwrap(), 1.0);
        assert_eq!(distance(&emb(&[0.0, 0.0]), &emb(&[0.0, 1.0])), Err(SimilarityError::ZeroVector));
        assert!(matches!(
            distance(&emb(&[1.0]), &emb(&[0.0, 1.0])),
            Err(SimilarityError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uniqueness_examples() {
        let c = emb(&[1.0, 0.0]);
        assert_eq!(is_unique(&c, &[], 0.336).unwrap(), Uniqueness { unique: true, nearest: None });
        let u = is_unique(&c, &[&emb(&[0.0, 1.0]), &c], 0.336).unwrap();
        assert!(!u.unique);
        assert_eq!(u.nearest.unwrap().1, 1);
    }

    #[test]
    fn threshold_is_strict() {
        // cos = 0.664 gives a distance of 1 - 0.664, which rounds to exactly
        // the same double as the threshold 0.336 - nearest distance is then
        // "at" the threshold and must be rejected
        let cos: f64 = 0.664;
        let c = emb(&[1.0, 0.0]);
        let h = emb(&[cos, (1.0 - cos * cos).sqrt()]);
        let d = distance(&c, &h).unwrap();
        let u = is_unique(&c, &[&h], d).unwrap();
        assert!(!u.unique);
        assert!(is_unique(&c, &[&h], d - 1e-9).unwrap().unique);
    }

    #[test]
    fn singletons_when_everything_is_far() {
        let a = emb(&[1.0, 0.0, 0.0]);
        let b = emb(&[0.0, 1.0, 0.0]);
        let c = emb(&[0.0, 0.0, 1.0]);
        let cl = cluster_embeddings(&[(qid("a"), &a), (qid("b"), &b), (qid("c"), &c)], 0.336).unwrap();
        assert_eq!(cl.len(), 3);
        assert!(cl.iter().all(|c| c.members.len() == 1 && c.medoid == c.members[0]));
    }

    #[test]
    fn chains_are_linked_transitively() {
        // a-b and b-c at 30 degrees (distance 0.134), a-c at 60 degrees (0.5)
        let at = |deg: f64| emb(&[deg.to_radians().cos(), deg.to_radians().sin()]);
        let (a, b, c) = (at(0.0), at(30.0), at(60.0));
        assert!(distance(&a, &c).unwrap() > 0.336);
        let cl = cluster_embeddings(&[(qid("c"), &c), (qid("a"), &a), (qid("b"), &b)], 0.336).unwrap();
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].members, vec![qid("a"), qid("b"), qid("c")]);
        assert_eq!(cl[0].medoid, qid("b"));
    }

    #[test]
    fn histogram_examples() {
        let v = emb(&[1.0, 1.0]);
        let h = distance_histogram(&[&v, &v], 20).unwrap();
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts.iter().sum::<usize>(), 1);

        let a = emb(&[1.0, 0.0, 0.0]);
        let b = emb(&[0.0, 1.0, 0.0]);
        let c = emb(&[0.0, 0.0, 1.0]);
        let h = distance_histogram(&[&a, &b, &c], 20).unwrap();
        assert_eq!(h.counts[h.bin_of(1.0)], 3);
        assert_eq!(h.percentile(50.0), 1.0);
    }

    proptest! {
        #[test]
        fn distance_is_symmetric_and_bounded(
            a in proptest::collection::vec(-5.0f64..5.0, 6),
            b in proptest::collection::vec(-5.0f64..5.0, 6),
        ) {
            prop_assume!(a.iter().any(|x| *x != 0.0) && b.iter().any(|x| *x != 0.0));
            let (ea, eb) = (emb(&a), emb(&b));
            let d = distance(&ea, &eb).unwrap();
            prop_assert_eq!(d, distance(&eb, &ea).unwrap());
            prop_assert!((0.0..=2.0).contains(&d));
            let scaled = emb(&a.iter().map(|x| x * 3.5).collect::<Vec<_>>());
            prop_assert!(distance(&ea, &scaled).unwrap() < 1e-12);
        }

        #[test]
        fn clustering_ignores_input_order(
            points in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 2..20),
            thresh in 0.05f64..0.6,
            rot in 0usize..20,
        ) {
            prop_assume!(points.iter().all(|p| p.iter().any(|x| x.abs() > 1e-3)));
            let embs: Vec<Embedding> = points.iter().map(|p| emb(p)).collect();
            let items: Vec<(QuestionId, &Embedding)> =
                embs.iter().enumerate().map(|(i, e)| (qid(&format!("q{i:02}")), e)).collect();
            let mut shuffled = items.clone();
            shuffled.rotate_left(rot % items.len());
            shuffled.reverse();
            prop_assert_eq!(cluster_embeddings(&items, thresh).unwrap(), cluster_embeddings(&shuffled, thresh).unwrap());
        }
    }
}

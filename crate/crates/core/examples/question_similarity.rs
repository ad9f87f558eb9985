//! Embedding distances, the uniqueness check and near-duplicate clusters.
//!
//! The built-in stub embedder hashes whole texts, so every edit looks
//! unrelated. This example plugs in a character-trigram provider instead,
//! which makes small edits land close together.

use skate::similarity::{
    cluster_embeddings, distance, distance_histogram, is_unique, EmbeddingProvider, EmbeddingService,
    SimilarityError,
};
use skate::QuestionId;

struct Trigrams {
    dim: usize,
}

impl EmbeddingProvider for Trigrams {
    fn tag(&self) -> &str {
        "trigram"
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, SimilarityError> {
        let chars: Vec<char> = text.chars().collect();
        let mut v = vec![0.0; self.dim];
        for w in chars.windows(3) {
            let h = w.iter().fold(2166136261u32, |h, c| (h ^ *c as u32).wrapping_mul(16777619));
            v[h as usize % self.dim] += 1.0;
        }
        Ok(v)
    }
}

fn main() {
    let service = EmbeddingService::new(Box::new(Trigrams { dim: 512 }));
    let snippets = [
        "xs = [3, 1, 2]\nprint(sorted(xs))",
        "xs = [3, 1, 2]\nprint(sorted(xs, reverse=True))",
        "d = {'a': 1}\nprint(d.get('b', 0))",
        "d = {'a': 1}\nprint(d.get('a', 0))",
        "print('-'.join('abc'))",
    ];
    let embeddings: Vec<_> = snippets.iter().map(|s| service.embed(s).unwrap()).collect();

    println!("pairwise distances");
    for a in &embeddings {
        let row: Vec<String> = embeddings.iter().map(|b| format!("{:.3}", distance(a, b).unwrap())).collect();
        println!("  {}", row.join("  "));
    }

    let d_thresh = 0.336;
    let history: Vec<_> = embeddings.iter().collect();
    for probe in ["ys = [3, 1, 2]\nprint(sorted(ys))", "print(list(zip('ab', range(2))))"] {
        let u = is_unique(&service.embed(probe).unwrap(), &history, d_thresh).unwrap();
        let (d, i) = u.nearest.unwrap();
        println!("\n{probe:?}\n  unique at {d_thresh}: {} (nearest is #{i} at {d:.3})", u.unique);
    }

    let items: Vec<_> = embeddings.iter().enumerate().map(|(i, e)| (QuestionId::new(format!("q{i}")), e)).collect();
    println!();
    for c in cluster_embeddings(&items, d_thresh).unwrap() {
        let members: Vec<&str> = c.members.iter().map(|m| m.as_str()).collect();
        println!("cluster {members:?} medoid {}", c.medoid.as_str());
    }

    let hist = distance_histogram(&history, 8).unwrap();
    println!("\nmedian distance {:.3}, histogram over [0, 2]: {:?}", hist.percentile(50.0), hist.counts);
}

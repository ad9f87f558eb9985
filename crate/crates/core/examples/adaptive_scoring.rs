//! Adaptive p(correct) estimation for simulated answerers of varying skill.
//!
//! ```text
//! cargo run --example adaptive_scoring
//! ```

use skate::engine::{validate_candidate, Services, Validation};
use skate::players::{scripted_choice, Fixture};
use skate::sandbox::FixtureExecutor;
use skate::scoring::estimate_p_correct;
use skate::seed::derive_rng;
use skate::similarity::EmbeddingService;
use skate::types::CandidateQuestion;
use skate::{default_config, AugmentationStrategy, Player, PlayerId, ScriptedProfile};

fn main() {
    let config = default_config();
    let fixture = Fixture {
        rationale: "list slicing with a negative step".into(),
        code: "print([1, 2, 3, 4, 5][::-2])".into(),
        truth: Some("[5, 3, 1]".into()),
        distractors: ["[5, 4, 3]", "[1, 3, 5]", "[4, 2]", "[5, 3]", "[2, 4]", "[3, 1]", "[]", "[5]", "[1, 2]"]
            .map(String::from)
            .to_vec(),
    };
    let setter = Player::scripted("setter", AugmentationStrategy::NoInfo, ScriptedProfile::new(0.0, vec![fixture.clone()]));
    let executor = FixtureExecutor::new();
    executor.register(&fixture.code, "[5, 3, 1]\n");
    let embeddings = EmbeddingService::stub(config.embedding_dim);
    let candidate = CandidateQuestion {
        setter: PlayerId::new("setter"),
        round: 1,
        code: fixture.code.clone(),
        rationale: fixture.rationale.clone(),
        claimed_distractors: vec![],
    };
    let services = Services { executor: &executor, embeddings: &embeddings };
    let question = match validate_candidate(candidate, 1, &setter, &[], &services, &config).unwrap() {
        Validation::Accepted(q) => q,
        Validation::Rejected(f) => panic!("{f}"),
    };

    println!("accuracy\tp_hat\tstd\tn\tstable");
    for accuracy in [1.0, 0.9, 0.7, 0.5, 0.3, 0.1] {
        let mut answers = derive_rng(7, &["answers", &accuracy.to_string()]);
        let estimate = estimate_p_correct(
            |p, _| Ok(scripted_choice(accuracy, p.truth_index, p.options.len(), &mut answers)),
            &question,
            &config,
            &mut derive_rng(7, &["options", &accuracy.to_string()]),
        );
        println!(
            "{accuracy}\t{:.3}\t{:.4}\t{}\t{}",
            estimate.p, estimate.std, estimate.n_presented, estimate.stable
        );
    }
}

//! How an answerer's accuracy on one question shifts with the distractor
//! subset it sees and with the option order.
//!
//! The answerer here always picks the first option, so all variation comes
//! from where the truth lands.

use skate::analysis::sensitivity;
use skate::engine::{validate_candidate, Services, Validation};
use skate::players::{scripted_choice, Fixture};
use skate::sandbox::FixtureExecutor;
use skate::seed::derive_rng;
use skate::similarity::EmbeddingService;
use skate::types::CandidateQuestion;
use skate::{default_config, AugmentationStrategy, Player, ScriptedProfile};

fn main() {
    let config = default_config();
    let fixture = Fixture {
        rationale: "integer division of a negative number".into(),
        code: "print(-7 // 2)".into(),
        truth: Some("-4".into()),
        distractors: ["-3", "-3.5", "3", "4", "-2", "-4.0", "-7", "0", "1", "-1"].map(String::from).to_vec(),
    };
    let setter = Player::scripted("setter", AugmentationStrategy::NoInfo, ScriptedProfile::new(0.0, vec![fixture.clone()]));
    let executor = FixtureExecutor::new();
    executor.register(&fixture.code, "-4\n");
    let embeddings = EmbeddingService::stub(config.embedding_dim);
    let services = Services { executor: &executor, embeddings: &embeddings };
    let candidate = CandidateQuestion {
        setter: setter.id.clone(),
        round: 1,
        code: fixture.code.clone(),
        rationale: fixture.rationale.clone(),
        claimed_distractors: vec![],
    };
    let Validation::Accepted(question) = validate_candidate(candidate, 1, &setter, &[], &services, &config).unwrap() else {
        panic!("fixture rejected");
    };

    let first = sensitivity(&question, |_, _| Ok(0), 5, 20, config.n_options, &mut derive_rng(5, &["sens"]));
    let mut answers = derive_rng(5, &["answers"]);
    let noisy = sensitivity(
        &question,
        |p, _| Ok(scripted_choice(0.6, p.truth_index, p.options.len(), &mut answers)),
        5,
        20,
        config.n_options,
        &mut derive_rng(5, &["sens"]),
    );

    println!("kind\tvariation\tfirst-option\tscripted-0.6");
    for (kind, a, b) in [
        ("option_set", &first.option_sets, &noisy.option_sets),
        ("ordering", &first.orderings, &noisy.orderings),
    ] {
        for (x, y) in a.iter().zip(b) {
            println!("{kind}\t{}\t{:.2}\t{:.2}", x.variation, x.fraction, y.fraction);
        }
    }
}

//! What a setter is shown under each augmentation strategy after a short
//! scripted game, and the prompt built from it.
//!
//! ```text
//! cargo run --example setter_prompts -- FULL_CONTEXT
//! ```

use skate::players::build_archive_view;
use skate::players::prompt::build_setter_prompt;
use skate::seed::derive_rng;
use skate::{AugmentationStrategy, Engine, GameConfig, Player, PlayerId, ScriptedProfile};

fn main() {
    let config = GameConfig { n_rounds: 3, rng_seed: 21, ..GameConfig::default() };
    let players = ["ada", "bo", "cy"]
        .iter()
        .zip([0.85, 0.6, 0.35])
        .map(|(id, acc)| Player::scripted(*id, AugmentationStrategy::NoInfo, ScriptedProfile::generated(acc, id, 16)))
        .collect();
    let archive = Engine::offline(&config).unwrap().play_game(&config, players).unwrap();
    let me = PlayerId::new("ada");

    println!("strategy\tentries\tscored");
    for strategy in AugmentationStrategy::ALL {
        let view = build_archive_view(&archive, &me, strategy, &[], config.n_attempts, &mut derive_rng(1, &["view"]));
        let scored = view.entries.iter().filter(|e| !e.scores.is_empty()).count();
        println!("{strategy}\t{}\t{scored}", view.entries.len());
    }

    let chosen = std::env::args()
        .nth(1)
        .map(|s| s.parse::<AugmentationStrategy>().expect("unknown strategy"))
        .unwrap_or(AugmentationStrategy::HistoricalPerformance);
    let view = build_archive_view(&archive, &me, chosen, &[], config.n_attempts, &mut derive_rng(1, &["view"]));
    // as if the game had a fourth round
    let longer = GameConfig { n_rounds: 4, ..config };
    println!("\n--- round 4 prompt for ada under {chosen} ---\n");
    println!("{}", build_setter_prompt(&view, 4, &longer));
}

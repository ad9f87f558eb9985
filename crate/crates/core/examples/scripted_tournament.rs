//! A complete offline game between scripted players of known accuracy,
//! written to disk and replayed.
//!
//! ```text
//! cargo run --release --example scripted_tournament -- 30
//! ```

use skate::analysis::{rating_summary, DEFAULT_SUMMARY_WINDOW};
use skate::{ArchiveStore, Engine, GameConfig, Player, RankingMode, ScriptedProfile};

fn roster() -> Vec<Player> {
    [("p90", 0.9), ("p70", 0.7), ("p50", 0.5), ("p30", 0.3)]
        .into_iter()
        .map(|(id, acc)| Player::scripted(id, Default::default(), ScriptedProfile::generated(acc, id, 128)))
        .collect()
}

fn main() {
    let rounds = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(15);
    let dir = std::env::temp_dir().join(format!("skate-tournament-{}", std::process::id()));

    for mode in [RankingMode::Relative, RankingMode::Absolute] {
        let config = GameConfig { n_rounds: rounds, rng_seed: 11, ranking_mode: mode, ..GameConfig::default() };
        let store = ArchiveStore::new(dir.join(format!("{mode:?}").to_lowercase()));
        let archive = Engine::offline(&config).unwrap().play_game_in(&store, &config, roster()).unwrap();
        let reloaded = store.load().unwrap();
        assert!(reloaded.verify_replay().unwrap());

        println!("{mode:?} ranking after {rounds} rounds ({} questions)", archive.questions().count());
        for s in rating_summary(&archive, DEFAULT_SUMMARY_WINDOW) {
            println!("  {:<4} mu {:>7.3}  sigma {:.3}", s.player.as_str(), s.mu, s.sigma);
        }
    }
    println!("archives under {}", dir.display());
}

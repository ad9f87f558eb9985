//! Adding players to a finished game, either answering the existing
//! questions only or joining for further rounds.

use skate::analysis::{rating_summary, DEFAULT_SUMMARY_WINDOW};
use skate::{Engine, GameArchive, GameConfig, JoinMode, Player, ScriptedProfile};

fn scripted(id: &str, acc: f64) -> Player {
    Player::scripted(id, Default::default(), ScriptedProfile::generated(acc, id, 128))
}

fn show(label: &str, archive: &GameArchive) {
    let order: Vec<String> = rating_summary(archive, DEFAULT_SUMMARY_WINDOW)
        .iter()
        .map(|s| format!("{} ({:.1})", s.player.as_str(), s.mu))
        .collect();
    println!("{label:<12} {}", order.join(" > "));
}

fn main() {
    let config = GameConfig { n_rounds: 12, rng_seed: 404, ..GameConfig::default() };
    let engine = Engine::offline(&config).unwrap();
    let base = engine.play_game(&config, vec![scripted("p90", 0.9), scripted("p50", 0.5), scripted("p30", 0.3)]).unwrap();
    show("base", &base);

    for mode in [JoinMode::AnswerOnly, JoinMode::FullJoin] {
        let mut extended = base.clone();
        engine.add_players(&mut extended, vec![scripted("p95", 0.95), scripted("p70", 0.7)], mode, None).unwrap();
        show(&format!("{mode:?}"), &extended);
    }
}

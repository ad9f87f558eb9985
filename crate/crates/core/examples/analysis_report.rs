//! Post-hoc analyses of a game: skill decomposition, most separating
//! questions, cumulative curves, and the exported TSV bundle.
//!
//! ```text
//! cargo run --example analysis_report -- /path/to/archive
//! ```
//!
//! Without an argument a small scripted game is played first.


use skate::analysis::{
    cumulative_curves, discriminatory_count, export_report, preference_matrix, skill_decomposition, variance_ranking,
    Analysis,
};
use skate::{ArchiveStore, Engine, GameConfig, Player, ScriptedProfile};

fn main() {
    let archive = match std::env::args().nth(1) {
        Some(dir) => ArchiveStore::new(dir).load().expect("unreadable archive"),
        None => {
            let config = GameConfig { n_rounds: 10, rng_seed: 3, ..GameConfig::default() };
            let players = [("hi", 0.85), ("mid", 0.6), ("lo", 0.3)]
                .into_iter()
                .map(|(id, acc)| Player::scripted(id, Default::default(), ScriptedProfile::generated(acc, id, 64)))
                .collect();
            Engine::offline(&config).unwrap().play_game(&config, players).unwrap()
        }
    };

    println!("player\tanswering\tasking\tset\tdiscriminatory");
    for s in skill_decomposition(&archive) {
        let fmt = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.3}"));
        let disc = discriminatory_count(&archive, &s.player, archive.config.p_thresh);
        println!("{}\t{}\t{}\t{}\t{disc}", s.player.as_str(), fmt(s.answering_skill), fmt(s.asking_skill), s.questions_set);
    }

    let prefs = preference_matrix(&archive, Some(0.55));
    println!("\nempty tranches at filter 0.55: {:?}", prefs.empty_tranches());

    let variance = variance_ranking(&archive, 10);
    println!("\nmost separating questions");
    for e in variance.top_k(3) {
        println!("  {} by {}: variance {:.4}, mean p {:.3}", e.question_id.as_str(), e.setter.as_str(), e.variance, e.mean_p);
    }

    for id in archive.player_ids() {
        if let Some(c) = cumulative_curves(&archive, &id) {
            println!(
                "\n{}: own mean p {:.3} vs others {:.3} over {} questions",
                id.as_str(),
                c.self_series.last().unwrap(),
                c.others_series.last().unwrap(),
                c.question_ids.len()
            );
        }
    }

    let out = std::env::temp_dir().join(format!("skate-report-{}", std::process::id()));
    let bundle = export_report(&archive, &out, &Analysis::ALL).unwrap();
    println!("\nwrote {} tables and {} series under {}", bundle.tables.len(), bundle.series.len(), out.display());
}

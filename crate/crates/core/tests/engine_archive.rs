//! Whole games through the engine and the on-disk archive.

mod common;

use std::fs;
use std::path::Path;

use common::{config, scripted};
use skate::engine::ArchiveError;
use skate::{ArchiveStore, Engine, GameArchive, JoinMode, PairUpdateGranularity, Player, UniquenessScope};

fn roster() -> Vec<Player> {
    vec![scripted("p90", 0.9), scripted("p60", 0.6), scripted("p30", 0.3)]
}

fn play(dir: &Path, rounds: usize, seed: u64) -> GameArchive {
    let cfg = config(rounds, seed);
    Engine::offline(&cfg).unwrap().play_game_in(&ArchiveStore::new(dir), &cfg, roster()).unwrap()
}

fn records(dir: &Path) -> String {
    fs::read_to_string(dir.join("records.jsonl")).unwrap()
}

/// Byte offset just past the `n`th round marker.
fn end_of_round(text: &str, n: usize) -> usize {
    let mut seen = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        offset += line.len();
        if line.starts_with("{\"type\":\"round\"") {
            seen += 1;
            if seen == n {
                return offset;
            }
        }
    }
    panic!("fewer than {n} rounds");
}

#[test]
fn rerun_is_byte_identical_and_replays() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let archive = play(a.path(), 5, 9);
    play(b.path(), 5, 9);
    for f in ["config.json", "records.jsonl"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let loaded = ArchiveStore::new(a.path()).load().unwrap();
    assert_eq!(loaded, archive);
    assert!(loaded.verify_replay().unwrap());
}

#[test]
fn different_seeds_give_different_games() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    play(a.path(), 2, 1);
    play(b.path(), 2, 2);
    assert_ne!(records(a.path()), records(b.path()));
}

#[test]
fn resume_after_interruption_in_round_seven_matches_uninterrupted_run() {
    let full = tempfile::tempdir().unwrap();
    play(full.path(), 10, 4);
    let reference = records(full.path());

    let cut = tempfile::tempdir().unwrap();
    fs::copy(full.path().join("config.json"), cut.path().join("config.json")).unwrap();
    // all of round 6, half of round 7's lines, then a torn write
    let six = end_of_round(&reference, 6);
    let seven = end_of_round(&reference, 7);
    let partial: String = reference[six..seven].split_inclusive('\n').take(5).collect();
    fs::write(cut.path().join("records.jsonl"), format!("{}{}{{\"type\":\"est", &reference[..six], partial)).unwrap();

    let store = ArchiveStore::new(cut.path());
    match store.load() {
        Err(ArchiveError::Corrupt { last_valid, .. }) => {
            assert_eq!(last_valid, reference[..six].lines().count() + 5);
        }
        other => panic!("strict load accepted a torn archive: {other:?}"),
    }
    let cfg = config(10, 4);
    let resumed = Engine::offline(&cfg).unwrap().resume(&store).unwrap();
    assert_eq!(resumed.rounds.len(), 10);
    assert_eq!(records(cut.path()), reference);
}

#[test]
fn incomplete_round_without_torn_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    play(dir.path(), 3, 8);
    let text = records(dir.path());
    let two = end_of_round(&text, 2);
    let extra: String = text[two..].split_inclusive('\n').take(3).collect();
    fs::write(dir.path().join("records.jsonl"), format!("{}{}", &text[..two], extra)).unwrap();
    match ArchiveStore::new(dir.path()).load() {
        Err(ArchiveError::Incomplete { last_complete, .. }) => assert_eq!(last_complete, text[..two].lines().count()),
        other => panic!("{other:?}"),
    }
    let resumed = ArchiveStore::new(dir.path()).load_for_resume().unwrap();
    assert_eq!(resumed.rounds.len(), 2);
    assert_eq!(records(dir.path()), &text[..two]);
}

#[test]
fn corrupt_middle_line_names_its_number() {
    let dir = tempfile::tempdir().unwrap();
    play(dir.path(), 2, 8);
    let text = records(dir.path());
    let mut lines: Vec<&str> = text.lines().collect();
    lines[4] = "{\"type\":\"estimate\",\"garbage\":true}";
    fs::write(dir.path().join("records.jsonl"), lines.join("\n") + "\n").unwrap();
    for result in [ArchiveStore::new(dir.path()).load(), ArchiveStore::new(dir.path()).load_for_resume()] {
        match result {
            Err(ArchiveError::Corrupt { line, last_valid, .. }) => assert_eq!((line, last_valid), (5, 4)),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn tampered_rating_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mut archive = play(dir.path(), 2, 3);
    assert!(archive.verify_replay().unwrap());
    let id = archive.player_ids()[0].clone();
    let r = archive.trajectory[1].ratings.get_mut(&id).unwrap();
    r.sigma = f64::from_bits(r.sigma.to_bits() ^ 1);
    assert!(!archive.verify_replay().unwrap());
}

#[test]
fn per_round_granularity_updates_once_per_pair_per_round() {
    let cfg = skate::GameConfig { pair_update_granularity: PairUpdateGranularity::PerRound, ..config(3, 6) };
    let archive = Engine::offline(&cfg).unwrap().play_game(&cfg, roster()).unwrap();
    assert_eq!(archive.trajectory.len(), 3 * 3);
    assert!(archive.matches().all(|m| m.question_id.is_none()));
    assert!(archive.verify_replay().unwrap());
}

#[test]
fn global_uniqueness_scope_still_completes() {
    let cfg = skate::GameConfig { uniqueness_scope: UniquenessScope::Global, ..config(4, 6) };
    let archive = Engine::offline(&cfg).unwrap().play_game(&cfg, roster()).unwrap();
    archive.check_consistency().unwrap();
    assert_eq!(archive.questions().count(), 12);
}

#[test]
fn answer_only_join_keeps_the_question_set_and_full_join_extends_it() {
    let cfg = config(4, 12);
    let engine = Engine::offline(&cfg).unwrap();
    let base = engine.play_game(&cfg, roster()).unwrap();

    let mut answer_only = base.clone();
    engine.add_players(&mut answer_only, vec![scripted("p99", 0.99)], JoinMode::AnswerOnly, None).unwrap();
    assert_eq!(answer_only.questions().count(), base.questions().count());
    assert!(answer_only.questions().all(|q| answer_only.estimates(q.id()).unwrap().len() == 4));
    // the old players' estimates are untouched
    for q in base.questions() {
        for (id, e) in base.estimates(q.id()).unwrap() {
            assert_eq!(answer_only.estimates(q.id()).unwrap()[id], *e);
        }
    }
    answer_only.check_consistency().unwrap();

    let mut full = base.clone();
    let dir = tempfile::tempdir().unwrap();
    let store = ArchiveStore::new(dir.path());
    engine.add_players(&mut full, vec![scripted("p99", 0.99)], JoinMode::FullJoin, Some(&store)).unwrap();
    assert_eq!(full.rounds.len(), 8);
    assert_eq!(full.questions().count(), 12 + 16);
    assert_eq!(store.load().unwrap(), full);

    let mut unfinished = engine.start(&cfg, roster()).unwrap();
    assert!(engine.add_players(&mut unfinished, vec![scripted("x", 0.5)], JoinMode::AnswerOnly, None).is_err());
    let mut dup = base.clone();
    assert!(engine.add_players(&mut dup, vec![scripted("p90", 0.5)], JoinMode::AnswerOnly, None).is_err());
}

#[test]
fn timestamps_are_opt_in() {
    let cfg = config(1, 1);
    let plain = Engine::offline(&cfg).unwrap().start(&cfg, roster()).unwrap();
    assert_eq!(plain.provenance.created_unix, None);
    let stamped = Engine::offline(&cfg).unwrap().with_timestamps(true).start(&cfg, roster()).unwrap();
    assert!(stamped.provenance.created_unix.is_some());
}

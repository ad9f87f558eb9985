//! The game archive: in-memory record plus its on-disk form.
//!
//! On disk an archive is a directory holding `config.json` (config, roster,
//! provenance) and `records.jsonl`, one tagged JSON record per line. Each
//! round's records end with a `round` marker; a round without its marker is
//! incomplete.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{GameConfig, PairUpdateGranularity};
use crate::players::Player;
use crate::rating::{apply_pairwise, Outcome, Rating, RatingError};
use crate::scoring::PCorrectEstimate;
use crate::types::{PlayerId, Question, QuestionId, ValidationFailure};

pub const CONFIG_FILE: &str = "config.json";
pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("archive io error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Snapshot { path: PathBuf, message: String },
    #[error("corrupt record at line {line} of {path}: {message} (last valid line: {last_valid})")]
    Corrupt { path: PathBuf, line: usize, last_valid: usize, message: String },
    #[error("{path} ends with an incomplete round after line {last_complete} (last valid line: {last_valid})")]
    Incomplete { path: PathBuf, last_complete: usize, last_valid: usize },
    #[error("inconsistent archive: {0}")]
    Inconsistent(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArchiveError + '_ {
    move |source| ArchiveError::Io { path: path.to_path_buf(), source }
}

/// One setter's outcome for a round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetterRecord {
    pub setter: PlayerId,
    pub failures: Vec<ValidationFailure>,
    pub question: Option<Question>,
}

/// One pairwise rating update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    /// 1-based position in the game's update stream.
    pub step: usize,
    pub round: usize,
    /// `None` under per-round granularity.
    pub question_id: Option<QuestionId>,
    pub a: PlayerId,
    pub b: PlayerId,
    pub outcome: Outcome,
    pub a_after: Rating,
    pub b_after: Rating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based.
    pub round: usize,
    /// Sorted by setter id.
    pub setters: Vec<SetterRecord>,
    pub estimates: BTreeMap<QuestionId, BTreeMap<PlayerId, PCorrectEstimate>>,
    pub matches: Vec<MatchRecord>,
}

impl RoundRecord {
    pub fn questions(&self) -> impl Iterator<Item = &Question> {
        self.setters.iter().filter_map(|s| s.question.as_ref())
    }
}

/// Every player's rating right after one update step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub step: usize,
    pub ratings: BTreeMap<PlayerId, Rating>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// Rounds the game is meant to reach; resume plays up to here.
    pub planned_rounds: usize,
    pub generator: String,
    /// `scripted` or `provider-name/model` per player.
    pub models: BTreeMap<PlayerId, String>,
    /// Wall-clock start time in Unix seconds. Left empty unless requested,
    /// so reruns produce identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameArchive {
    pub config: GameConfig,
    pub roster: Vec<Player>,
    pub rounds: Vec<RoundRecord>,
    pub trajectory: Vec<TrajectoryEntry>,
    pub provenance: Provenance,
}

impl GameArchive {
    pub fn new(config: GameConfig, roster: Vec<Player>, provenance: Provenance) -> Self {
        let mut roster = roster;
        roster.sort_by(|a, b| a.id.cmp(&b.id));
        Self { config, roster, rounds: Vec::new(), trajectory: Vec::new(), provenance }
    }

    pub fn player_ids(&self) -> Vec<PlayerId> {
        self.roster.iter().map(|p| p.id.clone()).collect()
    }

    pub fn player(&self, id: &PlayerId) -> Option<&Player> {
        self.roster.iter().find(|p| &p.id == id)
    }

    /// Accepted questions in canonical order (round, then setter id).
    pub fn questions(&self) -> impl Iterator<Item = &Question> {
        self.rounds.iter().flat_map(|r| r.questions())
    }

    pub fn question(&self, id: &QuestionId) -> Option<&Question> {
        self.questions().find(|q| q.id() == id)
    }

    pub fn estimates(&self, id: &QuestionId) -> Option<&BTreeMap<PlayerId, PCorrectEstimate>> {
        self.rounds.iter().find_map(|r| r.estimates.get(id))
    }

    pub fn matches(&self) -> impl Iterator<Item = &MatchRecord> {
        self.rounds.iter().flat_map(|r| r.matches.iter())
    }

    pub fn initial_ratings(&self) -> BTreeMap<PlayerId, Rating> {
        let prior = self.config.trueskill().prior();
        self.roster.iter().map(|p| (p.id.clone(), prior)).collect()
    }

    /// Ratings after the last update, priors for anyone not yet rated.
    pub fn current_ratings(&self) -> BTreeMap<PlayerId, Rating> {
        let mut r = self.initial_ratings();
        if let Some(last) = self.trajectory.last() {
            for (id, rating) in &last.ratings {
                r.insert(id.clone(), *rating);
            }
        }
        r
    }

    /// Number of questions `setter` has proposed so far, accepted or not.
    pub fn proposals_by(&self, setter: &PlayerId) -> usize {
        self.rounds
            .iter()
            .flat_map(|r| r.setters.iter())
            .filter(|s| &s.setter == setter)
            .map(|s| s.failures.len() + usize::from(s.question.is_some()))
            .sum()
    }

    pub fn is_complete(&self) -> bool {
        self.rounds.len() >= self.provenance.planned_rounds
    }

    /// Applies a round's rating updates on top of the current ratings,
    /// filling `round.matches`, and appends the round and its trajectory
    /// entries.
    pub fn commit_round(&mut self, mut round: RoundRecord) -> Result<(), RatingError> {
        let mut ratings = self.current_ratings();
        let mut step = self.trajectory.len();
        let mut entries = Vec::new();
        round.matches = rate_round(&round, &mut ratings, &mut step, &mut entries, &self.config)?;
        self.rounds.push(round);
        self.trajectory.extend(entries);
        Ok(())
    }

    /// Rebuilds every match record and the whole trajectory from the stored
    /// estimates, starting from priors.
    pub fn recompute_ratings(&mut self) -> Result<(), RatingError> {
        let mut ratings = self.initial_ratings();
        let mut step = 0;
        let mut trajectory = Vec::new();
        for i in 0..self.rounds.len() {
            let m = rate_round(&self.rounds[i], &mut ratings, &mut step, &mut trajectory, &self.config)?;
            self.rounds[i].matches = m;
        }
        self.trajectory = trajectory;
        Ok(())
    }

    /// True when recomputing ratings from the stored estimates reproduces
    /// the stored matches and trajectory bit for bit.
    pub fn verify_replay(&self) -> Result<bool, RatingError> {
        let mut copy = self.clone();
        copy.recompute_ratings()?;
        let bits = |a: &GameArchive| {
            let m: Vec<&MatchRecord> = a.matches().collect();
            (
                serde_json::to_string(&m).expect("serializable"),
                serde_json::to_string(&a.trajectory).expect("serializable"),
            )
        };
        Ok(bits(&copy) == bits(self))
    }

    /// Structural checks: unique question ids, estimates from every roster
    /// player for every accepted question, sequential rounds and steps.
    pub fn check_consistency(&self) -> Result<(), ArchiveError> {
        let ids = self.player_ids();
        let mut seen = std::collections::BTreeSet::new();
        for (i, r) in self.rounds.iter().enumerate() {
            if r.round != i + 1 {
                return Err(ArchiveError::Inconsistent(format!("round {} stored at position {}", r.round, i + 1)));
            }
            for q in r.questions() {
                if !seen.insert(q.id().clone()) {
                    return Err(ArchiveError::Inconsistent(format!("duplicate question id {}", q.id())));
                }
                let est = r.estimates.get(q.id());
                let n = est.map_or(0, |e| e.len());
                if n != ids.len() || !ids.iter().all(|id| est.is_some_and(|e| e.contains_key(id))) {
                    return Err(ArchiveError::Inconsistent(format!(
                        "question {} has {n} estimates for {} players",
                        q.id(),
                        ids.len()
                    )));
                }
            }
        }
        for (i, t) in self.trajectory.iter().enumerate() {
            if t.step != i + 1 {
                return Err(ArchiveError::Inconsistent(format!("trajectory step {} at position {}", t.step, i + 1)));
            }
        }
        Ok(())
    }
}

/// Rating updates for one round in canonical order. Extends `trajectory`
/// with one full snapshot per pair update.
fn rate_round(
    round: &RoundRecord,
    ratings: &mut BTreeMap<PlayerId, Rating>,
    step: &mut usize,
    trajectory: &mut Vec<TrajectoryEntry>,
    config: &GameConfig,
) -> Result<Vec<MatchRecord>, RatingError> {
    let mut batches: Vec<(Option<QuestionId>, BTreeMap<PlayerId, f64>)> = Vec::new();
    match config.pair_update_granularity {
        PairUpdateGranularity::PerQuestion => {
            for q in round.questions() {
                let Some(est) = round.estimates.get(q.id()) else { continue };
                batches.push((Some(q.id().clone()), est.iter().map(|(id, e)| (id.clone(), e.p)).collect()));
            }
        }
        PairUpdateGranularity::PerRound => {
            let mut sums: BTreeMap<PlayerId, (f64, usize)> = BTreeMap::new();
            for q in round.questions() {
                for (id, e) in round.estimates.get(q.id()).into_iter().flatten() {
                    let s = sums.entry(id.clone()).or_default();
                    s.0 += e.p;
                    s.1 += 1;
                }
            }
            if !sums.is_empty() {
                batches.push((None, sums.into_iter().map(|(id, (s, n))| (id, s / n as f64)).collect()));
            }
        }
    }
    let mut snap = ratings.clone();
    let mut out = Vec::new();
    for (qid, scores) in batches {
        for u in apply_pairwise(ratings, &scores, config)? {
            *step += 1;
            out.push(MatchRecord {
                step: *step,
                round: round.round,
                question_id: qid.clone(),
                a: u.a,
                b: u.b,
                outcome: u.outcome,
                a_after: u.a_after,
                b_after: u.b_after,
            });
        }
    }
    for m in &out {
        snap.insert(m.a.clone(), m.a_after);
        snap.insert(m.b.clone(), m.b_after);
        trajectory.push(TrajectoryEntry { step: m.step, ratings: snap.clone() });
    }
    Ok(out)
}

/// Reads and writes an archive directory.
#[derive(Clone, Debug)]
pub struct ArchiveStore {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    config: GameConfig,
    roster: Vec<Player>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    Failure { round: usize, setter: PlayerId, failure: ValidationFailure },
    Question { round: usize, question: Question },
    Estimate { round: usize, question_id: QuestionId, player: PlayerId, estimate: PCorrectEstimate },
    Match(MatchRecord),
    Rating(TrajectoryEntry),
    Round { round: usize, setters: Vec<PlayerId> },
}

impl ArchiveStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn exists(&self) -> bool {
        self.dir.join(CONFIG_FILE).is_file()
    }

    fn records_path(&self) -> PathBuf {
        self.dir.join(RECORDS_FILE)
    }

    /// Writes the full archive, replacing whatever was there.
    pub fn save(&self, archive: &GameArchive) -> Result<(), ArchiveError> {
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        self.write_snapshot(archive)?;
        let mut text = String::new();
        let mut step = 0;
        for r in &archive.rounds {
            round_lines(r, archive, &mut step, &mut text);
        }
        let path = self.records_path();
        let tmp = self.dir.join(format!("{RECORDS_FILE}.tmp"));
        fs::write(&tmp, text).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    pub fn write_snapshot(&self, archive: &GameArchive) -> Result<(), ArchiveError> {
        let snap = Snapshot {
            config: archive.config.clone(),
            roster: archive.roster.clone(),
            provenance: archive.provenance.clone(),
        };
        let mut json = serde_json::to_string_pretty(&snap).expect("serializable");
        json.push('\n');
        let path = self.dir.join(CONFIG_FILE);
        let tmp = self.dir.join(format!("{CONFIG_FILE}.tmp"));
        fs::write(&tmp, json).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    /// Appends the archive's last round to the record file in one write.
    pub fn append_last_round(&self, archive: &GameArchive) -> Result<(), ArchiveError> {
        let Some(round) = archive.rounds.last() else { return Ok(()) };
        let mut step = archive.trajectory.len() - round.matches.len();
        let mut text = String::new();
        round_lines(round, archive, &mut step, &mut text);
        let path = self.records_path();
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        f.write_all(text.as_bytes()).map_err(io_err(&path))?;
        f.sync_data().map_err(io_err(&path))
    }

    /// Loads a complete, well-formed archive. Any bad line or a trailing
    /// incomplete round is an error naming the line.
    pub fn load(&self) -> Result<GameArchive, ArchiveError> {
        let (archive, tail) = self.load_inner(false)?;
        if let Some((last_complete, last_valid)) = tail {
            return Err(ArchiveError::Incomplete { path: self.records_path(), last_complete, last_valid });
        }
        Ok(archive)
    }

    /// Loads for resumption: records after the last complete round, including
    /// a torn final line, are dropped and the file is truncated to match.
    pub fn load_for_resume(&self) -> Result<GameArchive, ArchiveError> {
        let (archive, tail) = self.load_inner(true)?;
        if tail.is_some() {
            tracing::warn!(dir = %self.dir.display(), "dropping incomplete trailing round");
            self.save(&archive)?;
        }
        Ok(archive)
    }

    fn load_snapshot(&self) -> Result<Snapshot, ArchiveError> {
        let path = self.dir.join(CONFIG_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| ArchiveError::Snapshot { path, message: e.to_string() })
    }

    /// Returns the archive of complete rounds plus, if records follow the
    /// last round marker, `(last complete line, last valid line)`.
    fn load_inner(&self, tolerate_tail: bool) -> Result<(GameArchive, Option<(usize, usize)>), ArchiveError> {
        let snap = self.load_snapshot()?;
        let mut archive = GameArchive {
            config: snap.config,
            roster: snap.roster,
            rounds: Vec::new(),
            trajectory: Vec::new(),
            provenance: snap.provenance,
        };
        for p in &mut archive.roster {
            p.connect();
        }
        let path = self.records_path();
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(ArchiveError::Io { path, source: e }),
        };

        let mut pending = Pending::default();
        let mut last_valid = 0;
        let mut last_complete = 0;
        let lines: Vec<&str> = text.split_inclusive('\n').collect();
        for (i, raw) in lines.iter().enumerate() {
            let line_no = i + 1;
            let torn = !raw.ends_with('\n');
            let parsed: Result<Record, String> = if torn {
                Err("line is not newline-terminated (truncated write)".into())
            } else {
                serde_json::from_str(raw.trim_end()).map_err(|e| e.to_string())
            };
            let record = match parsed {
                Ok(r) => r,
                Err(message) => {
                    let is_last = line_no == lines.len();
                    if tolerate_tail && is_last {
                        return Ok((archive, Some((last_complete, last_valid))));
                    }
                    return Err(ArchiveError::Corrupt { path, line: line_no, last_valid, message });
                }
            };
            if let Err(message) = pending.push(record, &mut archive) {
                return Err(ArchiveError::Corrupt { path, line: line_no, last_valid, message });
            }
            last_valid = line_no;
            if pending.is_empty() {
                last_complete = line_no;
            }
        }
        let tail = (!pending.is_empty()).then_some((last_complete, last_valid));
        if tail.is_some() && !tolerate_tail {
            return Ok((archive, tail));
        }
        archive.check_consistency()?;
        Ok((archive, tail))
    }
}

fn push_line<T: Serialize>(out: &mut String, record: &T) {
    out.push_str(&serde_json::to_string(record).expect("serializable"));
    out.push('\n');
}

fn round_lines(r: &RoundRecord, archive: &GameArchive, step: &mut usize, out: &mut String) {
    for s in &r.setters {
        for f in &s.failures {
            push_line(out, &Record::Failure { round: r.round, setter: s.setter.clone(), failure: f.clone() });
        }
        if let Some(q) = &s.question {
            push_line(out, &Record::Question { round: r.round, question: q.clone() });
        }
    }
    for (qid, per) in &r.estimates {
        for (pid, e) in per {
            push_line(
                out,
                &Record::Estimate { round: r.round, question_id: qid.clone(), player: pid.clone(), estimate: *e },
            );
        }
    }
    for m in &r.matches {
        push_line(out, &Record::Match(m.clone()));
        *step += 1;
        push_line(out, &Record::Rating(archive.trajectory[*step - 1].clone()));
    }
    push_line(out, &Record::Round { round: r.round, setters: r.setters.iter().map(|s| s.setter.clone()).collect() });
}

#[derive(Default)]
struct Pending {
    round: Option<usize>,
    setters: BTreeMap<PlayerId, SetterRecord>,
    estimates: BTreeMap<QuestionId, BTreeMap<PlayerId, PCorrectEstimate>>,
    matches: Vec<MatchRecord>,
    trajectory: Vec<TrajectoryEntry>,
}

impl Pending {
    fn is_empty(&self) -> bool {
        self.round.is_none()
    }

    fn check_round(&mut self, round: usize, archive: &GameArchive) -> Result<(), String> {
        let expected = archive.rounds.len() + 1;
        if round != expected {
            return Err(format!("record for round {round} where round {expected} was expected"));
        }
        self.round = Some(round);
        Ok(())
    }

    fn setter(&mut self, id: &PlayerId) -> &mut SetterRecord {
        self.setters
            .entry(id.clone())
            .or_insert_with(|| SetterRecord { setter: id.clone(), failures: Vec::new(), question: None })
    }

    fn push(&mut self, record: Record, archive: &mut GameArchive) -> Result<(), String> {
        match record {
            Record::Failure { round, setter, failure } => {
                self.check_round(round, archive)?;
                self.setter(&setter).failures.push(failure);
            }
            Record::Question { round, question } => {
                self.check_round(round, archive)?;
                let s = self.setter(question.setter());
                if s.question.is_some() {
                    return Err(format!("second question for setter {} in round {round}", question.setter()));
                }
                s.question = Some(question);
            }
            Record::Estimate { round, question_id, player, estimate } => {
                self.check_round(round, archive)?;
                if !estimate.is_consistent() {
                    return Err(format!("estimate for {player} on {question_id} disagrees with its counts"));
                }
                self.estimates.entry(question_id).or_default().insert(player, estimate);
            }
            Record::Match(m) => {
                self.check_round(m.round, archive)?;
                self.matches.push(m);
            }
            Record::Rating(t) => {
                if self.round.is_none() {
                    return Err("rating snapshot outside a round".into());
                }
                self.trajectory.push(t);
            }
            Record::Round { round, setters } => {
                if self.round.is_some_and(|r| r != round) {
                    return Err(format!("round marker {round} closes records of round {:?}", self.round));
                }
                self.check_round(round, archive)?;
                let mut taken = std::mem::take(self);
                let mut ordered = Vec::with_capacity(setters.len());
                for id in setters {
                    let rec = taken.setters.remove(&id).unwrap_or(SetterRecord {
                        setter: id.clone(),
                        failures: Vec::new(),
                        question: None,
                    });
                    ordered.push(rec);
                }
                if let Some(id) = taken.setters.keys().next() {
                    return Err(format!("setter {id} has records but is missing from the round marker"));
                }
                archive.rounds.push(RoundRecord {
                    round,
                    setters: ordered,
                    estimates: taken.estimates,
                    matches: taken.matches,
                });
                archive.trajectory.extend(taken.trajectory);
            }
        }
        Ok(())
    }
}

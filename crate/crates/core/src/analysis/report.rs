//! Tab-separated report bundle.
//!
//! | file                              | columns                                                            |
//! |-----------------------------------|--------------------------------------------------------------------|
//! | `skills.tsv`                      | player, answering_skill, asking_skill, questions_set, questions_answered |
//! | `preference.tsv`                  | variant, answering_player, setter, difference, tranche_size        |
//! | `variance.tsv`                    | rank, question_id, setter, variance, mean_p                        |
//! | `cumulative.tsv`                  | player, index, question_id, self_mean, others_mean                 |
//! | `ratings.tsv`                     | rank, player, mu, sigma, steps                                     |
//! | `discriminatory.tsv`              | player, questions_set, discriminatory                              |
//! | `series/rating_trajectory.tsv`    | step, player, mu, sigma                                            |
//! | `series/variance_histogram.tsv`   | lower, upper, count                                                |
//!
//! Missing values are written as `NA`. Floats use Rust's shortest
//! round-trip formatting, so a reloaded table reproduces the exact values.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use super::{
    cumulative_curves, discriminatory_count, preference_matrix, rating_summary, skill_decomposition,
    variance_ranking, PreferenceMatrix, DEFAULT_SUMMARY_WINDOW,
};
use crate::engine::GameArchive;
use crate::types::PlayerId;

pub const VARIANCE_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report io error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("report table error at {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Analysis {
    Skills,
    Preference,
    Variance,
    Cumulative,
    Ratings,
    Discriminatory,
}

impl Analysis {
    pub const ALL: [Self; 6] =
        [Self::Skills, Self::Preference, Self::Variance, Self::Cumulative, Self::Ratings, Self::Discriminatory];

    pub fn file_name(self) -> &'static str {
        match self {
            Self::Skills => "skills.tsv",
            Self::Preference => "preference.tsv",
            Self::Variance => "variance.tsv",
            Self::Cumulative => "cumulative.tsv",
            Self::Ratings => "ratings.tsv",
            Self::Discriminatory => "discriminatory.tsv",
        }
    }
}

impl FromStr for Analysis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "skills" => Self::Skills,
            "preference" => Self::Preference,
            "variance" => Self::Variance,
            "cumulative" => Self::Cumulative,
            "ratings" => Self::Ratings,
            "discriminatory" => Self::Discriminatory,
            other => return Err(format!("unknown analysis `{other}`")),
        })
    }
}

/// Paths written by [`export_report`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReportBundle {
    pub tables: Vec<PathBuf>,
    pub series: Vec<PathBuf>,
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(path: PathBuf, header: &[&str]) -> Result<Self, ReportError> {
        let mut t = Self { path, writer: csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new()) };
        t.row(header.iter().map(|s| s.to_string()))?;
        Ok(t)
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), ReportError> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.writer
            .write_record(&fields)
            .map_err(|source| ReportError::Csv { path: self.path.clone(), source })
    }

    fn finish(self) -> Result<PathBuf, ReportError> {
        let Self { path, writer } = self;
        let bytes = writer.into_inner().map_err(|e| ReportError::Io { path: path.clone(), source: e.into_error() })?;
        fs::write(&path, bytes).map_err(|source| ReportError::Io { path: path.clone(), source })?;
        Ok(path)
    }
}

/// Writes the tables for `which` (all six when empty) under `out`. Plot
/// series are written only when every table is requested.
pub fn export_report(archive: &GameArchive, out: &Path, which: &[Analysis]) -> Result<ReportBundle, ReportError> {
    let which: Vec<Analysis> = if which.is_empty() { Analysis::ALL.to_vec() } else { which.to_vec() };
    fs::create_dir_all(out).map_err(|source| ReportError::Io { path: out.to_path_buf(), source })?;
    let p_thresh = archive.config.p_thresh;
    let mut bundle = ReportBundle::default();

    for a in Analysis::ALL.into_iter().filter(|a| which.contains(a)) {
        let path = out.join(a.file_name());
        let table = match a {
            Analysis::Skills => {
                let mut t = Table::new(
                    path,
                    &["player", "answering_skill", "asking_skill", "questions_set", "questions_answered"],
                )?;
                for s in skill_decomposition(archive) {
                    t.row([
                        s.player.to_string(),
                        opt(s.answering_skill),
                        opt(s.asking_skill),
                        s.questions_set.to_string(),
                        s.questions_answered.to_string(),
                    ])?;
                }
                t
            }
            Analysis::Preference => {
                let mut t =
                    Table::new(path, &["variant", "answering_player", "setter", "difference", "tranche_size"])?;
                for (variant, m) in
                    [("unfiltered", preference_matrix(archive, None)), ("filtered", preference_matrix(archive, Some(p_thresh)))]
                {
                    for (r, player) in m.players.iter().enumerate() {
                        for (c, setter) in m.setters.iter().enumerate() {
                            t.row([
                                variant.to_string(),
                                player.to_string(),
                                setter.to_string(),
                                opt(m.cells[r][c]),
                                m.tranche_sizes[c].to_string(),
                            ])?;
                        }
                    }
                }
                t
            }
            Analysis::Variance => {
                let mut t = Table::new(path, &["rank", "question_id", "setter", "variance", "mean_p"])?;
                for (i, e) in variance_ranking(archive, VARIANCE_BINS).entries.iter().enumerate() {
                    t.row([
                        (i + 1).to_string(),
                        e.question_id.to_string(),
                        e.setter.to_string(),
                        e.variance.to_string(),
                        e.mean_p.to_string(),
                    ])?;
                }
                t
            }
            Analysis::Cumulative => {
                let mut t = Table::new(path, &["player", "index", "question_id", "self_mean", "others_mean"])?;
                for id in archive.player_ids() {
                    let Some(c) = cumulative_curves(archive, &id) else { continue };
                    for i in 0..c.question_ids.len() {
                        t.row([
                            id.to_string(),
                            (i + 1).to_string(),
                            c.question_ids[i].to_string(),
                            c.self_series[i].to_string(),
                            c.others_series[i].to_string(),
                        ])?;
                    }
                }
                t
            }
            Analysis::Ratings => {
                let mut t = Table::new(path, &["rank", "player", "mu", "sigma", "steps"])?;
                for (i, s) in rating_summary(archive, DEFAULT_SUMMARY_WINDOW).iter().enumerate() {
                    t.row([
                        (i + 1).to_string(),
                        s.player.to_string(),
                        s.mu.to_string(),
                        s.sigma.to_string(),
                        s.steps.to_string(),
                    ])?;
                }
                t
            }
            Analysis::Discriminatory => {
                let mut t = Table::new(path, &["player", "questions_set", "discriminatory"])?;
                for id in archive.player_ids() {
                    let set = archive.questions().filter(|q| q.setter() == &id).count();
                    t.row([id.to_string(), set.to_string(), discriminatory_count(archive, &id, p_thresh).to_string()])?;
                }
                t
            }
        };
        bundle.tables.push(table.finish()?);
    }

    if which.len() == Analysis::ALL.len() {
        let dir = out.join("series");
        fs::create_dir_all(&dir).map_err(|source| ReportError::Io { path: dir.clone(), source })?;
        let mut t = Table::new(dir.join("rating_trajectory.tsv"), &["step", "player", "mu", "sigma"])?;
        for e in &archive.trajectory {
            for (id, r) in &e.ratings {
                t.row([e.step.to_string(), id.to_string(), r.mu.to_string(), r.sigma.to_string()])?;
            }
        }
        bundle.series.push(t.finish()?);
        let mut t = Table::new(dir.join("variance_histogram.tsv"), &["lower", "upper", "count"])?;
        for (lo, hi, n) in variance_ranking(archive, VARIANCE_BINS).histogram {
            t.row([lo.to_string(), hi.to_string(), n.to_string()])?;
        }
        bundle.series.push(t.finish()?);
    }
    Ok(bundle)
}

/// Reads `preference.tsv` back into `(unfiltered, filtered)` matrices.
pub fn load_preference_matrices(path: &Path, filter: f64) -> Result<(PreferenceMatrix, PreferenceMatrix), ReportError> {
    let fmt = |message: String| ReportError::Format { path: path.to_path_buf(), message };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .from_path(path)
        .map_err(|source| ReportError::Csv { path: path.to_path_buf(), source })?;
    let mut rows: Vec<(String, PlayerId, PlayerId, Option<f64>, usize)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|source| ReportError::Csv { path: path.to_path_buf(), source })?;
        if rec.len() != 5 {
            return Err(fmt(format!("expected 5 columns, found {}", rec.len())));
        }
        let diff = match &rec[3] {
            "NA" => None,
            v => Some(v.parse::<f64>().map_err(|e| fmt(format!("bad difference `{v}`: {e}")))?),
        };
        let size = rec[4].parse::<usize>().map_err(|e| fmt(format!("bad tranche size: {e}")))?;
        rows.push((rec[0].to_string(), PlayerId::new(&rec[1]), PlayerId::new(&rec[2]), diff, size));
    }
    let build = |variant: &str, filter: Option<f64>| -> Result<PreferenceMatrix, ReportError> {
        let sel: Vec<_> = rows.iter().filter(|r| r.0 == variant).collect();
        let mut players: Vec<PlayerId> = sel.iter().map(|r| r.1.clone()).collect();
        players.dedup();
        let mut setters: Vec<PlayerId> = Vec::new();
        for r in &sel {
            if !setters.contains(&r.2) {
                setters.push(r.2.clone());
            }
        }
        if sel.len() != players.len() * setters.len() {
            return Err(fmt(format!("{variant} matrix is not rectangular")));
        }
        let cells = players
            .iter()
            .map(|p| setters.iter().map(|s| sel.iter().find(|r| &r.1 == p && &r.2 == s).and_then(|r| r.3)).collect())
            .collect();
        let tranche_sizes =
            setters.iter().map(|s| sel.iter().find(|r| &r.2 == s).map_or(0, |r| r.4)).collect();
        Ok(PreferenceMatrix { players, setters, cells, tranche_sizes, filter })
    };
    Ok((build("unfiltered", None)?, build("filtered", Some(filter))?))
}

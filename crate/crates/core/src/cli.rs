//! Command-line front end: `run`, `resume`, `add-players`, `analyze`,
//! `validate-question` and `sensitivity`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::analysis::{export_report, rating_summary, sensitivity, Analysis, DEFAULT_SUMMARY_WINDOW};
use crate::config::{GameConfig, PairUpdateGranularity, RankingMode, UniquenessScope};
use crate::engine::{validate_candidate, ArchiveStore, Engine, JoinMode, Services, Validation};
use crate::players::{
    generate_pool, scripted_choice, AugmentationStrategy, Fixture, Player, PlayerSpec, ProviderConfig,
    ScriptedProfile,
};
use crate::sandbox::SANDBOX_CMD_ENV;
use crate::seed::derive_rng;
use crate::types::{CandidateQuestion, PlayerId};

#[derive(Debug, Parser)]
#[command(name = "skate", version, about = "Run and analyse peer-challenge code-output-prediction games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play a new game and write its archive.
    Run(RunArgs),
    /// Continue an interrupted game from its last complete round.
    Resume(ResumeArgs),
    /// Add players to a finished game.
    AddPlayers(AddPlayersArgs),
    /// Write report tables for an archive.
    Analyze(AnalyzeArgs),
    /// Run one snippet through the validity checks.
    ValidateQuestion(ValidateArgs),
    /// Measure answer sensitivity to the option set and option order.
    Sensitivity(SensitivityArgs),
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    let name = s.trim().to_ascii_uppercase().replace('-', "_");
    serde_json::from_value(serde_json::Value::String(name)).map_err(|e| e.to_string())
}

/// One flag per configuration key. Unset flags leave the file value alone.
#[derive(Debug, Default, Args)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub n_rounds: Option<usize>,
    #[arg(long)]
    pub n_attempts: Option<usize>,
    #[arg(long)]
    pub sigma_star: Option<f64>,
    #[arg(long)]
    pub d_thresh: Option<f64>,
    #[arg(long)]
    pub p_thresh: Option<f64>,
    #[arg(long)]
    pub n_distractors: Option<usize>,
    #[arg(long)]
    pub n_options: Option<usize>,
    #[arg(long)]
    pub n_step: Option<usize>,
    #[arg(long)]
    pub max_samples: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// RELATIVE or ABSOLUTE.
    #[arg(long, value_parser = parse_enum::<RankingMode>)]
    pub ranking_mode: Option<RankingMode>,
    /// PER_QUESTION or PER_ROUND.
    #[arg(long, value_parser = parse_enum::<PairUpdateGranularity>)]
    pub pair_update_granularity: Option<PairUpdateGranularity>,
    /// Game seed. A fresh one is generated and printed when neither this
    /// flag nor the config file sets it.
    #[arg(long, alias = "seed")]
    pub rng_seed: Option<u64>,
    /// OWN or GLOBAL.
    #[arg(long, value_parser = parse_enum::<UniquenessScope>)]
    pub uniqueness_scope: Option<UniquenessScope>,
    #[arg(long)]
    pub verification_runs: Option<usize>,
    /// Harness worker command; SKATE_SANDBOX_CMD takes precedence.
    #[arg(long)]
    pub sandbox_harness_cmd: Option<String>,
    #[arg(long)]
    pub sandbox_timeout_ms: Option<u64>,
    #[arg(long)]
    pub sandbox_memory_limit_bytes: Option<u64>,
    /// `stub` or `http`.
    #[arg(long)]
    pub embedding_provider: Option<String>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    #[arg(long)]
    pub embedding_endpoint: Option<String>,
    #[arg(long)]
    pub embedding_model: Option<String>,
    #[arg(long)]
    pub embedding_credential_env: Option<String>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub sigma0: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub draw_probability: Option<f64>,
}

macro_rules! apply_overrides {
    ($src:expr, $dst:expr, $($field:ident),* $(,)?) => {
        $( if let Some(v) = $src.$field.clone() { $dst.$field = v; } )*
    };
}

impl ConfigOverrides {
    pub fn apply(&self, config: &mut GameConfig) {
        apply_overrides!(
            self, config, n_rounds, n_attempts, sigma_star, d_thresh, p_thresh, n_distractors, n_options, n_step,
            max_samples, temperature, ranking_mode, pair_update_granularity, rng_seed, uniqueness_scope,
            verification_runs, sandbox_harness_cmd, sandbox_timeout_ms, sandbox_memory_limit_bytes,
            embedding_provider, embedding_dim, embedding_endpoint, embedding_model, embedding_credential_env, mu0,
            sigma0, beta, tau, draw_probability,
        );
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Game config (TOML). Defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Player roster (TOML with `[[player]]` tables).
    #[arg(long)]
    pub roster: PathBuf,
    /// Archive directory to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Record the wall-clock start time in the archive.
    #[arg(long)]
    pub timestamps: bool,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    #[arg(long)]
    pub archive: PathBuf,
}

#[derive(Debug, Args)]
pub struct AddPlayersArgs {
    #[arg(long)]
    pub archive: PathBuf,
    /// Roster of the players to add.
    #[arg(long)]
    pub roster: PathBuf,
    /// ANSWER_ONLY or FULL_JOIN.
    #[arg(long, value_parser = parse_enum::<JoinMode>, default_value = "ANSWER_ONLY")]
    pub mode: JoinMode,
    /// Write the extended archive here instead of updating it in place.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub archive: PathBuf,
    /// all, skills, preference, variance, cumulative, ratings or discriminatory.
    #[arg(long, default_value = "all")]
    pub which: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// File holding the snippet. A leading comment line is taken as the rationale.
    #[arg(long)]
    pub code: PathBuf,
    /// Candidate wrong answers, one per line.
    #[arg(long)]
    pub distractors: PathBuf,
    /// Expected output, used only when no sandbox harness is configured.
    #[arg(long)]
    pub truth: Option<String>,
    /// Check uniqueness against this archive's questions.
    #[arg(long)]
    pub archive: Option<PathBuf>,
    /// Setter whose history is used for the uniqueness check.
    #[arg(long, default_value = "cli")]
    pub setter: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    /// Question fixture (TOML or JSON with `code`, `truth`, `distractors`).
    #[arg(long)]
    pub question: PathBuf,
    /// `scripted:<accuracy>`, `first`, or `player:<id>` (with --roster).
    #[arg(long)]
    pub answerer: String,
    #[arg(long)]
    pub roster: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 10)]
    pub variations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `sensitivity.tsv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterFile {
    #[serde(default)]
    player: Vec<RosterEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RosterKind {
    Scripted,
    Provider,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterEntry {
    id: String,
    kind: RosterKind,
    #[serde(default)]
    strategy: Option<String>,
    // scripted
    accuracy: Option<f64>,
    #[serde(default)]
    accuracy_by_tag: BTreeMap<String, f64>,
    pool_size: Option<usize>,
    pool_salt: Option<String>,
    /// JSON file with a list of fixtures, relative to the roster file.
    fixtures: Option<PathBuf>,
    // provider
    name: Option<String>,
    endpoint: Option<String>,
    model: Option<String>,
    credential_env: Option<String>,
    max_concurrent: Option<usize>,
}

pub const DEFAULT_POOL_SIZE: usize = 128;

/// Reads a roster file into players, without connecting provider clients'
/// credentials.
pub fn load_roster(path: &Path) -> Result<Vec<Player>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read roster {}: {e}", path.display()))?;
    let file: RosterFile = toml::from_str(&text).map_err(|e| format!("invalid roster {}: {e}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    file.player
        .into_iter()
        .map(|e| {
            let strategy = match &e.strategy {
                Some(s) => s.parse::<AugmentationStrategy>()?,
                None => AugmentationStrategy::default(),
            };
            let missing = |f: &str| format!("player `{}`: missing `{f}`", e.id);
            match e.kind {
                RosterKind::Scripted => {
                    let accuracy = e.accuracy.ok_or_else(|| missing("accuracy"))?;
                    let pool = match &e.fixtures {
                        Some(f) => {
                            let p = base.join(f);
                            let t = std::fs::read_to_string(&p)
                                .map_err(|err| format!("cannot read fixtures {}: {err}", p.display()))?;
                            serde_json::from_str::<Vec<Fixture>>(&t)
                                .map_err(|err| format!("invalid fixtures {}: {err}", p.display()))?
                        }
                        None => generate_pool(
                            e.pool_salt.as_deref().unwrap_or(&e.id),
                            e.pool_size.unwrap_or(DEFAULT_POOL_SIZE),
                        ),
                    };
                    let profile = ScriptedProfile { accuracy, accuracy_by_tag: e.accuracy_by_tag, pool };
                    profile.validate().map_err(|err| format!("player `{}`: {err}", e.id))?;
                    Ok(Player::scripted(e.id, strategy, profile))
                }
                RosterKind::Provider => {
                    let cfg = ProviderConfig {
                        name: e.name.clone().unwrap_or_else(|| "openai".into()),
                        endpoint: e.endpoint.clone().ok_or_else(|| missing("endpoint"))?,
                        model: e.model.clone().ok_or_else(|| missing("model"))?,
                        credential_env: e.credential_env.clone().ok_or_else(|| missing("credential_env"))?,
                        max_concurrent: e.max_concurrent.unwrap_or(4),
                    };
                    Ok(Player::provider(e.id, strategy, cfg))
                }
            }
        })
        .collect()
}

/// Config from an optional file plus flags, and whether the seed was given.
fn resolve_config(path: Option<&Path>, overrides: &ConfigOverrides) -> Result<(GameConfig, bool), String> {
    let (mut config, seed_in_file) = match path {
        Some(p) => {
            let cfg = GameConfig::load(p).map_err(|e| e.to_string())?;
            let text = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
            let table: toml::Table = toml::from_str(&text).map_err(|e| e.to_string())?;
            (cfg, table.contains_key("rng_seed"))
        }
        None => (GameConfig::default(), false),
    };
    overrides.apply(&mut config);
    config.validate().map_err(|e| e.to_string())?;
    Ok((config, seed_in_file || overrides.rng_seed.is_some()))
}

fn fresh_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos());
    let mut rng = derive_rng(nanos as u64, &["cli-seed", &std::process::id().to_string()]);
    rand::Rng::random::<u64>(&mut rng) >> 11
}

/// Fails early on anything that would stop the game in round one.
fn preflight(players: &[Player], engine: &Engine) -> Result<(), String> {
    for p in players {
        if let PlayerSpec::Provider(cfg) = &p.spec {
            cfg.check_credential()
                .map_err(|_| format!("player `{}` needs the env var {} to be set", p.id, cfg.credential_env))?;
            if !engine.has_harness() {
                return Err(format!(
                    "player `{}` is model-backed, which needs a sandbox harness: set {SANDBOX_CMD_ENV} or sandbox_harness_cmd",
                    p.id
                ));
            }
        }
    }
    Ok(())
}

fn print_ranking(archive: &crate::engine::GameArchive) {
    println!("rank\tplayer\tmu\tsigma");
    for (i, s) in rating_summary(archive, DEFAULT_SUMMARY_WINDOW).iter().enumerate() {
        println!("{}\t{}\t{:.3}\t{:.3}", i + 1, s.player, s.mu, s.sigma);
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), String> {
    let (mut config, seeded) = resolve_config(args.config.as_deref(), &args.overrides)?;
    if !seeded {
        config.rng_seed = fresh_seed();
    }
    println!("seed: {}", config.rng_seed);
    let players = load_roster(&args.roster)?;
    let engine = Engine::from_config(&config).map_err(|e| e.to_string())?.with_timestamps(args.timestamps);
    preflight(&players, &engine)?;
    let store = ArchiveStore::new(&args.out);
    let archive = engine.play_game_in(&store, &config, players).map_err(|e| {
        format!("{e}\nthe archive in {} holds every completed round; continue with `skate resume`", args.out.display())
    })?;
    println!("archive: {}", args.out.display());
    print_ranking(&archive);
    Ok(())
}

fn cmd_resume(args: &ResumeArgs) -> Result<(), String> {
    let store = ArchiveStore::new(&args.archive);
    let snapshot = store.load_for_resume().map_err(|e| e.to_string())?;
    let engine = Engine::from_config(&snapshot.config).map_err(|e| e.to_string())?;
    preflight(&snapshot.roster, &engine)?;
    let archive = engine.resume(&store).map_err(|e| e.to_string())?;
    println!("archive: {} ({} rounds)", args.archive.display(), archive.rounds.len());
    print_ranking(&archive);
    Ok(())
}

fn cmd_add_players(args: &AddPlayersArgs) -> Result<(), String> {
    let mut archive = ArchiveStore::new(&args.archive).load().map_err(|e| e.to_string())?;
    let new_players = load_roster(&args.roster)?;
    let engine = Engine::from_config(&archive.config).map_err(|e| e.to_string())?;
    preflight(&archive.roster, &engine)?;
    preflight(&new_players, &engine)?;
    let target = ArchiveStore::new(args.out.as_ref().unwrap_or(&args.archive));
    engine.add_players(&mut archive, new_players, args.mode, Some(&target)).map_err(|e| e.to_string())?;
    println!("archive: {}", target.dir().display());
    print_ranking(&archive);
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), String> {
    let which: Vec<Analysis> = match args.which.as_str() {
        "all" => Analysis::ALL.to_vec(),
        other => other.split(',').map(|s| s.trim().parse::<Analysis>()).collect::<Result<_, _>>()?,
    };
    let archive = ArchiveStore::new(&args.archive).load().map_err(|e| e.to_string())?;
    let bundle = export_report(&archive, &args.out, &which).map_err(|e| e.to_string())?;
    for p in bundle.tables.iter().chain(&bundle.series) {
        println!("{}", p.display());
    }
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Ok(text.lines().map(str::to_string).filter(|l| !l.trim().is_empty()).collect())
}

/// Returns whether the candidate was accepted.
fn cmd_validate(args: &ValidateArgs) -> Result<bool, String> {
    let (config, _) = resolve_config(args.config.as_deref(), &args.overrides)?;
    let raw = std::fs::read_to_string(&args.code).map_err(|e| format!("cannot read {}: {e}", args.code.display()))?;
    let (rationale, code) = crate::players::prompt::parse_setter_output(&raw).map_err(|e| e.to_string())?;
    let distractors = read_lines(&args.distractors)?;
    let fixture = Fixture { rationale: rationale.clone(), code: code.clone(), truth: args.truth.clone(), distractors };
    let setter = Player::scripted(args.setter.clone(), AugmentationStrategy::NoInfo, ScriptedProfile::new(0.0, vec![fixture]));

    let engine = Engine::from_config(&config).map_err(|e| e.to_string())?;
    if !engine.has_harness() && args.truth.is_none() {
        return Err(format!("no sandbox harness configured: set {SANDBOX_CMD_ENV} or pass --truth"));
    }
    let history_archive = match &args.archive {
        Some(dir) => Some(ArchiveStore::new(dir).load().map_err(|e| e.to_string())?),
        None => None,
    };
    let setter_id = PlayerId::new(args.setter.clone());
    let history: Vec<&crate::types::Question> = history_archive
        .iter()
        .flat_map(|a| a.questions())
        .filter(|q| config.uniqueness_scope == UniquenessScope::Global || q.setter() == &setter_id)
        .collect();
    engine.register_fixtures(std::slice::from_ref(&setter));
    let round = history_archive.as_ref().map_or(1, |a| a.rounds.len() + 1);
    let candidate = CandidateQuestion { setter: setter_id, round, code, rationale, claimed_distractors: Vec::new() };
    let services = Services { executor: engine.executor(), embeddings: engine.embeddings() };
    match validate_candidate(candidate, 1, &setter, &history, &services, &config).map_err(|e| e.to_string())? {
        Validation::Accepted(q) => {
            println!("ACCEPTED");
            println!("truth: {}", q.truth());
            println!("distractors: {}", q.distractors().join(" | "));
            Ok(true)
        }
        Validation::Rejected(f) => {
            println!("REJECTED {}: {}", f.reason, f.detail);
            Ok(false)
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuestionFixture {
    code: String,
    #[serde(default)]
    rationale: String,
    truth: String,
    distractors: Vec<String>,
}

fn cmd_sensitivity(args: &SensitivityArgs) -> Result<(), String> {
    let (config, _) = resolve_config(args.config.as_deref(), &ConfigOverrides::default())?;
    let text = std::fs::read_to_string(&args.question)
        .map_err(|e| format!("cannot read {}: {e}", args.question.display()))?;
    let fixture: QuestionFixture = if args.question.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())?
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())?
    };

    // Build the question through the normal checks, trusting the fixture's
    // truth when no harness is available.
    let setter = Player::scripted(
        "fixture",
        AugmentationStrategy::NoInfo,
        ScriptedProfile::new(
            0.0,
            vec![Fixture {
                rationale: fixture.rationale.clone(),
                code: fixture.code.clone(),
                truth: Some(fixture.truth.clone()),
                distractors: fixture.distractors.clone(),
            }],
        ),
    );
    let engine = Engine::from_config(&config).map_err(|e| e.to_string())?;
    engine.register_fixtures(std::slice::from_ref(&setter));
    let candidate = CandidateQuestion {
        setter: setter.id.clone(),
        round: 1,
        code: fixture.code.clone(),
        rationale: fixture.rationale.clone(),
        claimed_distractors: Vec::new(),
    };
    let services = Services { executor: engine.executor(), embeddings: engine.embeddings() };
    let question = match validate_candidate(candidate, 1, &setter, &[], &services, &config).map_err(|e| e.to_string())? {
        Validation::Accepted(q) => q,
        Validation::Rejected(f) => return Err(format!("question fixture is not valid: {}: {}", f.reason, f.detail)),
    };

    let seed = args.seed;
    let mut rng = derive_rng(seed, &["sensitivity"]);
    let report = if let Some(acc) = args.answerer.strip_prefix("scripted:") {
        let acc: f64 = acc.parse().map_err(|_| format!("bad accuracy in `{}`", args.answerer))?;
        if !(0.0..=1.0).contains(&acc) {
            return Err("scripted accuracy must lie in [0, 1]".into());
        }
        sensitivity(
            &question,
            |p, i| {
                let mut r = derive_rng(seed, &["sensitivity-answer", &i.to_string()]);
                Ok(scripted_choice(acc, p.truth_index, p.options.len(), &mut r))
            },
            args.variations,
            args.reps,
            config.n_options,
            &mut rng,
        )
    } else if args.answerer == "first" {
        sensitivity(&question, |_, _| Ok(0), args.variations, args.reps, config.n_options, &mut rng)
    } else if let Some(id) = args.answerer.strip_prefix("player:") {
        let roster = args.roster.as_ref().ok_or("--answerer player:<id> needs --roster")?;
        let players = load_roster(roster)?;
        let player = players.into_iter().find(|p| p.id.as_str() == id).ok_or(format!("no player `{id}` in roster"))?;
        preflight(std::slice::from_ref(&player), &engine).or_else(|e| {
            if player.is_scripted() {
                Ok(())
            } else {
                Err(e)
            }
        })?;
        sensitivity(
            &question,
            |p, i| player.answer(&question, p, i, seed, &config),
            args.variations,
            args.reps,
            config.n_options,
            &mut rng,
        )
    } else {
        return Err(format!("unknown answerer `{}`", args.answerer));
    };

    std::fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
    let path = args.out.join("sensitivity.tsv");
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_path(&path).map_err(|e| e.to_string())?;
    w.write_record(["variation_kind", "variation", "truth_index", "n_correct", "reps", "fraction", "options"])
        .map_err(|e| e.to_string())?;
    println!("kind\tvariation\tfraction");
    for (kind, rows) in [("option_set", &report.option_sets), ("ordering", &report.orderings)] {
        for v in rows {
            w.write_record([
                kind.to_string(),
                v.variation.to_string(),
                v.truth_index.to_string(),
                v.n_correct.to_string(),
                v.reps.to_string(),
                v.fraction.to_string(),
                v.options.join(" | "),
            ])
            .map_err(|e| e.to_string())?;
            println!("{kind}\t{}\t{}", v.variation, v.fraction);
        }
    }
    w.flush().map_err(|e| e.to_string())?;
    println!("table: {}", path.display());
    Ok(())
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Resume(a) => cmd_resume(a),
        Command::AddPlayers(a) => cmd_add_players(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::ValidateQuestion(a) => cmd_validate(a).and_then(|ok| if ok { Ok(()) } else { Err(String::new()) }),
        Command::Sensitivity(a) => cmd_sensitivity(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::FAILURE
        }
    }
}

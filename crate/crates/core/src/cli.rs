//! The `nmob` command line: plan, simulate, evaluate, report.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::{file_digest, SimulationConfig};
use crate::engine::{self, Ablation, Environment, RunArtifacts};
use crate::error::{ConfigError, Error};
use crate::eval::{evaluate, EvalConfig, EvaluationReport};
use crate::ingest::ingest_profiles;
use crate::spatial::PoiDatabase;
use crate::types::PersonProfile;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nmob", version, about = "Narrative-driven daily mobility simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate narratives and activity plans.
    Plan(RunArgs),
    /// Simulate trajectories for every profile.
    Simulate(RunArgs),
    /// Compare generated trajectories against a reference population.
    Evaluate(EvalArgs),
    /// Write per-metric distribution CSVs for plotting.
    Report(EvalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    Remote,
    Mock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AblationArg {
    Full,
    RandomPlan,
    DirectPlan,
    RandomMode,
    NoRethinking,
}

impl From<AblationArg> for Ablation {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::Full => Ablation::Full,
            AblationArg::RandomPlan => Ablation::RandomPlan,
            AblationArg::DirectPlan => Ablation::DirectPlan,
            AblationArg::RandomMode => Ablation::RandomMode,
            AblationArg::NoRethinking => Ablation::NoRethinking,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    #[arg(long, value_enum)]
    pub ablation: Option<AblationArg>,
    /// Only the first N profiles.
    #[arg(long)]
    pub agents: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub generated: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    /// Supplies the category vocabulary and POIs for diary references.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Errors sorted by exit code.
#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::User(_) => EXIT_USER,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn line(&self) -> String {
        let (kind, message) = match self {
            CliError::User(m) => ("user", m),
            CliError::Internal(m) => ("internal", m),
        };
        json!({"error": kind, "message": message}).to_string()
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::User(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(c) => c.into(),
            other => CliError::Internal(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Internal(format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Failures print one JSON line on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            let err = CliError::User(e.to_string().trim().to_string());
            eprintln!("{}", err.line());
            return err.code();
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", e.line());
            e.code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Plan(a) => cmd_run(&a, false),
        Command::Simulate(a) => cmd_run(&a, true),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

fn prepare(args: &RunArgs) -> Result<(Environment, Vec<PersonProfile>), CliError> {
    let mut config = SimulationConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(b) = args.backend {
        config.select_backend(match b {
            BackendChoice::Remote => "remote",
            BackendChoice::Mock => "mock",
        })?;
    }
    if let Some(a) = args.ablation {
        Ablation::from(a).apply(&mut config);
    }
    let ingest = ingest_profiles(&config.profiles)?;
    for r in &ingest.rejected {
        log::warn!("profile row {} rejected: {}", r.row, r.reason);
    }
    let mut profiles = ingest.profiles;
    if let Some(n) = args.agents {
        if n == 0 {
            return Err(CliError::User("--agents must be at least 1".into()));
        }
        profiles.truncate(n);
    }
    if profiles.is_empty() {
        return Err(CliError::User(format!("{}: no valid profiles", config.profiles.display())));
    }
    let config_digest = file_digest(&args.config)?;
    let mut env = Environment::load(config)?;
    env.input_digests.insert("config_file".to_string(), config_digest);
    env.register_occupations(&profiles);
    Ok((env, profiles))
}

fn cmd_run(args: &RunArgs, simulate: bool) -> Result<String, CliError> {
    let (env, profiles) = prepare(args)?;
    let ablation = args.ablation.map(Ablation::from);
    let artifacts: RunArtifacts = if simulate {
        engine::simulate_population(&profiles, &env, ablation)
    } else {
        engine::plan_population(&profiles, &env, ablation)
    };
    artifacts.write(&args.out_dir).map_err(|e| io_err(&args.out_dir, e))?;
    let m = &artifacts.manifest;
    Ok(json!({
        "command": if simulate { "simulate" } else { "plan" },
        "out_dir": args.out_dir,
        "agents": m.agents,
        "trajectories": m.trajectories,
        "plans": artifacts.plans.len(),
        "failures": m.failures.len(),
        "fallbacks": m.fallbacks.len(),
        "manifest_hash": m.manifest_hash,
    })
    .to_string())
}

fn evaluation(args: &EvalArgs) -> Result<EvaluationReport, CliError> {
    let (eval_config, db) = match &args.config {
        Some(path) => {
            let c = SimulationConfig::load(path)?;
            let db = PoiDatabase::load(&c.pois)?;
            (EvalConfig { categories: c.categories, ..EvalConfig::default() }, Some(db))
        }
        None => (EvalConfig::default(), None),
    };
    let generated = engine::load_population(&args.generated, &eval_config.categories, db.as_ref())?;
    let reference = engine::load_population(&args.reference, &eval_config.categories, db.as_ref())?;
    evaluate(&generated, &reference, &eval_config).map_err(|e| CliError::User(e.to_string()))
}

fn cmd_evaluate(args: &EvalArgs) -> Result<String, CliError> {
    let report = evaluation(args)?;
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join("report.json");
        let text = serde_json::to_string_pretty(&report).map_err(|e| io_err(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    }
    Ok(json!({
        "jsd_intention": report.jsd_intention,
        "jsd_locations": report.jsd_locations,
        "jsd_mode": report.jsd_mode,
        "jsd_radius": report.jsd_radius,
        "final_score": report.final_score,
        "generated": report.generated_count,
        "reference": report.reference_count,
    })
    .to_string())
}

fn cmd_report(args: &EvalArgs) -> Result<String, CliError> {
    let report = evaluation(args)?;
    let dir = args.out_dir.clone().unwrap_or_else(|| PathBuf::from("report"));
    let files = report.write_csvs(&dir).map_err(|e| io_err(&dir, e))?;
    Ok(json!({"final_score": report.final_score, "files": files}).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_flags() {
        let cli = Cli::try_parse_from([
            "nmob",
            "simulate",
            "--config",
            "c.json",
            "--seed",
            "42",
            "--out-dir",
            "o",
            "--backend",
            "mock",
            "--ablation",
            "no-rethinking",
            "--agents",
            "10",
        ])
        .unwrap();
        let Command::Simulate(a) = cli.command else { panic!("wrong command") };
        assert_eq!(
            (a.seed, a.agents, a.backend, a.ablation),
            (Some(42), Some(10), Some(BackendChoice::Mock), Some(AblationArg::NoRethinking))
        );
        for a in Ablation::ALL {
            let cli = Cli::try_parse_from(["nmob", "plan", "--config", "c.json", "--ablation", a.as_str()]).unwrap();
            let Command::Plan(args) = cli.command else { panic!("wrong command") };
            assert_eq!(Ablation::from(args.ablation.unwrap()), a);
        }
    }

    #[test]
    fn bad_usage_is_a_user_error() {
        assert_eq!(run(["nmob", "simulate"]), EXIT_USER);
        assert_eq!(run(["nmob", "simulate", "--config", "/nonexistent/c.json"]), EXIT_USER);
        assert_eq!(
            run(["nmob", "evaluate", "--generated", "/nonexistent/g", "--reference", "/nonexistent/r"]),
            EXIT_USER
        );
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use losguide::{CaseId, GuidanceLaw, StatsScope};
use losguide_cli::commands::{self, McOptions};
use losguide_cli::compare::{compare, render_table, write_compare_csv, CompareInput};
use losguide_cli::manifest::RunManifest;
use losguide_cli::{canonical_file, exit_code, CliError, ScenarioFile, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "sim", version, about = "Pursuer/evader engagement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario to use when no config is given.
    #[arg(long, value_parser = parse_case)]
    case: Option<CaseId>,
    /// Master seed.
    #[arg(long, env = "SIM_DEFAULT_SEED", default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one engagement.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Guidance law, overriding the scenario file.
        #[arg(long, value_parser = parse_law)]
        guidance: Option<GuidanceLaw>,
        /// Trial index whose initial conditions are used.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        /// Write trajectory.csv.
        #[arg(long)]
        log_trajectory: bool,
        /// Integration steps between logged samples.
        #[arg(long, default_value_t = 10)]
        log_stride: usize,
    },
    /// Run a Monte Carlo batch per guidance law.
    Mc {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 500)]
        n: u64,
        /// Comma-separated laws.
        #[arg(long, value_delimiter = ',', value_parser = parse_law, default_value = "cats,pn")]
        guidance: Vec<GuidanceLaw>,
        /// Worker threads; defaults to the available cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_parser = parse_scope, default_value = "all")]
        stats_scope: StatsScope,
    },
    /// Compare two stats files side by side.
    Compare {
        left: PathBuf,
        right: PathBuf,
        /// Also write compare.csv, compare.txt and a manifest here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Baseline and toggled guidance from one adverse initial condition.
    DemoBistability {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 10)]
        log_stride: usize,
    },
}

fn parse_law(s: &str) -> Result<GuidanceLaw, String> {
    s.parse()
}

fn parse_case(s: &str) -> Result<CaseId, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_scope(s: &str) -> Result<StatsScope, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn load(scenario: &ScenarioArgs) -> Result<ScenarioFile, CliError> {
    match (&scenario.config, scenario.case) {
        (Some(path), _) => ScenarioFile::load(path),
        (None, Some(case)) => Ok(canonical_file(case)),
        (None, None) => Err(CliError::Config("either --config or --case is required".into())),
    }
}

fn manifest(command: &str, scenario: &ScenarioArgs, file: &ScenarioFile) -> RunManifest {
    RunManifest::new(command, args(), scenario.config.as_deref(), Some(scenario.seed)).with_scenario(file)
}

fn args() -> Vec<String> {
    std::env::args().skip(1).collect()
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            scenario,
            guidance,
            trial,
            log_trajectory,
            log_stride,
        } => {
            let file = load(&scenario)?;
            let stride = log_trajectory.then_some(log_stride.max(1));
            let result = commands::run_single(&file, guidance, scenario.seed, trial, stride)?;
            commands::write_single(&scenario.out_dir, &result)?;
            manifest("run", &scenario, &file).write(&scenario.out_dir)?;
            let r = &result.record;
            println!(
                "{} {}: t = {:.4} s  miss = {:.4} m  closing velocity = {:.2} m/s",
                result.law.as_str(),
                r.outcome.as_str(),
                r.intercept_time,
                r.miss_distance,
                r.closing_velocity
            );
            Ok(exit_code(r.outcome))
        }
        Command::Mc {
            scenario,
            n,
            guidance,
            jobs,
            stats_scope,
        } => {
            let file = load(&scenario)?;
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let opts = McOptions {
                n,
                seed: scenario.seed,
                jobs,
                laws: guidance,
                scope: stats_scope,
            };
            let report = commands::monte_carlo(&file, &opts)?;
            commands::write_mc(&scenario.out_dir, &report)?;
            manifest("mc", &scenario, &file).write(&scenario.out_dir)?;
            print!("{}", commands::render_stats(&report.stats));
            Ok(0)
        }
        Command::Compare { left, right, out_dir } => {
            let rows = compare(&CompareInput::load(&left)?, &CompareInput::load(&right)?)?;
            let table = render_table(&rows);
            print!("{table}");
            if let Some(dir) = out_dir {
                write_compare(&dir, &rows, &table)?;
            }
            Ok(0)
        }
        Command::DemoBistability { scenario, log_stride } => {
            let file = load(&scenario)?;
            let report = commands::bistability(&file, scenario.seed, log_stride.max(1))?;
            if !report.adverse() {
                eprintln!(
                    "warning: initial closing alignment {:.4} is not adverse; both laws may intercept",
                    report.initial_alignment
                );
            }
            commands::write_bistability(&scenario.out_dir, &report)?;
            manifest("demo-bistability", &scenario, &file).write(&scenario.out_dir)?;
            for run in [&report.baseline, &report.cats] {
                let r = &run.record;
                println!(
                    "{:<5}{:<12} t = {:.4} s  miss = {:.4} m",
                    run.law.as_str(),
                    r.outcome.as_str(),
                    r.intercept_time,
                    r.miss_distance
                );
            }
            Ok(0)
        }
    }
}

fn write_compare(dir: &Path, rows: &[losguide_cli::compare::LawComparison], table: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_compare_csv(&dir.join("compare.csv"), rows)?;
    let txt = dir.join("compare.txt");
    std::fs::write(&txt, table).map_err(|e| CliError::io(&txt, e))?;
    RunManifest::new("compare", args(), None, None).write(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}

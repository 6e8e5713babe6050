//! The work behind each subcommand, independent of argument parsing.

use std::path::Path;

use losguide::engagement::CartesianPose;
use losguide::montecarlo::{sample_initial_conditions, trial_rng};
use losguide::{run_batch, run_trial, GuidanceLaw, StatsScope, TrajectoryLog, TrialRecord};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioFile;
use crate::error::CliError;
use crate::output::{
    write_ecdf_csv, write_json, write_records_csv, write_trajectory_csv, LawStats, StatsFile, STATS_SCHEMA,
};

pub const STATS_FILE: &str = "stats.json";
pub const RECORDS_FILE: &str = "records.csv";
pub const ECDF_FILE: &str = "ecdf.csv";
pub const RECORD_FILE: &str = "record.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DEMO_BASELINE_FILE: &str = "iol_trajectory.csv";
pub const DEMO_CATS_FILE: &str = "cats_trajectory.csv";
pub const DEMO_RECORDS_FILE: &str = "records.json";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseJson {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

impl From<&CartesianPose> for PoseJson {
    fn from(p: &CartesianPose) -> Self {
        Self {
            position: p.position.into(),
            velocity: p.velocity.into(),
        }
    }
}

/// Result of `sim run`, as written to `record.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleRun {
    pub law: GuidanceLaw,
    pub pursuer: PoseJson,
    pub evader: PoseJson,
    /// `i_P . i_L` at t = 0.
    pub initial_alignment: f64,
    pub record: TrialRecord,
    #[serde(skip)]
    pub log: Option<TrajectoryLog>,
}

/// Cosine of the angle between pursuer velocity and the line of sight.
pub fn closing_alignment(p: &CartesianPose, e: &CartesianPose) -> f64 {
    let los = e.position - p.position;
    p.velocity.dot(&los) / (p.velocity.norm() * los.norm())
}

/// Runs trial `trial` of the scenario with the initial conditions that
/// `sim mc` would draw for it.
pub fn run_single(
    file: &ScenarioFile,
    law: Option<GuidanceLaw>,
    seed: u64,
    trial: u64,
    log_stride: Option<usize>,
) -> Result<SingleRun, CliError> {
    let mut spec = file.to_spec()?;
    if let Some(law) = law {
        spec = spec.with_law(law);
    }
    let mut rng = trial_rng(seed, trial);
    let draw = sample_initial_conditions(&spec, &mut rng)?;
    let (mut record, log) = run_trial(
        (draw.pursuer, draw.evader),
        &spec.setup(draw.maneuver),
        &spec.sim,
        log_stride,
    )?;
    record.trial = trial;
    record.seed = seed;
    Ok(SingleRun {
        law: spec.guidance.law,
        pursuer: (&draw.pursuer).into(),
        evader: (&draw.evader).into(),
        initial_alignment: closing_alignment(&draw.pursuer, &draw.evader),
        record,
        log,
    })
}

pub fn write_single(out_dir: &Path, run: &SingleRun) -> Result<(), CliError> {
    create_dir(out_dir)?;
    write_json(&out_dir.join(RECORD_FILE), run)?;
    if let Some(log) = &run.log {
        write_trajectory_csv(&out_dir.join(TRAJECTORY_FILE), log)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct McOptions {
    pub n: u64,
    pub seed: u64,
    pub jobs: usize,
    pub laws: Vec<GuidanceLaw>,
    pub scope: StatsScope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub stats: StatsFile,
    pub records: Vec<(GuidanceLaw, Vec<TrialRecord>)>,
    pub scope: StatsScope,
}

/// One batch per requested law, all from the same initial conditions.
pub fn monte_carlo(file: &ScenarioFile, opts: &McOptions) -> Result<McReport, CliError> {
    if opts.laws.is_empty() {
        return Err(CliError::Config("no guidance law requested".into()));
    }
    let spec = file.to_spec()?;
    let mut laws = Vec::new();
    let mut records = Vec::new();
    for &law in &opts.laws {
        let batch = run_batch(&spec.with_law(law), opts.n, opts.seed, opts.jobs, opts.scope)?;
        laws.push(LawStats::new(law, &batch.stats));
        records.push((law, batch.records));
    }
    Ok(McReport {
        stats: StatsFile {
            schema: STATS_SCHEMA.to_string(),
            case: spec.case,
            seed: opts.seed,
            n_trials: opts.n,
            scope: opts.scope,
            laws,
        },
        records,
        scope: opts.scope,
    })
}

pub fn write_mc(out_dir: &Path, report: &McReport) -> Result<(), CliError> {
    create_dir(out_dir)?;
    let batches: Vec<(GuidanceLaw, &[TrialRecord])> = report.records.iter().map(|(l, r)| (*l, r.as_slice())).collect();
    write_json(&out_dir.join(STATS_FILE), &report.stats)?;
    write_records_csv(&out_dir.join(RECORDS_FILE), &batches)?;
    write_ecdf_csv(&out_dir.join(ECDF_FILE), &batches, report.scope)
}

/// Short text summary in the Avg/Std/Fail layout.
pub fn render_stats(stats: &StatsFile) -> String {
    let mut out = format!(
        "case {}  n = {}  seed = {}  scope = {:?}\n{:<6}{:>12}{:>12}{:>12}{:>12}{:>12}{:>12}{:>10}\n",
        stats.case,
        stats.n_trials,
        stats.seed,
        stats.scope,
        "law",
        "time avg",
        "time std",
        "miss avg",
        "miss std",
        "vc avg",
        "vc std",
        "fail %"
    );
    for b in &stats.laws {
        out.push_str(&format!(
            "{:<6}{:>12.4}{:>12.4}{:>12.4}{:>12.4}{:>12.2}{:>12.2}{:>10.3}\n",
            b.law.as_str(),
            b.time.mean,
            b.time.std,
            b.miss.mean,
            b.miss.std,
            b.closing_velocity.mean,
            b.closing_velocity.std,
            b.fail_percent
        ));
    }
    out
}

/// Baseline and toggled runs from one initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct BistabilityReport {
    pub initial_alignment: f64,
    pub baseline: SingleRun,
    pub cats: SingleRun,
}

impl BistabilityReport {
    pub fn adverse(&self) -> bool {
        self.initial_alignment < 0.0
    }
}

pub fn bistability(file: &ScenarioFile, seed: u64, log_stride: usize) -> Result<BistabilityReport, CliError> {
    let baseline = run_single(file, Some(GuidanceLaw::Iol), seed, 0, Some(log_stride))?;
    let cats = run_single(file, Some(GuidanceLaw::Cats), seed, 0, Some(log_stride))?;
    Ok(BistabilityReport {
        initial_alignment: baseline.initial_alignment,
        baseline,
        cats,
    })
}

pub fn write_bistability(out_dir: &Path, report: &BistabilityReport) -> Result<(), CliError> {
    create_dir(out_dir)?;
    for (run, name) in [(&report.baseline, DEMO_BASELINE_FILE), (&report.cats, DEMO_CATS_FILE)] {
        if let Some(log) = &run.log {
            write_trajectory_csv(&out_dir.join(name), log)?;
        }
    }
    write_json(&out_dir.join(DEMO_RECORDS_FILE), &[&report.baseline, &report.cats])
}

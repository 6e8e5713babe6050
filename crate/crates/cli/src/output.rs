//! File exports: trajectory, records and ECDF CSVs, stats JSON.
//!
//! Every CSV has a fixed header (see the `*_HEADER` constants). Angles are in
//! radians, rates in rad/s, lengths in m, speeds in m/s, specific accelerations
//! in m/s^2. Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use losguide::montecarlo::{MetricStats, OutcomeCounts};
use losguide::{ecdf, BatchStats, CaseId, GuidanceLaw, Outcome, StatsScope, TrajectoryLog, TrialRecord};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TRAJECTORY_HEADER: [&str; 32] = [
    "t_s",
    "p_north_m",
    "p_east_m",
    "p_down_m",
    "p_vn_mps",
    "p_ve_mps",
    "p_vd_mps",
    "e_north_m",
    "e_east_m",
    "e_down_m",
    "e_vn_mps",
    "e_ve_mps",
    "e_vd_mps",
    "range_m",
    "range_rate_mps",
    "theta_l_rad",
    "psi_l_rad",
    "psi_l_dot_radps",
    "theta_l_dot_radps",
    "y_norm_radps",
    "v_p_mps",
    "theta_p_rad",
    "psi_p_rad",
    "n_y_cmd_mps2",
    "n_z_cmd_mps2",
    "n_y_mps2",
    "n_z_mps2",
    "e_n_y_mps2",
    "e_n_z_mps2",
    "validity_margin",
    "branch",
    "held",
];

pub const RECORDS_HEADER: [&str; 9] = [
    "law",
    "trial",
    "seed",
    "outcome",
    "intercept_time_s",
    "miss_distance_m",
    "closing_velocity_mps",
    "branch_switches",
    "final_branch",
];

pub const ECDF_HEADER: [&str; 4] = ["law", "metric", "value", "fraction"];

/// Version tag written into stats JSON files.
pub const STATS_SCHEMA: &str = "losguide-stats/1";

fn create(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_trajectory_csv(path: &Path, log: &TrajectoryLog) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(TRAJECTORY_HEADER)?;
    for s in &log.samples {
        let (p, e, x) = (&s.pursuer, &s.evader, &s.view);
        let values = [
            s.t,
            p.position.x,
            p.position.y,
            p.position.z,
            p.velocity.x,
            p.velocity.y,
            p.velocity.z,
            e.position.x,
            e.position.y,
            e.position.z,
            e.velocity.x,
            e.velocity.y,
            e.velocity.z,
            x.range,
            s.r_dot,
            x.theta_l,
            x.psi_l,
            s.y[0],
            s.y[1],
            s.y[0].hypot(s.y[1]),
            x.v_p,
            x.theta_p,
            x.psi_p,
            s.commanded.n_y,
            s.commanded.n_z,
            s.applied.n_y,
            s.applied.n_z,
            s.evader_command.n_y,
            s.evader_command.n_z,
            s.validity_margin,
        ];
        let mut row: Vec<String> = values.iter().map(|v| num(*v)).collect();
        row.push(s.branch.as_str().to_string());
        row.push(u8::from(s.held).to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

fn record_row(law: GuidanceLaw, r: &TrialRecord) -> Vec<String> {
    vec![
        law.as_str().to_string(),
        r.trial.to_string(),
        r.seed.to_string(),
        r.outcome.as_str().to_string(),
        num(r.intercept_time),
        num(r.miss_distance),
        num(r.closing_velocity),
        r.branch_history.len().saturating_sub(1).to_string(),
        r.branch_history
            .last()
            .map(|b| b.branch.as_str())
            .unwrap_or("none")
            .to_string(),
    ]
}

pub fn write_records_csv(path: &Path, batches: &[(GuidanceLaw, &[TrialRecord])]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(RECORDS_HEADER)?;
    for (law, records) in batches {
        for r in *records {
            w.write_record(record_row(*law, r))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// ECDF metrics in export order.
pub const ECDF_METRICS: [&str; 3] = ["time", "miss", "closing_velocity"];

fn metric_value(r: &TrialRecord, metric: &str) -> f64 {
    match metric {
        "time" => r.intercept_time,
        "miss" => r.miss_distance,
        _ => r.closing_velocity,
    }
}

/// ECDF of each metric over the trials selected by `scope`; non-finite
/// values are left out.
pub fn write_ecdf_csv(
    path: &Path,
    batches: &[(GuidanceLaw, &[TrialRecord])],
    scope: StatsScope,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(ECDF_HEADER)?;
    for (law, records) in batches {
        let used: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| scope == StatsScope::All || r.outcome == Outcome::Intercept)
            .collect();
        for metric in ECDF_METRICS {
            let values: Vec<f64> = used
                .iter()
                .map(|r| metric_value(r, metric))
                .filter(|v| v.is_finite())
                .collect();
            if values.is_empty() {
                continue;
            }
            for (v, f) in ecdf(&values)?.points {
                w.write_record([law.as_str(), metric, &num(v), &num(f)])?;
            }
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// One stats block per guidance law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawStats {
    pub law: GuidanceLaw,
    pub n_trials: u64,
    pub n_used: u64,
    pub time: MetricStats,
    pub miss: MetricStats,
    pub closing_velocity: MetricStats,
    pub fail_rate: f64,
    pub fail_percent: f64,
    pub outcomes: OutcomeCounts,
    pub resampled: u64,
}

impl LawStats {
    pub fn new(law: GuidanceLaw, s: &BatchStats) -> Self {
        Self {
            law,
            n_trials: s.n_trials,
            n_used: s.n_used,
            time: s.time,
            miss: s.miss,
            closing_velocity: s.closing_velocity,
            fail_rate: s.fail_rate,
            fail_percent: s.fail_percent(),
            outcomes: s.outcomes,
            resampled: s.resampled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub schema: String,
    pub case: CaseId,
    pub seed: u64,
    pub n_trials: u64,
    pub scope: StatsScope,
    pub laws: Vec<LawStats>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = create(path)?;
    let text = serde_json::to_string_pretty(value)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .map_err(|e| CliError::io(path, e))
}

//! Scenario families, initial-condition sampling and batch statistics.
//!
//! Ranges are stated in engineering units (m/s, degrees, km)
//! and converted to SI when a trial is drawn. Every trial owns a ChaCha
//! stream selected by its index, so a batch is reproducible from
//! `(spec, n, master_seed)` no matter how the work is scheduled.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engagement::CartesianPose;
use crate::error::{Result, SimError};
use crate::geometry::{wrap_angle, Vec3};
use crate::guidance::{GuidanceConfig, GuidanceLaw};
use crate::sim::{run_trial, ManeuverInstance, Outcome, SimConfig, TrajectoryLog, TrialRecord, TrialSetup};
use crate::vehicle::{BodyState, Environment, ManeuverCommand, VehicleParams, STANDARD_GRAVITY};

/// Closed interval `[lo, hi]`; a point when both ends agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalRepr", into = "IntervalRepr")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntervalRepr {
    Point(f64),
    Range([f64; 2]),
}

impl TryFrom<IntervalRepr> for Interval {
    type Error = String;

    fn try_from(r: IntervalRepr) -> std::result::Result<Self, String> {
        let (lo, hi) = match r {
            IntervalRepr::Point(v) => (v, v),
            IntervalRepr::Range([lo, hi]) => (lo, hi),
        };
        if !(lo.is_finite() && hi.is_finite()) {
            return Err("interval bounds must be finite".into());
        }
        if lo > hi {
            return Err(format!("interval lower bound {lo} exceeds upper bound {hi}"));
        }
        Ok(Interval { lo, hi })
    }
}

impl From<Interval> for IntervalRepr {
    fn from(i: Interval) -> Self {
        if i.lo == i.hi {
            IntervalRepr::Point(i.lo)
        } else {
            IntervalRepr::Range([i.lo, i.hi])
        }
    }
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi {
            Ok(())
        } else {
            Err(SimError::InvalidParameter {
                name,
                reason: format!("bad interval [{}, {}]", self.lo, self.hi),
            })
        }
    }

    /// One uniform draw. Always consumes exactly one value from `rng`, even
    /// for points, so streams stay aligned across scenario variants.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.lo + (self.hi - self.lo) * u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseId {
    RA,
    FA,
    FAE,
    RAE,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::RA, CaseId::FA, CaseId::FAE, CaseId::RAE];

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseId::RA => "RA",
            CaseId::FA => "FA",
            CaseId::FAE => "FAE",
            CaseId::RAE => "RAE",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RA" => Ok(CaseId::RA),
            "FA" => Ok(CaseId::FA),
            "FAE" => Ok(CaseId::FAE),
            "RAE" => Ok(CaseId::RAE),
            _ => Err(SimError::InvalidParameter {
                name: "case",
                reason: format!("unknown case '{s}' (expected RA, FA, FAE or RAE)"),
            }),
        }
    }
}

/// Initial-condition ranges for one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleRanges {
    /// m/s
    pub speed: Interval,
    /// Flight-path angle, deg (positive up).
    pub theta_deg: Interval,
    /// Heading, deg from north toward east.
    pub psi_deg: Interval,
    pub north_km: Interval,
    pub east_km: Interval,
    pub altitude_km: Interval,
}

impl VehicleRanges {
    pub fn validate(&self) -> Result<()> {
        self.speed.validate("speed")?;
        self.theta_deg.validate("theta_deg")?;
        self.psi_deg.validate("psi_deg")?;
        self.north_km.validate("north_km")?;
        self.east_km.validate("east_km")?;
        self.altitude_km.validate("altitude_km")?;
        if !(self.speed.lo > 0.0) {
            return Err(SimError::InvalidParameter {
                name: "speed",
                reason: "speeds must be positive".into(),
            });
        }
        if self.theta_deg.lo <= -90.0 || self.theta_deg.hi >= 90.0 {
            return Err(SimError::InvalidParameter {
                name: "theta_deg",
                reason: "flight-path angle must stay inside (-90, 90)".into(),
            });
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CartesianPose {
        let speed = self.speed.sample(rng);
        let theta = self.theta_deg.sample(rng).to_radians();
        let psi = wrap_angle(self.psi_deg.sample(rng).to_radians());
        let north = self.north_km.sample(rng) * 1e3;
        let east = self.east_km.sample(rng) * 1e3;
        let altitude = self.altitude_km.sample(rng) * 1e3;
        CartesianPose::from_body(Vec3::new(north, east, -altitude), &BodyState { speed, theta, psi })
    }
}

/// Constant-magnitude evader maneuver starting at a random time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManeuverSpec {
    /// m/s^2
    pub magnitude: f64,
    /// Onset time window, s.
    pub window: Interval,
}

impl ManeuverSpec {
    pub fn ten_g(window: Interval) -> Self {
        Self {
            magnitude: 10.0 * STANDARD_GRAVITY,
            window,
        }
    }

    /// Draws onset time then a direction angle in the evader's command plane.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ManeuverInstance {
        let onset_time = self.window.sample(rng);
        let phi = Interval::new(0.0, std::f64::consts::TAU).sample(rng);
        let (s, c) = phi.sin_cos();
        ManeuverInstance {
            onset_time,
            command: ManeuverCommand::new(self.magnitude * c, self.magnitude * s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub case: CaseId,
    pub pursuer_ranges: VehicleRanges,
    pub evader_ranges: VehicleRanges,
    pub maneuver: Option<ManeuverSpec>,
    pub guidance: GuidanceConfig,
    pub pursuer: VehicleParams,
    pub evader: VehicleParams,
    pub env: Environment,
    pub sim: SimConfig,
}

/// Default pursuer: 500 kg, 15 kN thrust, 30 g per-channel command limit.
pub fn default_pursuer() -> VehicleParams {
    VehicleParams {
        mass: 500.0,
        axial_thrust: 15e3,
        drag_coefficient: 0.3,
        reference_area: 0.2,
        air_density: 1.225,
        accel_limit: Some(30.0 * STANDARD_GRAVITY),
    }
}

/// Default evader: 10 t, 50 kN thrust.
pub fn default_evader() -> VehicleParams {
    VehicleParams {
        mass: 10_000.0,
        axial_thrust: 50e3,
        drag_coefficient: 0.5,
        reference_area: 1.0,
        air_density: 1.225,
        accel_limit: None,
    }
}

impl ScenarioSpec {
    pub fn canonical(case: CaseId) -> Self {
        let r = Interval::new;
        let p = Interval::point;
        let (pursuer_ranges, evader_ranges, maneuver) = match case {
            CaseId::RA | CaseId::FA => {
                let pursuer = VehicleRanges {
                    speed: r(400.0, 600.0),
                    theta_deg: r(-60.0, 60.0),
                    psi_deg: r(-60.0, 60.0),
                    north_km: p(0.0),
                    east_km: p(0.0),
                    altitude_km: r(1.0, 3.0),
                };
                let evader = if case == CaseId::RA {
                    VehicleRanges {
                        speed: r(150.0, 250.0),
                        theta_deg: r(-60.0, 60.0),
                        psi_deg: r(-60.0, 60.0),
                        north_km: r(2.0, 4.0),
                        east_km: r(2.0, 4.0),
                        altitude_km: r(0.0, 4.0),
                    }
                } else {
                    VehicleRanges {
                        speed: r(150.0, 250.0),
                        theta_deg: r(-60.0, 60.0),
                        psi_deg: r(140.0, 220.0),
                        north_km: r(2.0, 4.0),
                        east_km: r(-1.0, 1.0),
                        altitude_km: r(0.0, 4.0),
                    }
                };
                (pursuer, evader, None)
            }
            CaseId::FAE | CaseId::RAE => {
                let front = case == CaseId::FAE;
                let pursuer = VehicleRanges {
                    speed: r(800.0, 1100.0),
                    theta_deg: r(-20.0, 20.0),
                    psi_deg: r(-20.0, 20.0),
                    north_km: p(if front { 0.0 } else { -10.0 }),
                    east_km: p(0.0),
                    altitude_km: p(10.0),
                };
                let evader = VehicleRanges {
                    speed: r(300.0, 600.0),
                    theta_deg: r(-15.0, 15.0),
                    psi_deg: if front { r(175.0, 195.0) } else { r(-20.0, 20.0) },
                    north_km: p(if front { 10.0 } else { 0.0 }),
                    east_km: r(-1.0, 1.0),
                    altitude_km: p(10.0),
                };
                let window = if front { r(0.0, 7.0) } else { r(0.0, 25.0) };
                (pursuer, evader, Some(ManeuverSpec::ten_g(window)))
            }
        };
        Self {
            case,
            pursuer_ranges,
            evader_ranges,
            maneuver,
            guidance: GuidanceConfig::default(),
            pursuer: default_pursuer(),
            evader: default_evader(),
            env: Environment::default(),
            sim: SimConfig::default(),
        }
    }

    pub fn with_law(mut self, law: GuidanceLaw) -> Self {
        self.guidance.law = law;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pursuer_ranges.validate()?;
        self.evader_ranges.validate()?;
        if let Some(m) = &self.maneuver {
            m.window.validate("maneuver.window")?;
            if !(m.magnitude >= 0.0 && m.magnitude.is_finite()) {
                return Err(SimError::InvalidParameter {
                    name: "maneuver.magnitude",
                    reason: "must be finite and non-negative".into(),
                });
            }
        }
        self.guidance.gains.validate()?;
        self.pursuer.validate()?;
        self.evader.validate()?;
        self.sim.validate()
    }

    pub fn setup(&self, maneuver: Option<ManeuverInstance>) -> TrialSetup {
        TrialSetup {
            pursuer: self.pursuer,
            evader: self.evader,
            env: self.env,
            guidance: self.guidance,
            maneuver,
        }
    }
}

/// Initial poses and maneuver for one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialDraw {
    pub pursuer: CartesianPose,
    pub evader: CartesianPose,
    pub maneuver: Option<ManeuverInstance>,
    /// Draws rejected because the vehicles started on top of each other.
    pub resampled: u32,
}

const MAX_RESAMPLES: u32 = 1000;
const MIN_INITIAL_RANGE: f64 = 1.0;

/// The random stream owned by trial `index` of a batch.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

pub fn sample_initial_conditions<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<TrialDraw> {
    for resampled in 0..MAX_RESAMPLES {
        let pursuer = spec.pursuer_ranges.sample(rng);
        let evader = spec.evader_ranges.sample(rng);
        let maneuver = spec.maneuver.as_ref().map(|m| m.sample(rng));
        if (evader.position - pursuer.position).norm() >= MIN_INITIAL_RANGE {
            return Ok(TrialDraw {
                pursuer,
                evader,
                maneuver,
                resampled,
            });
        }
    }
    Err(SimError::DegenerateGeometry(
        "could not draw separated initial positions",
    ))
}

/// Runs trial `index` of a batch, optionally logging its trajectory.
pub fn run_indexed_trial(
    spec: &ScenarioSpec,
    master_seed: u64,
    index: u64,
    log_stride: Option<usize>,
) -> (TrialRecord, Option<TrajectoryLog>, u32) {
    let mut rng = trial_rng(master_seed, index);
    let result = sample_initial_conditions(spec, &mut rng).and_then(|draw| {
        let (rec, log) = run_trial(
            (draw.pursuer, draw.evader),
            &spec.setup(draw.maneuver),
            &spec.sim,
            log_stride,
        )?;
        Ok((rec, log, draw.resampled))
    });
    let (mut record, log, resampled) = match result {
        Ok(v) => v,
        Err(_) => (
            TrialRecord {
                trial: index,
                seed: master_seed,
                intercept_time: 0.0,
                miss_distance: f64::INFINITY,
                closing_velocity: 0.0,
                outcome: Outcome::Singularity,
                branch_history: Vec::new(),
            },
            None,
            0,
        ),
    };
    record.trial = index;
    record.seed = master_seed;
    (record, log, resampled)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatsScope {
    #[default]
    All,
    SuccessesOnly,
}

impl FromStr for StatsScope {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(StatsScope::All),
            "successes-only" | "successes" => Ok(StatsScope::SuccessesOnly),
            _ => Err(SimError::InvalidParameter {
                name: "stats_scope",
                reason: format!("unknown scope '{s}' (expected all or successes-only)"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl MetricStats {
    /// Sample mean and `n - 1` standard deviation; `std = 0` for one value.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, std, min, max })
    }

    fn empty() -> Self {
        Self {
            mean: f64::NAN,
            std: f64::NAN,
            min: f64::NAN,
            max: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub intercept: u64,
    pub miss: u64,
    pub timeout: u64,
    pub singularity: u64,
    pub divergence: u64,
}

impl OutcomeCounts {
    pub fn add(&mut self, o: Outcome) {
        match o {
            Outcome::Intercept => self.intercept += 1,
            Outcome::Miss => self.miss += 1,
            Outcome::Timeout => self.timeout += 1,
            Outcome::Singularity => self.singularity += 1,
            Outcome::Divergence => self.divergence += 1,
        }
    }

    pub fn get(&self, o: Outcome) -> u64 {
        match o {
            Outcome::Intercept => self.intercept,
            Outcome::Miss => self.miss,
            Outcome::Timeout => self.timeout,
            Outcome::Singularity => self.singularity,
            Outcome::Divergence => self.divergence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub n_trials: u64,
    pub seed: u64,
    pub scope: StatsScope,
    /// Number of trials entering the metric rows under `scope`.
    pub n_used: u64,
    pub time: MetricStats,
    pub miss: MetricStats,
    pub closing_velocity: MetricStats,
    /// Fraction of all trials that did not end in an intercept.
    pub fail_rate: f64,
    pub outcomes: OutcomeCounts,
    /// Initial-condition draws rejected and redrawn.
    pub resampled: u64,
}

impl BatchStats {
    pub fn fail_percent(&self) -> f64 {
        100.0 * self.fail_rate
    }
}

/// Mean/std/fail summary of a set of trials.
pub fn aggregate(records: &[TrialRecord], scope: StatsScope) -> Result<BatchStats> {
    if records.is_empty() {
        return Err(SimError::Empty("trial records"));
    }
    let mut outcomes = OutcomeCounts::default();
    for r in records {
        outcomes.add(r.outcome);
    }
    let used: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| scope == StatsScope::All || r.outcome == Outcome::Intercept)
        .collect();
    let metric = |f: fn(&TrialRecord) -> f64| {
        let vals: Vec<f64> = used.iter().map(|r| f(r)).collect();
        MetricStats::from_values(&vals).unwrap_or_else(MetricStats::empty)
    };
    let n = records.len() as u64;
    Ok(BatchStats {
        n_trials: n,
        seed: records[0].seed,
        scope,
        n_used: used.len() as u64,
        time: metric(|r| r.intercept_time),
        miss: metric(|r| r.miss_distance),
        closing_velocity: metric(|r| r.closing_velocity),
        fail_rate: (n - outcomes.intercept) as f64 / n as f64,
        outcomes,
        resampled: 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub stats: BatchStats,
    pub records: Vec<TrialRecord>,
}

/// Runs `n` trials on `parallelism` worker threads. Results are ordered by
/// trial index and do not depend on `parallelism`.
pub fn run_batch(
    spec: &ScenarioSpec,
    n: u64,
    master_seed: u64,
    parallelism: usize,
    scope: StatsScope,
) -> Result<BatchResult> {
    if n == 0 {
        return Err(SimError::InvalidParameter {
            name: "n_trials",
            reason: "must be at least 1".into(),
        });
    }
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| SimError::InvalidParameter {
            name: "parallelism",
            reason: e.to_string(),
        })?;
    let rows: Vec<(TrialRecord, u32)> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let (rec, _, resampled) = run_indexed_trial(spec, master_seed, i, None);
                (rec, resampled)
            })
            .collect()
    });
    let resampled = rows.iter().map(|(_, k)| *k as u64).sum();
    let records: Vec<TrialRecord> = rows.into_iter().map(|(r, _)| r).collect();
    let mut stats = aggregate(&records, scope)?;
    stats.seed = master_seed;
    stats.resampled = resampled;
    Ok(BatchResult { stats, records })
}

/// Empirical CDF as `(value, fraction)` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfSeries {
    pub points: Vec<(f64, f64)>,
}

impl EcdfSeries {
    /// Fraction of samples `<= v`.
    pub fn eval(&self, v: f64) -> f64 {
        let k = self.points.partition_point(|(x, _)| *x <= v);
        if k == 0 {
            0.0
        } else {
            self.points[k - 1].1
        }
    }
}

pub fn ecdf(values: &[f64]) -> Result<EcdfSeries> {
    if values.is_empty() {
        return Err(SimError::Empty("ecdf values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(EcdfSeries {
        points: sorted
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, (i + 1) as f64 / n))
            .collect(),
    })
}

//! Fixed-step integration of a single engagement.
//!
//! Both vehicles are propagated as inertial position and velocity. The
//! engagement-coordinate view is rebuilt from them at every step, so neither
//! the LOS singularity at `R -> 0` nor the heading singularity of a vertical
//! flight path enters the integrated state. Guidance is evaluated once per
//! step and held.

use serde::{Deserialize, Serialize};

use crate::engagement::{evader_drift, state_from_cartesian, CartesianPose, EngagementState};
use crate::error::{Result, SimError};
use crate::geometry::Vec3;
use crate::guidance::{Branch, Controller, GuidanceConfig, GuidanceLaw, EPS_VALIDITY};
use crate::vehicle::{inertial_acceleration, Environment, ManeuverCommand, VehicleParams, EPS_THETA};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// s
    pub dt: f64,
    /// s
    pub t_max: f64,
    /// Miss distance below which a trial counts as an intercept, m.
    pub capture_radius: f64,
    /// Range at which a trial is abandoned as diverging, m. `None` means ten
    /// times the initial range.
    pub divergence_radius: Option<f64>,
    /// The closing velocity is read at the last sample before closest
    /// approach whose range is at least this, m.
    pub closing_gate: f64,
    pub epsilon_theta: f64,
    pub epsilon_validity: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_max: 60.0,
            capture_radius: 10.0,
            divergence_radius: None,
            closing_gate: 20.0,
            epsilon_theta: EPS_THETA,
            epsilon_validity: EPS_VALIDITY,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| SimError::InvalidParameter {
            name,
            reason: reason.to_string(),
        };
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(bad("dt", "must be positive"));
        }
        if !(self.t_max > self.dt) {
            return Err(bad("t_max", "must exceed dt"));
        }
        if !(self.capture_radius > 0.0) {
            return Err(bad("capture_radius", "must be positive"));
        }
        if let Some(r) = self.divergence_radius {
            if !(r > 0.0) {
                return Err(bad("divergence_radius", "must be positive"));
            }
        }
        if !(self.closing_gate >= 0.0) {
            return Err(bad("closing_gate", "must be non-negative"));
        }
        if !(self.epsilon_theta >= 0.0 && self.epsilon_validity >= 0.0) {
            return Err(bad("epsilon", "guards must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Intercept,
    Miss,
    Timeout,
    Singularity,
    Divergence,
}

impl Outcome {
    pub const ALL: [Outcome; 5] = [
        Outcome::Intercept,
        Outcome::Miss,
        Outcome::Timeout,
        Outcome::Singularity,
        Outcome::Divergence,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Intercept => "intercept",
            Outcome::Miss => "miss",
            Outcome::Timeout => "timeout",
            Outcome::Singularity => "singularity",
            Outcome::Divergence => "divergence",
        }
    }
}

/// A run of consecutive steps spent on one guidance branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRun {
    pub branch: Branch,
    pub start_time: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub intercept_time: f64,
    pub miss_distance: f64,
    pub closing_velocity: f64,
    pub outcome: Outcome,
    pub branch_history: Vec<BranchRun>,
}

/// Discrete evader maneuver: a constant specific acceleration from `onset_time` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManeuverInstance {
    pub onset_time: f64,
    pub command: ManeuverCommand,
}

impl ManeuverInstance {
    pub fn command_at(maneuver: Option<&ManeuverInstance>, t: f64) -> ManeuverCommand {
        match maneuver {
            Some(m) if t >= m.onset_time => m.command,
            _ => ManeuverCommand::ZERO,
        }
    }
}

/// Everything about a trial except its initial poses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSetup {
    pub pursuer: VehicleParams,
    pub evader: VehicleParams,
    pub env: Environment,
    pub guidance: GuidanceConfig,
    pub maneuver: Option<ManeuverInstance>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub pursuer: CartesianPose,
    pub evader: CartesianPose,
    pub view: EngagementState,
    /// `(psi_L_dot, theta_L_dot)`
    pub y: [f64; 2],
    pub r_dot: f64,
    pub commanded: ManeuverCommand,
    pub applied: ManeuverCommand,
    pub evader_command: ManeuverCommand,
    pub validity_margin: f64,
    pub branch: Branch,
    pub held: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub stride: usize,
    pub samples: Vec<TrajectorySample>,
}

/// One classical fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize, F>(t: f64, y: &[f64; N], dt: f64, mut f: F) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let stage = |base: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        let mut out = *base;
        for (o, d) in out.iter_mut().zip(k) {
            *o += h * d;
        }
        out
    };
    let finite = |k: [f64; N]| -> Result<[f64; N]> {
        if k.iter().all(|v| v.is_finite()) {
            Ok(k)
        } else {
            Err(SimError::IntegrationFailure)
        }
    };
    let k1 = finite(f(t, y)?)?;
    let k2 = finite(f(t + 0.5 * dt, &stage(y, &k1, 0.5 * dt))?)?;
    let k3 = finite(f(t + 0.5 * dt, &stage(y, &k2, 0.5 * dt))?)?;
    let k4 = finite(f(t + dt, &stage(y, &k3, dt))?)?;
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Refines a sampled range minimum by fitting a parabola through `(t, R^2)`.
///
/// Returns the time of closest approach and the miss distance. The result
/// never exceeds the middle sample.
pub fn closest_approach(samples: [(f64, f64); 3]) -> (f64, f64) {
    let [(t0, r0), (t1, r1), (t2, r2)] = samples;
    let fallback = (t1, r1.max(0.0));
    let (a, b) = (t0 - t1, t2 - t1);
    if a == 0.0 || b == 0.0 || a == b {
        return fallback;
    }
    let (q0, q1, q2) = (r0 * r0, r1 * r1, r2 * r2);
    // q(s) = c2 s^2 + c1 s + q1 with s = t - t1
    let da = (q0 - q1) / a;
    let db = (q2 - q1) / b;
    let c2 = (db - da) / (b - a);
    let c1 = da - c2 * a;
    if !(c2 > 0.0) || !c2.is_finite() {
        return fallback;
    }
    let s = (-c1 / (2.0 * c2)).clamp(a.min(b), a.max(b));
    let q = c2 * s * s + c1 * s + q1;
    let miss = q.max(0.0).sqrt().min(r1.max(0.0));
    (t1 + s, miss)
}

/// Position and velocity of the pursuer, then of the evader.
type Packed = [f64; 12];

fn pack(p: &CartesianPose, e: &CartesianPose) -> Packed {
    let mut y = [0.0; 12];
    y[0..3].copy_from_slice(p.position.as_slice());
    y[3..6].copy_from_slice(p.velocity.as_slice());
    y[6..9].copy_from_slice(e.position.as_slice());
    y[9..12].copy_from_slice(e.velocity.as_slice());
    y
}

fn pose_at(y: &Packed, offset: usize) -> CartesianPose {
    CartesianPose {
        position: Vec3::new(y[offset], y[offset + 1], y[offset + 2]),
        velocity: Vec3::new(y[offset + 3], y[offset + 4], y[offset + 5]),
    }
}

fn vehicle_rates(
    y: &Packed,
    offset: usize,
    cmd: &ManeuverCommand,
    params: &VehicleParams,
    env: &Environment,
    out: &mut Packed,
) -> Result<()> {
    let vel = Vec3::new(y[offset + 3], y[offset + 4], y[offset + 5]);
    let acc = inertial_acceleration(&vel, cmd, params, env)?;
    out[offset..offset + 3].copy_from_slice(vel.as_slice());
    out[offset + 3..offset + 6].copy_from_slice(acc.as_slice());
    Ok(())
}

/// Time derivative of both vehicles under held commands.
fn two_body_rates(y: &Packed, p_cmd: &ManeuverCommand, e_cmd: &ManeuverCommand, setup: &TrialSetup) -> Result<Packed> {
    let mut out = [0.0; 12];
    vehicle_rates(y, 0, p_cmd, &setup.pursuer, &setup.env, &mut out)?;
    vehicle_rates(y, 6, e_cmd, &setup.evader, &setup.env, &mut out)?;
    Ok(out)
}

/// Propagates a pursuer/evader pair for `steps` RK4 steps of `dt` (which may
/// be negative) under constant commands.
pub fn propagate_open_loop(
    pursuer: &CartesianPose,
    evader: &CartesianPose,
    p_cmd: ManeuverCommand,
    e_cmd: ManeuverCommand,
    setup: &TrialSetup,
    dt: f64,
    steps: u64,
) -> Result<(CartesianPose, CartesianPose)> {
    let mut y = pack(pursuer, evader);
    for k in 0..steps {
        y = rk4_step(k as f64 * dt, &y, dt, |_, s| two_body_rates(s, &p_cmd, &e_cmd, setup))?;
    }
    Ok((pose_at(&y, 0), pose_at(&y, 6)))
}

#[derive(Debug, Clone, Copy)]
struct RangeSample {
    t: f64,
    range: f64,
    r_dot: f64,
}

struct BranchTracker {
    runs: Vec<BranchRun>,
}

impl BranchTracker {
    fn push(&mut self, branch: Branch, t: f64) {
        match self.runs.last_mut() {
            Some(run) if run.branch == branch => run.steps += 1,
            _ => self.runs.push(BranchRun {
                branch,
                start_time: t,
                steps: 1,
            }),
        }
    }
}

struct Termination {
    outcome: Outcome,
    time: f64,
    miss: f64,
    closing_velocity: f64,
}

/// Runs one engagement to termination.
///
/// Ends at the first sampled range minimum (refined by [`closest_approach`]),
/// at the divergence radius, at `t_max`, or when the geometry turns singular.
/// Singularities are recorded as an outcome rather than returned as errors;
/// only invalid initial conditions produce `Err`.
pub fn run_trial(
    ics: (CartesianPose, CartesianPose),
    setup: &TrialSetup,
    sim: &SimConfig,
    log_stride: Option<usize>,
) -> Result<(TrialRecord, Option<TrajectoryLog>)> {
    sim.validate()?;
    setup.pursuer.validate()?;
    setup.evader.validate()?;
    setup.guidance.gains.validate()?;
    let (p0, e0) = ics;
    let r0 = (e0.position - p0.position).norm();
    if !(r0 > 0.0) {
        return Err(SimError::DegenerateGeometry("coincident initial positions"));
    }
    if !(p0.velocity.norm() > 0.0 && e0.velocity.norm() > 0.0) {
        return Err(SimError::DegenerateGeometry("non-positive initial speed"));
    }
    let mut y = pack(&p0, &e0);
    let divergence = sim.divergence_radius.unwrap_or(10.0 * r0);

    let mut guidance = setup.guidance;
    guidance.epsilon_validity = sim.epsilon_validity;
    let mut controller = Controller::new(guidance);
    let mut branches = BranchTracker { runs: Vec::new() };
    let mut log = log_stride.map(|stride| TrajectoryLog {
        stride: stride.max(1),
        samples: Vec::new(),
    });

    let mut window: [Option<RangeSample>; 3] = [None; 3];
    let mut min_range = r0;
    let mut gate_rdot: Option<f64> = None;
    let mut step: u64 = 0;

    let end = loop {
        let t = step as f64 * sim.dt;
        let p = pose_at(&y, 0);
        let e = pose_at(&y, 6);
        let rel = e.position - p.position;
        let range = rel.norm();
        let r_dot = if range > 0.0 {
            rel.dot(&(e.velocity - p.velocity)) / range
        } else {
            0.0
        };
        min_range = min_range.min(range);

        if range <= 1e-9 {
            break Termination {
                outcome: Outcome::Intercept,
                time: t,
                miss: range,
                closing_velocity: gate_rdot.unwrap_or(r_dot),
            };
        }

        window = [window[1], window[2], Some(RangeSample { t, range, r_dot })];
        if let [Some(a), Some(b), Some(c)] = window {
            if b.range < a.range && c.range > b.range {
                let (t_star, miss) = closest_approach([(a.t, a.range), (b.t, b.range), (c.t, c.range)]);
                let nearest = if (t_star - b.t).abs() <= (t_star - c.t).abs() {
                    b
                } else {
                    c
                };
                break Termination {
                    outcome: if miss < sim.capture_radius {
                        Outcome::Intercept
                    } else {
                        Outcome::Miss
                    },
                    time: t_star,
                    miss,
                    closing_velocity: gate_rdot.unwrap_or(nearest.r_dot),
                };
            }
        }
        if range >= sim.closing_gate {
            gate_rdot = Some(r_dot);
        }

        let stop = |outcome| Termination {
            outcome,
            time: t,
            miss: min_range,
            closing_velocity: r_dot,
        };
        if range > divergence {
            break stop(Outcome::Divergence);
        }
        if t >= sim.t_max - 1e-12 {
            break stop(Outcome::Timeout);
        }

        let (x, w) = match state_from_cartesian(&p, &e) {
            Ok(v) => v,
            Err(_) => break stop(Outcome::Singularity),
        };
        // The evader's elevation only matters when its own rates are fed forward.
        let feedthrough = guidance.include_evader_feedthrough && guidance.law != GuidanceLaw::Pn;
        if [x.theta_l, x.theta_p]
            .iter()
            .any(|a| a.cos().abs() <= sim.epsilon_theta)
            || (feedthrough && w.theta_e.cos().abs() <= sim.epsilon_theta)
        {
            break stop(Outcome::Singularity);
        }

        let e_cmd = ManeuverInstance::command_at(setup.maneuver.as_ref(), t);
        let evader_rates = if feedthrough {
            match evader_drift(&w, &setup.evader, &e_cmd, &setup.env) {
                Ok(r) => Some(r),
                Err(_) => break stop(Outcome::Singularity),
            }
        } else {
            None
        };
        let out = match controller.command(&x, &w, &setup.pursuer, &setup.env, evader_rates.as_ref(), sim.dt) {
            Ok(o) => o,
            Err(_) => break stop(Outcome::Singularity),
        };
        branches.push(out.command.branch, t);

        if let Some(log) = log.as_mut() {
            if step.is_multiple_of(log.stride as u64) {
                let rates = crate::engagement::los_rates(&x, &w).ok();
                log.samples.push(TrajectorySample {
                    t,
                    pursuer: p,
                    evader: e,
                    view: x,
                    y: rates.map_or([f64::NAN; 2], |r| [r.psi_l_dot, r.theta_l_dot]),
                    r_dot,
                    commanded: out.command.u,
                    applied: out.applied,
                    evader_command: e_cmd,
                    validity_margin: out.command.validity_margin,
                    branch: out.command.branch,
                    held: out.held,
                });
            }
        }

        let p_cmd = out.applied;
        match rk4_step(t, &y, sim.dt, |_, s| two_body_rates(s, &p_cmd, &e_cmd, setup)) {
            Ok(next) => y = next,
            Err(_) => break stop(Outcome::Singularity),
        }
        step += 1;
    };

    let mut outcome = end.outcome;
    let mut miss = end.miss;
    if !matches!(outcome, Outcome::Intercept | Outcome::Miss) && min_range < sim.capture_radius {
        outcome = Outcome::Intercept;
        miss = min_range;
    }
    let record = TrialRecord {
        trial: 0,
        seed: 0,
        intercept_time: end.time,
        miss_distance: miss,
        closing_velocity: end.closing_velocity,
        outcome,
        branch_history: branches.runs,
    };
    Ok((record, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rk4_exponential_decay() {
        // One step reproduces the fourth-order Taylor polynomial exactly.
        let y = rk4_step(0.0, &[1.0], 0.1, |_, y| Ok([-y[0]])).unwrap();
        assert_abs_diff_eq!(
            y[0],
            1.0 - 0.1 + 0.005 - 0.1f64.powi(3) / 6.0 + 0.1f64.powi(4) / 24.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(y[0], 0.904837418, epsilon = 1e-7);
        let mut z = [1.0];
        for k in 0..2 {
            z = rk4_step(k as f64 * 0.05, &z, 0.05, |_, y| Ok([-y[0]])).unwrap();
        }
        assert_abs_diff_eq!(z[0], 0.904837418, epsilon = 1e-8);
    }

    #[test]
    fn rk4_zero_derivative() {
        let y0 = [1.5, -2.0, 3.25];
        assert_eq!(rk4_step(0.0, &y0, 0.01, |_, _| Ok([0.0; 3])).unwrap(), y0);
    }

    #[test]
    fn rk4_rejects_nan() {
        let r = rk4_step(0.0, &[1.0], 0.1, |_, _| Ok([f64::NAN]));
        assert_eq!(r, Err(SimError::IntegrationFailure));
    }

    #[test]
    fn closest_approach_cases() {
        let (t, miss) = closest_approach([(0.999, 0.001), (1.0, 0.0), (1.001, 0.001)]);
        assert_abs_diff_eq!(t, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(miss, 0.0, epsilon = 1e-9);

        let (t, miss) = closest_approach([(0.0, 7.0), (1.0, 7.0), (2.0, 7.0)]);
        assert_eq!((t, miss), (1.0, 7.0));

        let r = |t: f64| (4.0 + (t - 2.0) * (t - 2.0)).sqrt();
        let (t, miss) = closest_approach([(1.5, r(1.5)), (2.1, r(2.1)), (2.9, r(2.9))]);
        assert_abs_diff_eq!(t, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(miss, 2.0, epsilon = 1e-12);

        assert_eq!(closest_approach([(1.0, 3.0), (1.0, 2.0), (1.0, 4.0)]), (1.0, 2.0));
    }

    #[test]
    fn maneuver_onset() {
        let m = ManeuverInstance {
            onset_time: 2.0,
            command: ManeuverCommand::new(1.0, 2.0),
        };
        assert_eq!(ManeuverInstance::command_at(Some(&m), 1.999), ManeuverCommand::ZERO);
        assert_eq!(ManeuverInstance::command_at(Some(&m), 2.0), m.command);
        assert_eq!(ManeuverInstance::command_at(None, 5.0), ManeuverCommand::ZERO);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        let bad = SimConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SimConfig {
            t_max: 1e-4,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

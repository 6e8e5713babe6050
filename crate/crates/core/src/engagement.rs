//! Relative-motion state space of the pursuer/evader pair.
//!
//! `x = (R, theta_L, psi_L, V_p, theta_p, psi_p)` is the guidance-facing view
//! and `w = (V_e, theta_e, psi_e)` is the evader state, treated as an
//! exogenous input. The affine split `x_dot = f(x, w) + g(x) u` is exposed
//! through [`drift_f`] and [`control_matrix_g`].

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::{
    alignment_cache, angles_from_vector, direction_from_angles, los_from_relative_position, o2, o3, wrap_angle, Vec3,
};
use crate::vehicle::{
    axial_acceleration, body_derivatives, BodyState, Environment, ManeuverCommand, VehicleParams, EPS_THETA,
};

pub type ControlMatrix = SMatrix<f64, 6, 2>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementState {
    pub range: f64,
    pub theta_l: f64,
    pub psi_l: f64,
    pub v_p: f64,
    pub theta_p: f64,
    pub psi_p: f64,
}

impl EngagementState {
    pub fn to_array(&self) -> [f64; 6] {
        [self.range, self.theta_l, self.psi_l, self.v_p, self.theta_p, self.psi_p]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            range: a[0],
            theta_l: a[1],
            psi_l: a[2],
            v_p: a[3],
            theta_p: a[4],
            psi_p: a[5],
        }
    }

    pub fn pursuer(&self) -> BodyState {
        BodyState {
            speed: self.v_p,
            theta: self.theta_p,
            psi: self.psi_p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceState {
    pub v_e: f64,
    pub theta_e: f64,
    pub psi_e: f64,
}

impl DisturbanceState {
    pub fn to_array(&self) -> [f64; 3] {
        [self.v_e, self.theta_e, self.psi_e]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            v_e: a[0],
            theta_e: a[1],
            psi_e: a[2],
        }
    }

    pub fn body(&self) -> BodyState {
        BodyState {
            speed: self.v_e,
            theta: self.theta_e,
            psi: self.psi_e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosRates {
    pub r_dot: f64,
    pub psi_l_dot: f64,
    pub theta_l_dot: f64,
}

/// Inertial position (north, east, down) and velocity of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPose {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl CartesianPose {
    pub fn from_body(position: Vec3, body: &BodyState) -> Self {
        Self {
            position,
            velocity: direction_from_angles(body.theta, body.psi) * body.speed,
        }
    }

    pub fn altitude(&self) -> f64 {
        -self.position.z
    }

    pub fn body(&self) -> Result<BodyState> {
        let (speed, theta, psi) =
            angles_from_vector(&self.velocity).map_err(|_| SimError::DegenerateGeometry("zero velocity"))?;
        Ok(BodyState { speed, theta, psi })
    }

    /// Straight-line propagation.
    pub fn drift(&self, dt: f64) -> Self {
        Self {
            position: self.position + self.velocity * dt,
            velocity: self.velocity,
        }
    }
}

fn check_los(x: &EngagementState) -> Result<f64> {
    if !(x.range > 0.0) {
        return Err(SimError::DegenerateGeometry("non-positive range"));
    }
    let c = x.theta_l.cos();
    if c.abs() <= EPS_THETA {
        return Err(SimError::LosSingularity { cos_theta: c });
    }
    Ok(c)
}

pub fn los_rates(x: &EngagementState, w: &DisturbanceState) -> Result<LosRates> {
    let cos_l = check_los(x)?;
    let sin_l = x.theta_l.sin();
    let a = alignment_cache(x, w);
    let (sin_p, cos_p) = x.theta_p.sin_cos();
    let (sin_e, cos_e) = w.theta_e.sin_cos();

    let r_dot = w.v_e * (sin_e * sin_l + cos_l * a.sigma_e) - x.v_p * (sin_p * sin_l + cos_l * a.sigma_p);
    let psi_l_dot =
        (w.v_e * cos_e * (w.psi_e - x.psi_l).sin() + x.v_p * cos_p * (x.psi_l - x.psi_p).sin()) / (x.range * cos_l);
    let theta_l_dot =
        -(x.v_p * (cos_l * sin_p - sin_l * a.sigma_p) - w.v_e * (cos_l * sin_e - sin_l * a.sigma_e)) / x.range;
    Ok(LosRates {
        r_dot,
        psi_l_dot,
        theta_l_dot,
    })
}

/// Drift vector ordered `(R, theta_L, psi_L, V_p, theta_p, psi_p)`.
pub fn drift_f(
    x: &EngagementState,
    w: &DisturbanceState,
    pursuer: &VehicleParams,
    env: &Environment,
) -> Result<[f64; 6]> {
    if !(x.v_p > 0.0) {
        return Err(SimError::DegenerateGeometry("non-positive pursuer speed"));
    }
    let rates = los_rates(x, w)?;
    let (sin_p, cos_p) = x.theta_p.sin_cos();
    Ok([
        rates.r_dot,
        rates.theta_l_dot,
        rates.psi_l_dot,
        -env.g * sin_p + axial_acceleration(pursuer, x.v_p),
        -env.g * cos_p / x.v_p,
        0.0,
    ])
}

/// Input matrix for `u = (n_y, n_z)`.
///
/// Heading responds to `+n_y / (V_p cos theta_p)`; this is the orientation
/// under which the closed-form decoupling matrix in `guidance` is the Lie
/// derivative of the LOS rates along these columns.
pub fn control_matrix_g(x: &EngagementState) -> Result<ControlMatrix> {
    let c = x.theta_p.cos();
    if c.abs() <= EPS_THETA {
        return Err(SimError::HeadingSingularity { cos_theta: c });
    }
    if !(x.v_p > 0.0) {
        return Err(SimError::DegenerateGeometry("non-positive pursuer speed"));
    }
    let mut g = ControlMatrix::zeros();
    g[(4, 1)] = -1.0 / x.v_p;
    g[(5, 0)] = 1.0 / (x.v_p * c);
    Ok(g)
}

/// Evader rates `(V_e_dot, theta_e_dot, psi_e_dot)`.
pub fn evader_drift(
    w: &DisturbanceState,
    evader: &VehicleParams,
    cmd: &ManeuverCommand,
    env: &Environment,
) -> Result<[f64; 3]> {
    body_derivatives(&w.body(), cmd, evader, env)
}

pub fn state_from_cartesian(
    pursuer: &CartesianPose,
    evader: &CartesianPose,
) -> Result<(EngagementState, DisturbanceState)> {
    let los = los_from_relative_position(&(evader.position - pursuer.position))?;
    let p = pursuer.body()?;
    let e = evader.body()?;
    Ok((
        EngagementState {
            range: los.range,
            theta_l: los.theta_l,
            psi_l: los.psi_l,
            v_p: p.speed,
            theta_p: p.theta,
            psi_p: p.psi,
        },
        DisturbanceState {
            v_e: e.speed,
            theta_e: e.theta,
            psi_e: e.psi,
        },
    ))
}

/// Inverse of [`state_from_cartesian`], anchored at the pursuer position.
pub fn cartesian_from_state(
    x: &EngagementState,
    w: &DisturbanceState,
    pursuer_position: Vec3,
) -> (CartesianPose, CartesianPose) {
    let p = CartesianPose::from_body(pursuer_position, &x.pursuer());
    let e_pos = pursuer_position + direction_from_angles(x.theta_l, x.psi_l) * x.range;
    (p, CartesianPose::from_body(e_pos, &w.body()))
}

/// Relative velocity in LOS-frame components built from the LOS rates:
/// `(R_dot, R psi_L_dot cos theta_L, -R theta_L_dot)`.
pub fn relative_velocity_from_rates(x: &EngagementState, rates: &LosRates) -> Vec3 {
    Vec3::new(
        rates.r_dot,
        x.range * rates.psi_l_dot * x.theta_l.cos(),
        -x.range * rates.theta_l_dot,
    )
}

/// Relative velocity in LOS-frame components built by rotating the inertial
/// velocity difference.
pub fn relative_velocity_from_difference(x: &EngagementState, w: &DisturbanceState) -> Vec3 {
    let e1 = Vec3::new(1.0, 0.0, 0.0);
    let to_los = o2(x.theta_l) * o3(x.psi_l);
    let e_dir = (o2(w.theta_e) * o3(w.psi_e)).transpose().apply(&e1);
    let p_dir = (o2(x.theta_p) * o3(x.psi_p)).transpose().apply(&e1);
    to_los.apply(&(e_dir * w.v_e - p_dir * x.v_p))
}

/// Central-difference estimate of the LOS rates from straight-line
/// propagation of both vehicles over `[-dt, dt]`.
pub fn cartesian_step_reference(pursuer: &CartesianPose, evader: &CartesianPose, dt: f64) -> Result<LosRates> {
    let ahead = los_from_relative_position(&(evader.drift(dt).position - pursuer.drift(dt).position))?;
    let behind = los_from_relative_position(&(evader.drift(-dt).position - pursuer.drift(-dt).position))?;
    let two_dt = 2.0 * dt;
    Ok(LosRates {
        r_dot: (ahead.range - behind.range) / two_dt,
        psi_l_dot: wrap_angle(ahead.psi_l - behind.psi_l) / two_dt,
        theta_l_dot: (ahead.theta_l - behind.theta_l) / two_dt,
    })
}

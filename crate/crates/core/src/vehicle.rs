//! Point-mass translational dynamics shared by the pursuer and the evader.
//!
//! Specific accelerations act in the velocity frame: `n_y` along the body
//! `j` axis (positive turns right, toward increasing heading) and `n_z` along
//! the body `k` axis (positive pushes the flight path down).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::geometry::{angles_from_vector, Vec3};

/// Standard gravity, m/s^2.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Guard on `|cos(theta)|` for every heading/elevation singularity.
pub const EPS_THETA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Constant thrust along the velocity vector, N.
    pub axial_thrust: f64,
    pub drag_coefficient: f64,
    /// m^2
    pub reference_area: f64,
    /// kg/m^3
    pub air_density: f64,
    /// Per-channel clamp on commanded specific acceleration, m/s^2. `None` is unbounded.
    pub accel_limit: Option<f64>,
}

impl VehicleParams {
    /// Drag-free, thrustless body with unbounded commands.
    pub fn ballistic(mass: f64) -> Self {
        Self {
            mass,
            axial_thrust: 0.0,
            drag_coefficient: 0.0,
            reference_area: 0.0,
            air_density: 0.0,
            accel_limit: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &'static str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(SimError::InvalidParameter {
                    name,
                    reason: reason.to_string(),
                })
            }
        };
        check(self.mass > 0.0 && self.mass.is_finite(), "mass", "must be positive")?;
        check(self.axial_thrust >= 0.0, "axial_thrust", "must be non-negative")?;
        check(self.drag_coefficient >= 0.0, "drag_coefficient", "must be non-negative")?;
        check(self.reference_area >= 0.0, "reference_area", "must be non-negative")?;
        check(self.air_density >= 0.0, "air_density", "must be non-negative")?;
        if let Some(limit) = self.accel_limit {
            check(limit > 0.0, "accel_limit", "must be positive when set")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub g: f64,
}

impl Default for Environment {
    fn default() -> Self {
        Self { g: STANDARD_GRAVITY }
    }
}

impl Environment {
    pub fn gravity_free() -> Self {
        Self { g: 0.0 }
    }
}

/// Speed, flight-path angle and heading of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub speed: f64,
    pub theta: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ManeuverCommand {
    pub n_y: f64,
    pub n_z: f64,
}

impl ManeuverCommand {
    pub const ZERO: ManeuverCommand = ManeuverCommand { n_y: 0.0, n_z: 0.0 };

    pub fn new(n_y: f64, n_z: f64) -> Self {
        Self { n_y, n_z }
    }

    pub fn saturate(self, limit: Option<f64>) -> Self {
        match limit {
            Some(l) => Self {
                n_y: self.n_y.clamp(-l, l),
                n_z: self.n_z.clamp(-l, l),
            },
            None => self,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.n_y.hypot(self.n_z)
    }

    pub fn is_finite(&self) -> bool {
        self.n_y.is_finite() && self.n_z.is_finite()
    }
}

impl std::ops::Neg for ManeuverCommand {
    type Output = ManeuverCommand;

    fn neg(self) -> ManeuverCommand {
        ManeuverCommand::new(-self.n_y, -self.n_z)
    }
}

/// Quadratic drag `0.5 rho Cd A V^2`, N.
pub fn drag_force(params: &VehicleParams, speed: f64) -> f64 {
    0.5 * params.air_density * params.drag_coefficient * params.reference_area * speed * speed
}

/// Axial specific force `(T - D)/m` along the velocity vector.
pub fn axial_acceleration(params: &VehicleParams, speed: f64) -> f64 {
    (params.axial_thrust - drag_force(params, speed)) / params.mass
}

/// `(V_dot, theta_dot, psi_dot)` of a point-mass body.
pub fn body_derivatives(
    state: &BodyState,
    cmd: &ManeuverCommand,
    params: &VehicleParams,
    env: &Environment,
) -> Result<[f64; 3]> {
    let (st, ct) = state.theta.sin_cos();
    if ct.abs() <= EPS_THETA {
        return Err(SimError::HeadingSingularity { cos_theta: ct });
    }
    if !(state.speed > 0.0) {
        return Err(SimError::DegenerateGeometry("non-positive speed"));
    }
    let v_dot = -env.g * st + axial_acceleration(params, state.speed);
    let theta_dot = -(env.g * ct + cmd.n_z) / state.speed;
    let psi_dot = cmd.n_y / (state.speed * ct);
    Ok([v_dot, theta_dot, psi_dot])
}

/// Inertial acceleration of a body moving with `velocity`.
///
/// Same force model as [`body_derivatives`], written for Cartesian
/// integration: the commands act along the no-roll velocity-frame axes
/// `j = (-sin psi, cos psi, 0)` and `k = (sin theta cos psi, sin theta sin psi, cos theta)`.
/// Unlike the angle form it stays finite through the vertical, where the
/// heading (and so `j`) falls back to `psi = 0`.
pub fn inertial_acceleration(
    velocity: &Vec3,
    cmd: &ManeuverCommand,
    params: &VehicleParams,
    env: &Environment,
) -> Result<Vec3> {
    let (speed, theta, psi) =
        angles_from_vector(velocity).map_err(|_| SimError::DegenerateGeometry("non-positive speed"))?;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    let i_axis = velocity / speed;
    let j_axis = Vec3::new(-sp, cp, 0.0);
    let k_axis = Vec3::new(st * cp, st * sp, ct);
    Ok(i_axis * axial_acceleration(params, speed) + Vec3::new(0.0, 0.0, env.g) + j_axis * cmd.n_y + k_axis * cmd.n_z)
}

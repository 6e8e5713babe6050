//! Scenario files.
//!
//! A scenario file is TOML in engineering units: speeds in
//! m/s, angles in degrees, positions in km, thrust in kN, mass in kg and
//! accelerations in g. Every range accepts either a number (a fixed value) or
//! a two-element `[lo, hi]` array.

use std::path::Path;

use losguide::guidance::{CatsBranchOrder, GuidanceConfig, GuidanceGains, GuidanceLaw};
use losguide::montecarlo::{ManeuverSpec, VehicleRanges};
use losguide::vehicle::STANDARD_GRAVITY;
use losguide::{CaseId, Environment, Interval, ScenarioSpec, SimConfig, VehicleParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub case: CaseId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub pursuer: VehicleRanges,
    pub evader: VehicleRanges,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maneuver: Option<ManeuverSection>,
    #[serde(default)]
    pub guidance: GuidanceSection,
    pub vehicles: VehiclesSection,
    #[serde(default)]
    pub environment: EnvironmentSection,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverSection {
    #[serde(default = "ten")]
    pub magnitude_g: f64,
    /// Onset window, s.
    pub window_s: Interval,
}

/// m/s^2 to g, snapping conversion noise so `30 g` prints as `30.0`.
fn to_g(a: f64) -> f64 {
    let g = a / STANDARD_GRAVITY;
    let snapped = (g * 1e9).round() / 1e9;
    if (snapped - g).abs() <= 1e-12 * g.abs() {
        snapped
    } else {
        g
    }
}

fn ten() -> f64 {
    10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceSection {
    pub law: GuidanceLaw,
    pub k_psi_dot: f64,
    pub k_theta_dot: f64,
    pub nav_constant: f64,
    pub cats_branch_order: CatsBranchOrder,
    pub include_evader_feedthrough: bool,
    pub epsilon_validity: f64,
    pub hold_limit_s: f64,
}

impl Default for GuidanceSection {
    fn default() -> Self {
        Self::from(&GuidanceConfig::default())
    }
}

impl From<&GuidanceConfig> for GuidanceSection {
    fn from(g: &GuidanceConfig) -> Self {
        Self {
            law: g.law,
            k_psi_dot: g.gains.k_psi_dot,
            k_theta_dot: g.gains.k_theta_dot,
            nav_constant: g.gains.nav_constant,
            cats_branch_order: g.cats_branch_order,
            include_evader_feedthrough: g.include_evader_feedthrough,
            epsilon_validity: g.epsilon_validity,
            hold_limit_s: g.hold_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehiclesSection {
    pub pursuer: VehicleSection,
    pub evader: VehicleSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSection {
    pub mass_kg: f64,
    pub thrust_kn: f64,
    pub drag_coefficient: f64,
    pub reference_area_m2: f64,
    pub air_density: f64,
    /// Per-channel command limit in g; omit for unbounded commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accel_limit_g: Option<f64>,
}

impl From<&VehicleParams> for VehicleSection {
    fn from(v: &VehicleParams) -> Self {
        Self {
            mass_kg: v.mass,
            thrust_kn: v.axial_thrust / 1e3,
            drag_coefficient: v.drag_coefficient,
            reference_area_m2: v.reference_area,
            air_density: v.air_density,
            accel_limit_g: v.accel_limit.map(to_g),
        }
    }
}

impl VehicleSection {
    pub fn to_params(&self) -> VehicleParams {
        VehicleParams {
            mass: self.mass_kg,
            axial_thrust: self.thrust_kn * 1e3,
            drag_coefficient: self.drag_coefficient,
            reference_area: self.reference_area_m2,
            air_density: self.air_density,
            accel_limit: self.accel_limit_g.map(|g| g * STANDARD_GRAVITY),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentSection {
    /// m/s^2
    pub gravity: f64,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        Self {
            gravity: STANDARD_GRAVITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt_s: f64,
    pub t_max_s: f64,
    pub capture_radius_m: f64,
    /// Omit for ten times the initial range.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_radius_m: Option<f64>,
    pub closing_gate_m: f64,
    pub epsilon_theta: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self::from(&SimConfig::default())
    }
}

impl From<&SimConfig> for SimSection {
    fn from(s: &SimConfig) -> Self {
        Self {
            dt_s: s.dt,
            t_max_s: s.t_max,
            capture_radius_m: s.capture_radius,
            divergence_radius_m: s.divergence_radius,
            closing_gate_m: s.closing_gate,
            epsilon_theta: s.epsilon_theta,
        }
    }
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        file.to_spec()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        Self {
            case: spec.case,
            description: None,
            pursuer: spec.pursuer_ranges,
            evader: spec.evader_ranges,
            maneuver: spec.maneuver.map(|m| ManeuverSection {
                magnitude_g: to_g(m.magnitude),
                window_s: m.window,
            }),
            guidance: GuidanceSection::from(&spec.guidance),
            vehicles: VehiclesSection {
                pursuer: VehicleSection::from(&spec.pursuer),
                evader: VehicleSection::from(&spec.evader),
            },
            environment: EnvironmentSection { gravity: spec.env.g },
            sim: SimSection::from(&spec.sim),
        }
    }

    /// Converts to SI and validates.
    pub fn to_spec(&self) -> Result<ScenarioSpec, CliError> {
        let g = &self.guidance;
        let spec = ScenarioSpec {
            case: self.case,
            pursuer_ranges: self.pursuer,
            evader_ranges: self.evader,
            maneuver: self.maneuver.map(|m| ManeuverSpec {
                magnitude: m.magnitude_g * STANDARD_GRAVITY,
                window: m.window_s,
            }),
            guidance: GuidanceConfig {
                law: g.law,
                gains: GuidanceGains {
                    k_psi_dot: g.k_psi_dot,
                    k_theta_dot: g.k_theta_dot,
                    nav_constant: g.nav_constant,
                },
                cats_branch_order: g.cats_branch_order,
                include_evader_feedthrough: g.include_evader_feedthrough,
                epsilon_validity: g.epsilon_validity,
                hold_limit: g.hold_limit_s,
            },
            pursuer: self.vehicles.pursuer.to_params(),
            evader: self.vehicles.evader.to_params(),
            env: Environment {
                g: self.environment.gravity,
            },
            sim: SimConfig {
                dt: self.sim.dt_s,
                t_max: self.sim.t_max_s,
                capture_radius: self.sim.capture_radius_m,
                divergence_radius: self.sim.divergence_radius_m,
                closing_gate: self.sim.closing_gate_m,
                epsilon_theta: self.sim.epsilon_theta,
                epsilon_validity: g.epsilon_validity,
            },
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }
}

/// The canonical scenario file for a case, as shipped under `scenarios/`.
pub fn canonical_file(case: CaseId) -> ScenarioFile {
    ScenarioFile::from_spec(&ScenarioSpec::canonical(case))
}

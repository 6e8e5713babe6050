//! LOS-rate guidance laws.
//!
//! The output is `y = h(x) = (psi_L_dot, theta_L_dot)`, which has relative
//! degree one in each channel. Its first derivative splits as
//! `y_dot = alpha(x, w) + B(x) u`, where `alpha` is the Lie derivative of `h`
//! along the drift and `B` along the input columns.
//!
//! The closed-form matrix returned by [`beta_matrix`] is the decoupling matrix
//! of the LOS angular-velocity pair `(cos(theta_L) psi_L_dot, theta_L_dot)`;
//! its determinant is `-(i_P . i_L)/R^2`. The decoupling matrix of `h` itself
//! is `B = diag(1/cos theta_L, 1) beta`, which is what the linearizing law
//! inverts, so the closed loop is exactly `y_dot = v`.

use nalgebra::{Matrix2, SMatrix, Vector2};
use serde::{Deserialize, Serialize};

use crate::engagement::{control_matrix_g, drift_f, los_rates, DisturbanceState, EngagementState};
use crate::error::{Result, SimError};
use crate::geometry::alignment_cache;
use crate::vehicle::{Environment, ManeuverCommand, VehicleParams, EPS_THETA};

/// Default guard on `|i_P . i_L|` below which the linearizing law is not evaluated.
pub const EPS_VALIDITY: f64 = 1e-3;

/// Default time a held command may persist before the trial is declared a validity failure.
pub const DEFAULT_HOLD_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceGains {
    /// 1/s
    pub k_psi_dot: f64,
    /// 1/s
    pub k_theta_dot: f64,
    pub nav_constant: f64,
}

impl Default for GuidanceGains {
    fn default() -> Self {
        Self {
            k_psi_dot: 50.0,
            k_theta_dot: 50.0,
            nav_constant: 3.0,
        }
    }
}

impl GuidanceGains {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_psi_dot", self.k_psi_dot),
            ("k_theta_dot", self.k_theta_dot),
            ("nav_constant", self.nav_constant),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Standard,
    Toggled,
    NotApplicable,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Standard => "standard",
            Branch::Toggled => "toggled",
            Branch::NotApplicable => "not-applicable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceCommand {
    pub u: ManeuverCommand,
    pub branch: Branch,
    /// `|i_P . i_L|`
    pub validity_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuidanceLaw {
    /// Baseline input-output linearization.
    Iol,
    /// Linearization with the closing-alignment toggle.
    Cats,
    /// Proportional navigation.
    Pn,
}

impl GuidanceLaw {
    pub fn as_str(&self) -> &'static str {
        match self {
            GuidanceLaw::Iol => "iol",
            GuidanceLaw::Cats => "cats",
            GuidanceLaw::Pn => "pn",
        }
    }
}

impl std::str::FromStr for GuidanceLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iol" => Ok(GuidanceLaw::Iol),
            "cats" => Ok(GuidanceLaw::Cats),
            "pn" | "pg" => Ok(GuidanceLaw::Pn),
            other => Err(format!("unknown guidance law `{other}` (expected iol, cats or pn)")),
        }
    }
}

/// Which side of the singular surface `i_P . i_L = 0` receives the negated
/// linearizing command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatsBranchOrder {
    /// Plain law while opening (`i_P . i_L < 0`), negated while closing.
    NegateWhenClosing,
    /// Plain law while closing (`i_P . i_L >= 0`), negated while opening.
    #[default]
    NegateWhenOpening,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationTerms {
    pub alpha: Vector2<f64>,
    pub beta: Matrix2<f64>,
    pub beta_det: f64,
    /// `None` when `beta` is numerically singular.
    pub beta_inv: Option<Matrix2<f64>>,
}

pub fn output_h(x: &EngagementState, w: &DisturbanceState) -> Result<Vector2<f64>> {
    let r = los_rates(x, w)?;
    Ok(Vector2::new(r.psi_l_dot, r.theta_l_dot))
}

/// Analytic `dh/dx`, columns ordered `(R, theta_L, psi_L, V_p, theta_p, psi_p)`.
pub fn output_jacobian(x: &EngagementState, w: &DisturbanceState) -> Result<SMatrix<f64, 2, 6>> {
    let rates = los_rates(x, w)?;
    let r = x.range;
    let (sin_l, cos_l) = x.theta_l.sin_cos();
    let (sin_p, cos_p) = x.theta_p.sin_cos();
    let (sin_e, cos_e) = w.theta_e.sin_cos();
    let (s_lp, c_lp) = (x.psi_l - x.psi_p).sin_cos();
    let (s_el, c_el) = (w.psi_e - x.psi_l).sin_cos();
    let sigma_p = cos_p * c_lp;
    let sigma_e = cos_e * c_el;
    let (h1, h2) = (rates.psi_l_dot, rates.theta_l_dot);
    let rc = r * cos_l;

    let mut j = SMatrix::<f64, 2, 6>::zeros();
    // psi_L_dot = (V_e cos_e sin(psi_e - psi_L) + V_p cos_p sin(psi_L - psi_p)) / (R cos_L)
    j[(0, 0)] = -h1 / r;
    j[(0, 1)] = h1 * sin_l / cos_l;
    j[(0, 2)] = (x.v_p * sigma_p - w.v_e * sigma_e) / rc;
    j[(0, 3)] = cos_p * s_lp / rc;
    j[(0, 4)] = -x.v_p * sin_p * s_lp / rc;
    j[(0, 5)] = -x.v_p * sigma_p / rc;

    // theta_L_dot = -N / R with
    // N = V_p (cos_L sin_p - sin_L sigma_p) - V_e (cos_L sin_e - sin_L sigma_e)
    let dn_dtheta_l = x.v_p * (-sin_l * sin_p - cos_l * sigma_p) - w.v_e * (-sin_l * sin_e - cos_l * sigma_e);
    let dn_dpsi_l = x.v_p * sin_l * cos_p * s_lp + w.v_e * sin_l * cos_e * s_el;
    let dn_dv_p = cos_l * sin_p - sin_l * sigma_p;
    let dn_dtheta_p = x.v_p * (cos_l * cos_p + sin_l * sin_p * c_lp);
    let dn_dpsi_p = -x.v_p * sin_l * cos_p * s_lp;
    j[(1, 0)] = -h2 / r;
    j[(1, 1)] = -dn_dtheta_l / r;
    j[(1, 2)] = -dn_dpsi_l / r;
    j[(1, 3)] = -dn_dv_p / r;
    j[(1, 4)] = -dn_dtheta_p / r;
    j[(1, 5)] = -dn_dpsi_p / r;
    Ok(j)
}

/// Analytic `dh/dw`, columns ordered `(V_e, theta_e, psi_e)`.
pub fn evader_jacobian(x: &EngagementState, w: &DisturbanceState) -> Result<SMatrix<f64, 2, 3>> {
    let cos_l = x.theta_l.cos();
    if cos_l.abs() <= EPS_THETA {
        return Err(SimError::LosSingularity { cos_theta: cos_l });
    }
    let r = x.range;
    let sin_l = x.theta_l.sin();
    let (sin_e, cos_e) = w.theta_e.sin_cos();
    let (s_el, c_el) = (w.psi_e - x.psi_l).sin_cos();
    let sigma_e = cos_e * c_el;
    let rc = r * cos_l;

    let mut j = SMatrix::<f64, 2, 3>::zeros();
    j[(0, 0)] = cos_e * s_el / rc;
    j[(0, 1)] = -w.v_e * sin_e * s_el / rc;
    j[(0, 2)] = w.v_e * sigma_e / rc;
    j[(1, 0)] = (cos_l * sin_e - sin_l * sigma_e) / r;
    j[(1, 1)] = w.v_e * (cos_l * cos_e + sin_l * sin_e * c_el) / r;
    j[(1, 2)] = w.v_e * sin_l * cos_e * s_el / r;
    Ok(j)
}

/// Closed-form decoupling matrix of `(cos(theta_L) psi_L_dot, theta_L_dot)`.
pub fn beta_matrix(x: &EngagementState) -> Result<Matrix2<f64>> {
    if !(x.range > 0.0) {
        return Err(SimError::DegenerateGeometry("non-positive range"));
    }
    let (sin_l, cos_l) = x.theta_l.sin_cos();
    let (sin_p, cos_p) = x.theta_p.sin_cos();
    let (s_d, c_d) = (x.psi_p - x.psi_l).sin_cos();
    Ok(Matrix2::new(-c_d, -sin_p * s_d, -sin_l * s_d, cos_p * cos_l + sin_p * sin_l * c_d) / x.range)
}

/// Closed-form inverse of [`beta_matrix`], `-(R / i_P.i_L) adj`; refuses
/// near-orthogonal geometry.
pub fn beta_inverse(x: &EngagementState, eps_validity: f64) -> Result<Matrix2<f64>> {
    if !(x.range > 0.0) {
        return Err(SimError::DegenerateGeometry("non-positive range"));
    }
    let (sin_l, cos_l) = x.theta_l.sin_cos();
    let (sin_p, cos_p) = x.theta_p.sin_cos();
    let (s_d, c_d) = (x.psi_p - x.psi_l).sin_cos();
    let alignment = sin_p * sin_l + cos_p * cos_l * c_d;
    if alignment.abs() <= eps_validity {
        return Err(SimError::ValidityViolation {
            margin: alignment.abs(),
            threshold: eps_validity,
        });
    }
    Ok(Matrix2::new(cos_p * cos_l + sin_p * sin_l * c_d, sin_p * s_d, sin_l * s_d, -c_d) * (-x.range / alignment))
}

/// Decoupling matrix `L_g h` of the LOS rates themselves.
pub fn decoupling_matrix(x: &EngagementState) -> Result<Matrix2<f64>> {
    let cos_l = x.theta_l.cos();
    if cos_l.abs() <= EPS_THETA {
        return Err(SimError::LosSingularity { cos_theta: cos_l });
    }
    let mut b = beta_matrix(x)?;
    b.row_mut(0).scale_mut(1.0 / cos_l);
    Ok(b)
}

/// `L_f h`: the output Jacobian contracted with the drift. The evader-rate
/// term is not included; see [`evader_feedthrough`].
pub fn alpha_vector(
    x: &EngagementState,
    w: &DisturbanceState,
    pursuer: &VehicleParams,
    env: &Environment,
) -> Result<Vector2<f64>> {
    let j = output_jacobian(x, w)?;
    let f = drift_f(x, w, pursuer, env)?;
    Ok(j * SMatrix::<f64, 6, 1>::from_column_slice(&f))
}

/// `(dh/dw) w_dot`, the contribution of the evader's own rates to `y_dot`.
pub fn evader_feedthrough(x: &EngagementState, w: &DisturbanceState, w_dot: &[f64; 3]) -> Result<Vector2<f64>> {
    let j = evader_jacobian(x, w)?;
    Ok(j * nalgebra::Vector3::from_column_slice(w_dot))
}

pub fn linearization_terms(
    x: &EngagementState,
    w: &DisturbanceState,
    pursuer: &VehicleParams,
    env: &Environment,
) -> Result<LinearizationTerms> {
    let alpha = alpha_vector(x, w, pursuer, env)?;
    let beta = beta_matrix(x)?;
    let beta_det = beta.determinant();
    let beta_inv = if beta_det.abs() > 1e-300 {
        beta_inverse(x, 0.0).ok()
    } else {
        None
    };
    Ok(LinearizationTerms {
        alpha,
        beta,
        beta_det,
        beta_inv,
    })
}

/// Internal command `v = -K y`.
pub fn v_law(y: &Vector2<f64>, gains: &GuidanceGains) -> Vector2<f64> {
    Vector2::new(-gains.k_psi_dot * y[0], -gains.k_theta_dot * y[1])
}

/// `u = B^-1 (-alpha + v)` for a given `alpha`, with `B` the decoupling matrix.
pub fn linearizing_command(
    x: &EngagementState,
    y: &Vector2<f64>,
    alpha: &Vector2<f64>,
    gains: &GuidanceGains,
    eps_validity: f64,
) -> Result<ManeuverCommand> {
    let beta_inv = beta_inverse(x, eps_validity)?;
    let rhs = v_law(y, gains) - alpha;
    let scaled = Vector2::new(rhs[0] * x.theta_l.cos(), rhs[1]);
    let u = beta_inv * scaled;
    Ok(ManeuverCommand::new(u[0], u[1]))
}

fn margin(x: &EngagementState, w: &DisturbanceState) -> f64 {
    alignment_cache(x, w).closing_alignment.abs()
}

/// Baseline input-output linearizing command.
pub fn iol_command(
    x: &EngagementState,
    w: &DisturbanceState,
    gains: &GuidanceGains,
    pursuer: &VehicleParams,
    env: &Environment,
    eps_validity: f64,
) -> Result<GuidanceCommand> {
    let y = output_h(x, w)?;
    let alpha = alpha_vector(x, w, pursuer, env)?;
    let u = linearizing_command(x, &y, &alpha, gains, eps_validity)?;
    Ok(GuidanceCommand {
        u,
        branch: Branch::Standard,
        validity_margin: margin(x, w),
    })
}

/// Sign applied to the linearizing command under the toggle, and the branch it maps to.
pub fn toggle_branch(closing_alignment: f64, order: CatsBranchOrder) -> Branch {
    let negate = match order {
        CatsBranchOrder::NegateWhenClosing => closing_alignment >= 0.0,
        CatsBranchOrder::NegateWhenOpening => closing_alignment < 0.0,
    };
    if negate {
        Branch::Toggled
    } else {
        Branch::Standard
    }
}

fn apply_toggle(base: GuidanceCommand, alignment: f64, order: CatsBranchOrder) -> GuidanceCommand {
    let branch = toggle_branch(alignment, order);
    let u = if branch == Branch::Toggled { -base.u } else { base.u };
    GuidanceCommand { u, branch, ..base }
}

/// Linearizing command with the closing-alignment toggle.
pub fn cats_command(
    x: &EngagementState,
    w: &DisturbanceState,
    gains: &GuidanceGains,
    pursuer: &VehicleParams,
    env: &Environment,
    eps_validity: f64,
    order: CatsBranchOrder,
) -> Result<GuidanceCommand> {
    let base = iol_command(x, w, gains, pursuer, env, eps_validity)?;
    Ok(apply_toggle(base, alignment_cache(x, w).closing_alignment, order))
}

/// Proportional navigation: lateral acceleration `N V_p psi_L_dot` and a
/// vertical acceleration that pitches the velocity toward the LOS rotation,
/// `-N V_p theta_L_dot` with `n_z` positive down.
pub fn pn_command(x: &EngagementState, w: &DisturbanceState, gains: &GuidanceGains) -> Result<GuidanceCommand> {
    let rates = los_rates(x, w)?;
    pn_from_rates(x, rates.psi_l_dot, rates.theta_l_dot, gains).map(|u| GuidanceCommand {
        u,
        branch: Branch::NotApplicable,
        validity_margin: margin(x, w),
    })
}

pub fn pn_from_rates(
    x: &EngagementState,
    psi_l_dot: f64,
    theta_l_dot: f64,
    gains: &GuidanceGains,
) -> Result<ManeuverCommand> {
    let scale = gains.nav_constant * x.v_p;
    Ok(ManeuverCommand::new(scale * psi_l_dot, -scale * theta_l_dot))
}

/// Law selection and tuning for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuidanceConfig {
    pub law: GuidanceLaw,
    pub gains: GuidanceGains,
    pub cats_branch_order: CatsBranchOrder,
    pub include_evader_feedthrough: bool,
    pub epsilon_validity: f64,
    /// s
    pub hold_limit: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            law: GuidanceLaw::Cats,
            gains: GuidanceGains::default(),
            cats_branch_order: CatsBranchOrder::default(),
            include_evader_feedthrough: false,
            epsilon_validity: EPS_VALIDITY,
            hold_limit: DEFAULT_HOLD_LIMIT,
        }
    }
}

impl GuidanceConfig {
    pub fn with_law(law: GuidanceLaw) -> Self {
        Self { law, ..Self::default() }
    }
}

/// What the controller produced for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub command: GuidanceCommand,
    /// Command after the per-channel clamp; this is what drives the pursuer.
    pub applied: ManeuverCommand,
    pub held: bool,
}

/// Per-trial guidance state. Owns the hold buffer used when the linearizing
/// law is momentarily undefined.
#[derive(Debug, Clone)]
pub struct Controller {
    config: GuidanceConfig,
    last: Option<ControlOutput>,
    held_for: f64,
}

impl Controller {
    pub fn new(config: GuidanceConfig) -> Self {
        Self {
            config,
            last: None,
            held_for: 0.0,
        }
    }

    pub fn config(&self) -> &GuidanceConfig {
        &self.config
    }

    /// Evaluates the selected law. `evader_rates` is only used when the
    /// evader feedthrough is enabled. `dt` is the time the output will be
    /// held, counted against the hold limit when the law is undefined.
    pub fn command(
        &mut self,
        x: &EngagementState,
        w: &DisturbanceState,
        pursuer: &VehicleParams,
        env: &Environment,
        evader_rates: Option<&[f64; 3]>,
        dt: f64,
    ) -> Result<ControlOutput> {
        let cfg = self.config;
        let raw = match cfg.law {
            GuidanceLaw::Pn => pn_command(x, w, &cfg.gains),
            GuidanceLaw::Iol | GuidanceLaw::Cats => self.linearizing(x, w, pursuer, env, evader_rates),
        };
        match raw {
            Ok(command) => {
                if !command.u.is_finite() {
                    return Err(SimError::IntegrationFailure);
                }
                let out = ControlOutput {
                    command,
                    applied: command.u.saturate(pursuer.accel_limit),
                    held: false,
                };
                self.last = Some(out);
                self.held_for = 0.0;
                Ok(out)
            }
            Err(SimError::ValidityViolation { margin, threshold }) => {
                self.held_for += dt;
                if self.held_for > cfg.hold_limit + 1e-12 {
                    return Err(SimError::ValidityViolation { margin, threshold });
                }
                let mut out = self.last.unwrap_or(ControlOutput {
                    command: GuidanceCommand {
                        u: ManeuverCommand::ZERO,
                        branch: Branch::Standard,
                        validity_margin: margin,
                    },
                    applied: ManeuverCommand::ZERO,
                    held: true,
                });
                out.command.validity_margin = margin;
                out.held = true;
                Ok(out)
            }
            Err(e) => Err(e),
        }
    }

    fn linearizing(
        &self,
        x: &EngagementState,
        w: &DisturbanceState,
        pursuer: &VehicleParams,
        env: &Environment,
        evader_rates: Option<&[f64; 3]>,
    ) -> Result<GuidanceCommand> {
        let cfg = &self.config;
        let y = output_h(x, w)?;
        let mut alpha = alpha_vector(x, w, pursuer, env)?;
        if cfg.include_evader_feedthrough {
            if let Some(w_dot) = evader_rates {
                alpha += evader_feedthrough(x, w, w_dot)?;
            }
        }
        let u = linearizing_command(x, &y, &alpha, &cfg.gains, cfg.epsilon_validity)?;
        let alignment = alignment_cache(x, w).closing_alignment;
        let base = GuidanceCommand {
            u,
            branch: Branch::Standard,
            validity_margin: alignment.abs(),
        };
        Ok(match cfg.law {
            GuidanceLaw::Cats => apply_toggle(base, alignment, cfg.cats_branch_order),
            _ => base,
        })
    }
}

/// Exact `L_g h` from the analytic output Jacobian and the input columns.
pub fn lie_derivative_g(x: &EngagementState, w: &DisturbanceState) -> Result<Matrix2<f64>> {
    let j = output_jacobian(x, w)?;
    let g = control_matrix_g(x)?;
    Ok(j * g)
}

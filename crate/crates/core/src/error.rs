use thiserror::Error;

/// Failures raised by the engagement model, guidance laws and integrator.
///
/// Singular geometry is reported instead of letting NaNs leak into a trial;
/// the simulation layer maps each variant onto a trial outcome.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("LOS gimbal singularity: |cos(theta_L)| = {cos_theta:.3e}")]
    LosSingularity { cos_theta: f64 },

    #[error("heading singularity: |cos(theta)| = {cos_theta:.3e}")]
    HeadingSingularity { cos_theta: f64 },

    #[error("linearizing law undefined: closing alignment {margin:.3e} below {threshold:.1e}")]
    ValidityViolation { margin: f64, threshold: f64 },

    #[error("integration produced a non-finite derivative")]
    IntegrationFailure,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

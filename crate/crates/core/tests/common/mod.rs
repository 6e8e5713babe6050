#![allow(dead_code)]

use losguide::{DisturbanceState, EngagementState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random engagement away from the LOS and heading singularities.
pub fn random_state<R: Rng>(rng: &mut R) -> (EngagementState, DisturbanceState) {
    let pi = std::f64::consts::PI;
    let x = EngagementState {
        range: rng.random_range(1_000.0..10_000.0),
        theta_l: rng.random_range(-1.2..1.2),
        psi_l: rng.random_range(-pi..pi),
        v_p: rng.random_range(200.0..1_000.0),
        theta_p: rng.random_range(-1.2..1.2),
        psi_p: rng.random_range(-pi..pi),
    };
    let w = DisturbanceState {
        v_e: rng.random_range(100.0..600.0),
        theta_e: rng.random_range(-1.2..1.2),
        psi_e: rng.random_range(-pi..pi),
    };
    (x, w)
}

/// Norm of the relative velocity, the natural scale of `R_dot`.
pub fn relative_speed(x: &EngagementState, w: &DisturbanceState) -> f64 {
    let (p, e) = losguide::engagement::cartesian_from_state(x, w, losguide::Vec3::zeros());
    (e.velocity - p.velocity).norm()
}

pub fn rel_err(value: f64, reference: f64, scale: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(scale)
}

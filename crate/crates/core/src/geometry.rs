//! Frame conventions and angle bookkeeping.
//!
//! The inertial frame has `i` pointing north, `j` east and `k` along local
//! gravity (down). A velocity or LOS direction is parameterized by an azimuth
//! `psi` (rotation about `k`) followed by an elevation `theta` (rotation about
//! the intermediate `j`), so positive `theta` points upward.

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::engagement::{DisturbanceState, EngagementState};
use crate::error::{Result, SimError};

pub type Vec3 = Vector3<f64>;

/// A proper rotation between two right-handed frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn row(&self, i: usize) -> [f64; 3] {
        [self.0[(i, 0)], self.0[(i, 1)], self.0[(i, 2)]]
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Largest entry of `|R^T R - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).abs().max()
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

impl Mul for Rotation3 {
    type Output = Rotation3;

    fn mul(self, rhs: Rotation3) -> Rotation3 {
        Rotation3(self.0 * rhs.0)
    }
}

/// Frame rotation about the third axis.
pub fn o3(phi: f64) -> Rotation3 {
    let (s, c) = phi.sin_cos();
    Rotation3(Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0))
}

/// Frame rotation about the second axis.
pub fn o2(phi: f64) -> Rotation3 {
    let (s, c) = phi.sin_cos();
    Rotation3(Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c))
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Unit vector with elevation `theta` and azimuth `psi`, in inertial components.
pub fn direction_from_angles(theta: f64, psi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    Vec3::new(ct * cp, ct * sp, -st)
}

/// Elevation and azimuth of a nonzero vector. At the poles the azimuth is 0.
pub fn angles_from_vector(v: &Vec3) -> Result<(f64, f64, f64)> {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(SimError::DegenerateGeometry("zero-length direction vector"));
    }
    let theta = (-v.z / norm).clamp(-1.0, 1.0).asin();
    let horizontal = v.x.hypot(v.y);
    let psi = if horizontal <= 1e-12 * norm {
        0.0
    } else {
        wrap_angle(v.y.atan2(v.x))
    };
    Ok((norm, theta, psi))
}

/// Range and LOS angles of the evader as seen from the pursuer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosAngles {
    pub range: f64,
    pub theta_l: f64,
    pub psi_l: f64,
}

impl LosAngles {
    pub fn unit(&self) -> Vec3 {
        direction_from_angles(self.theta_l, self.psi_l)
    }
}

pub fn los_from_relative_position(r_rel: &Vec3) -> Result<LosAngles> {
    let (range, theta_l, psi_l) =
        angles_from_vector(r_rel).map_err(|_| SimError::DegenerateGeometry("coincident pursuer and evader"))?;
    Ok(LosAngles { range, theta_l, psi_l })
}

/// Projections shared by the range-rate, LOS-rate and decoupling terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentCache {
    /// `cos(theta_p) cos(psi_L - psi_p)`
    pub sigma_p: f64,
    /// `cos(theta_e) cos(psi_e - psi_L)`
    pub sigma_e: f64,
    /// `psi_p - psi_L`, wrapped
    pub delta_psi: f64,
    /// Cosine between the pursuer velocity and the LOS.
    pub closing_alignment: f64,
}

pub fn alignment_cache(x: &EngagementState, w: &DisturbanceState) -> AlignmentCache {
    let delta_psi = wrap_angle(x.psi_p - x.psi_l);
    let sigma_p = x.theta_p.cos() * (x.psi_l - x.psi_p).cos();
    let sigma_e = w.theta_e.cos() * (w.psi_e - x.psi_l).cos();
    let closing_alignment = x.theta_p.sin() * x.theta_l.sin() + x.theta_p.cos() * x.theta_l.cos() * delta_psi.cos();
    AlignmentCache {
        sigma_p,
        sigma_e,
        delta_psi,
        closing_alignment,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn state(theta_l: f64, psi_l: f64, theta_p: f64, psi_p: f64) -> EngagementState {
        EngagementState {
            range: 1000.0,
            theta_l,
            psi_l,
            v_p: 300.0,
            theta_p,
            psi_p,
        }
    }

    fn evader() -> DisturbanceState {
        DisturbanceState {
            v_e: 200.0,
            theta_e: 0.1,
            psi_e: -0.4,
        }
    }

    #[test]
    fn o3_quarter_turn() {
        assert_eq!(o3(0.0), Rotation3::identity());
        let r = o3(FRAC_PI_2);
        let expect = [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        for (i, row) in expect.iter().enumerate() {
            for (a, b) in r.row(i).iter().zip(row) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn o2_quarter_turn() {
        assert_eq!(o2(0.0), Rotation3::identity());
        let r = o2(FRAC_PI_2).row(0);
        assert_abs_diff_eq!(r[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[2], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn direction_special_cases() {
        assert_eq!(direction_from_angles(0.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
        let up = direction_from_angles(FRAC_PI_2, 1.234);
        assert_abs_diff_eq!((up - Vec3::new(0.0, 0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
        let east = direction_from_angles(0.0, FRAC_PI_2);
        assert_abs_diff_eq!((east - Vec3::new(0.0, 1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn los_special_cases() {
        let los = los_from_relative_position(&Vec3::new(5.0, 0.0, 0.0)).unwrap();
        assert_eq!((los.range, los.theta_l, los.psi_l), (5.0, 0.0, 0.0));

        let pole = los_from_relative_position(&Vec3::new(0.0, 0.0, -2.0)).unwrap();
        assert_eq!(pole.range, 2.0);
        assert_abs_diff_eq!(pole.theta_l, FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(pole.psi_l, 0.0);

        assert!(matches!(
            los_from_relative_position(&Vec3::zeros()),
            Err(SimError::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn alignment_extremes() {
        let w = evader();
        assert_abs_diff_eq!(
            alignment_cache(&state(0.0, 0.3, 0.0, 0.3), &w).closing_alignment,
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            alignment_cache(&state(0.0, 0.3, 0.0, 0.3 + PI), &w).closing_alignment,
            -1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            alignment_cache(&state(0.0, 0.3, 0.0, 0.3 + FRAC_PI_2), &w).closing_alignment,
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn alignment_sigma_values() {
        let c = alignment_cache(&state(0.2, 0.5, 0.3, 0.1), &evader());
        assert_abs_diff_eq!(c.sigma_p, 0.3f64.cos() * 0.4f64.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.sigma_e, 0.1f64.cos() * (-0.9f64).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.delta_psi, -0.4, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn rotations_are_proper(phi in -10.0f64..10.0) {
            for r in [o2(phi), o3(phi)] {
                prop_assert!(r.orthonormality_error() < 1e-12);
                prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
            }
            prop_assert!(((o3(phi) * o3(-phi)).matrix() - Matrix3::identity()).abs().max() < 1e-15);
            prop_assert_eq!(o2(phi).transpose(), o2(-phi));
        }

        #[test]
        fn direction_matches_rotation_product(theta in -FRAC_PI_2..FRAC_PI_2, psi in -PI..PI) {
            let row = (o2(theta) * o3(psi)).row(0);
            let d = direction_from_angles(theta, psi);
            for k in 0..3 {
                prop_assert!((row[k] - d[k]).abs() < 1e-14);
            }
            prop_assert!((d.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn los_round_trip(theta in -1.5f64..1.5, psi in -PI..PI, range in 1.0f64..1e5) {
            let r = direction_from_angles(theta, psi) * range;
            let los = los_from_relative_position(&r).unwrap();
            prop_assert!((los.unit() * los.range - r).norm() < 1e-9 * range);
            prop_assert!((los.theta_l - theta).abs() < 1e-9);
            prop_assert!(wrap_angle(los.psi_l - psi).abs() < 1e-9);
        }

        #[test]
        fn alignment_closed_form_is_dot_product(
            theta_l in -1.5f64..1.5, psi_l in -PI..PI, theta_p in -1.5f64..1.5, psi_p in -PI..PI,
        ) {
            let c = alignment_cache(&state(theta_l, psi_l, theta_p, psi_p), &evader());
            let dot = direction_from_angles(theta_p, psi_p).dot(&direction_from_angles(theta_l, psi_l));
            prop_assert!((c.closing_alignment - dot).abs() < 1e-12);
            prop_assert!(c.closing_alignment.abs() <= 1.0 + 1e-12);
            prop_assert!(c.sigma_p.abs() <= 1.0 && c.sigma_e.abs() <= 1.0);
        }
    }
}

//! Inertial / line-of-sight frame algebra.
//!
//! The LOS frame is reached from the inertial frame by an azimuth rotation
//! `psi` about inertial Z followed by an elevation rotation `-theta` about the
//! intermediate Y axis. Its x-axis is the unit vector from the UAV toward the
//! pseudo-target, `(cos θ cos ψ, cos θ sin ψ, sin θ)`.
//!
//! Directions inside the LOS frame are described by lead angles: a vector with
//! LOS components `|v| (cos θ_L cos ψ_L, cos θ_L sin ψ_L, sin θ_L)` has
//! elevation lead `θ_L` and azimuth lead `ψ_L`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Speeds below this are treated as zero when extracting a direction.
pub const MIN_SPEED: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("ZeroSpeed: cannot extract lead angles from a velocity of magnitude {0:e} m/s")]
    ZeroSpeed(f64),
}

/// Orientation of the LOS frame relative to the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LosAngles {
    /// Elevation, rad.
    pub theta: f64,
    /// Azimuth, rad.
    pub psi: f64,
}

impl LosAngles {
    pub fn new(theta: f64, psi: f64) -> Self {
        Self { theta, psi }
    }

    /// Unit vector along the LOS x-axis, in inertial coordinates.
    pub fn unit(&self) -> Vec3 {
        direction(self.theta, self.psi)
    }

    /// Columns are the LOS basis vectors expressed in the inertial frame.
    pub fn rotation(&self) -> Matrix3<f64> {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.psi.sin_cos();
        Matrix3::new(
            ct * cp, -sp, -st * cp, //
            ct * sp, cp, -st * sp, //
            st, 0.0, ct,
        )
    }
}

/// Orientation of a velocity vector relative to the LOS frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LeadAngles {
    /// Elevation lead, rad.
    pub theta: f64,
    /// Azimuth lead, rad.
    pub psi: f64,
}

impl LeadAngles {
    pub fn new(theta: f64, psi: f64) -> Self {
        Self { theta, psi }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_degrees(theta_deg: f64, psi_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), psi_deg.to_radians())
    }

    /// Unit vector of the direction in LOS-frame coordinates.
    pub fn unit(&self) -> Vec3 {
        direction(self.theta, self.psi)
    }

    pub fn wrapped(self) -> Self {
        Self::new(wrap_angle(self.theta), wrap_angle(self.psi))
    }
}

/// `(cos θ cos ψ, cos θ sin ψ, sin θ)`.
pub fn direction(theta: f64, psi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    Vec3::new(ct * cp, ct * sp, st)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Re-parametrizes an (elevation, azimuth) pair so that elevation lies in
/// `[-π/2, π/2]` and azimuth in `(-π, π]`, preserving the direction vector.
///
/// Returns `true` as the third element when the pair went over the pole,
/// i.e. it was replaced by `(±π - θ, ψ + π)`. For a frame orientation this
/// flips the sign of the frame's y and z axes.
pub fn normalize_direction(theta: f64, psi: f64) -> (f64, f64, bool) {
    let t = wrap_angle(theta);
    if t > FRAC_PI_2 {
        (PI - t, wrap_angle(psi + PI), true)
    } else if t < -FRAC_PI_2 {
        (-PI - t, wrap_angle(psi + PI), true)
    } else {
        (t, wrap_angle(psi), false)
    }
}

pub fn los_to_inertial(v_los: &Vec3, los: &LosAngles) -> Vec3 {
    los.rotation() * v_los
}

pub fn inertial_to_los(v_inertial: &Vec3, los: &LosAngles) -> Vec3 {
    los.rotation().transpose() * v_inertial
}

/// Decomposes an inertial velocity into lead angles and speed relative to `los`.
///
/// At an elevation lead of exactly ±π/2 the azimuth lead is undefined and is
/// returned as 0.
pub fn lead_angles_from_velocity(
    v_inertial: &Vec3,
    los: &LosAngles,
) -> Result<(LeadAngles, f64), FrameError> {
    let speed = v_inertial.norm();
    if speed < MIN_SPEED {
        return Err(FrameError::ZeroSpeed(speed));
    }
    let v = inertial_to_los(v_inertial, los);
    Ok((direction_angles(&v, speed), speed))
}

/// Lead angles of a LOS-frame vector of known (nonzero) magnitude.
pub(crate) fn direction_angles(v_los: &Vec3, norm: f64) -> LeadAngles {
    let theta = (v_los.z / norm).clamp(-1.0, 1.0).asin();
    let horizontal = v_los.x.hypot(v_los.y);
    let psi = if horizontal <= f64::EPSILON * norm {
        0.0
    } else {
        v_los.y.atan2(v_los.x)
    };
    LeadAngles::new(theta, psi)
}

pub fn velocity_from_lead_angles(speed: f64, lead: &LeadAngles, los: &LosAngles) -> Vec3 {
    los_to_inertial(&(lead.unit() * speed), los)
}

/// Effective heading σ = acos(cos ψ_L cos θ_L), the angle between the
/// velocity and the LOS. Lies in `[0, π]`.
pub fn effective_heading(lead: &LeadAngles) -> f64 {
    (lead.psi.cos() * lead.theta.cos()).clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn identity_rotation() {
        let v = los_to_inertial(&Vec3::x(), &LosAngles::new(0.0, 0.0));
        assert_abs_diff_eq!(v, Vec3::x(), epsilon = 1e-15);
    }

    #[test]
    fn pure_elevation_maps_x_to_z() {
        let v = los_to_inertial(&Vec3::x(), &LosAngles::new(FRAC_PI_2, 0.0));
        assert_abs_diff_eq!(v, Vec3::z(), epsilon = 1e-15);
    }

    #[test]
    fn fifteen_degree_los() {
        let v = los_to_inertial(&Vec3::x(), &LosAngles::new(deg(15.0), deg(15.0)));
        assert_abs_diff_eq!(v.x, 0.9330127018922194, epsilon = 1e-12);
        assert_abs_diff_eq!(v.y, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(v.z, 0.25881904510252074, epsilon = 1e-12);
    }

    #[test]
    fn rotation_columns_are_orthonormal() {
        let r = LosAngles::new(0.3, -2.0).rotation();
        assert_abs_diff_eq!(r.transpose() * r, Matrix3::identity(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.determinant(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn aligned_velocity_has_zero_lead() {
        let los = LosAngles::new(0.4, 2.2);
        let (lead, speed) = lead_angles_from_velocity(&(los.unit() * 7.0), &los).unwrap();
        assert_abs_diff_eq!(lead.theta, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lead.psi, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(speed, 7.0, epsilon = 1e-12);
    }

    #[test]
    fn axis_velocity() {
        let (lead, speed) =
            lead_angles_from_velocity(&Vec3::new(25.0, 0.0, 0.0), &LosAngles::default()).unwrap();
        assert_eq!(lead, LeadAngles::zero());
        assert_eq!(speed, 25.0);
    }

    #[test]
    fn zero_speed_is_rejected() {
        let err = lead_angles_from_velocity(&Vec3::zeros(), &LosAngles::default());
        assert!(matches!(err, Err(FrameError::ZeroSpeed(_))));
    }

    #[test]
    fn vertical_lead_has_zero_azimuth() {
        let (lead, _) =
            lead_angles_from_velocity(&Vec3::new(0.0, 0.0, 3.0), &LosAngles::default()).unwrap();
        assert_abs_diff_eq!(lead.theta, FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(lead.psi, 0.0);
    }

    #[test]
    fn velocity_composition() {
        assert_eq!(
            velocity_from_lead_angles(0.0, &LeadAngles::new(0.3, 0.2), &LosAngles::new(0.1, 0.5)),
            Vec3::zeros()
        );
        let v = velocity_from_lead_angles(14.0, &LeadAngles::zero(), &LosAngles::default());
        assert_abs_diff_eq!(v, Vec3::new(14.0, 0.0, 0.0), epsilon = 1e-14);
        let v = velocity_from_lead_angles(
            25.0,
            &LeadAngles::from_degrees(15.0, 15.0),
            &LosAngles::default(),
        );
        assert_abs_diff_eq!(v.x, 23.325317547305485, epsilon = 1e-12);
        assert_abs_diff_eq!(v.y, 6.249999999999999, epsilon = 1e-12);
        assert_abs_diff_eq!(v.z, 6.4704761275630185, epsilon = 1e-12);
    }

    #[test]
    fn effective_heading_values() {
        assert_eq!(effective_heading(&LeadAngles::zero()), 0.0);
        assert_abs_diff_eq!(
            effective_heading(&LeadAngles::new(1.234, FRAC_PI_2)),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            effective_heading(&LeadAngles::from_degrees(30.0, 45.0)).to_degrees(),
            52.23875609296496,
            epsilon = 1e-10
        );
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI + 0.1), -PI + 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-0.5), -0.5);
    }

    #[test]
    fn over_the_pole_flips_frame() {
        let (t, p, flipped) = normalize_direction(deg(100.0), deg(10.0));
        assert!(flipped);
        assert_abs_diff_eq!(direction(t, p), direction(deg(100.0), deg(10.0)), epsilon = 1e-14);
        assert_abs_diff_eq!(t, deg(80.0), epsilon = 1e-12);
        assert_abs_diff_eq!(p, deg(-170.0), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn lead_round_trip(
            speed in 1e-3f64..100.0,
            lt in -1.57f64..1.57,
            lp in -3.1f64..3.1,
            t in -1.5f64..1.5,
            p in -3.1f64..3.1,
        ) {
            let los = LosAngles::new(t, p);
            let lead = LeadAngles::new(lt, lp);
            let v = velocity_from_lead_angles(speed, &lead, &los);
            let (back, s) = lead_angles_from_velocity(&v, &los).unwrap();
            prop_assert!((s - speed).abs() <= 1e-9 * speed.max(1.0));
            prop_assert!((back.theta - lt).abs() < 1e-9);
            prop_assert!(wrap_angle(back.psi - lp).abs() < 1e-9);
        }

        #[test]
        fn rotation_preserves_norm(
            x in -1e3f64..1e3, y in -1e3f64..1e3, z in -1e3f64..1e3,
            t in -1.6f64..1.6, p in -7.0f64..7.0,
        ) {
            let v = Vec3::new(x, y, z);
            let los = LosAngles::new(t, p);
            let out = los_to_inertial(&v, &los);
            prop_assert!((out.norm() - v.norm()).abs() <= 1e-12 * v.norm().max(1.0));
            let back = inertial_to_los(&out, &los);
            prop_assert!((back - v).norm() <= 1e-12 * v.norm().max(1.0));
        }

        #[test]
        fn zero_heading_iff_zero_leads(lt in -1.5f64..1.5, lp in -3.1f64..3.1) {
            let sigma = effective_heading(&LeadAngles::new(lt, lp));
            prop_assert!((0.0..=PI).contains(&sigma));
            if sigma < 1e-9 {
                prop_assert!(lt.abs() < 1e-8 && lp.abs() < 1e-8);
            }
            if lt.abs() > 1e-6 || lp.abs() > 1e-6 {
                prop_assert!(sigma > 0.0);
            }
        }
    }
}

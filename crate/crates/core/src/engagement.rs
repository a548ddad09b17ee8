//! Relative motion between the UAV and the pseudo-target.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{self, LeadAngles, LosAngles, Vec3};
use crate::guard::GuardFlags;

/// Floor on the range used in the LOS-rate denominators, m.
pub const R_MIN: f64 = 0.1;
/// Guard on `|cos θ|` and `|cos θ_U|`.
pub const EPS_DEN: f64 = 1e-6;
/// Points closer than this have no defined LOS.
pub const MIN_SEPARATION: f64 = 1e-12;
/// Largest LOS elevation produced from positions; keeps θ strictly inside (-π/2, π/2).
pub const LOS_ELEVATION_LIMIT: f64 = std::f64::consts::FRAC_PI_2 - EPS_DEN;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngagementError {
    #[error("RangeUnderflow: r = {r} m is below r_min = {R_MIN} m")]
    RangeUnderflow { r: f64 },
    #[error("DenominatorGuard: |cos| = {value:e} at or below {EPS_DEN:e} ({which})")]
    DenominatorGuard { which: &'static str, value: f64 },
    #[error("CoincidentPoints: UAV and target are {0:e} m apart")]
    CoincidentPoints(f64),
}

/// The five relative-motion states.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EngagementState {
    pub r: f64,
    pub los: LosAngles,
    /// UAV lead angles (θ_U, ψ_U).
    pub lead: LeadAngles,
}

impl EngagementState {
    /// Puts θ and θ_U into `[-π/2, π/2]` and both azimuths into `(-π, π]`.
    ///
    /// Taking the LOS over the pole flips the LOS frame's y and z axes, so the
    /// UAV lead angles change sign to describe the same velocity.
    pub fn normalized(self) -> Self {
        let (theta, psi, flipped) = frames::normalize_direction(self.los.theta, self.los.psi);
        let mut lead = self.lead;
        if flipped {
            lead = LeadAngles::new(-lead.theta, -lead.psi);
        }
        let (lt, lp, _) = frames::normalize_direction(lead.theta, lead.psi);
        Self {
            r: self.r,
            los: LosAngles::new(theta, psi),
            lead: LeadAngles::new(lt, lp),
        }
    }
}

/// What guidance is allowed to know about the pseudo-target: its speed and
/// lead angles, never its turn rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservedTarget {
    pub speed: f64,
    pub lead: LeadAngles,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UavInputs {
    pub speed: f64,
    pub omega_y: f64,
    pub omega_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EngagementRates {
    pub r_dot: f64,
    pub theta_dot: f64,
    pub psi_dot: f64,
    pub theta_u_dot: f64,
    pub psi_u_dot: f64,
}

/// LOS elevation and azimuth rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LosRates {
    pub theta_dot: f64,
    pub psi_dot: f64,
}

/// Keeps `|c| >= EPS_DEN`, preserving sign (0 maps to `+EPS_DEN`).
fn guarded_cos(c: f64) -> (f64, bool) {
    if c.abs() > EPS_DEN {
        (c, false)
    } else if c < 0.0 {
        (-EPS_DEN, true)
    } else {
        (EPS_DEN, true)
    }
}

/// Relative-motion rates with `r` floored at [`R_MIN`] and the cosine denominators
/// held at [`EPS_DEN`]. Every clamp that fired is reported in the flags.
pub fn guarded_derivatives(
    s: &EngagementState,
    u: &UavInputs,
    t: &ObservedTarget,
) -> (EngagementRates, GuardFlags) {
    let mut flags = GuardFlags::NONE;
    let r = if s.r < R_MIN {
        flags |= GuardFlags::RANGE_CLAMP;
        R_MIN
    } else {
        s.r
    };
    let (cos_los, los_tripped) = guarded_cos(s.los.theta.cos());
    let (cos_lead, lead_tripped) = guarded_cos(s.lead.theta.cos());
    flags.set_if(los_tripped, GuardFlags::LOS_ELEVATION);
    flags.set_if(lead_tripped, GuardFlags::LEAD_ELEVATION);

    let rates = rates_with(s, u, t, r, cos_los, cos_lead);
    (rates, flags)
}

/// Relative-motion rates, rejecting states outside the guarded domain.
pub fn engagement_derivatives(
    s: &EngagementState,
    u: &UavInputs,
    t: &ObservedTarget,
) -> Result<EngagementRates, EngagementError> {
    if s.r < R_MIN {
        return Err(EngagementError::RangeUnderflow { r: s.r });
    }
    let cos_los = s.los.theta.cos();
    if cos_los.abs() <= EPS_DEN {
        return Err(EngagementError::DenominatorGuard {
            which: "cos theta",
            value: cos_los.abs(),
        });
    }
    let cos_lead = s.lead.theta.cos();
    if cos_lead.abs() <= EPS_DEN {
        return Err(EngagementError::DenominatorGuard {
            which: "cos theta_u",
            value: cos_lead.abs(),
        });
    }
    Ok(rates_with(s, u, t, s.r, cos_los, cos_lead))
}

fn rates_with(
    s: &EngagementState,
    u: &UavInputs,
    t: &ObservedTarget,
    r: f64,
    cos_los: f64,
    cos_lead: f64,
) -> EngagementRates {
    let LosRates {
        theta_dot,
        psi_dot,
    } = los_rates_with(s, u.speed, t, r, cos_los);
    let c_tt = t.lead.theta.cos();
    let c_pt = t.lead.psi.cos();
    let (s_tu, c_tu) = s.lead.theta.sin_cos();
    let (s_pu, c_pu) = s.lead.psi.sin_cos();
    let s_los = s.los.theta.sin();
    let tan_tu = s_tu / cos_lead;

    // The range rate is a projection, so it keeps the unclamped cosine.
    let r_dot = t.speed * c_tt * c_pt - u.speed * c_tu * c_pu;
    let theta_u_dot = u.omega_z - psi_dot * s_los * s_pu - theta_dot * c_pu;
    let psi_u_dot = u.omega_y / cos_lead + psi_dot * tan_tu * c_pu * s_los
        - psi_dot * cos_los
        - theta_dot * tan_tu * s_pu;

    EngagementRates {
        r_dot,
        theta_dot,
        psi_dot,
        theta_u_dot,
        psi_u_dot,
    }
}

fn los_rates_with(
    s: &EngagementState,
    speed: f64,
    t: &ObservedTarget,
    r: f64,
    cos_los: f64,
) -> LosRates {
    let (s_tt, c_tt) = t.lead.theta.sin_cos();
    let s_pt = t.lead.psi.sin();
    let (s_tu, c_tu) = s.lead.theta.sin_cos();
    let s_pu = s.lead.psi.sin();
    LosRates {
        theta_dot: (t.speed * s_tt - speed * s_tu) / r,
        psi_dot: (t.speed * c_tt * s_pt - speed * c_tu * s_pu) / (r * cos_los),
    }
}

/// LOS elevation and azimuth rates with the same clamps as [`guarded_derivatives`].
pub fn los_rates(s: &EngagementState, uav_speed: f64, t: &ObservedTarget) -> LosRates {
    let r = s.r.max(R_MIN);
    let (cos_los, _) = guarded_cos(s.los.theta.cos());
    los_rates_with(s, uav_speed, t, r, cos_los)
}

/// UAV position from the target position and the relative state.
pub fn reconstruct_uav_position(p_target: &Vec3, s: &EngagementState) -> Vec3 {
    p_target - s.los.unit() * s.r
}

/// Range and LOS angles from the two inertial positions. The elevation is
/// limited to `±LOS_ELEVATION_LIMIT`.
pub fn los_from_positions(
    p_uav: &Vec3,
    p_target: &Vec3,
) -> Result<(f64, LosAngles), EngagementError> {
    let d: Vector3<f64> = p_target - p_uav;
    let r = d.norm();
    if r < MIN_SEPARATION {
        return Err(EngagementError::CoincidentPoints(r));
    }
    let theta = (d.z / r)
        .clamp(-1.0, 1.0)
        .asin()
        .clamp(-LOS_ELEVATION_LIMIT, LOS_ELEVATION_LIMIT);
    let psi = if d.x == 0.0 && d.y == 0.0 {
        0.0
    } else {
        d.y.atan2(d.x)
    };
    Ok((r, LosAngles::new(theta, psi)))
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
    fn matched_pursuit_equilibrium() {
        let s = EngagementState {
            r: 100.0,
            los: LosAngles::new(0.3, -1.1),
            lead: LeadAngles::zero(),
        };
        let u = UavInputs {
            speed: 10.0,
            omega_y: 0.2,
            omega_z: -0.1,
        };
        let t = ObservedTarget {
            speed: 10.0,
            lead: LeadAngles::zero(),
        };
        let d = engagement_derivatives(&s, &u, &t).unwrap();
        assert_eq!(d.r_dot, 0.0);
        assert_eq!(d.theta_dot, 0.0);
        assert_eq!(d.psi_dot, 0.0);
        assert_eq!(d.theta_u_dot, -0.1);
        assert_eq!(d.psi_u_dot, 0.2);
    }

    #[test]
    fn static_case() {
        let s = EngagementState {
            r: 50.0,
            los: LosAngles::new(0.2, 0.4),
            lead: LeadAngles::new(0.5, 0.3),
        };
        let u = UavInputs {
            speed: 0.0,
            omega_y: 0.7,
            omega_z: 0.4,
        };
        let d = engagement_derivatives(&s, &u, &ObservedTarget::default()).unwrap();
        assert_eq!((d.r_dot, d.theta_dot, d.psi_dot), (0.0, 0.0, 0.0));
        assert_eq!(d.theta_u_dot, 0.4);
        assert_abs_diff_eq!(d.psi_u_dot, 0.7 / 0.5f64.cos(), epsilon = 1e-15);
    }

    #[test]
    fn helix_initial_range_rate() {
        let s = EngagementState {
            r: 48.98979485566356,
            los: LosAngles::new(0.420_534_335_283_965_1, 0.463_647_609_000_806_1),
            lead: LeadAngles::from_degrees(45.0, 30.0),
        };
        let u = UavInputs {
            speed: 14.0,
            ..Default::default()
        };
        let t = ObservedTarget {
            speed: 25.0,
            lead: LeadAngles::from_degrees(15.0, 15.0),
        };
        let d = engagement_derivatives(&s, &u, &t).unwrap();
        // 25 cos²15° − 14 cos45° cos30°
        assert_abs_diff_eq!(d.r_dot, 14.75210344756436, epsilon = 1e-10);
    }

    #[test]
    fn guards_report_errors() {
        let mut s = EngagementState {
            r: 0.05,
            ..Default::default()
        };
        let u = UavInputs::default();
        let t = ObservedTarget::default();
        assert!(matches!(
            engagement_derivatives(&s, &u, &t),
            Err(EngagementError::RangeUnderflow { .. })
        ));
        let (_, flags) = guarded_derivatives(&s, &u, &t);
        assert!(flags.contains(GuardFlags::RANGE_CLAMP));

        s.r = 10.0;
        s.lead.theta = std::f64::consts::FRAC_PI_2;
        assert!(matches!(
            engagement_derivatives(&s, &u, &t),
            Err(EngagementError::DenominatorGuard { which: "cos theta_u", .. })
        ));
        let (rates, flags) = guarded_derivatives(&s, &u, &t);
        assert!(flags.contains(GuardFlags::LEAD_ELEVATION));
        assert!(rates.psi_u_dot.is_finite());
    }

    #[test]
    fn los_from_known_positions() {
        let (r, los) = los_from_positions(&Vec3::zeros(), &Vec3::x()).unwrap();
        assert_eq!((r, los.theta, los.psi), (1.0, 0.0, 0.0));

        let (r, los) =
            los_from_positions(&Vec3::new(0.0, 10.0, 0.0), &Vec3::new(40.0, 30.0, 20.0)).unwrap();
        assert_abs_diff_eq!(r, 2400f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(los.theta.to_degrees(), 24.094842552110702, epsilon = 1e-9);
        assert_abs_diff_eq!(los.psi.to_degrees(), 26.565_051_177_077_99, epsilon = 1e-9);
    }

    #[test]
    fn vertical_los_is_limited() {
        let (r, los) = los_from_positions(&Vec3::zeros(), &Vec3::new(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(r, 5.0);
        assert_eq!(los.theta, LOS_ELEVATION_LIMIT);
        assert!(los.theta < std::f64::consts::FRAC_PI_2);
        assert_eq!(los.psi, 0.0);
    }

    #[test]
    fn coincident_points() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert!(matches!(
            los_from_positions(&p, &p),
            Err(EngagementError::CoincidentPoints(_))
        ));
    }

    #[test]
    fn reconstruct_helix_start() {
        let p_t = Vec3::new(40.0, 30.0, 20.0);
        let (r, los) = los_from_positions(&Vec3::new(0.0, 10.0, 0.0), &p_t).unwrap();
        let s = EngagementState {
            r,
            los,
            lead: LeadAngles::zero(),
        };
        let p_u = reconstruct_uav_position(&p_t, &s);
        assert_abs_diff_eq!(p_u, Vec3::new(0.0, 10.0, 0.0), epsilon = 1e-12);
        let zero = EngagementState { r: 0.0, ..s };
        assert_eq!(reconstruct_uav_position(&p_t, &zero), p_t);
    }

    #[test]
    fn normalization_keeps_velocity() {
        let s = EngagementState {
            r: 3.0,
            los: LosAngles::new(deg(110.0), deg(20.0)),
            lead: LeadAngles::from_degrees(10.0, 40.0),
        };
        let v0 = frames::velocity_from_lead_angles(5.0, &s.lead, &s.los);
        let n = s.normalized();
        assert!(n.los.theta.abs() <= std::f64::consts::FRAC_PI_2);
        let v1 = frames::velocity_from_lead_angles(5.0, &n.lead, &n.los);
        assert_abs_diff_eq!(v0, v1, epsilon = 1e-12);
        assert_abs_diff_eq!(n.los.unit(), s.los.unit(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn reconstruct_round_trip(
            r in 1e-3f64..500.0,
            theta in -1.5f64..1.5,
            psi in -3.1f64..3.1,
            x in -100f64..100.0, y in -100f64..100.0, z in -100f64..100.0,
        ) {
            let p_t = Vec3::new(x, y, z);
            let s = EngagementState { r, los: LosAngles::new(theta, psi), lead: LeadAngles::zero() };
            let p_u = reconstruct_uav_position(&p_t, &s);
            prop_assert!(((p_t - p_u).norm() - r).abs() < 1e-9);
            let (r2, los2) = los_from_positions(&p_u, &p_t).unwrap();
            prop_assert!((r2 - r).abs() < 1e-9);
            prop_assert!((los2.theta - theta).abs() < 1e-9);
            prop_assert!(frames::wrap_angle(los2.psi - psi).abs() < 1e-9);
        }

        #[test]
        fn equilibrium_with_matched_speed(
            v in 0.0f64..30.0,
            r in 0.2f64..300.0,
            theta in -1.4f64..1.4,
            psi in -3.1f64..3.1,
        ) {
            let s = EngagementState { r, los: LosAngles::new(theta, psi), lead: LeadAngles::zero() };
            let u = UavInputs { speed: v, omega_y: 0.0, omega_z: 0.0 };
            let t = ObservedTarget { speed: v, lead: LeadAngles::zero() };
            let d = engagement_derivatives(&s, &u, &t).unwrap();
            prop_assert_eq!(d.r_dot, 0.0);
            prop_assert_eq!(d.theta_dot, 0.0);
            prop_assert_eq!(d.psi_dot, 0.0);
        }
    }
}

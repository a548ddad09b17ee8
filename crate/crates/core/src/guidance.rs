//! Bounded-input guidance: the commanded speed and angular rates, their
//! auxiliary controls, and the fixed-time settling bounds.
//!
//! Guidance only ever sees an [`ObservedTarget`]; target turn rates never
//! reach this module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engagement::{self, EngagementState, LosRates, ObservedTarget, EPS_DEN};
use crate::frames;
use crate::guard::GuardFlags;
use crate::saturation::{saturation_gain, ActuatorState, AngularLimits, SatParams, SpeedEnvelope};
use crate::ValidationError;

/// Guard on `|cos θ_U cos ψ_U|` in the speed auxiliary.
pub const EPS_SIG: f64 = 1e-6;

/// Default bound on every command magnitude.
pub const DEFAULT_COMMAND_LIMIT: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("SigmaSingularity: |cos theta_u cos psi_u| = {0:e}")]
    SigmaSingularity(f64),
    #[error("SaturationDenominator: {channel} gain 1 - (w/w_max)^gamma = {value:e}")]
    SaturationDenominator { channel: &'static str, value: f64 },
    #[error("TanSingularity: |cos theta_u| = {0:e} in the yaw auxiliary")]
    TanSingularity(f64),
    #[error("ThetaUSingularity: |cos theta_u| = {0:e} in the yaw command")]
    ThetaUSingularity(f64),
}

/// Design constants of the three fixed-time channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceParams {
    pub m1: f64,
    pub n1: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub m2: f64,
    pub n2: f64,
    pub alpha2: f64,
    pub beta2: f64,
    pub m3: f64,
    pub n3: f64,
    pub alpha3: f64,
    pub beta3: f64,
}

impl Default for GuidanceParams {
    fn default() -> Self {
        Self {
            m1: 0.1,
            n1: 0.3,
            alpha1: 1.01,
            beta1: 0.99,
            m2: 10.0,
            n2: 2.0,
            alpha2: 1.01,
            beta2: 0.99,
            m3: 10.0,
            n3: 2.0,
            alpha3: 1.01,
            beta3: 0.99,
        }
    }
}

/// One channel's `(M, N, α, β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGains {
    pub m: f64,
    pub n: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ChannelGains {
    /// `M w^α + N w^β` with signed powers.
    pub fn reaching(&self, w: f64) -> f64 {
        self.m * signed_pow(w, self.alpha) + self.n * signed_pow(w, self.beta)
    }

    /// `M̄ = 2^(1−α) M`.
    pub fn m_bar(&self) -> f64 {
        2f64.powf(1.0 - self.alpha) * self.m
    }

    /// Required decrease rate `M̄ V^α + N V^β` for a non-negative candidate.
    pub fn decrease_rate(&self, v: f64) -> f64 {
        let v = v.max(0.0);
        self.m_bar() * v.powf(self.alpha) + self.n * v.powf(self.beta)
    }

    pub fn settling_bound(&self) -> f64 {
        1.0 / (self.m_bar() * (self.alpha - 1.0)) + 1.0 / (self.n * (1.0 - self.beta))
    }
}

impl GuidanceParams {
    pub fn speed(&self) -> ChannelGains {
        ChannelGains {
            m: self.m1,
            n: self.n1,
            alpha: self.alpha1,
            beta: self.beta1,
        }
    }

    pub fn pitch(&self) -> ChannelGains {
        ChannelGains {
            m: self.m2,
            n: self.n2,
            alpha: self.alpha2,
            beta: self.beta2,
        }
    }

    pub fn yaw(&self) -> ChannelGains {
        ChannelGains {
            m: self.m3,
            n: self.n3,
            alpha: self.alpha3,
            beta: self.beta3,
        }
    }

    /// Multiplies every `M_i` and `N_i` by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m1: self.m1 * c,
            n1: self.n1 * c,
            m2: self.m2 * c,
            n2: self.n2 * c,
            m3: self.m3 * c,
            n3: self.n3 * c,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        for (i, ch) in [(1, self.speed()), (2, self.pitch()), (3, self.yaw())] {
            if !(ch.m > 0.0 && ch.m.is_finite()) {
                return Err(ValidationError::new(format!("m{i} must be positive")));
            }
            if !(ch.n > 0.0 && ch.n.is_finite()) {
                return Err(ValidationError::new(format!("n{i} must be positive")));
            }
            if !(ch.alpha > 1.0 && ch.alpha.is_finite()) {
                return Err(ValidationError::new(format!("alpha{i} must exceed 1")));
            }
            if !(ch.beta > 0.0 && ch.beta < 1.0) {
                return Err(ValidationError::new(format!("beta{i} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}

/// `sign(w)·|w|^a`.
pub fn signed_pow(w: f64, a: f64) -> f64 {
    sign0(w) * w.abs().powf(a)
}

/// Sign with `sign(0) = 0`.
pub fn sign0(w: f64) -> f64 {
    if w > 0.0 {
        1.0
    } else if w < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Speed auxiliary `χ`.
pub fn chi(
    s: &EngagementState,
    t: &ObservedTarget,
    env: &SpeedEnvelope,
    p: &GuidanceParams,
) -> Result<f64, GuidanceError> {
    let c = s.lead.theta.cos() * s.lead.psi.cos();
    if c.abs() <= EPS_SIG {
        return Err(GuidanceError::SigmaSingularity(c.abs()));
    }
    let target_closing = t.speed * t.lead.theta.cos() * t.lead.psi.cos();
    let r = s.r.max(0.0);
    let g = p.speed();
    let reach = g.m * r.powf(g.alpha) + g.n * r.powf(g.beta);
    Ok((target_closing - (env.u_max() + env.v0) * c + reach) / c)
}

/// Shifted-speed command `U^c`.
#[allow(clippy::too_many_arguments)]
pub fn commanded_speed(
    u: f64,
    chi_val: f64,
    chi_dot: f64,
    s: &EngagementState,
    p: &GuidanceParams,
    sat: &SatParams,
    env: &SpeedEnvelope,
) -> Result<f64, GuidanceError> {
    let gain = saturation_gain(u, env.u_max(), sat.gamma);
    if gain <= EPS_DEN {
        return Err(GuidanceError::SaturationDenominator {
            channel: "speed",
            value: gain,
        });
    }
    let x = u - chi_val;
    let c = s.lead.theta.cos() * s.lead.psi.cos();
    let num = sat.k1 * sat.k2 * u + chi_dot + x.abs() * c - p.speed().reaching(x);
    Ok(num / (sat.k1 * gain))
}

/// Pitch auxiliary `η`.
pub fn eta(s: &EngagementState, rates: &LosRates, p: &GuidanceParams) -> f64 {
    let psi_u = s.lead.psi;
    rates.psi_dot * s.los.theta.sin() * psi_u.sin() + rates.theta_dot * psi_u.cos()
        - p.pitch().reaching(s.lead.theta)
}

/// Pitch-plane angular-rate command `ω^{z,c}`.
#[allow(clippy::too_many_arguments)]
pub fn commanded_pitch_rate(
    omega_z: f64,
    eta_val: f64,
    eta_dot: f64,
    s: &EngagementState,
    p: &GuidanceParams,
    sat: &SatParams,
    omega_max: f64,
) -> Result<f64, GuidanceError> {
    let gain = saturation_gain(omega_z, omega_max, sat.gamma);
    if gain <= EPS_DEN {
        return Err(GuidanceError::SaturationDenominator {
            channel: "pitch",
            value: gain,
        });
    }
    let z = omega_z - eta_val;
    let num =
        sat.k3 * sat.k4 * omega_z + eta_dot - z.abs() * sign0(s.lead.theta) - p.pitch().reaching(z);
    Ok(num / (sat.k3 * gain))
}

/// Yaw auxiliary `λ`.
pub fn lambda(s: &EngagementState, rates: &LosRates, p: &GuidanceParams) -> Result<f64, GuidanceError> {
    let (sin_tu, cos_tu) = s.lead.theta.sin_cos();
    if cos_tu.abs() <= EPS_DEN {
        return Err(GuidanceError::TanSingularity(cos_tu.abs()));
    }
    let tan_tu = sin_tu / cos_tu;
    let (sin_pu, cos_pu) = s.lead.psi.sin_cos();
    let (sin_l, cos_l) = s.los.theta.sin_cos();
    let inner = rates.psi_dot * tan_tu * cos_pu * sin_l - rates.psi_dot * cos_l
        - rates.theta_dot * tan_tu * sin_pu
        + p.yaw().reaching(s.lead.psi);
    Ok(-cos_tu * inner)
}

/// Yaw-plane angular-rate command `ω^{y,c}`.
#[allow(clippy::too_many_arguments)]
pub fn commanded_yaw_rate(
    omega_y: f64,
    lambda_val: f64,
    lambda_dot: f64,
    s: &EngagementState,
    p: &GuidanceParams,
    sat: &SatParams,
    omega_max: f64,
) -> Result<f64, GuidanceError> {
    let gain = saturation_gain(omega_y, omega_max, sat.gamma);
    if gain <= EPS_DEN {
        return Err(GuidanceError::SaturationDenominator {
            channel: "yaw",
            value: gain,
        });
    }
    let cos_tu = s.lead.theta.cos();
    if cos_tu.abs() <= EPS_DEN {
        return Err(GuidanceError::ThetaUSingularity(cos_tu.abs()));
    }
    let y = omega_y - lambda_val;
    let num = sat.k3 * sat.k4 * omega_y + lambda_dot - y.abs() * sign0(s.lead.psi) / cos_tu
        - p.yaw().reaching(y);
    Ok(num / (sat.k3 * gain))
}

/// Upper bounds on the settling times of the range, pitch and yaw channels, s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettlingBounds {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl SettlingBounds {
    pub fn lead_angle(&self) -> f64 {
        self.t2.max(self.t3)
    }
}

pub fn settling_bounds(p: &GuidanceParams) -> SettlingBounds {
    SettlingBounds {
        t1: p.speed().settling_bound(),
        t2: p.pitch().settling_bound(),
        t3: p.yaw().settling_bound(),
    }
}

/// Backward-difference estimator for one auxiliary signal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuxDerivative {
    prev: Option<(f64, f64)>,
}

impl AuxDerivative {
    pub fn is_warm(&self) -> bool {
        self.prev.is_some()
    }

    pub fn previous(&self) -> Option<f64> {
        self.prev.map(|(v, _)| v)
    }

    /// Returns `(current − prev)/(t − t_prev)`, or 0 on the first call, and
    /// stores the new sample.
    pub fn update(&mut self, current: f64, t: f64) -> f64 {
        let rate = match self.prev {
            Some((v, tp)) if t > tp => (current - v) / (t - tp),
            _ => 0.0,
        };
        self.prev = Some((current, t));
        rate
    }
}

/// Per-run guidance memory: derivative estimators plus the last command of
/// each channel for the hold policy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GuidanceMemory {
    pub chi: AuxDerivative,
    pub eta: AuxDerivative,
    pub lambda: AuxDerivative,
    pub last: Option<(f64, f64, f64)>,
}

/// Commands held over one step plus the diagnostics behind them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GuidanceCommand {
    pub u_cmd: f64,
    pub omega_y_cmd: f64,
    pub omega_z_cmd: f64,
    pub chi: f64,
    pub eta: f64,
    pub lambda: f64,
    /// `U − χ`
    pub x: f64,
    /// `ω_y − λ`
    pub y: f64,
    /// `ω_z − η`
    pub z: f64,
    pub sigma_u: f64,
    pub flags: GuardFlags,
}

fn guard_flag(e: &GuidanceError) -> GuardFlags {
    match e {
        GuidanceError::SigmaSingularity(_) => GuardFlags::SIGMA_SINGULARITY,
        GuidanceError::TanSingularity(_) => GuardFlags::TAN_SINGULARITY,
        GuidanceError::ThetaUSingularity(_) => GuardFlags::THETA_U_SINGULARITY,
        GuidanceError::SaturationDenominator { channel, .. } => match *channel {
            "speed" => GuardFlags::SPEED_DENOMINATOR,
            "pitch" => GuardFlags::PITCH_DENOMINATOR,
            _ => GuardFlags::YAW_DENOMINATOR,
        },
    }
}

/// The guidance computer: evaluates all three channels once per step and
/// holds a channel's previous command whenever one of its guards trips.
#[derive(Debug, Clone)]
pub struct Guidance {
    pub params: GuidanceParams,
    pub sat: SatParams,
    pub env: SpeedEnvelope,
    pub limits: AngularLimits,
    /// Commands are limited to `±command_limit`. The inversion divides by
    /// `1 − (w/w_max)^γ`, so without a limit the command is unbounded as a
    /// state nears its bound and the actuator ODE becomes arbitrarily stiff.
    pub command_limit: f64,
    pub mem: GuidanceMemory,
}

impl Guidance {
    pub fn new(
        params: GuidanceParams,
        sat: SatParams,
        env: SpeedEnvelope,
        limits: AngularLimits,
    ) -> Self {
        Self {
            params,
            sat,
            env,
            limits,
            command_limit: DEFAULT_COMMAND_LIMIT,
            mem: GuidanceMemory::default(),
        }
    }

    pub fn with_command_limit(mut self, limit: f64) -> Self {
        self.command_limit = limit;
        self
    }

    pub fn command(
        &mut self,
        t: f64,
        s: &EngagementState,
        act: &ActuatorState,
        obs: &ObservedTarget,
    ) -> GuidanceCommand {
        let p = &self.params;
        let mut flags = GuardFlags::NONE;
        let held = self.mem.last.unwrap_or((0.0, 0.0, 0.0));
        let rates = engagement::los_rates(s, self.env.unshift_speed(act.u), obs);

        // A non-finite value is treated like a guard trip on its channel.
        let mut flagged = |r: Result<f64, GuidanceError>, on_nan: GuardFlags| match r {
            Ok(v) if v.is_finite() => Some(v),
            Ok(_) => {
                flags |= on_nan;
                None
            }
            Err(e) => {
                flags |= guard_flag(&e);
                None
            }
        };

        // Speed channel.
        let chi_now = flagged(chi(s, obs, &self.env, p), GuardFlags::SIGMA_SINGULARITY);
        let chi_val = chi_now.or(self.mem.chi.previous()).unwrap_or(0.0);
        let chi_dot = chi_now.map_or(0.0, |v| self.mem.chi.update(v, t));
        let u_cmd = chi_now
            .and_then(|c| flagged(
                    commanded_speed(act.u, c, chi_dot, s, p, &self.sat, &self.env),
                    GuardFlags::SPEED_DENOMINATOR,
                ))
            .unwrap_or(held.0);

        // Pitch channel.
        let eta_val = eta(s, &rates, p);
        let eta_dot = self.mem.eta.update(eta_val, t);
        let omega_z_cmd = flagged(
            commanded_pitch_rate(act.omega_z, eta_val, eta_dot, s, p, &self.sat, self.limits.z),
            GuardFlags::PITCH_DENOMINATOR,
        )
        .unwrap_or(held.2);

        // Yaw channel.
        let lambda_now = flagged(lambda(s, &rates, p), GuardFlags::TAN_SINGULARITY);
        let lambda_val = lambda_now.or(self.mem.lambda.previous()).unwrap_or(0.0);
        let lambda_dot = lambda_now.map_or(0.0, |v| self.mem.lambda.update(v, t));
        let omega_y_cmd = lambda_now
            .and_then(|l| {
                flagged(
                    commanded_yaw_rate(act.omega_y, l, lambda_dot, s, p, &self.sat, self.limits.y),
                    GuardFlags::YAW_DENOMINATOR,
                )
            })
            .unwrap_or(held.1);

        let lim = self.command_limit;
        let mut limit = |c: f64| {
            flags.set_if(c.abs() > lim, GuardFlags::COMMAND_LIMIT);
            c.clamp(-lim, lim)
        };
        let (u_cmd, omega_y_cmd, omega_z_cmd) = (limit(u_cmd), limit(omega_y_cmd), limit(omega_z_cmd));

        self.mem.last = Some((u_cmd, omega_y_cmd, omega_z_cmd));
        GuidanceCommand {
            u_cmd,
            omega_y_cmd,
            omega_z_cmd,
            chi: chi_val,
            eta: eta_val,
            lambda: lambda_val,
            x: act.u - chi_val,
            y: act.omega_y - lambda_val,
            z: act.omega_z - eta_val,
            sigma_u: frames::effective_heading(&s.lead),
            flags,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{LeadAngles, LosAngles};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn state(r: f64, theta_u: f64, psi_u: f64) -> EngagementState {
        EngagementState {
            r,
            los: LosAngles::new(0.0, 0.0),
            lead: LeadAngles::new(theta_u, psi_u),
        }
    }

    fn still() -> ObservedTarget {
        ObservedTarget::default()
    }

    #[test]
    fn signed_power_conventions() {
        assert_eq!(sign0(0.0), 0.0);
        assert_eq!(signed_pow(0.0, 0.99), 0.0);
        assert_eq!(signed_pow(-4.0, 0.5), -2.0);
        assert_eq!(signed_pow(9.0, 0.5), 3.0);
    }

    #[test]
    fn chi_degenerate_values() {
        let env = SpeedEnvelope::default();
        let p = GuidanceParams::default();
        assert_eq!(chi(&state(0.0, 0.0, 0.0), &still(), &env, &p).unwrap(), -14.0);
        let balanced = ObservedTarget {
            speed: 14.0,
            lead: LeadAngles::zero(),
        };
        assert_eq!(chi(&state(0.0, 0.0, 0.0), &balanced, &env, &p).unwrap(), 0.0);
    }

    #[test]
    fn chi_helix_start() {
        let s = EngagementState {
            r: 2400f64.sqrt(),
            los: LosAngles::new(0.0, 0.0),
            lead: LeadAngles::from_degrees(45.0, 30.0),
        };
        let t = ObservedTarget {
            speed: 25.0,
            lead: LeadAngles::from_degrees(15.0, 15.0),
        };
        let v = chi(&s, &t, &SpeedEnvelope::default(), &GuidanceParams::default()).unwrap();
        assert_relative_eq!(v, 55.49150344283203, max_relative = 1e-12);
    }

    #[test]
    fn chi_sigma_guard() {
        let s = state(10.0, 0.0, std::f64::consts::FRAC_PI_2);
        let e = chi(&s, &still(), &SpeedEnvelope::default(), &GuidanceParams::default());
        assert!(matches!(e, Err(GuidanceError::SigmaSingularity(_))));
    }

    #[test]
    fn speed_command_values() {
        let p = GuidanceParams::default();
        let sat = SatParams::default();
        let env = SpeedEnvelope::default();
        let s = state(1.0, 0.0, 0.0);
        assert_eq!(commanded_speed(0.0, 0.0, 0.0, &s, &p, &sat, &env).unwrap(), 0.0);
        let v = commanded_speed(0.0, -1.0, 0.0, &s, &p, &sat, &env).unwrap();
        assert_abs_diff_eq!(v, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn speed_command_denominator_guard() {
        let e = commanded_speed(
            11.0,
            0.0,
            0.0,
            &state(1.0, 0.0, 0.0),
            &GuidanceParams::default(),
            &SatParams::default(),
            &SpeedEnvelope::default(),
        );
        assert!(matches!(e, Err(GuidanceError::SaturationDenominator { channel: "speed", .. })));
    }

    #[test]
    fn eta_values() {
        let p = GuidanceParams::default();
        let zero = LosRates::default();
        assert_eq!(eta(&state(5.0, 0.0, 0.0), &zero, &p), 0.0);
        let pitching = LosRates {
            theta_dot: 0.1,
            psi_dot: 0.0,
        };
        assert_abs_diff_eq!(eta(&state(5.0, 0.0, 0.0), &pitching, &p), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(eta(&state(5.0, 1.0, 0.0), &zero, &p), -12.0, epsilon = 1e-12);
    }

    #[test]
    fn pitch_command_values() {
        let p = GuidanceParams::default();
        let sat = SatParams::default();
        assert_eq!(
            commanded_pitch_rate(0.0, 0.0, 0.0, &state(5.0, 0.2, 0.0), &p, &sat, 3.0).unwrap(),
            0.0
        );
        let v = commanded_pitch_rate(0.0, -1.0, 0.0, &state(5.0, 0.2, 0.0), &p, &sat, 3.0).unwrap();
        assert_abs_diff_eq!(v, -13.0, epsilon = 1e-12);
        // sign(0) drops the |z| term
        let v = commanded_pitch_rate(0.0, -1.0, 0.0, &state(5.0, 0.0, 0.0), &p, &sat, 3.0).unwrap();
        assert_abs_diff_eq!(v, -12.0, epsilon = 1e-12);
    }

    #[test]
    fn lambda_values() {
        let p = GuidanceParams::default();
        let zero = LosRates::default();
        assert_eq!(lambda(&state(5.0, 0.0, 0.0), &zero, &p).unwrap(), 0.0);
        let yawing = LosRates {
            theta_dot: 0.0,
            psi_dot: 0.2,
        };
        assert_abs_diff_eq!(lambda(&state(5.0, 0.0, 0.0), &yawing, &p).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda(&state(5.0, 0.0, 1.0), &zero, &p).unwrap(), -12.0, epsilon = 1e-12);
        let e = lambda(&state(5.0, std::f64::consts::FRAC_PI_2, 0.0), &zero, &p);
        assert!(matches!(e, Err(GuidanceError::TanSingularity(_))));
    }

    #[test]
    fn yaw_command_values() {
        let p = GuidanceParams::default();
        let sat = SatParams::default();
        assert_eq!(
            commanded_yaw_rate(0.0, 0.0, 0.0, &state(5.0, 0.0, 0.3), &p, &sat, 3.0).unwrap(),
            0.0
        );
        let v = commanded_yaw_rate(0.0, -1.0, 0.0, &state(5.0, 0.0, 0.3), &p, &sat, 3.0).unwrap();
        assert_abs_diff_eq!(v, -13.0, epsilon = 1e-12);
        let e = commanded_yaw_rate(0.0, -1.0, 0.0, &state(5.0, std::f64::consts::FRAC_PI_2 - 1e-7, 0.3), &p, &sat, 3.0);
        assert!(matches!(e, Err(GuidanceError::ThetaUSingularity(_))));
    }

    #[test]
    fn default_settling_bounds() {
        let b = settling_bounds(&GuidanceParams::default());
        assert_abs_diff_eq!(b.t1, 1340.2888833900522, epsilon = 1e-9);
        assert_abs_diff_eq!(b.t2, 60.06955550056719, epsilon = 1e-9);
        assert_eq!(b.t2, b.t3);
        assert_abs_diff_eq!(b.t1, 1340.3, epsilon = 0.05);
        assert_abs_diff_eq!(b.t2, 60.07, epsilon = 0.005);
    }

    #[test]
    fn settling_bound_first_term_in_alpha() {
        // M̄(α−1) = M(α−1)/2^(α−1) peaks at α = 1 + 1/ln 2, so the first term
        // falls until there and then grows without bound.
        let first = |a: f64| {
            let p = GuidanceParams {
                alpha1: a,
                ..Default::default()
            };
            settling_bounds(&p).t1 - 1.0 / (0.3 * 0.01)
        };
        let a_star = 1.0 + 1.0 / std::f64::consts::LN_2;
        assert!(first(1.01) > first(1.2) && first(1.2) > first(a_star));
        assert!(first(a_star) < first(a_star + 0.1) && first(a_star) < first(a_star - 0.1));
        assert_abs_diff_eq!(first(a_star), std::f64::consts::E * std::f64::consts::LN_2 / 0.1, epsilon = 1e-9);
        assert!(first(60.0) > 1e15);
    }

    #[test]
    fn validation_messages() {
        let p = GuidanceParams {
            alpha1: 0.5,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().to_string(), "alpha1 must exceed 1");
        let p = GuidanceParams {
            beta3: 1.0,
            ..Default::default()
        };
        assert_eq!(p.validate().unwrap_err().to_string(), "beta3 must lie in (0, 1)");
        assert!(GuidanceParams::default().validate().is_ok());
    }

    #[test]
    fn aux_derivative_estimates() {
        let mut d = AuxDerivative::default();
        assert_eq!(d.update(3.0, 0.0), 0.0);
        assert_eq!(d.update(3.0, 0.001), 0.0);
        let mut d = AuxDerivative::default();
        let mut last = 0.0;
        for k in 0..100 {
            let t = k as f64 * 1e-3;
            last = d.update(2.0 * t, t);
        }
        assert_abs_diff_eq!(last, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn cold_start_command_is_finite() {
        let mut g = Guidance::new(
            GuidanceParams::default(),
            SatParams::default(),
            SpeedEnvelope::default(),
            AngularLimits::default(),
        );
        let s = EngagementState {
            r: 2400f64.sqrt(),
            los: LosAngles::new(0.42, 0.46),
            lead: LeadAngles::from_degrees(45.0, 30.0),
        };
        let obs = ObservedTarget {
            speed: 25.0,
            lead: LeadAngles::from_degrees(15.0, 15.0),
        };
        let c = g.command(0.0, &s, &ActuatorState::default(), &obs);
        assert!(c.u_cmd.is_finite() && c.omega_y_cmd.is_finite() && c.omega_z_cmd.is_finite());
        assert!(c.flags.is_empty());
        assert!(g.mem.chi.is_warm());
    }

    #[test]
    fn guard_trip_holds_channel() {
        let mut g = Guidance::new(
            GuidanceParams::default(),
            SatParams::default(),
            SpeedEnvelope::default(),
            AngularLimits::default(),
        );
        let obs = ObservedTarget::default();
        let first = g.command(0.0, &state(10.0, 0.1, 0.2), &ActuatorState::default(), &obs);
        let tripped = g.command(
            0.001,
            &state(10.0, 0.1, std::f64::consts::FRAC_PI_2),
            &ActuatorState::default(),
            &obs,
        );
        assert!(tripped.flags.contains(GuardFlags::SIGMA_SINGULARITY));
        assert!(tripped.flags.held_command());
        assert_eq!(tripped.u_cmd, first.u_cmd);
        assert_eq!(tripped.chi, first.chi);
    }

    proptest! {
        #[test]
        fn signed_pow_is_odd(w in -50f64..50.0, a in 0.1f64..3.0) {
            prop_assert_eq!(signed_pow(-w, a), -signed_pow(w, a));
        }

        #[test]
        fn commands_finite_inside_domain(
            r in 0.1f64..300.0,
            tu in -1.5f64..1.5,
            pu in -1.5f64..1.5,
            th in -1.5f64..1.5,
            u in -10.9f64..10.9,
            wy in -2.99f64..2.99,
            wz in -2.99f64..2.99,
        ) {
            let mut g = Guidance::new(
                GuidanceParams::default(),
                SatParams::default(),
                SpeedEnvelope::default(),
                AngularLimits::default(),
            );
            let s = EngagementState { r, los: LosAngles::new(th, 0.3), lead: LeadAngles::new(tu, pu) };
            let obs = ObservedTarget { speed: 15.0, lead: LeadAngles::new(0.2, -0.1) };
            let c = g.command(0.0, &s, &ActuatorState { u, omega_y: wy, omega_z: wz }, &obs);
            prop_assert!(c.u_cmd.is_finite() && c.omega_y_cmd.is_finite() && c.omega_z_cmd.is_finite());
        }
    }
}

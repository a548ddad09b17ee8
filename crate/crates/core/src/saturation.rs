//! Smooth input-saturation models for the linear speed and the two angular
//! velocities.
//!
//! Each channel is an auxiliary first-order system
//!
//! ```text
//! ẇ = K [1 − (w / w_max)^γ] w_c − K K' w
//! ```
//!
//! whose state stays strictly inside `(-w_max, w_max)` for any bounded
//! command `w_c`. The speed channel runs on the shifted coordinate
//! `U = V_U − (V0 + V_max)/2`, which turns the asymmetric envelope
//! `V0 ≤ V_U < V_max` into the symmetric one `|U| < U_max`.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::ValidationError;

/// Margin kept between a state and its bound before exponentiation.
pub const BOUND_MARGIN: f64 = 1e-12;

/// Linear-speed limits of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEnvelope {
    pub v0: f64,
    pub v_max: f64,
}

impl SpeedEnvelope {
    pub fn new(v0: f64, v_max: f64) -> Result<Self, ValidationError> {
        let env = Self { v0, v_max };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.v0.is_finite() && self.v_max.is_finite()) {
            return Err(ValidationError::new("speed envelope must be finite"));
        }
        if self.v0 < 0.0 {
            return Err(ValidationError::new("v0 must be non-negative"));
        }
        if self.v0 >= self.v_max {
            return Err(ValidationError::new("v0 must be below v_max"));
        }
        Ok(())
    }

    /// Half-width of the envelope, `(V_max − V0)/2`.
    pub fn u_max(&self) -> f64 {
        0.5 * (self.v_max - self.v0)
    }

    /// Mid-point of the envelope, `(V0 + V_max)/2`.
    pub fn shift(&self) -> f64 {
        0.5 * (self.v0 + self.v_max)
    }

    pub fn shift_speed(&self, v: f64) -> f64 {
        v - self.shift()
    }

    pub fn unshift_speed(&self, u: f64) -> f64 {
        u + self.shift()
    }
}

impl Default for SpeedEnvelope {
    fn default() -> Self {
        Self { v0: 3.0, v_max: 25.0 }
    }
}

/// Angular-velocity limits for the yaw-plane (`y`) and pitch-plane (`z`)
/// channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularLimits {
    pub y: f64,
    pub z: f64,
}

impl AngularLimits {
    pub fn uniform(omega_max: f64) -> Self {
        Self {
            y: omega_max,
            z: omega_max,
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !(self.y > 0.0 && self.z > 0.0 && self.y.is_finite() && self.z.is_finite()) {
            return Err(ValidationError::new("omega_max must be positive"));
        }
        Ok(())
    }
}

impl Default for AngularLimits {
    fn default() -> Self {
        Self::uniform(3.0)
    }
}

/// Gains of the saturation models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    /// Even exponent, at least 2.
    pub gamma: u32,
}

impl Default for SatParams {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 0.5,
            k3: 1.0,
            k4: 0.5,
            gamma: 2,
        }
    }
}

impl SatParams {
    pub fn validate(&self) -> Result<(), ValidationError> {
        for (name, k) in [("k1", self.k1), ("k2", self.k2), ("k3", self.k3), ("k4", self.k4)] {
            if !(k > 0.0 && k.is_finite()) {
                return Err(ValidationError::new(format!("{name} must be positive")));
            }
        }
        if self.gamma < 2 {
            return Err(ValidationError::new("gamma must be at least 2"));
        }
        if !self.gamma.is_multiple_of(2) {
            return Err(ValidationError::new("gamma must be even"));
        }
        Ok(())
    }
}

/// Internal states of the saturation models.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuatorState {
    /// Shifted speed `U`, m/s.
    pub u: f64,
    pub omega_y: f64,
    pub omega_z: f64,
}

impl ActuatorState {
    pub fn within(&self, env: &SpeedEnvelope, limits: &AngularLimits) -> bool {
        self.u.abs() < env.u_max()
            && self.omega_y.abs() < limits.y
            && self.omega_z.abs() < limits.z
    }
}

/// `(w / w_max)^γ` with `w` held at least [`BOUND_MARGIN`] inside the bound.
pub fn saturation_ratio(w: f64, w_max: f64, gamma: u32) -> f64 {
    let edge = w_max - BOUND_MARGIN;
    (w.clamp(-edge, edge) / w_max).powi(gamma as i32)
}

/// `1 − (w / w_max)^γ`, the command gain of a saturation channel.
pub fn saturation_gain(w: f64, w_max: f64, gamma: u32) -> f64 {
    1.0 - saturation_ratio(w, w_max, gamma)
}

fn channel_rate(w: f64, w_cmd: f64, gain: f64, damping: f64, w_max: f64, gamma: u32) -> f64 {
    if w.abs() > w_max {
        // Only a discrete step lands here. Clamping the bracket would zero
        // the drive and leave the state stranded, so keep its magnitude and
        // point it back inside. Continuous at the bound.
        warn!("saturation state {w} outside ±{w_max}");
        let drive = gain * ((w / w_max).powi(gamma as i32) - 1.0) * w_cmd.abs();
        return -w.signum() * drive - gain * damping * w;
    }
    gain * saturation_gain(w, w_max, gamma) * w_cmd - gain * damping * w
}

/// `U̇` of the linear-speed saturation model.
pub fn speed_sat_derivative(u: f64, u_cmd: f64, p: &SatParams, env: &SpeedEnvelope) -> f64 {
    channel_rate(u, u_cmd, p.k1, p.k2, env.u_max(), p.gamma)
}

/// `(ω̇_y, ω̇_z)` of the angular-velocity saturation model.
pub fn omega_sat_derivative(
    omega: (f64, f64),
    omega_cmd: (f64, f64),
    p: &SatParams,
    limits: &AngularLimits,
) -> (f64, f64) {
    (
        channel_rate(omega.0, omega_cmd.0, p.k3, p.k4, limits.y, p.gamma),
        channel_rate(omega.1, omega_cmd.1, p.k3, p.k4, limits.z, p.gamma),
    )
}

/// Largest `|w|` reachable under commands bounded by `xi`:
/// `w_max [xi / (xi + K' w_max)]^(1/γ)`.
pub fn confinement_bound(xi: f64, damping: f64, w_max: f64, gamma: u32) -> f64 {
    w_max * (xi / (xi + damping * w_max)).powf(1.0 / gamma as f64)
}

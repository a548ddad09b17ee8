//! Pseudo-target motion: inertial kinematics driven by speed and turn-rate
//! profiles, and the built-in path families.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engagement::ObservedTarget;
use crate::frames::{self, LeadAngles, LosAngles, Vec3, MIN_SPEED};

/// Guard on `|cos γ_T|`.
pub const EPS_VERTICAL: f64 = 1e-6;

pub const SCENARIOS: [&str; 5] = ["helix_v3", "helix_v0", "scurve", "timevarying", "straightline"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TargetError {
    #[error("VerticalHeading: |cos gamma_t| = {0:e}")]
    VerticalHeading(f64),
    #[error("UnknownScenario: {0:?} (expected one of helix_v3, helix_v0, scurve, timevarying, straightline)")]
    UnknownScenario(String),
    #[error("invalid profile table: {0}")]
    Table(String),
}

/// Inertial pose of the target.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TargetState {
    pub position: Vec3,
    /// Heading azimuth χ_T, rad.
    pub azimuth: f64,
    /// Heading elevation γ_T, rad.
    pub elevation: f64,
}

impl TargetState {
    pub fn heading(&self) -> Vec3 {
        frames::direction(self.elevation, self.azimuth)
    }

    /// Elevation back into `[-π/2, π/2]`, azimuth into `(-π, π]`.
    pub fn normalized(self) -> Self {
        let (elevation, azimuth, _) = frames::normalize_direction(self.elevation, self.azimuth);
        Self {
            elevation,
            azimuth,
            ..self
        }
    }
}

/// Speed and turn rates at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetInputs {
    pub speed: f64,
    pub omega_y: f64,
    pub omega_z: f64,
}

/// Alternating turn-rate schedule: `+rate` on `[0, p)`, `−rate` on `[p, 2p)`,
/// and so on, applied to both channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub period: f64,
    pub rate: f64,
}

impl Schedule {
    pub fn at(&self, t: f64) -> f64 {
        let k = (t / self.period).floor() as i64;
        if k.rem_euclid(2) == 0 {
            self.rate
        } else {
            -self.rate
        }
    }
}

/// Tabulated `(t, V_T, ω_y, ω_z)` rows, linearly interpolated and held
/// constant outside the covered interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct ProfileTable {
    rows: Vec<[f64; 4]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    rows: Vec<[f64; 4]>,
}

impl TryFrom<RawTable> for ProfileTable {
    type Error = TargetError;
    fn try_from(raw: RawTable) -> Result<Self, TargetError> {
        Self::new(raw.rows)
    }
}

#[derive(Deserialize)]
struct TableRow {
    t: f64,
    v_t: f64,
    omega_y: f64,
    omega_z: f64,
}

impl ProfileTable {
    pub fn new(rows: Vec<[f64; 4]>) -> Result<Self, TargetError> {
        if rows.is_empty() {
            return Err(TargetError::Table("no rows".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(TargetError::Table(format!("row {i} is not finite")));
            }
            if row[1] < 0.0 {
                return Err(TargetError::Table(format!("row {i} has negative speed")));
            }
            if i > 0 && row[0] <= rows[i - 1][0] {
                return Err(TargetError::Table(format!("row {i}: t must increase strictly")));
            }
        }
        Ok(Self { rows })
    }

    /// Reads a CSV with header `t,v_t,omega_y,omega_z`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, TargetError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<TableRow>() {
            let r = rec.map_err(|e| TargetError::Table(e.to_string()))?;
            rows.push([r.t, r.v_t, r.omega_y, r.omega_z]);
        }
        Self::new(rows)
    }

    pub fn rows(&self) -> &[[f64; 4]] {
        &self.rows
    }

    pub fn end_time(&self) -> f64 {
        self.rows[self.rows.len() - 1][0]
    }

    pub fn at(&self, t: f64) -> TargetInputs {
        let rows = &self.rows;
        let pick = |r: &[f64; 4]| TargetInputs {
            speed: r[1],
            omega_y: r[2],
            omega_z: r[3],
        };
        if t <= rows[0][0] {
            return pick(&rows[0]);
        }
        if t >= self.end_time() {
            return pick(&rows[rows.len() - 1]);
        }
        let i = rows.partition_point(|r| r[0] <= t);
        let (a, b) = (&rows[i - 1], &rows[i]);
        let w = (t - a[0]) / (b[0] - a[0]);
        let lerp = |k: usize| a[k] + w * (b[k] - a[k]);
        TargetInputs {
            speed: lerp(1),
            omega_y: lerp(2),
            omega_z: lerp(3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetProfile {
    Constant {
        speed: f64,
        omega_y: f64,
        omega_z: f64,
    },
    /// `ω_y = sin t`, `ω_z = cos t`.
    Helix { speed: f64 },
    Piecewise { speed: f64, schedule: Schedule },
    /// `V_T = scale·[tanh(t²) + (1 − e^{−t}) sin t]` with a turn schedule.
    TimeVaryingSpeed { scale: f64, schedule: Schedule },
    Table { table: ProfileTable },
}

impl TargetProfile {
    pub fn inputs(&self, t: f64) -> TargetInputs {
        match self {
            Self::Constant {
                speed,
                omega_y,
                omega_z,
            } => TargetInputs {
                speed: *speed,
                omega_y: *omega_y,
                omega_z: *omega_z,
            },
            Self::Helix { speed } => TargetInputs {
                speed: *speed,
                omega_y: t.sin(),
                omega_z: t.cos(),
            },
            Self::Piecewise { speed, schedule } => {
                let w = schedule.at(t);
                TargetInputs {
                    speed: *speed,
                    omega_y: w,
                    omega_z: w,
                }
            }
            Self::TimeVaryingSpeed { scale, schedule } => {
                let w = schedule.at(t);
                TargetInputs {
                    speed: scale * ((t * t).tanh() + (1.0 - (-t).exp()) * t.sin()),
                    omega_y: w,
                    omega_z: w,
                }
            }
            Self::Table { table } => table.at(t),
        }
    }

    pub fn validate(&self) -> Result<(), crate::ValidationError> {
        use crate::ValidationError as E;
        let fin = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(E::new(format!("target {what} must be finite")))
            }
        };
        match self {
            Self::Constant {
                speed,
                omega_y,
                omega_z,
            } => {
                fin(*omega_y, "omega_y")?;
                fin(*omega_z, "omega_z")?;
                nonneg(*speed)
            }
            Self::Helix { speed } => nonneg(*speed),
            Self::Piecewise { speed, schedule } => {
                schedule_ok(schedule)?;
                nonneg(*speed)
            }
            Self::TimeVaryingSpeed { scale, schedule } => {
                schedule_ok(schedule)?;
                // tanh(t²) + (1 − e^{−t}) sin t is non-negative for t ≥ 0
                nonneg(*scale)
            }
            Self::Table { .. } => Ok(()),
        }
    }
}

fn nonneg(speed: f64) -> Result<(), crate::ValidationError> {
    if speed >= 0.0 && speed.is_finite() {
        Ok(())
    } else {
        Err(crate::ValidationError::new("target speed must be non-negative"))
    }
}

fn schedule_ok(s: &Schedule) -> Result<(), crate::ValidationError> {
    if s.period > 0.0 && s.period.is_finite() && s.rate.is_finite() {
        Ok(())
    } else {
        Err(crate::ValidationError::new("schedule period must be positive"))
    }
}

/// Inertial rates of the target pose.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetRates {
    pub velocity: Vec3,
    pub elevation_dot: f64,
    pub azimuth_dot: f64,
}

/// `ṗ = V_T (cγ cχ, cγ sχ, sγ)`, `γ̇ = ω_z`, `χ̇ = ω_y / cos γ`.
pub fn target_derivatives(
    ts: &TargetState,
    profile: &TargetProfile,
    t: f64,
) -> Result<TargetRates, TargetError> {
    let c = ts.elevation.cos();
    if c.abs() <= EPS_VERTICAL {
        return Err(TargetError::VerticalHeading(c.abs()));
    }
    Ok(rates_with(ts, &profile.inputs(t), c))
}

/// As [`target_derivatives`] but with `cos γ` held at the guard; the flag
/// reports whether it fired.
pub fn guarded_target_derivatives(ts: &TargetState, profile: &TargetProfile, t: f64) -> (TargetRates, bool) {
    let c = ts.elevation.cos();
    let tripped = c.abs() <= EPS_VERTICAL;
    let c = if tripped { EPS_VERTICAL.copysign(c) } else { c };
    (rates_with(ts, &profile.inputs(t), c), tripped)
}

fn rates_with(ts: &TargetState, u: &TargetInputs, cos_elev: f64) -> TargetRates {
    TargetRates {
        velocity: ts.heading() * u.speed,
        elevation_dot: u.omega_z,
        azimuth_dot: u.omega_y / cos_elev,
    }
}

/// Speed and lead angles of an inertial target velocity against `los`. A
/// stationary target has zero lead angles.
pub fn observe_velocity(v: &Vec3, los: &LosAngles) -> ObservedTarget {
    match frames::lead_angles_from_velocity(v, los) {
        Ok((lead, speed)) => ObservedTarget { speed, lead },
        Err(_) => ObservedTarget {
            speed: 0.0,
            lead: LeadAngles::zero(),
        },
    }
}

pub fn observed_target(ts: &TargetState, profile: &TargetProfile, t: f64, los: &LosAngles) -> ObservedTarget {
    let speed = profile.inputs(t).speed;
    if speed.abs() < MIN_SPEED {
        return ObservedTarget::default();
    }
    observe_velocity(&(ts.heading() * speed), los)
}

/// Frame in which the initial target heading is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadingReference {
    /// Inertial flight-path elevation/azimuth.
    #[default]
    Inertial,
    /// Lead angles relative to the initial LOS.
    Los,
}

/// Initial target heading, rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialHeading {
    pub reference: HeadingReference,
    pub elevation: f64,
    pub azimuth: f64,
}

impl InitialHeading {
    /// Initial pose for a target at `position` seen along `los`.
    pub fn resolve(&self, position: Vec3, los: &LosAngles) -> TargetState {
        let (elevation, azimuth) = match self.reference {
            HeadingReference::Inertial => (self.elevation, self.azimuth),
            HeadingReference::Los => {
                let lead = LeadAngles::new(self.elevation, self.azimuth);
                let v = frames::velocity_from_lead_angles(1.0, &lead, los);
                let d = frames::direction_angles(&v, 1.0);
                (d.theta, d.psi)
            }
        };
        TargetState {
            position,
            azimuth,
            elevation,
        }
        .normalized()
    }
}

/// Turn-rate schedule used by the S-curve and time-varying families.
pub const SCURVE_SCHEDULE: Schedule = Schedule {
    period: 5.0,
    rate: 0.2,
};

pub fn builtin_profile(name: &str) -> Result<TargetProfile, TargetError> {
    match name {
        "helix_v3" | "helix_v0" => Ok(TargetProfile::Helix { speed: 25.0 }),
        "scurve" => Ok(TargetProfile::Piecewise {
            speed: 15.0,
            schedule: SCURVE_SCHEDULE,
        }),
        "timevarying" => Ok(TargetProfile::TimeVaryingSpeed {
            scale: 7.5,
            schedule: SCURVE_SCHEDULE,
        }),
        "straightline" => Ok(TargetProfile::Constant {
            speed: 15.0,
            omega_y: 0.0,
            omega_z: 0.0,
        }),
        other => Err(TargetError::UnknownScenario(other.to_string())),
    }
}

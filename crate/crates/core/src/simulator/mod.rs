//! Fixed-step closed-loop simulation.
//!
//! Each guidance period the commands are computed once from the period-start
//! state and held while classical RK4 advances the combined state, optionally
//! in several substeps. The combined state is the five engagement states,
//! the three actuator states and the target pose; the UAV's inertial
//! position is integrated alongside as a passive observer so the relative
//! states can be cross-checked against positions.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engagement::{self, EngagementState, ObservedTarget, UavInputs, R_MIN};
use crate::frames::{self, LeadAngles, Vec3};
use crate::guard::GuardFlags;
use crate::guidance::{settling_bounds, Guidance, GuidanceCommand, GuidanceParams, SettlingBounds};
use crate::saturation::{
    omega_sat_derivative, speed_sat_derivative, ActuatorState, AngularLimits, SatParams, SpeedEnvelope,
};
use crate::targets::{
    self, guarded_target_derivatives, observe_velocity, HeadingReference, InitialHeading, TargetError,
    TargetProfile, TargetState,
};
use crate::ValidationError;

pub mod audit;

pub use audit::{lyapunov_audit, sigma_dot_audit, CandidateAudit, LyapunovReport};

pub const STATE_DIM: usize = 16;
type StateVec = SVector<f64, STATE_DIM>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("NonFiniteState at t = {t} s: {state}")]
    NonFiniteState { t: f64, state: String },
    #[error("ValidationError: {0}")]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Target(#[from] TargetError),
    #[error(transparent)]
    Engagement(#[from] engagement::EngagementError),
    #[error("UndefinedAtZeroSigma: the effective heading is zero")]
    UndefinedAtZeroSigma,
}

/// Convergence thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// m
    pub r_capture: f64,
    /// rad
    pub angle_tol: f64,
    /// s
    pub persistence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            r_capture: 0.5,
            angle_tol: 0.5f64.to_radians(),
            persistence: 1.0,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub target: TargetProfile,
    pub target_position: Vec3,
    pub target_heading: InitialHeading,
    pub uav_position: Vec3,
    /// UAV lead angles relative to the initial LOS.
    pub uav_lead: LeadAngles,
    pub initial_actuator: ActuatorState,
    pub envelope: SpeedEnvelope,
    pub omega_max: AngularLimits,
    pub sat: SatParams,
    pub guidance: GuidanceParams,
    /// Guidance period, s.
    pub dt: f64,
    pub t_end: f64,
    /// RK4 substeps per guidance period.
    pub substeps: u32,
    /// Bound on every command magnitude.
    pub command_limit: f64,
    pub tolerances: Tolerances,
}

/// One row of the straight-line batch: UAV start and its lead angles in
/// degrees as `(ψ_U, θ_U)`.
pub struct StartRow {
    pub id: &'static str,
    pub position: [f64; 3],
    pub psi_u_deg: f64,
    pub theta_u_deg: f64,
}

pub const STRAIGHT_LINE_STARTS: [StartRow; 5] = [
    StartRow { id: "S1", position: [0.0, 0.0, 0.0], psi_u_deg: 45.0, theta_u_deg: 30.0 },
    StartRow { id: "S2", position: [100.0, 0.0, 0.0], psi_u_deg: 45.0, theta_u_deg: 60.0 },
    StartRow { id: "S3", position: [100.0, 0.0, 120.0], psi_u_deg: 60.0, theta_u_deg: 30.0 },
    StartRow { id: "S4", position: [50.0, 120.0, 0.0], psi_u_deg: 30.0, theta_u_deg: 30.0 },
    StartRow { id: "S5", position: [0.0, 120.0, 0.0], psi_u_deg: 30.0, theta_u_deg: 45.0 },
];

pub const TARGET_START: [f64; 3] = [40.0, 30.0, 20.0];

impl Scenario {
    /// A built-in scenario with the published defaults. `straightline` is
    /// row S1 of the straight-line batch.
    pub fn builtin(name: &str) -> Result<Self, TargetError> {
        let target = targets::builtin_profile(name)?;
        let (uav, psi_deg, theta_deg, v0) = match name {
            "helix_v3" => ([0.0, 10.0, 0.0], 30.0, 45.0, 3.0),
            "helix_v0" => ([0.0, 10.0, 0.0], 30.0, 45.0, 0.0),
            "scurve" => ([100.0, 0.0, 0.0], 45.0, 45.0, 3.0),
            "timevarying" => ([100.0, 0.0, 0.0], 30.0, 45.0, 3.0),
            _ => {
                let r = &STRAIGHT_LINE_STARTS[0];
                (r.position, r.psi_u_deg, r.theta_u_deg, 3.0)
            }
        };
        Ok(Self {
            name: name.to_string(),
            target,
            target_position: Vec3::from(TARGET_START),
            target_heading: InitialHeading {
                reference: HeadingReference::Inertial,
                elevation: 15f64.to_radians(),
                azimuth: 15f64.to_radians(),
            },
            uav_position: Vec3::from(uav),
            uav_lead: LeadAngles::from_degrees(theta_deg, psi_deg),
            initial_actuator: ActuatorState::default(),
            envelope: SpeedEnvelope { v0, v_max: 25.0 },
            omega_max: AngularLimits::default(),
            sat: SatParams::default(),
            guidance: GuidanceParams::default(),
            dt: 1e-3,
            t_end: 20.0,
            substeps: 1,
            command_limit: crate::guidance::DEFAULT_COMMAND_LIMIT,
            tolerances: Tolerances::default(),
        })
    }

    /// The straight-line scenario started from one batch row.
    pub fn straight_line_start(row: &StartRow) -> Self {
        let mut s = Self::builtin("straightline").expect("builtin");
        s.name = format!("straightline_{}", row.id);
        s.uav_position = Vec3::from(row.position);
        s.uav_lead = LeadAngles::from_degrees(row.theta_u_deg, row.psi_u_deg);
        s
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.envelope.validate()?;
        self.omega_max.validate()?;
        self.sat.validate()?;
        self.guidance.validate()?;
        self.target.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ValidationError::new("dt must be positive"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(ValidationError::new("t_end must be non-negative"));
        }
        if self.command_limit.is_nan() || self.command_limit <= 0.0 {
            return Err(ValidationError::new("command_limit must be positive"));
        }
        if self.substeps == 0 {
            return Err(ValidationError::new("integration_substeps must be at least 1"));
        }
        let tol = &self.tolerances;
        if !(tol.r_capture > 0.0 && tol.angle_tol > 0.0 && tol.persistence >= 0.0) {
            return Err(ValidationError::new("tolerances must be positive"));
        }
        if let TargetProfile::Table { table } = &self.target {
            if table.end_time() < self.t_end {
                return Err(ValidationError::new("target table must cover t_end"));
            }
        }
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        if !finite(&self.uav_position) || !finite(&self.target_position) {
            return Err(ValidationError::new("positions must be finite"));
        }
        if (self.target_position - self.uav_position).norm() < engagement::MIN_SEPARATION {
            return Err(ValidationError::new("UAV and target must start apart"));
        }
        if self.uav_lead.theta.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(ValidationError::new("initial theta_u must lie in (-90, 90) degrees"));
        }
        if !self.initial_actuator.within(&self.envelope, &self.omega_max) {
            return Err(ValidationError::new("initial actuator state must lie inside its bounds"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn settling_bounds(&self) -> SettlingBounds {
        settling_bounds(&self.guidance)
    }

    pub fn new_guidance(&self) -> Guidance {
        Guidance::new(self.guidance, self.sat, self.envelope, self.omega_max).with_command_limit(self.command_limit)
    }

    pub fn initial_state(&self) -> Result<SimState, SimError> {
        let (r, los) = engagement::los_from_positions(&self.uav_position, &self.target_position)?;
        let target = self.target_heading.resolve(self.target_position, &los);
        Ok(SimState {
            eng: EngagementState {
                r,
                los,
                lead: self.uav_lead,
            }
            .normalized(),
            act: self.initial_actuator,
            target,
            uav_position: self.uav_position,
        })
    }
}

/// Combined closed-loop state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimState {
    pub eng: EngagementState,
    pub act: ActuatorState,
    pub target: TargetState,
    /// Integrated inertial UAV position; feeds nothing back.
    pub uav_position: Vec3,
}

impl SimState {
    fn to_vec(self) -> StateVec {
        let e = &self.eng;
        let p = &self.target.position;
        let q = &self.uav_position;
        StateVec::from_column_slice(&[
            e.r,
            e.los.theta,
            e.los.psi,
            e.lead.theta,
            e.lead.psi,
            self.act.u,
            self.act.omega_y,
            self.act.omega_z,
            p.x,
            p.y,
            p.z,
            self.target.elevation,
            self.target.azimuth,
            q.x,
            q.y,
            q.z,
        ])
    }

    fn from_vec(v: &StateVec) -> Self {
        Self {
            eng: EngagementState {
                r: v[0],
                los: frames::LosAngles::new(v[1], v[2]),
                lead: LeadAngles::new(v[3], v[4]),
            },
            act: ActuatorState {
                u: v[5],
                omega_y: v[6],
                omega_z: v[7],
            },
            target: TargetState {
                position: Vec3::new(v[8], v[9], v[10]),
                elevation: v[11],
                azimuth: v[12],
            },
            uav_position: Vec3::new(v[13], v[14], v[15]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|c| c.is_finite())
    }

    /// UAV position rebuilt from the target position and relative state.
    pub fn reconstructed_uav(&self) -> Vec3 {
        engagement::reconstruct_uav_position(&self.target.position, &self.eng)
    }
}

/// What guidance observes at `(state, t)` and the guard trips involved.
pub fn observe(state: &SimState, scenario: &Scenario, t: f64) -> (ObservedTarget, GuardFlags) {
    let (tr, vertical) = guarded_target_derivatives(&state.target, &scenario.target, t);
    let mut flags = GuardFlags::NONE;
    flags.set_if(vertical, GuardFlags::TARGET_VERTICAL);
    (observe_velocity(&tr.velocity, &state.eng.los), flags)
}

fn derivative(
    x: &StateVec,
    t: f64,
    cmd: &GuidanceCommand,
    scenario: &Scenario,
) -> (StateVec, GuardFlags) {
    let s = SimState::from_vec(x);
    let (tr, vertical) = guarded_target_derivatives(&s.target, &scenario.target, t);
    let obs = observe_velocity(&tr.velocity, &s.eng.los);
    let speed = scenario.envelope.unshift_speed(s.act.u);
    let inputs = UavInputs {
        speed,
        omega_y: s.act.omega_y,
        omega_z: s.act.omega_z,
    };
    let (er, mut flags) = engagement::guarded_derivatives(&s.eng, &inputs, &obs);
    flags.set_if(vertical, GuardFlags::TARGET_VERTICAL);
    let outside = !s.act.within(&scenario.envelope, &scenario.omega_max);
    flags.set_if(outside, GuardFlags::ACTUATOR_OVERSHOOT);
    let u_dot = speed_sat_derivative(s.act.u, cmd.u_cmd, &scenario.sat, &scenario.envelope);
    let (wy_dot, wz_dot) = omega_sat_derivative(
        (s.act.omega_y, s.act.omega_z),
        (cmd.omega_y_cmd, cmd.omega_z_cmd),
        &scenario.sat,
        &scenario.omega_max,
    );
    let v_uav = frames::velocity_from_lead_angles(speed, &s.eng.lead, &s.eng.los);
    let d = StateVec::from_column_slice(&[
        er.r_dot,
        er.theta_dot,
        er.psi_dot,
        er.theta_u_dot,
        er.psi_u_dot,
        u_dot,
        wy_dot,
        wz_dot,
        tr.velocity.x,
        tr.velocity.y,
        tr.velocity.z,
        tr.elevation_dot,
        tr.azimuth_dot,
        v_uav.x,
        v_uav.y,
        v_uav.z,
    ]);
    (d, flags)
}

/// One classical RK4 step of length `h` under a held command.
fn rk4(x: &StateVec, t: f64, h: f64, cmd: &GuidanceCommand, scenario: &Scenario) -> (StateVec, GuardFlags) {
    let (k1, f1) = derivative(x, t, cmd, scenario);
    let (k2, f2) = derivative(&(x + k1 * (h / 2.0)), t + h / 2.0, cmd, scenario);
    let (k3, f3) = derivative(&(x + k2 * (h / 2.0)), t + h / 2.0, cmd, scenario);
    let (k4, f4) = derivative(&(x + k3 * h), t + h, cmd, scenario);
    (x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0), f1 | f2 | f3 | f4)
}

/// One logged sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: SimState,
    /// Unshifted UAV speed, m/s.
    pub v_u: f64,
    pub command: GuidanceCommand,
    pub observed: ObservedTarget,
    /// `r + |x|`
    pub v2: f64,
    /// `|θ_U| + |z|`
    pub w2: f64,
    /// `|ψ_U| + |y|`
    pub w4: f64,
    pub flags: GuardFlags,
}

impl Sample {
    pub fn uav_position(&self) -> Vec3 {
        self.state.reconstructed_uav()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn make_sample(
    t: f64,
    state: &SimState,
    scenario: &Scenario,
    guidance: &mut Guidance,
) -> Sample {
    let (observed, obs_flags) = observe(state, scenario, t);
    let command = guidance.command(t, &state.eng, &state.act, &observed);
    let (_, eng_flags) = engagement::guarded_derivatives(
        &state.eng,
        &UavInputs {
            speed: scenario.envelope.unshift_speed(state.act.u),
            omega_y: state.act.omega_y,
            omega_z: state.act.omega_z,
        },
        &observed,
    );
    Sample {
        t,
        state: *state,
        v_u: scenario.envelope.unshift_speed(state.act.u),
        command,
        observed,
        v2: state.eng.r + command.x.abs(),
        w2: state.eng.lead.theta.abs() + command.z.abs(),
        w4: state.eng.lead.psi.abs() + command.y.abs(),
        flags: command.flags | obs_flags | eng_flags,
    }
}

/// Advances one guidance period from `state` at time `t`. Returns the next
/// state and the sample logged at `t`.
pub fn step(
    state: &SimState,
    scenario: &Scenario,
    t: f64,
    guidance: &mut Guidance,
) -> Result<(SimState, Sample), SimError> {
    let mut sample = make_sample(t, state, scenario, guidance);
    let n = scenario.substeps.max(1);
    let h = scenario.dt / n as f64;
    let mut x = state.to_vec();
    let mut flags = GuardFlags::NONE;
    for i in 0..n {
        let (next, f) = rk4(&x, t + i as f64 * h, h, &sample.command, scenario);
        x = next;
        flags |= f;
    }
    let mut next = SimState::from_vec(&x);
    if next.eng.r < R_MIN {
        next.eng.r = R_MIN;
        flags |= GuardFlags::RANGE_CLAMP;
    }
    next.eng = next.eng.normalized();
    next.target = next.target.normalized();
    if !next.is_finite() {
        return Err(SimError::NonFiniteState {
            t: t + scenario.dt,
            state: format!("{next:?}"),
        });
    }
    // Trips inside the step are reported on the step's starting sample.
    sample.flags |= flags;
    Ok((next, sample))
}

/// Convergence and bound statistics of a run. Undefined quantities are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    pub samples: usize,
    /// First time both lead angles are below `angle_tol` and stay there up to
    /// range capture (or the end of the run).
    pub t_angle_conv: Option<f64>,
    pub t_theta_conv: Option<f64>,
    pub t_psi_conv: Option<f64>,
    /// First time `r < r_capture` holds for the rest of the run.
    pub t_range_conv: Option<f64>,
    pub min_r: Option<f64>,
    pub final_r: Option<f64>,
    pub max_abs_omega_y: Option<f64>,
    pub max_abs_omega_z: Option<f64>,
    pub min_v_u: Option<f64>,
    pub max_v_u: Option<f64>,
    /// Mean range after capture.
    pub tracking_error: Option<f64>,
    pub settling_bounds: Option<SettlingBounds>,
    /// Samples outside `V0 < V_U < V_max`, `|ω| < ω_max`.
    pub bound_violations: usize,
    /// Samples with any guard trip.
    pub guard_trips: usize,
    /// Samples on which a channel held its previous command.
    pub held_commands: usize,
}

impl RunMetrics {
    pub fn converged(&self) -> bool {
        self.t_range_conv.is_some()
    }

    /// Pursuit order: angles settle no later than the range.
    pub fn pursuit_ordered(&self) -> Option<bool> {
        Some(self.t_angle_conv? <= self.t_range_conv?)
    }
}

/// First sample time from which `pred` holds through index `end` (exclusive),
/// provided at least `persistence` seconds of that window remain.
fn first_persistent(samples: &[Sample], end: usize, persistence: f64, pred: impl Fn(&Sample) -> bool) -> Option<f64> {
    let window = &samples[..end];
    let last = window.last()?;
    let mut start = None;
    for (i, s) in window.iter().enumerate().rev() {
        if pred(s) {
            start = Some(i);
        } else {
            break;
        }
    }
    let t0 = window[start?].t;
    (last.t - t0 >= persistence - 1e-12).then_some(t0)
}

pub fn compute_metrics(traj: &TrajectoryRecord, scenario: &Scenario) -> RunMetrics {
    let s = &traj.samples;
    if s.is_empty() {
        return RunMetrics::default();
    }
    let tol = &scenario.tolerances;
    let t_range_conv = first_persistent(s, s.len(), tol.persistence, |x| x.state.eng.r < tol.r_capture);
    let capture = t_range_conv.map_or(s.len(), |t| s.partition_point(|x| x.t < t) + 1);
    let lead_ok = |a: f64| a.abs() < tol.angle_tol;
    let angle_end = capture.min(s.len());
    let t_theta_conv = first_persistent(s, angle_end, 0.0, |x| lead_ok(x.state.eng.lead.theta));
    let t_psi_conv = first_persistent(s, angle_end, 0.0, |x| lead_ok(x.state.eng.lead.psi));
    let t_angle_conv = first_persistent(s, angle_end, 0.0, |x| {
        lead_ok(x.state.eng.lead.theta) && lead_ok(x.state.eng.lead.psi)
    });

    let fold = |f: fn(&Sample) -> f64, pick: fn(f64, f64) -> f64| s.iter().map(f).reduce(pick);
    let env = &scenario.envelope;
    let lim = &scenario.omega_max;
    let bound_violations = s
        .iter()
        .filter(|x| {
            !(x.v_u > env.v0
                && x.v_u < env.v_max
                && x.state.act.omega_y.abs() < lim.y
                && x.state.act.omega_z.abs() < lim.z)
        })
        .count();
    let tracking_error = t_range_conv.map(|t| {
        let post: Vec<f64> = s.iter().filter(|x| x.t >= t).map(|x| x.state.eng.r).collect();
        post.iter().sum::<f64>() / post.len() as f64
    });

    RunMetrics {
        samples: s.len(),
        t_angle_conv,
        t_theta_conv,
        t_psi_conv,
        t_range_conv,
        min_r: fold(|x| x.state.eng.r, f64::min),
        final_r: s.last().map(|x| x.state.eng.r),
        max_abs_omega_y: fold(|x| x.state.act.omega_y.abs(), f64::max),
        max_abs_omega_z: fold(|x| x.state.act.omega_z.abs(), f64::max),
        min_v_u: fold(|x| x.v_u, f64::min),
        max_v_u: fold(|x| x.v_u, f64::max),
        tracking_error,
        settling_bounds: Some(scenario.settling_bounds()),
        bound_violations,
        guard_trips: s.iter().filter(|x| !x.flags.is_empty()).count(),
        held_commands: s.iter().filter(|x| x.flags.held_command()).count(),
    }
}

/// Integrates the scenario to `t_end`, logging `steps + 1` samples (none for
/// a zero horizon).
pub fn run(scenario: &Scenario) -> Result<(TrajectoryRecord, RunMetrics), SimError> {
    scenario.validate()?;
    let n = scenario.steps();
    let mut traj = TrajectoryRecord::default();
    if n == 0 {
        return Ok((traj, RunMetrics::default()));
    }
    traj.samples.reserve(n + 1);
    let mut guidance = scenario.new_guidance();
    let mut state = scenario.initial_state()?;
    for k in 0..n {
        let t = k as f64 * scenario.dt;
        let (next, sample) = step(&state, scenario, t, &mut guidance)?;
        traj.samples.push(sample);
        state = next;
    }
    let last = make_sample(n as f64 * scenario.dt, &state, scenario, &mut guidance);
    traj.samples.push(last);
    let metrics = compute_metrics(&traj, scenario);
    Ok((traj, metrics))
}

/// Final state of a run, without logging.
pub fn final_state(scenario: &Scenario) -> Result<SimState, SimError> {
    scenario.validate()?;
    let mut guidance = scenario.new_guidance();
    let mut state = scenario.initial_state()?;
    for k in 0..scenario.steps() {
        state = step(&state, scenario, k as f64 * scenario.dt, &mut guidance)?.0;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn builtins_validate() {
        for name in targets::SCENARIOS {
            Scenario::builtin(name).unwrap().validate().unwrap();
        }
        for row in &STRAIGHT_LINE_STARTS {
            Scenario::straight_line_start(row).validate().unwrap();
        }
        assert!(Scenario::builtin("nope").is_err());
    }

    #[test]
    fn helix_initial_state() {
        let s = Scenario::builtin("helix_v3").unwrap();
        let x = s.initial_state().unwrap();
        assert_abs_diff_eq!(x.eng.r, 2400f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(x.eng.lead.theta.to_degrees(), 45.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.eng.lead.psi.to_degrees(), 30.0, epsilon = 1e-12);
        assert_eq!(s.envelope.unshift_speed(x.act.u), 14.0);
        assert_abs_diff_eq!((x.reconstructed_uav() - s.uav_position).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_horizon_is_empty() {
        let mut s = Scenario::builtin("helix_v3").unwrap();
        s.t_end = 0.0;
        let (traj, m) = run(&s).unwrap();
        assert!(traj.is_empty());
        assert_eq!(m, RunMetrics::default());
        assert!(m.t_range_conv.is_none() && m.settling_bounds.is_none());
    }

    #[test]
    fn sample_count_is_steps_plus_one() {
        let mut s = Scenario::builtin("scurve").unwrap();
        s.t_end = 0.25;
        let (traj, m) = run(&s).unwrap();
        assert_eq!(traj.len(), 251);
        assert_eq!(m.samples, 251);
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(traj.samples[250].t, 0.25);
    }

    fn matched_equilibrium() -> Scenario {
        let mut s = Scenario::builtin("straightline").unwrap();
        // Target flies straight away from the UAV along the LOS at V_U(0).
        let d = Vec3::new(40.0, 30.0, 20.0);
        s.uav_position = Vec3::zeros();
        s.target_position = d;
        let (_, los) = engagement::los_from_positions(&s.uav_position, &d).unwrap();
        s.target_heading = InitialHeading {
            reference: HeadingReference::Inertial,
            elevation: los.theta,
            azimuth: los.psi,
        };
        s.target = TargetProfile::Constant {
            speed: s.envelope.shift(),
            omega_y: 0.0,
            omega_z: 0.0,
        };
        s.uav_lead = LeadAngles::zero();
        s
    }

    #[test]
    fn equilibrium_keeps_range() {
        let s = matched_equilibrium();
        let mut g = s.new_guidance();
        let x0 = s.initial_state().unwrap();
        // Hold the actuators at rest so only the kinematics are exercised.
        let rest = GuidanceCommand::default();
        let (x1, _) = rk4(&x0.to_vec(), 0.0, s.dt, &rest, &s);
        let x1 = SimState::from_vec(&x1);
        assert_abs_diff_eq!(x1.eng.r, x0.eng.r, epsilon = 1e-9);
        assert_abs_diff_eq!(x1.eng.los.theta, x0.eng.los.theta, epsilon = 1e-12);
        assert_abs_diff_eq!(x1.eng.lead.psi, 0.0, epsilon = 1e-12);
        let moved = x1.target.position - x0.target.position;
        assert_abs_diff_eq!(moved.norm(), 14.0 * s.dt, epsilon = 1e-12);
        // And the full closed-loop step is finite.
        let (next, sample) = step(&x0, &s, 0.0, &mut g).unwrap();
        assert!(next.is_finite() && sample.command.u_cmd.is_finite());
    }

    #[test]
    fn first_step_range_follows_closing_rate() {
        let s = Scenario::builtin("helix_v3").unwrap();
        let x0 = s.initial_state().unwrap();
        let mut g = s.new_guidance();
        let (x1, sample) = step(&x0, &s, 0.0, &mut g).unwrap();
        let rates = engagement::engagement_derivatives(
            &x0.eng,
            &UavInputs {
                speed: sample.v_u,
                omega_y: 0.0,
                omega_z: 0.0,
            },
            &sample.observed,
        )
        .unwrap();
        assert_eq!((x1.eng.r - x0.eng.r).signum(), rates.r_dot.signum());
        // The speed state moves fast on the first step, so r̈·dt/2 is O(1e-2).
        assert_abs_diff_eq!((x1.eng.r - x0.eng.r) / s.dt, rates.r_dot, epsilon = 5e-2);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut s = Scenario::builtin("timevarying").unwrap();
        s.t_end = 2.0;
        let (a, ma) = run(&s).unwrap();
        let (b, mb) = run(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(ma, mb);
    }

    #[test]
    fn persistence_rule() {
        let mk = |t: f64, r: f64| {
            let mut x = Sample {
                t,
                ..Default::default()
            };
            x.state.eng.r = r;
            x
        };
        let s: Vec<Sample> = (0..=30).map(|k| mk(k as f64 * 0.1, if k >= 10 { 0.1 } else { 1.0 })).collect();
        assert_eq!(first_persistent(&s, s.len(), 1.0, |x| x.state.eng.r < 0.5), Some(1.0));
        assert_eq!(first_persistent(&s, s.len(), 2.5, |x| x.state.eng.r < 0.5), None);
        assert_eq!(first_persistent(&s, 5, 0.0, |x| x.state.eng.r < 0.5), None);
    }
}

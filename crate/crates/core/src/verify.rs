//! The acceptance checks as library functions, shared by the test suite and
//! the `verify` subcommand. Every check returns a [`CheckOutcome`] instead of
//! panicking, so a failing check still reports what it measured.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engagement::{
    engagement_derivatives, los_from_positions, reconstruct_uav_position, EngagementState, ObservedTarget,
    UavInputs,
};
use crate::frames::{
    effective_heading, lead_angles_from_velocity, velocity_from_lead_angles, wrap_angle, LeadAngles, LosAngles,
    Vec3,
};
use crate::saturation::{confinement_bound, omega_sat_derivative, speed_sat_derivative, ActuatorState};
use crate::simulator::audit::{lyapunov_audit, self_convergence, self_convergence_dt, trajectory_consistency};
use crate::simulator::{run, RunMetrics, Scenario, SimError, STRAIGHT_LINE_STARTS};

/// Ids accepted by [`run_selected`], in run order.
pub const CHECK_IDS: [&str; 12] = ["1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "gain-scaling", "consistency"];

/// Knobs of the randomized checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub seed: u64,
    pub random_cases: usize,
    /// Horizon of each random-start run, s. Runs that have not captured by
    /// then are extended to the range settling bound.
    pub random_horizon: f64,
    pub command_signals: usize,
    /// Length of each confinement run, s.
    pub signal_duration: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            random_cases: 100,
            random_horizon: 80.0,
            command_signals: 20,
            signal_duration: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(id: &str, name: &str, passed: bool, detail: String) -> Self {
        Self {
            id: id.to_string(),
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn errored(id: &str, name: &str, e: impl fmt::Display) -> Self {
        Self::new(id, name, false, format!("error: {e}"))
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} [{}] {}: {}", self.id, self.name, self.detail)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:.3}"))
}

fn within(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|x| (lo..=hi).contains(&x))
}

/// Measured settling times against the scenario's analytic bounds. Undefined
/// times are not violations.
fn bounds_respected(m: &RunMetrics) -> bool {
    let Some(b) = m.settling_bounds else { return false };
    let le = |t: Option<f64>, bound: f64| t.is_none_or(|t| t <= bound);
    le(m.t_range_conv, b.t1) && le(m.t_theta_conv, b.t2) && le(m.t_psi_conv, b.t3)
}

fn summary(m: &RunMetrics) -> String {
    format!(
        "t_angle={} s, t_range={} s, min_r={}, V_U in [{}, {}], bound violations {}",
        opt(m.t_angle_conv),
        opt(m.t_range_conv),
        opt(m.min_r),
        opt(m.min_v_u),
        opt(m.max_v_u),
        m.bound_violations
    )
}

fn builtin_metrics(name: &str) -> Result<RunMetrics, SimError> {
    let s = Scenario::builtin(name)?;
    Ok(run(&s)?.1)
}

/// The scenarios whose trajectories feed the Lyapunov audit.
pub fn scenario_suite() -> Vec<Scenario> {
    let mut all: Vec<Scenario> = ["helix_v3", "helix_v0", "scurve", "timevarying"]
        .iter()
        .map(|n| Scenario::builtin(n).expect("builtin"))
        .collect();
    all.extend(STRAIGHT_LINE_STARTS.iter().map(Scenario::straight_line_start));
    all
}

fn helix(id: &str, name: &str, scenario: &str, extra: impl Fn(&RunMetrics) -> (bool, String)) -> CheckOutcome {
    match builtin_metrics(scenario) {
        Ok(m) => {
            let (ok_extra, note) = extra(&m);
            let passed = within(m.t_angle_conv, 0.5, 4.0)
                && within(m.t_range_conv, 6.0, 18.0)
                && m.bound_violations == 0
                && bounds_respected(&m)
                && ok_extra;
            CheckOutcome::new(id, name, passed, format!("{}{note}", summary(&m)))
        }
        Err(e) => CheckOutcome::errored(id, name, e),
    }
}

pub fn helix_v3() -> CheckOutcome {
    helix("1", "helix_v3 convergence windows and bounds", "helix_v3", |_| (true, String::new()))
}

pub fn helix_v0() -> CheckOutcome {
    helix("2", "helix_v0 convergence windows and bounds", "helix_v0", |m| {
        (m.min_v_u.is_some_and(|v| v >= 0.0), String::new())
    })
}

pub fn scurve() -> CheckOutcome {
    let (id, name) = ("3", "scurve range capture window and bounds");
    match builtin_metrics("scurve") {
        Ok(m) => {
            let passed = within(m.t_range_conv, 6.0, 18.0) && m.bound_violations == 0 && bounds_respected(&m);
            CheckOutcome::new(id, name, passed, summary(&m))
        }
        Err(e) => CheckOutcome::errored(id, name, e),
    }
}

pub fn timevarying() -> CheckOutcome {
    let (id, name) = ("4", "timevarying capture and tracking error");
    match builtin_metrics("timevarying") {
        Ok(m) => {
            let passed = m.converged()
                && m.bound_violations == 0
                && m.tracking_error.is_some_and(|e| e < 1.0)
                && bounds_respected(&m);
            CheckOutcome::new(id, name, passed, format!("{}, tracking error {}", summary(&m), opt(m.tracking_error)))
        }
        Err(e) => CheckOutcome::errored(id, name, e),
    }
}

pub fn straightline_batch() -> CheckOutcome {
    let (id, name) = ("5", "straight-line batch capture and pursuit order");
    let runs: Result<Vec<(String, RunMetrics)>, SimError> = STRAIGHT_LINE_STARTS
        .par_iter()
        .map(|row| {
            let s = Scenario::straight_line_start(row);
            Ok((row.id.to_string(), run(&s)?.1))
        })
        .collect();
    match runs {
        Ok(runs) => {
            let passed = runs
                .iter()
                .all(|(_, m)| m.converged() && m.pursuit_ordered() == Some(true) && bounds_respected(m));
            let detail = runs
                .iter()
                .map(|(row, m)| format!("{row}: angle {} s, range {} s", opt(m.t_angle_conv), opt(m.t_range_conv)))
                .collect::<Vec<_>>()
                .join("; ");
            CheckOutcome::new(id, name, passed, detail)
        }
        Err(e) => CheckOutcome::errored(id, name, e),
    }
}

/// Straight-line scenarios from seeded random UAV starts.
pub fn random_starts(opts: &VerifyOptions) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let base = Scenario::builtin("straightline").expect("builtin");
    let lead_max = 80f64.to_radians();
    (0..opts.random_cases)
        .map(|i| {
            let mut s = base.clone();
            s.name = format!("random_{i}");
            loop {
                let p = Vec3::new(
                    rng.random_range(0.0..=200.0),
                    rng.random_range(0.0..=200.0),
                    rng.random_range(0.0..=200.0),
                );
                if (p - s.target_position).norm() > 1.0 {
                    s.uav_position = p;
                    break;
                }
            }
            s.uav_lead = LeadAngles::new(
                rng.random_range(-lead_max..=lead_max),
                rng.random_range(-lead_max..=lead_max),
            );
            s.t_end = opts.random_horizon;
            s
        })
        .collect()
}

fn run_to_capture(mut s: Scenario) -> Result<RunMetrics, SimError> {
    let m = run(&s)?.1;
    if m.converged() {
        return Ok(m);
    }
    s.t_end = s.settling_bounds().t1 + s.tolerances.persistence;
    Ok(run(&s)?.1)
}

pub fn settling_envelope(opts: &VerifyOptions) -> CheckOutcome {
    let (id, name) = ("6", "random starts respect the settling bounds");
    let cases = random_starts(opts);
    let bounds = Scenario::builtin("straightline").expect("builtin").settling_bounds();
    let lead_bound = bounds.lead_angle();
    let runs: Vec<Result<RunMetrics, SimError>> = cases.into_par_iter().map(run_to_capture).collect();
    let mut failures = Vec::new();
    let (mut worst_lead, mut worst_range) = (0.0f64, 0.0f64);
    for (i, r) in runs.iter().enumerate() {
        match r {
            Ok(m) => {
                let lead = m.t_theta_conv.zip(m.t_psi_conv).map(|(a, b)| a.max(b));
                let ok = lead.is_some_and(|t| t <= lead_bound) && m.t_range_conv.is_some_and(|t| t <= bounds.t1);
                worst_lead = worst_lead.max(lead.unwrap_or(f64::INFINITY));
                worst_range = worst_range.max(m.t_range_conv.unwrap_or(f64::INFINITY));
                if !ok {
                    failures.push(i);
                }
            }
            Err(_) => failures.push(i),
        }
    }
    let detail = format!(
        "{} cases, {} failures {:?}; worst lead settling {:.3} s (bound {:.2}), worst range settling {:.3} s (bound {:.1})",
        runs.len(),
        failures.len(),
        failures,
        worst_lead,
        lead_bound,
        worst_range,
        bounds.t1
    );
    CheckOutcome::new(id, name, failures.is_empty(), detail)
}

pub fn lyapunov_decrease() -> CheckOutcome {
    let (id, name) = ("7", "Lyapunov decrease audit on the scenario suite");
    let reports: Result<Vec<_>, SimError> = scenario_suite()
        .par_iter()
        .map(|s| {
            let (traj, _) = run(s)?;
            Ok((s.name.clone(), lyapunov_audit(&traj, &s.guidance)))
        })
        .collect();
    match reports {
        Ok(reports) => {
            let passed = reports.iter().all(|(_, r)| r.is_clean());
            let detail = reports
                .iter()
                .map(|(n, r)| {
                    let per: Vec<String> = r.candidates.iter().map(|c| format!("{}={}", c.name, c.violations)).collect();
                    format!("{n}: {}", per.join(" "))
                })
                .collect::<Vec<_>>()
                .join("; ");
            CheckOutcome::new(id, name, passed, detail)
        }
        Err(e) => CheckOutcome::errored(id, name, e),
    }
}

/// A smooth random command: a sum of sinusoids whose amplitudes add up to at
/// most `peak`.
#[derive(Debug, Clone)]
pub struct CommandSignal {
    terms: Vec<(f64, f64, f64)>,
}

impl CommandSignal {
    pub fn random(rng: &mut impl Rng, peak: f64) -> Self {
        let n = rng.random_range(1..=4);
        let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let scale = peak * rng.random_range(0.5..=1.0) / total;
        let terms = weights
            .into_iter()
            .map(|w| {
                let freq = rng.random_range(0.05..1.0) * std::f64::consts::TAU;
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                (w * scale, freq, phase)
            })
            .collect();
        Self { terms }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.terms.iter().map(|(a, w, p)| a * (w * t + p).sin()).sum()
    }
}

/// Largest `|cmd|` a signal can reach.
pub fn signal_peak(s: &CommandSignal) -> f64 {
    s.terms.iter().map(|(a, _, _)| a.abs()).sum()
}

type Commands = [CommandSignal; 3];

fn actuator_rate(x: &ActuatorState, cmds: &Commands, t: f64, sc: &Scenario) -> [f64; 3] {
    let du = speed_sat_derivative(x.u, cmds[0].at(t), &sc.sat, &sc.envelope);
    let (dy, dz) = omega_sat_derivative((x.omega_y, x.omega_z), (cmds[1].at(t), cmds[2].at(t)), &sc.sat, &sc.omega_max);
    [du, dy, dz]
}

fn nudge(x: &ActuatorState, d: [f64; 3], h: f64) -> ActuatorState {
    ActuatorState {
        u: x.u + h * d[0],
        omega_y: x.omega_y + h * d[1],
        omega_z: x.omega_z + h * d[2],
    }
}

fn actuator_rk4(x: &ActuatorState, cmds: &Commands, t: f64, h: f64, sc: &Scenario) -> ActuatorState {
    let k1 = actuator_rate(x, cmds, t, sc);
    let k2 = actuator_rate(&nudge(x, k1, h / 2.0), cmds, t + h / 2.0, sc);
    let k3 = actuator_rate(&nudge(x, k2, h / 2.0), cmds, t + h / 2.0, sc);
    let k4 = actuator_rate(&nudge(x, k3, h), cmds, t + h, sc);
    let d = [0, 1, 2].map(|i| (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0);
    nudge(x, d, h)
}

/// Outcome of driving the saturation models with one command triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfinementRun {
    /// `max |u| / δ_M` over the run.
    pub speed_margin: f64,
    /// `max |ω| / δ_M` over both angular channels.
    pub omega_margin: f64,
    /// Largest RK4 vs fine-step Euler discrepancy at the coarse samples.
    pub euler_gap: f64,
    /// The same against Euler extrapolated from steps `h` and `h/2`, which
    /// removes Euler's leading error term.
    pub extrapolated_gap: f64,
}

pub fn confinement_run(cmds: &Commands, sc: &Scenario, duration: f64) -> ConfinementRun {
    const DT: f64 = 1e-3;
    const FINE: usize = 100;
    let h = DT / FINE as f64;
    let p = &sc.sat;
    let xi: Vec<f64> = cmds.iter().map(signal_peak).collect();
    let du = confinement_bound(xi[0], p.k2, sc.envelope.u_max(), p.gamma);
    let dy = confinement_bound(xi[1], p.k4, sc.omega_max.y, p.gamma);
    let dz = confinement_bound(xi[2], p.k4, sc.omega_max.z, p.gamma);

    let mut rk = ActuatorState::default();
    let mut eu = rk;
    let mut eu_half = rk;
    let mut out = ConfinementRun {
        speed_margin: 0.0,
        omega_margin: 0.0,
        euler_gap: 0.0,
        extrapolated_gap: 0.0,
    };
    let gap = |a: &ActuatorState, b: [f64; 3]| {
        (a.u - b[0]).abs().max((a.omega_y - b[1]).abs()).max((a.omega_z - b[2]).abs())
    };
    let steps = (duration / DT).round() as usize;
    for k in 0..steps {
        let t = k as f64 * DT;
        rk = actuator_rk4(&rk, cmds, t, DT, sc);
        for j in 0..FINE {
            let tj = t + j as f64 * h;
            eu = nudge(&eu, actuator_rate(&eu, cmds, tj, sc), h);
            for half in 0..2 {
                let th = tj + half as f64 * h / 2.0;
                eu_half = nudge(&eu_half, actuator_rate(&eu_half, cmds, th, sc), h / 2.0);
            }
        }
        out.speed_margin = out.speed_margin.max(rk.u.abs() / du);
        out.omega_margin = out.omega_margin.max((rk.omega_y.abs() / dy).max(rk.omega_z.abs() / dz));
        out.euler_gap = out.euler_gap.max(gap(&rk, [eu.u, eu.omega_y, eu.omega_z]));
        let extrapolated = [
            2.0 * eu_half.u - eu.u,
            2.0 * eu_half.omega_y - eu.omega_y,
            2.0 * eu_half.omega_z - eu.omega_z,
        ];
        out.extrapolated_gap = out.extrapolated_gap.max(gap(&rk, extrapolated));
    }
    out
}

pub fn saturation_confinement(opts: &VerifyOptions) -> CheckOutcome {
    let (id, name) = ("8", "saturation confinement and Euler cross-check");
    let sc = Scenario::builtin("helix_v3").expect("builtin");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let signals: Vec<Commands> = (0..opts.command_signals)
        .map(|_| [(); 3].map(|_| CommandSignal::random(&mut rng, 100.0)))
        .collect();
    let runs: Vec<ConfinementRun> = signals
        .par_iter()
        .map(|c| confinement_run(c, &sc, opts.signal_duration))
        .collect();
    let fold = |f: fn(&ConfinementRun) -> f64| runs.iter().map(f).fold(0.0, f64::max);
    let (speed, omega, gap) = (fold(|r| r.speed_margin), fold(|r| r.omega_margin), fold(|r| r.euler_gap));
    let extrapolated = fold(|r| r.extrapolated_gap);
    let passed = !runs.is_empty() && speed <= 1.0 && omega <= 1.0 && gap < 1e-4;
    let detail = format!(
        "{} signals; max |u|/delta_M {speed:.4}, max |omega|/delta_M {omega:.4}, max RK4-Euler gap {gap:.2e} \
         (against extrapolated Euler {extrapolated:.2e})",
        runs.len()
    );
    CheckOutcome::new(id, name, passed, detail)
}

pub fn integrator_order() -> CheckOutcome {
    let (id, name) = ("9", "RK4 self-convergence on the helix");
    let mut s = Scenario::builtin("helix_v3").expect("builtin");
    s.t_end = 10.0;
    match (self_convergence(&s, 1), self_convergence_dt(&s)) {
        (Ok(sub), Ok(dt)) => {
            let passed = (8.0..=32.0).contains(&sub.ratio);
            let detail = format!(
                "substep halving ratio {:.2} (gaps {:.2e}, {:.2e}); halving the guidance period as well gives {:.2}",
                sub.ratio, sub.coarse_gap, sub.fine_gap, dt.ratio
            );
            CheckOutcome::new(id, name, passed, detail)
        }
        (Err(e), _) | (_, Err(e)) => CheckOutcome::errored(id, name, e),
    }
}

/// Worst-case residuals of the frame and engagement identities over seeded
/// random samples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameResiduals {
    pub lead_round_trip: f64,
    pub speed_round_trip: f64,
    pub orthonormality: f64,
    pub position_round_trip: f64,
    pub sigma_identity: f64,
    pub equilibrium_rates: f64,
}

pub fn frame_residuals(seed: u64, samples: usize) -> FrameResiduals {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = FrameResiduals::default();
    let interior = FRAC_PI_2 - 1e-3;
    for _ in 0..samples {
        let los = LosAngles::new(rng.random_range(-interior..interior), rng.random_range(-PI..PI));
        let lead = LeadAngles::new(rng.random_range(-interior..interior), rng.random_range(-PI..PI));
        let speed = rng.random_range(0.1..30.0);

        let v = velocity_from_lead_angles(speed, &lead, &los);
        if let Ok((back, sp)) = lead_angles_from_velocity(&v, &los) {
            let d = (back.theta - lead.theta)
                .abs()
                .max(wrap_angle(back.psi - lead.psi).abs());
            out.lead_round_trip = out.lead_round_trip.max(d);
            out.speed_round_trip = out.speed_round_trip.max((sp - speed).abs() / speed);
        } else {
            out.lead_round_trip = f64::INFINITY;
        }

        let rot = los.rotation();
        let err = (rot.transpose() * rot - nalgebra::Matrix3::identity()).abs().max();
        out.orthonormality = out.orthonormality.max(err);

        let target = Vec3::new(
            rng.random_range(-500.0..500.0),
            rng.random_range(-500.0..500.0),
            rng.random_range(-500.0..500.0),
        );
        let uav = Vec3::new(
            rng.random_range(-500.0..500.0),
            rng.random_range(-500.0..500.0),
            rng.random_range(-500.0..500.0),
        );
        if let Ok((r, l)) = los_from_positions(&uav, &target) {
            let s = EngagementState { r, los: l, lead };
            let back = reconstruct_uav_position(&target, &s);
            out.position_round_trip = out.position_round_trip.max((back - uav).norm() / r.max(1.0));
        }

        let sigma = effective_heading(&lead);
        let cos_between = v.normalize().dot(&los.unit());
        out.sigma_identity = out.sigma_identity.max((sigma.cos() - cos_between).abs());

        // Matched pursuit along the LOS: nothing relative changes.
        let eq = EngagementState {
            r: rng.random_range(1.0..300.0),
            los,
            lead: LeadAngles::zero(),
        };
        let u = UavInputs {
            speed,
            omega_y: 0.0,
            omega_z: 0.0,
        };
        let t = ObservedTarget {
            speed,
            lead: LeadAngles::zero(),
        };
        match engagement_derivatives(&eq, &u, &t) {
            Ok(d) => {
                let worst = [d.r_dot, d.theta_dot, d.psi_dot, d.theta_u_dot, d.psi_u_dot]
                    .iter()
                    .fold(0.0f64, |m, x| m.max(x.abs()));
                out.equilibrium_rates = out.equilibrium_rates.max(worst);
            }
            Err(_) => out.equilibrium_rates = f64::INFINITY,
        }
    }
    out
}

pub fn frame_round_trips(opts: &VerifyOptions) -> CheckOutcome {
    let (id, name) = ("10", "frame round trips and equilibrium invariants");
    let r = frame_residuals(opts.seed.wrapping_add(2), 10_000);
    let passed = r.lead_round_trip < 1e-9
        && r.speed_round_trip < 1e-12
        && r.orthonormality < 1e-12
        && r.position_round_trip < 1e-9
        && r.sigma_identity < 1e-12
        && r.equilibrium_rates < 1e-12;
    let detail = format!(
        "lead {:.1e}, speed {:.1e}, orthonormality {:.1e}, position {:.1e}, sigma {:.1e}, equilibrium rates {:.1e}",
        r.lead_round_trip, r.speed_round_trip, r.orthonormality, r.position_round_trip, r.sigma_identity, r.equilibrium_rates
    );
    CheckOutcome::new(id, name, passed, detail)
}

/// Scaling every reaching gain by `c > 1` must not slow any channel down.
pub fn gain_monotonicity() -> CheckOutcome {
    let (id, name) = ("gain-scaling", "larger reaching gains never settle later on the helix");
    let base = Scenario::builtin("helix_v3").expect("builtin");
    let at = |c: f64| {
        let mut s = base.clone();
        s.guidance = s.guidance.scaled(c);
        run(&s).map(|(_, m)| (c, m))
    };
    let runs: Result<Vec<_>, SimError> = [1.0, 1.5, 2.0, 4.0].par_iter().map(|&c| at(c)).collect();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return CheckOutcome::errored(id, name, e),
    };
    let slack = base.dt * 1.5;
    let (_, m0) = &runs[0];
    let no_later = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => b <= a + slack,
        (None, _) => true,
        (Some(_), None) => false,
    };
    let passed = runs[1..].iter().all(|(_, m)| {
        no_later(m0.t_theta_conv, m.t_theta_conv)
            && no_later(m0.t_psi_conv, m.t_psi_conv)
            && no_later(m0.t_range_conv, m.t_range_conv)
    });
    let detail = runs
        .iter()
        .map(|(c, m)| format!("c={c}: theta {} s, psi {} s, range {} s", opt(m.t_theta_conv), opt(m.t_psi_conv), opt(m.t_range_conv)))
        .collect::<Vec<_>>()
        .join("; ");
    CheckOutcome::new(id, name, passed, detail)
}

/// The relative states and the passively integrated UAV position agree.
pub fn dual_integration() -> CheckOutcome {
    let (id, name) = ("consistency", "relative states match integrated positions");
    let worst: Result<f64, SimError> = scenario_suite().par_iter().try_fold(|| 0.0f64, |acc, s| {
        let (traj, _) = run(s)?;
        Ok(acc.max(trajectory_consistency(&traj)?.worst()))
    })
    .try_reduce(|| 0.0, |a, b| Ok(a.max(b)));
    match worst {
        Ok(w) => CheckOutcome::new(id, name, w < 1e-6, format!("worst residual {w:.2e}")),
        Err(e) => CheckOutcome::errored(id, name, e),
    }
}

/// Runs one check by id.
pub fn run_check(id: &str, opts: &VerifyOptions) -> Option<CheckOutcome> {
    Some(match id {
        "1" => helix_v3(),
        "2" => helix_v0(),
        "3" => scurve(),
        "4" => timevarying(),
        "5" => straightline_batch(),
        "6" => settling_envelope(opts),
        "7" => lyapunov_decrease(),
        "8" => saturation_confinement(opts),
        "9" => integrator_order(),
        "10" => frame_round_trips(opts),
        "gain-scaling" => gain_monotonicity(),
        "consistency" => dual_integration(),
        _ => return None,
    })
}

/// The listed checks in [`CHECK_IDS`] order, or all of them when `ids` is
/// empty. Unknown ids are skipped.
pub fn run_selected(ids: &[String], opts: &VerifyOptions) -> Vec<CheckOutcome> {
    CHECK_IDS
        .iter()
        .filter(|id| ids.is_empty() || ids.iter().any(|x| x == *id))
        .filter_map(|id| run_check(id, opts))
        .collect()
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    run_selected(&[], opts)
}

//! Numerical audits along simulated trajectories.

use serde::{Deserialize, Serialize};

use super::{final_state, Sample, Scenario, SimError, SimState, TrajectoryRecord};
use crate::engagement::{self, EngagementState, ObservedTarget, UavInputs, EPS_DEN, R_MIN};
use crate::frames;
use crate::guidance::{ChannelGains, GuidanceParams};

/// Samples skipped before auditing, so derivative estimates are warm.
pub const WARMUP_SAMPLES: usize = 5;
/// Relative part of the decrease tolerance.
pub const TAU_REL: f64 = 0.05;
/// Absolute part of the decrease tolerance.
pub const TAU_ABS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateAudit {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Largest `(V̇ + rate − τ) / max(rate, 1)` over violating samples.
    pub max_normalized_violation: f64,
    pub first_violation_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub candidates: Vec<CandidateAudit>,
}

impl LyapunovReport {
    pub fn violations(&self) -> usize {
        self.candidates.iter().map(|c| c.violations).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.violations() == 0
    }
}

fn audit_series(name: &str, samples: &[Sample], value: fn(&Sample) -> f64, gains: ChannelGains) -> CandidateAudit {
    let mut a = CandidateAudit {
        name: name.to_string(),
        ..Default::default()
    };
    if samples.len() < 3 {
        return a;
    }
    for k in WARMUP_SAMPLES.max(1)..samples.len() - 1 {
        let (prev, cur, next) = (&samples[k - 1], &samples[k], &samples[k + 1]);
        let v_dot = (value(next) - value(prev)) / (next.t - prev.t);
        let rate = gains.decrease_rate(value(cur));
        let tau = TAU_REL * rate + TAU_ABS;
        let excess = v_dot + rate - tau;
        a.checked += 1;
        if excess > 0.0 {
            a.violations += 1;
            a.max_normalized_violation = a.max_normalized_violation.max(excess / rate.max(1.0));
            a.first_violation_t.get_or_insert(cur.t);
        }
    }
    a
}

/// Checks `V̇ ≤ −(M̄ V^α + N V^β) + τ` for `V₂ = r + |x|`, `W₂ = |θ_U| + |z|`
/// and `W₄ = |ψ_U| + |y|` by central differences.
///
/// Only the pursuit phase is audited: the samples from the first one whose
/// range sits on the `r_min` floor onward are excluded, since the range
/// dynamics there are clamped rather than integrated.
pub fn lyapunov_audit(traj: &TrajectoryRecord, params: &GuidanceParams) -> LyapunovReport {
    let end = traj
        .samples
        .iter()
        .position(|s| s.state.eng.r <= R_MIN)
        .unwrap_or(traj.samples.len());
    let s = &traj.samples[..end];
    LyapunovReport {
        candidates: vec![
            audit_series("V2", s, |x| x.v2, params.speed()),
            audit_series("W2", s, |x| x.w2, params.pitch()),
            audit_series("W4", s, |x| x.w4, params.yaw()),
        ],
    }
}

/// Rate of the effective heading σ_U.
///
/// The general expression divides by `sin σ_U`; on the set `σ_U = π/2`
/// (`ψ_U = ±π/2`, `θ_U = ±π/2`, or both) the exact trigonometric values are
/// substituted instead.
pub fn sigma_dot_audit(s: &EngagementState, u: &UavInputs, t: &ObservedTarget) -> Result<f64, SimError> {
    if s.r < R_MIN {
        return Err(engagement::EngagementError::RangeUnderflow { r: s.r }.into());
    }
    let r = s.r;
    let (s_tt, c_tt) = t.lead.theta.sin_cos();
    let s_pt = t.lead.psi.sin();
    let (s_tu, c_tu) = s.lead.theta.sin_cos();
    let (s_pu, c_pu) = s.lead.psi.sin_cos();
    let yaw_edge = c_pu.abs() <= EPS_DEN;
    let pitch_edge = c_tu.abs() <= EPS_DEN;
    let one = |v: f64| v.signum();
    match (yaw_edge, pitch_edge) {
        (true, true) => {
            let (stu, spu) = (one(s_tu), one(s_pu));
            Ok(u.speed / r - t.speed * stu * s_tt / r + spu * u.omega_y)
        }
        (true, false) => {
            let spu = one(s_pu);
            Ok(u.speed / r - t.speed * (c_tt * s_pt * c_tu * spu + s_tu * s_tt) / r + spu * u.omega_y)
        }
        (false, true) => {
            let stu = one(s_tu);
            Ok(u.speed / r - t.speed * stu * s_tt / r + stu * c_pu * u.omega_z + s_pu * u.omega_y)
        }
        (false, false) => {
            let sigma = frames::effective_heading(&s.lead);
            let sin_sigma = sigma.sin();
            if sin_sigma.abs() < 1e-12 {
                return Err(SimError::UndefinedAtZeroSigma);
            }
            Ok(u.speed * sin_sigma / r
                - t.speed * (c_tt * s_pt * c_tu * s_pu + s_tu * s_tt) / (r * sin_sigma)
                + s_tu * c_pu * u.omega_z / sin_sigma
                + s_pu * u.omega_y / sin_sigma)
        }
    }
}

/// Agreement between the integrated relative states and the same states
/// recomputed from independently integrated inertial positions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// `|r_pos − r| / r`
    pub range_rel: f64,
    /// Largest absolute LOS-angle difference, rad.
    pub los_abs: f64,
    /// Largest absolute UAV lead-angle difference, rad.
    pub lead_abs: f64,
}

impl ConsistencyReport {
    pub fn worst(&self) -> f64 {
        self.range_rel.max(self.los_abs).max(self.lead_abs)
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            range_rel: self.range_rel.max(o.range_rel),
            los_abs: self.los_abs.max(o.los_abs),
            lead_abs: self.lead_abs.max(o.lead_abs),
        }
    }
}

fn angle_gap(a: f64, b: f64) -> f64 {
    frames::wrap_angle(a - b).abs()
}

pub fn consistency_of(state: &SimState, v_u: f64) -> Result<ConsistencyReport, SimError> {
    let (r, los) = engagement::los_from_positions(&state.uav_position, &state.target.position)?;
    let mut report = ConsistencyReport {
        range_rel: (r - state.eng.r).abs() / state.eng.r,
        los_abs: angle_gap(los.theta, state.eng.los.theta).max(angle_gap(los.psi, state.eng.los.psi)),
        lead_abs: 0.0,
    };
    let v = frames::velocity_from_lead_angles(v_u, &state.eng.lead, &state.eng.los);
    if let Ok((lead, _)) = frames::lead_angles_from_velocity(&v, &los) {
        report.lead_abs = angle_gap(lead.theta, state.eng.lead.theta).max(angle_gap(lead.psi, state.eng.lead.psi));
    }
    Ok(report)
}

/// Worst consistency discrepancy over every sample of a trajectory that is
/// still in the pursuit phase.
pub fn trajectory_consistency(traj: &TrajectoryRecord) -> Result<ConsistencyReport, SimError> {
    let mut worst = ConsistencyReport::default();
    for s in traj.samples.iter().take_while(|s| s.state.eng.r > R_MIN) {
        worst = worst.merge(consistency_of(&s.state, s.v_u)?);
    }
    Ok(worst)
}

/// Richardson self-convergence over RK4 substeps `n, 2n, 4n` with the
/// guidance period fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub coarse_gap: f64,
    pub fine_gap: f64,
    pub ratio: f64,
}

fn state_gap(a: &SimState, b: &SimState) -> f64 {
    let d = a.to_vec() - b.to_vec();
    d.iter().take(13).fold(0.0f64, |m, c| m.max(c.abs()))
}

pub fn self_convergence(scenario: &Scenario, base_substeps: u32) -> Result<ConvergenceReport, SimError> {
    let at = |n: u32| {
        let mut s = scenario.clone();
        s.substeps = n;
        final_state(&s)
    };
    let x1 = at(base_substeps)?;
    let x2 = at(2 * base_substeps)?;
    let x4 = at(4 * base_substeps)?;
    let coarse_gap = state_gap(&x1, &x2);
    let fine_gap = state_gap(&x2, &x4);
    Ok(ConvergenceReport {
        coarse_gap,
        fine_gap,
        ratio: coarse_gap / fine_gap,
    })
}

/// The same study with the guidance period halved together with the
/// integration step.
pub fn self_convergence_dt(scenario: &Scenario) -> Result<ConvergenceReport, SimError> {
    let at = |dt: f64| {
        let mut s = scenario.clone();
        s.dt = dt;
        final_state(&s)
    };
    let x1 = at(scenario.dt)?;
    let x2 = at(scenario.dt / 2.0)?;
    let x4 = at(scenario.dt / 4.0)?;
    let coarse_gap = state_gap(&x1, &x2);
    let fine_gap = state_gap(&x2, &x4);
    Ok(ConvergenceReport {
        coarse_gap,
        fine_gap,
        ratio: coarse_gap / fine_gap,
    })
}

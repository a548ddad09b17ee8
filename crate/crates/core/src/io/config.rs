//! The JSON configuration document. Every section overlays a base scenario
//! (a built-in, or the straight-line defaults when no name is given), so an
//! empty section means "keep the defaults". Angles are degrees here and
//! radians everywhere else.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{LeadAngles, Vec3};
use crate::saturation::{ActuatorState, AngularLimits};
use crate::simulator::{Scenario, STRAIGHT_LINE_STARTS};
use crate::targets::{HeadingReference, ProfileTable, TargetError, TargetProfile};
use crate::verify::VerifyOptions;
use crate::ValidationError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("ParseError at line {line}, column {column} (field `{field}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("ValidationError: {0}")]
    Validation(#[from] ValidationError),
    #[error("UnknownScenario: {0}")]
    UnknownScenario(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("target table {path}: {source}")]
    Table { path: PathBuf, source: TargetError },
}

impl From<TargetError> for ConfigError {
    fn from(e: TargetError) -> Self {
        match e {
            TargetError::UnknownScenario(name) => Self::UnknownScenario(name),
            other => Self::Validation(ValidationError::new(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<TargetProfile>,
    /// CSV with columns `t,v_t,omega_y,omega_z`, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heading_reference: Option<HeadingReference>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heading_azimuth_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heading_elevation_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UavSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi_u_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_u_deg: Option<f64>,
    /// Initial speed, m/s. Defaults to the middle of the envelope.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_omega_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_omega_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integration_substeps: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_capture: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_tol_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub persistence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Relative to the working directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<String>,
}

impl OutputSection {
    pub fn dir(&self) -> PathBuf {
        PathBuf::from(self.dir.as_deref().unwrap_or("out"))
    }

    pub fn trajectory_name(&self) -> &str {
        self.trajectory.as_deref().unwrap_or("trajectory.csv")
    }

    pub fn metrics_name(&self) -> &str {
        self.metrics.as_deref().unwrap_or("metrics.json")
    }
}

/// One sweep axis: an explicit list or `count` evenly spaced values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { from: f64, to: f64, count: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Values(v) => v.clone(),
            Self::Range { from, to, count } => match count {
                0 => Vec::new(),
                1 => vec![*from],
                n => (0..*n).map(|i| from + (to - from) * i as f64 / (*n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi_u_deg: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_u_deg: Option<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchCase {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_u_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_u_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchPreset {
    /// The five straight-line starts S1 to S5.
    StraightLine,
}

/// Initial conditions swept by `batch`. Cases from the preset, the explicit
/// list and the grid are concatenated in that order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<BatchPreset>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<BatchCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl BatchSpec {
    pub fn expand(&self) -> Vec<BatchCase> {
        let mut out = Vec::new();
        if self.preset == Some(BatchPreset::StraightLine) {
            out.extend(STRAIGHT_LINE_STARTS.iter().map(|r| BatchCase {
                id: r.id.to_string(),
                position: Some(r.position),
                psi_u_deg: Some(r.psi_u_deg),
                theta_u_deg: Some(r.theta_u_deg),
            }));
        }
        out.extend(self.cases.iter().cloned());
        if let Some(g) = &self.grid {
            let axis = |a: &Option<Axis>| a.as_ref().map(Axis::values);
            let xs = axis(&g.x);
            let ys = axis(&g.y);
            let zs = axis(&g.z);
            let psis = axis(&g.psi_u_deg);
            let thetas = axis(&g.theta_u_deg);
            // An absent axis contributes one "keep the base value" entry.
            let or_keep = |v: &Option<Vec<f64>>| v.clone().map_or(vec![None], |v| v.into_iter().map(Some).collect());
            let mut k = 0;
            for x in or_keep(&xs) {
                for y in or_keep(&ys) {
                    for z in or_keep(&zs) {
                        for psi in or_keep(&psis) {
                            for theta in or_keep(&thetas) {
                                let position = (x.is_some() || y.is_some() || z.is_some())
                                    .then_some([x.unwrap_or(f64::NAN), y.unwrap_or(f64::NAN), z.unwrap_or(f64::NAN)]);
                                out.push(BatchCase {
                                    id: format!("G{k}"),
                                    position,
                                    psi_u_deg: psi,
                                    theta_u_deg: theta,
                                });
                                k += 1;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Check ids to run; all of them when empty.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_cases: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command_signals: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDocument {
    /// Built-in scenario to start from.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub target: TargetSection,
    pub uav: UavSection,
    pub actuator: ActuatorSection,
    pub guidance: GuidanceSection,
    pub simulation: SimulationSection,
    pub tolerances: ToleranceSection,
    pub output: OutputSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn set<T: Copy>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn finite3(name: &str, p: [f64; 3]) -> Result<Vec3, ValidationError> {
    if p.iter().all(|c| c.is_finite()) {
        Ok(Vec3::from(p))
    } else {
        Err(ValidationError::new(format!("{name} must be finite")))
    }
}

impl ConfigDocument {
    /// The scenario this document describes. `base_dir` anchors `table_csv`.
    pub fn resolve(&self, base_dir: &Path) -> Result<Scenario, ConfigError> {
        let mut s = match &self.scenario {
            Some(name) => Scenario::builtin(name)?,
            None => {
                let mut s = Scenario::builtin("straightline")?;
                s.name = "custom".into();
                s
            }
        };
        if let Some(n) = &self.name {
            s.name = n.clone();
        }

        let t = &self.target;
        if let Some(p) = &t.profile {
            s.target = p.clone();
        }
        if let Some(path) = &t.table_csv {
            let path = base_dir.join(path);
            let file = fs::File::open(&path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            let table = ProfileTable::from_csv(file).map_err(|source| ConfigError::Table { path, source })?;
            s.target = TargetProfile::Table { table };
        }
        if let Some(p) = t.position {
            s.target_position = finite3("target.position", p)?;
        }
        set(&mut s.target_heading.reference, t.heading_reference);
        set(&mut s.target_heading.azimuth, t.heading_azimuth_deg.map(f64::to_radians));
        set(&mut s.target_heading.elevation, t.heading_elevation_deg.map(f64::to_radians));

        let a = &self.actuator;
        set(&mut s.envelope.v0, a.v0);
        set(&mut s.envelope.v_max, a.v_max);
        if let Some(w) = a.omega_max {
            s.omega_max = AngularLimits::uniform(w);
        }
        set(&mut s.sat.k1, a.k1);
        set(&mut s.sat.k2, a.k2);
        set(&mut s.sat.k3, a.k3);
        set(&mut s.sat.k4, a.k4);
        set(&mut s.sat.gamma, a.gamma);
        s.envelope.validate()?;

        let u = &self.uav;
        if let Some(p) = u.position {
            s.uav_position = finite3("uav.position", p)?;
        }
        let theta = u.theta_u_deg.map_or(s.uav_lead.theta, f64::to_radians);
        let psi = u.psi_u_deg.map_or(s.uav_lead.psi, f64::to_radians);
        s.uav_lead = LeadAngles::new(theta, psi);
        s.initial_actuator = ActuatorState {
            u: u.initial_speed.map_or(0.0, |v| s.envelope.shift_speed(v)),
            omega_y: u.initial_omega_y.unwrap_or(0.0),
            omega_z: u.initial_omega_z.unwrap_or(0.0),
        };

        let g = &self.guidance;
        let p = &mut s.guidance;
        for (slot, v) in [
            (&mut p.m1, g.m1),
            (&mut p.n1, g.n1),
            (&mut p.alpha1, g.alpha1),
            (&mut p.beta1, g.beta1),
            (&mut p.m2, g.m2),
            (&mut p.n2, g.n2),
            (&mut p.alpha2, g.alpha2),
            (&mut p.beta2, g.beta2),
            (&mut p.m3, g.m3),
            (&mut p.n3, g.n3),
            (&mut p.alpha3, g.alpha3),
            (&mut p.beta3, g.beta3),
        ] {
            set(slot, v);
        }
        set(&mut s.command_limit, g.command_limit);

        set(&mut s.dt, self.simulation.dt);
        set(&mut s.t_end, self.simulation.t_end);
        set(&mut s.substeps, self.simulation.integration_substeps);

        let tol = &self.tolerances;
        set(&mut s.tolerances.r_capture, tol.r_capture);
        set(&mut s.tolerances.angle_tol, tol.angle_tol_deg.map(f64::to_radians));
        set(&mut s.tolerances.persistence, tol.persistence);

        s.validate()?;
        Ok(s)
    }

    /// The batch cases applied to the resolved scenario, as `(id, scenario)`.
    pub fn batch_scenarios(&self, base_dir: &Path) -> Result<Vec<(String, Scenario)>, ConfigError> {
        let base = self.resolve(base_dir)?;
        let Some(spec) = &self.batch else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for case in spec.expand() {
            let mut s = base.clone();
            s.name = format!("{}_{}", base.name, case.id);
            if let Some(p) = case.position {
                // Grid axes left open keep the base coordinate.
                let keep = base.uav_position;
                let p = [0, 1, 2].map(|i| if p[i].is_nan() { keep[i] } else { p[i] });
                s.uav_position = finite3("batch case position", p)?;
            }
            let theta = case.theta_u_deg.map_or(s.uav_lead.theta, f64::to_radians);
            let psi = case.psi_u_deg.map_or(s.uav_lead.psi, f64::to_radians);
            s.uav_lead = LeadAngles::new(theta, psi);
            s.validate()
                .map_err(|e| ValidationError::new(format!("batch case {}: {e}", case.id)))?;
            out.push((case.id, s));
        }
        if out.is_empty() {
            return Err(ValidationError::new("batch must contain at least one case").into());
        }
        Ok(out)
    }

    pub fn verify_options(&self) -> VerifyOptions {
        let mut o = VerifyOptions::default();
        set(&mut o.seed, self.seed);
        if let Some(v) = &self.verify {
            set(&mut o.random_cases, v.random_cases);
            set(&mut o.random_horizon, v.random_horizon);
            set(&mut o.command_signals, v.command_signals);
            set(&mut o.signal_duration, v.signal_duration);
        }
        o
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses without validating.
pub fn parse_document(text: &str) -> Result<ConfigDocument, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse {
            line: inner.line(),
            column: inner.column(),
            field,
            message: inner.to_string(),
        }
    })
}

/// Parses and validates, resolving `table_csv` against `base_dir`.
pub fn parse_config_in(text: &str, base_dir: &Path) -> Result<ConfigDocument, ConfigError> {
    let doc = parse_document(text)?;
    doc.resolve(base_dir)?;
    doc.batch_scenarios(base_dir)?;
    if let Some(v) = &doc.verify {
        if let Some(bad) = v.checks.iter().find(|c| !crate::verify::CHECK_IDS.contains(&c.as_str())) {
            return Err(ValidationError::new(format!("unknown verify check `{bad}`")).into());
        }
    }
    Ok(doc)
}

pub fn parse_config(text: &str) -> Result<ConfigDocument, ConfigError> {
    parse_config_in(text, Path::new("."))
}

/// Reads and validates a config file; relative table paths resolve next to it.
pub fn load_config(path: &Path) -> Result<ConfigDocument, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_in(&text, &config_dir(path))
}

pub fn config_dir(path: &Path) -> PathBuf {
    path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

//! Trajectory CSV and metrics JSON.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::frames::effective_heading;
use crate::simulator::{RunMetrics, Sample, Scenario, TrajectoryRecord};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("IoError: {path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("IoError: {0}")]
    Csv(#[from] csv::Error),
    #[error("IoError: {0}")]
    Json(#[from] serde_json::Error),
}

fn file_error(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

pub const TRAJECTORY_COLUMNS: [&str; 23] = [
    "t",
    "r",
    "theta",
    "psi",
    "theta_u",
    "psi_u",
    "v_u",
    "omega_y",
    "omega_z",
    "u_cmd",
    "omega_y_cmd",
    "omega_z_cmd",
    "x_u",
    "y_u",
    "z_u",
    "x_t",
    "y_t",
    "z_t",
    "sigma_u",
    "V2",
    "W2",
    "W4",
    "guard_flags",
];

const SIGNIFICANT: usize = 9;

/// Shortest decimal text with `SIGNIFICANT` significant digits, fixed
/// notation for moderate magnitudes and exponent notation otherwise.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..SIGNIFICANT as i32).contains(&exp) {
        let decimals = (SIGNIFICANT as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn row(s: &Sample) -> Vec<String> {
    let st = &s.state;
    let uav = s.uav_position();
    let tgt = st.target.position;
    let c = &s.command;
    let mut out: Vec<String> = [
        s.t,
        st.eng.r,
        st.eng.los.theta,
        st.eng.los.psi,
        st.eng.lead.theta,
        st.eng.lead.psi,
        s.v_u,
        st.act.omega_y,
        st.act.omega_z,
        c.u_cmd,
        c.omega_y_cmd,
        c.omega_z_cmd,
        uav.x,
        uav.y,
        uav.z,
        tgt.x,
        tgt.y,
        tgt.z,
        effective_heading(&st.eng.lead),
        s.v2,
        s.w2,
        s.w4,
    ]
    .iter()
    .map(|&v| format_sig(v))
    .collect();
    out.push(s.flags.bits().to_string());
    out
}

pub fn write_trajectory<W: Write>(traj: &TrajectoryRecord, w: W) -> Result<(), IoError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TRAJECTORY_COLUMNS)?;
    for s in &traj.samples {
        wr.write_record(row(s))?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trajectory_csv(traj: &TrajectoryRecord, path: &Path) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(file_error(path))?;
    write_trajectory(traj, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    /// SHA-256 of the resolved scenario's JSON.
    pub config_hash: String,
    pub dt: f64,
    pub substeps: u32,
    pub t_end: f64,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn of(scenario: &Scenario, seed: Option<u64>) -> Self {
        Self {
            config_hash: config_hash(scenario),
            dt: scenario.dt,
            substeps: scenario.substeps,
            t_end: scenario.t_end,
            version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsDocument {
    pub scenario: String,
    pub metrics: RunMetrics,
    pub provenance: Provenance,
}

impl MetricsDocument {
    pub fn new(scenario: &Scenario, metrics: RunMetrics, seed: Option<u64>) -> Self {
        Self {
            scenario: scenario.name.clone(),
            metrics,
            provenance: Provenance::of(scenario, seed),
        }
    }

    pub fn to_json(&self) -> Result<String, IoError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn config_hash(scenario: &Scenario) -> String {
    let bytes = serde_json::to_vec(scenario).expect("scenario serializes");
    hex::encode(Sha256::digest(&bytes))
}

pub fn write_metrics_json(doc: &MetricsDocument, path: &Path) -> Result<(), IoError> {
    fs::write(path, doc.to_json()? + "\n").map_err(file_error(path))
}

pub fn read_metrics_json(path: &Path) -> Result<MetricsDocument, IoError> {
    let text = fs::read_to_string(path).map_err(file_error(path))?;
    MetricsDocument::from_json(&text)
}

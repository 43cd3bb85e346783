//! CSV and JSON artifacts.
//!
//! Angles are written in degrees. Floats use the shortest representation
//! that parses back to the same value.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use glide_evade_core::engagement::EngagementResult;
use glide_evade_core::scp::IterationRecord;
use glide_evade_core::transcription::{DownrangeGrid, TrajectoryProfile};
use glide_evade_core::vehicle::{ControlInput, GlideState};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub const TRAJECTORY_HEADER: [&str; 10] = [
    "x_p",
    "t",
    "h",
    "y_p",
    "v",
    "theta_deg",
    "psi_deg",
    "sigma_deg",
    "alpha_deg",
    "sigma_dot_degps",
];

pub const HISTORY_HEADER: [&str; 10] = [
    "k",
    "dh",
    "dyp",
    "dv",
    "dtheta_deg",
    "dpsi_deg",
    "dsigma_deg",
    "objective",
    "status",
    "wall_s",
];

pub const ENGAGEMENT_HEADER: [&str; 12] = [
    "t", "hgv_x", "hgv_y", "hgv_h", "int1_x", "int1_y", "int1_h", "int2_x", "int2_y", "int2_h", "r1", "r2",
];

pub const BATCH_HEADER: [&str; 7] = ["mission", "PI1", "PI2", "iterations", "mean solve time", "miss1", "miss2"];

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: schema mismatch: {message}")]
    Schema { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> FormatError + '_ {
    move |source| FormatError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub x_p: f64,
    pub t: f64,
    pub h: f64,
    pub y_p: f64,
    pub v: f64,
    pub theta_deg: f64,
    pub psi_deg: f64,
    pub sigma_deg: f64,
    pub alpha_deg: f64,
    pub sigma_dot_degps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub k: usize,
    pub dh: f64,
    pub dyp: f64,
    pub dv: f64,
    pub dtheta_deg: f64,
    pub dpsi_deg: f64,
    pub dsigma_deg: f64,
    pub objective: f64,
    pub status: String,
    pub wall_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementRow {
    pub t: f64,
    pub hgv_x: f64,
    pub hgv_y: f64,
    pub hgv_h: f64,
    pub int1_x: f64,
    pub int1_y: f64,
    pub int1_h: f64,
    pub int2_x: Option<f64>,
    pub int2_y: Option<f64>,
    pub int2_h: Option<f64>,
    pub r1: f64,
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRow {
    pub mission: String,
    #[serde(rename = "PI1")]
    pub pi1: String,
    #[serde(rename = "PI2")]
    pub pi2: String,
    pub iterations: Option<usize>,
    #[serde(rename = "mean solve time")]
    pub mean_solve_time: Option<f64>,
    pub miss1: Option<f64>,
    pub miss2: Option<f64>,
}

pub fn trajectory_rows(profile: &TrajectoryProfile) -> Vec<TrajectoryRow> {
    profile
        .states
        .iter()
        .zip(&profile.controls)
        .enumerate()
        .map(|(i, (s, u))| TrajectoryRow {
            x_p: profile.grid.station(i),
            t: profile.times[i],
            h: s.h,
            y_p: s.y_p,
            v: s.v,
            theta_deg: s.theta.to_degrees(),
            psi_deg: s.psi.to_degrees(),
            sigma_deg: s.sigma.to_degrees(),
            alpha_deg: u.alpha.to_degrees(),
            sigma_dot_degps: u.sigma_dot.to_degrees(),
        })
        .collect()
}

/// Rebuilds a profile on the uniform grid the `x_p` column describes. Time is
/// recomputed from the states.
pub fn profile_from_rows(rows: &[TrajectoryRow], n_i: usize) -> Result<TrajectoryProfile, String> {
    if rows.len() < 3 {
        return Err(format!("need at least 3 rows, got {}", rows.len()));
    }
    let grid = DownrangeGrid::new(rows[0].x_p, rows.len() - 1, n_i).map_err(|e| e.to_string())?;
    let tol = 1e-9 * grid.x_p0;
    for (i, r) in rows.iter().enumerate() {
        if (r.x_p - grid.station(i)).abs() > tol {
            return Err(format!(
                "row {} has x_p = {} but a uniform grid puts it at {}",
                i + 1,
                r.x_p,
                grid.station(i)
            ));
        }
    }
    let states = rows
        .iter()
        .map(|r| {
            GlideState::new(
                r.h,
                r.y_p,
                r.v,
                r.theta_deg.to_radians(),
                r.psi_deg.to_radians(),
                r.sigma_deg.to_radians(),
            )
        })
        .collect();
    let controls = rows
        .iter()
        .map(|r| ControlInput::new(r.alpha_deg.to_radians(), r.sigma_dot_degps.to_radians()))
        .collect();
    TrajectoryProfile::new(grid, states, controls).map_err(|e| e.to_string())
}

/// The profile exactly as a trajectory CSV stores it. Degree conversion is
/// not invertible bit for bit, so anything that should agree with a
/// re-loaded file is computed from this.
pub fn as_written(profile: &TrajectoryProfile) -> TrajectoryProfile {
    profile_from_rows(&trajectory_rows(profile), profile.grid.n_i).expect("a valid profile survives its own rows")
}

pub fn history_rows(history: &[IterationRecord]) -> Vec<HistoryRow> {
    history
        .iter()
        .map(|r| HistoryRow {
            k: r.k,
            dh: r.state_deltas[0],
            dyp: r.state_deltas[1],
            dv: r.state_deltas[2],
            dtheta_deg: r.state_deltas[3].to_degrees(),
            dpsi_deg: r.state_deltas[4].to_degrees(),
            dsigma_deg: r.state_deltas[5].to_degrees(),
            objective: r.objective,
            status: r.solve_status.as_str().into(),
            wall_s: r.wall_time,
        })
        .collect()
}

pub fn engagement_rows(result: &EngagementResult) -> Vec<EngagementRow> {
    result
        .samples
        .iter()
        .map(|s| {
            let i1 = s.interceptors[0];
            let i2 = s.interceptors.get(1);
            EngagementRow {
                t: s.t,
                hgv_x: s.hgv.x,
                hgv_y: s.hgv.y,
                hgv_h: s.hgv.z,
                int1_x: i1.x,
                int1_y: i1.y,
                int1_h: i1.z,
                int2_x: i2.map(|p| p.x),
                int2_y: i2.map(|p| p.y),
                int2_h: i2.map(|p| p.z),
                r1: s.ranges[0],
                r2: s.ranges.get(1).copied(),
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<(), FormatError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| FormatError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(io_err(path))
}

/// Reads a CSV whose header must equal `header` exactly.
pub fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>, FormatError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err(path))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let found: Vec<String> = r.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    if found != header {
        return Err(FormatError::Schema {
            path: path.to_path_buf(),
            message: format!("expected columns {header:?}, found {found:?}"),
        });
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| FormatError::Schema {
                path: path.to_path_buf(),
                message: format!("row {}: {e}", i + 1),
            })
        })
        .collect()
}

pub fn write_trajectory(path: &Path, profile: &TrajectoryProfile) -> Result<(), FormatError> {
    write_csv(path, &TRAJECTORY_HEADER, &trajectory_rows(profile))
}

pub fn read_trajectory(path: &Path, n_i: usize) -> Result<TrajectoryProfile, FormatError> {
    let rows: Vec<TrajectoryRow> = read_csv(path, &TRAJECTORY_HEADER)?;
    profile_from_rows(&rows, n_i).map_err(|message| FormatError::Schema {
        path: path.to_path_buf(),
        message,
    })
}

pub fn write_history(path: &Path, history: &[IterationRecord]) -> Result<(), FormatError> {
    write_csv(path, &HISTORY_HEADER, &history_rows(history))
}

pub fn write_engagement(path: &Path, result: &EngagementResult) -> Result<(), FormatError> {
    write_csv(path, &ENGAGEMENT_HEADER, &engagement_rows(result))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

//! The four workflows behind the subcommands.
//!
//! `optimize` writes into its output directory:
//!
//! ```text
//! config.toml               resolved config, defaults and overrides included
//! iterations/iter_000.csv   initial guess
//! iterations/iter_NNN.csv   accepted iterate of outer iteration NNN
//! trajectory.csv            final iterate
//! history.csv               one row per outer iteration
//! engagement.csv            final iterate against the interceptors
//! engagement_initial.csv    initial guess against the interceptors
//! summary.json
//! ```
//!
//! `simulate` writes `engagement.csv`, `engagement_initial.csv` and
//! `summary.json`; `batch` writes `batch.csv`, `batch.json` and one
//! `optimize` layout per mission under `<mission name>/`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use glide_evade_core::conic::backend_by_name;
use glide_evade_core::engagement::EngagementResult;
use glide_evade_core::jacobian_check::{check_jacobians, sample_point, JacobianReport};
use glide_evade_core::linearize::linearize;
use glide_evade_core::mission::MissionConfig;
use glide_evade_core::scp::{Clock, ScpRun};
use glide_evade_core::transcription::TrajectoryProfile;
use glide_evade_core::vehicle::VehicleParams;
use glide_evade_core::Error as CoreError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{load_config, ConfigError, LoadedConfig, Overrides};
use crate::formats::{
    as_written, read_trajectory, write_csv, write_engagement, write_history, write_json, write_trajectory,
    BatchRow, FormatError, BATCH_HEADER,
};

pub const JACOBIAN_TOLERANCE: f64 = 1e-6;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// Output could not be written.
    pub const IO: i32 = 1;
    /// Bad command line, including a zero sample count.
    pub const USAGE: i32 = 2;
    /// Unreadable or invalid config, or an input file that breaks its schema.
    pub const CONFIG: i32 = 3;
    /// A subproblem was infeasible or the conic solver failed.
    pub const SOLVER: i32 = 4;
    pub const NON_CONVERGENCE: i32 = 5;
    pub const ENGAGEMENT: i32 = 6;
    /// An analytic Jacobian entry disagrees with finite differences.
    pub const JACOBIAN: i32 = 7;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(FormatError),
    #[error(transparent)]
    Output(FormatError),
    #[error("optimizer failed: {0}")]
    Solver(CoreError),
    #[error("optimizer stopped after {iterations} outer iterations without converging")]
    NonConvergence { iterations: usize },
    #[error("engagement simulation failed: {0}")]
    Engagement(CoreError),
    #[error("jacobian check failed for {}", .0.iter().map(|(n, e)| format!("{n} ({e:.3e})")).collect::<Vec<_>>().join(", "))]
    Jacobian(Vec<(String, f64)>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Config(_) | CliError::Input(_) => exit::CONFIG,
            CliError::Output(_) => exit::IO,
            CliError::Solver(_) => exit::SOLVER,
            CliError::NonConvergence { .. } => exit::NON_CONVERGENCE,
            CliError::Engagement(_) => exit::ENGAGEMENT,
            CliError::Jacobian(_) => exit::JACOBIAN,
        }
    }
}

fn optimizer_error(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidParameter(m) => CliError::Config(ConfigError::Invalid(m)),
        CoreError::NonConvergence { iterations } => CliError::NonConvergence { iterations },
        other => CliError::Solver(other),
    }
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| {
        CliError::Output(FormatError::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionReport {
    pub mission: MissionConfig,
    pub run: ScpRun,
    /// Final iterate against the interceptors.
    pub optimized: EngagementResult,
    /// Initial guess against the interceptors.
    pub baseline: EngagementResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalState {
    pub x_p: f64,
    pub t: f64,
    pub h: f64,
    pub y_p: f64,
    pub v: f64,
    pub theta_deg: f64,
    pub psi_deg: f64,
    pub sigma_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterceptorSummary {
    /// `(x_p, y_p, h)`, m.
    pub position: [f64; 3],
    pub miss_optimized: f64,
    pub miss_initial: f64,
    pub t_closest_optimized: f64,
    pub eta_node0_deg: f64,
    pub eta_node_ni_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissionSummary {
    pub mission: String,
    pub trust_mode: String,
    pub solver_backend: String,
    pub converged: bool,
    pub iterations: usize,
    pub total_solve_time_s: f64,
    pub mean_solve_time_s: f64,
    pub theta_ex_deg: f64,
    pub psi_ex_deg: f64,
    pub final_state: FinalState,
    pub interceptors: Vec<InterceptorSummary>,
}

impl MissionReport {
    pub fn mean_solve_time(&self) -> f64 {
        self.run.total_solve_time() / self.run.iterations().max(1) as f64
    }

    pub fn summary(&self) -> MissionSummary {
        let m = &self.mission;
        let expected = m.expected_angles().expect("validated mission");
        let p = &self.run.profile;
        let f = p.final_state();
        MissionSummary {
            mission: m.name.clone(),
            trust_mode: m.schedule.mode.name().into(),
            solver_backend: m.solver_backend.clone(),
            converged: self.run.converged,
            iterations: self.run.iterations(),
            total_solve_time_s: self.run.total_solve_time(),
            mean_solve_time_s: self.mean_solve_time(),
            theta_ex_deg: expected.theta_ex.to_degrees(),
            psi_ex_deg: expected.psi_ex.to_degrees(),
            final_state: FinalState {
                x_p: p.grid.station(p.grid.n),
                t: p.duration(),
                h: f.h,
                y_p: f.y_p,
                v: f.v,
                theta_deg: f.theta.to_degrees(),
                psi_deg: f.psi.to_degrees(),
                sigma_deg: f.sigma.to_degrees(),
            },
            interceptors: m
                .interceptors
                .iter()
                .enumerate()
                .map(|(k, cfg)| InterceptorSummary {
                    position: [cfg.position0.x, cfg.position0.y, cfg.position0.z],
                    miss_optimized: self.optimized.miss_distance[k],
                    miss_initial: self.baseline.miss_distance[k],
                    t_closest_optimized: self.optimized.t_closest[k],
                    eta_node0_deg: self.optimized.eta_history[k][0].to_degrees(),
                    eta_node_ni_deg: self.optimized.eta_history[k][m.n_i].to_degrees(),
                })
                .collect(),
        }
    }
}

fn engage(mission: &MissionConfig, profile: &TrajectoryProfile) -> Result<EngagementResult, CliError> {
    mission.engage(&as_written(profile)).map_err(CliError::Engagement)
}

/// Runs the optimizer and the engagement of both the initial guess and the
/// final iterate, writing the `optimize` layout into `out_dir`.
/// Non-convergence is reported through `run.converged`; the artifacts are
/// written either way.
pub fn optimize(loaded: &LoadedConfig, out_dir: &Path) -> Result<MissionReport, CliError> {
    let mission = &loaded.mission;
    let iter_dir = out_dir.join("iterations");
    create_dir(&iter_dir)?;
    std::fs::write(out_dir.join("config.toml"), loaded.file.to_toml()).map_err(|source| {
        CliError::Output(FormatError::Io {
            path: out_dir.join("config.toml"),
            source,
        })
    })?;
    let mut backend = backend_by_name(&mission.solver_backend).map_err(optimizer_error)?;
    let run = mission.optimize(backend.as_mut(), &WallClock::new()).map_err(optimizer_error)?;

    write_trajectory(&iter_dir.join("iter_000.csv"), &run.initial).map_err(CliError::Output)?;
    for (k, p) in run.iterates.iter().enumerate() {
        write_trajectory(&iter_dir.join(format!("iter_{:03}.csv", k + 1)), p).map_err(CliError::Output)?;
    }
    write_trajectory(&out_dir.join("trajectory.csv"), &run.profile).map_err(CliError::Output)?;
    write_history(&out_dir.join("history.csv"), &run.history).map_err(CliError::Output)?;

    let optimized = engage(mission, &run.profile)?;
    let baseline = engage(mission, &run.initial)?;
    write_engagement(&out_dir.join("engagement.csv"), &optimized).map_err(CliError::Output)?;
    write_engagement(&out_dir.join("engagement_initial.csv"), &baseline).map_err(CliError::Output)?;
    let report = MissionReport {
        mission: mission.clone(),
        run,
        optimized,
        baseline,
    };
    write_json(&out_dir.join("summary.json"), &report.summary()).map_err(CliError::Output)?;
    log::info!(
        "{}: converged={} iterations={} miss={:?} (initial guess {:?})",
        mission.name,
        report.run.converged,
        report.run.iterations(),
        report.optimized.miss_distance,
        report.baseline.miss_distance
    );
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub mission: String,
    pub trajectory: PathBuf,
    pub miss: Vec<f64>,
    pub miss_initial: Vec<f64>,
    pub t_closest: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub trajectory: EngagementResult,
    pub baseline: EngagementResult,
}

/// Flies a trajectory CSV and the mission's initial guess against the
/// interceptors.
pub fn simulate(loaded: &LoadedConfig, trajectory: &Path, out_dir: &Path) -> Result<SimulationReport, CliError> {
    let mission = &loaded.mission;
    let profile = read_trajectory(trajectory, mission.n_i).map_err(CliError::Input)?;
    let expected = mission.grid()?;
    if profile.grid.n != expected.n || (profile.grid.x_p0 - expected.x_p0).abs() > 1e-9 * expected.x_p0 {
        return Err(CliError::Input(FormatError::Schema {
            path: trajectory.to_path_buf(),
            message: format!(
                "grid x_p0 = {} m, N = {} does not match the config (x_p0 = {} m, N = {})",
                profile.grid.x_p0, profile.grid.n, expected.x_p0, expected.n
            ),
        }));
    }
    create_dir(out_dir)?;
    let result = mission.engage(&profile).map_err(CliError::Engagement)?;
    let initial = mission.initial_guess().map_err(optimizer_error)?;
    let baseline = engage(mission, &initial)?;
    write_engagement(&out_dir.join("engagement.csv"), &result).map_err(CliError::Output)?;
    write_engagement(&out_dir.join("engagement_initial.csv"), &baseline).map_err(CliError::Output)?;
    let summary = SimulationSummary {
        mission: mission.name.clone(),
        trajectory: trajectory.to_path_buf(),
        miss: result.miss_distance.clone(),
        miss_initial: baseline.miss_distance.clone(),
        t_closest: result.t_closest.clone(),
    };
    write_json(&out_dir.join("summary.json"), &summary).map_err(CliError::Output)?;
    Ok(SimulationReport {
        trajectory: result,
        baseline,
    })
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        optimizer_error(e)
    }
}

/// Interceptor position as `(h,x,y)` in km.
fn position_label(mission: Option<&MissionConfig>, k: usize) -> String {
    mission
        .and_then(|m| m.interceptors.get(k))
        .map(|i| {
            let p = i.position0;
            format!("({},{},{})", p.z / 1e3, p.x / 1e3, p.y / 1e3)
        })
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchEntry {
    pub mission: String,
    pub config: PathBuf,
    /// `converged`, `not_converged` or `failed`.
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<MissionSummary>,
}

#[derive(Debug)]
pub struct BatchReport {
    pub rows: Vec<BatchRow>,
    pub entries: Vec<BatchEntry>,
    pub reports: Vec<Result<MissionReport, CliError>>,
}

impl BatchReport {
    /// Exit code of the first mission that did not converge cleanly.
    pub fn exit_code(&self) -> i32 {
        self.entries
            .iter()
            .map(|e| e.exit_code)
            .find(|&c| c != exit::SUCCESS)
            .unwrap_or(exit::SUCCESS)
    }
}

fn batch_one(path: &Path, overrides: &Overrides, out_dir: &Path) -> (String, Option<MissionConfig>, Result<MissionReport, CliError>) {
    let fallback = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mission").to_string();
    match load_config(path, overrides) {
        Ok(loaded) => {
            let name = loaded.mission.name.clone();
            let outcome = optimize(&loaded, &out_dir.join(&name));
            (name, Some(loaded.mission), outcome)
        }
        Err(e) => (fallback, None, Err(e.into())),
    }
}

/// Optimizes every config, up to `jobs` at a time. A failing mission is
/// recorded and the rest still run.
pub fn batch(configs: &[PathBuf], overrides: &Overrides, out_dir: &Path, jobs: usize) -> Result<BatchReport, CliError> {
    use rayon::prelude::*;
    if configs.is_empty() {
        return Err(CliError::Usage("batch needs at least one config".into()));
    }
    if jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    create_dir(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| {
        configs
            .par_iter()
            .map(|path| batch_one(path, overrides, out_dir))
            .collect()
    });

    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut reports = Vec::new();
    for ((name, mission, outcome), path) in outcomes.into_iter().zip(configs) {
        let miss = |k: usize| match &outcome {
            Ok(r) => r.optimized.miss_distance.get(k).copied(),
            Err(_) => None,
        };
        rows.push(BatchRow {
            mission: name.clone(),
            pi1: position_label(mission.as_ref(), 0),
            pi2: position_label(mission.as_ref(), 1),
            iterations: outcome.as_ref().ok().map(|r| r.run.iterations()),
            mean_solve_time: outcome.as_ref().ok().map(|r| r.mean_solve_time()),
            miss1: miss(0),
            miss2: miss(1),
        });
        let entry = match &outcome {
            Ok(r) if r.run.converged => BatchEntry {
                mission: name,
                config: path.clone(),
                status: "converged".into(),
                exit_code: exit::SUCCESS,
                error: None,
                summary: Some(r.summary()),
            },
            Ok(r) => BatchEntry {
                mission: name,
                config: path.clone(),
                status: "not_converged".into(),
                exit_code: exit::NON_CONVERGENCE,
                error: None,
                summary: Some(r.summary()),
            },
            Err(e) => {
                log::warn!("{name}: {e}");
                BatchEntry {
                    mission: name,
                    config: path.clone(),
                    status: "failed".into(),
                    exit_code: e.exit_code(),
                    error: Some(e.to_string()),
                    summary: None,
                }
            }
        };
        entries.push(entry);
        reports.push(outcome);
    }
    write_csv(&out_dir.join("batch.csv"), &BATCH_HEADER, &rows).map_err(CliError::Output)?;
    write_json(&out_dir.join("batch.json"), &entries).map_err(CliError::Output)?;
    Ok(BatchReport {
        rows,
        entries,
        reports,
    })
}

/// Deliberate error injected into one analytic Jacobian entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianFault {
    /// `(row, column)` of `A`, zero-based.
    pub entry: (usize, usize),
    /// Relative perturbation.
    pub scale: f64,
}

impl JacobianFault {
    /// Parses `Aij` with one-based indices, e.g. `A44`.
    pub fn parse(s: &str) -> Option<Self> {
        let b = s.as_bytes();
        if b.len() != 3 || b[0] != b'A' {
            return None;
        }
        let digit = |c: u8| (b'1'..=b'6').contains(&c).then(|| (c - b'1') as usize);
        Some(Self {
            entry: (digit(b[1])?, digit(b[2])?),
            scale: 1e-3,
        })
    }
}

/// Analytic Jacobians against central differences at `samples` seeded
/// random in-domain points. Judge the report with [`check_report`].
pub fn verify_jacobians(
    params: &VehicleParams,
    samples: usize,
    seed: u64,
    fault: Option<JacobianFault>,
) -> Result<JacobianReport, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("verify-jacobians needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<_> = (0..samples)
        .map(|_| sample_point(std::array::from_fn(|_| rng.gen()), params))
        .collect();
    let report = check_jacobians(&points, params, |x, u, p| {
        let mut node = linearize(x, u, p)?;
        if let Some(f) = fault {
            let (i, j) = f.entry;
            let a = node.a[i][j];
            node.a[i][j] = if a == 0.0 { f.scale } else { a * (1.0 + f.scale) };
        }
        Ok(node)
    })
    .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(report)
}

/// `Err(CliError::Jacobian)` naming every entry above [`JACOBIAN_TOLERANCE`].
pub fn check_report(report: &JacobianReport) -> Result<(), CliError> {
    let failures = report.failures(JACOBIAN_TOLERANCE);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Jacobian(failures))
    }
}

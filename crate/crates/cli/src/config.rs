//! Mission configuration files.
//!
//! A config is a TOML document with one table per concern. Every key is
//! optional except `interceptor.positions`; omitted keys take the defaults
//! below. Angles are in degrees here and converted to radians only when the
//! file is resolved into a [`MissionConfig`].
//!
//! ```toml
//! name = "mission1"
//!
//! [hgv]                 # initial state; x_p is the downrange to the target
//! h = 30000.0           # m
//! x_p = 600000.0        # m
//! y_p = 0.0             # m
//! v = 2500.0            # m/s
//! theta_deg = 0.0
//! psi_deg = 180.0
//! sigma_deg = 0.0
//!
//! [vehicle]
//! mass = 802.2          # kg
//! ref_area = 1.0        # m^2
//! cl0 = -0.013
//! cl_alpha = 1.833      # 1/rad
//! cd0 = 0.015
//! cd_alpha2 = 4.596     # 1/rad^2
//! rho0 = 1.225          # kg/m^3
//! scale_height = 6700.0 # m
//! gravity = 9.81        # m/s^2
//! alpha_min_deg = -4.0
//! alpha_max_deg = 10.0
//! sigma_dot_max_degps = 5.0
//!
//! [grid]
//! n = 200               # intervals
//! n_i = 50              # maneuver window, nodes
//!
//! [interceptor]
//! speed = 1500.0        # m/s
//! nav_constant = 5.0
//! max_accel = 58.86     # m/s^2
//! heading_mode = "at_hgv_initial"   # or "along_los"
//! positions = [[450000.0, -5000.0, 0.0], [450000.0, 10000.0, 0.0]]  # (x_p, y_p, h), m
//!
//! [objective]
//! c_theta = 1e-6
//! chi_deg = 0.5
//!
//! [trust_region]
//! mode = "variable"     # variable | constant | linesearch
//! delta0 = [5000.0, 5000.0, 1000.0, 40.0, 40.0, 40.0]  # h, y_p (m), v (m/s), theta, psi, sigma (deg)
//! # constant = [2000.0, 5000.0, 500.0, 20.0, 20.0, 20.0]  # radius for mode "constant", defaults to delta0
//! l1 = 2.5
//! l2 = 5.0
//!
//! [stop]
//! epsilon = [300.0, 500.0, 50.0, 0.5, 0.5, 2.0]  # same units as delta0
//! max_outer_iter = 100
//!
//! [solver]
//! backend = "builtin"
//! tol_feas = 1e-8
//! tol_gap = 1e-8
//! max_iter = 200
//!
//! [initial_guess]       # constant control of the first reference
//! alpha_deg = 2.0
//! sigma_dot_degps = 0.0
//!
//! [engagement]
//! dt = 0.001            # s
//! record_every = 100    # steps per engagement CSV row
//! ```

use std::fmt;
use std::path::Path;

use glide_evade_core::conic::{backend_by_name, InteriorPointSolver, SolverSettings};
use glide_evade_core::engagement::{
    EngagementSettings, HeadingMode, InterceptorConfig, DEFAULT_INTERCEPTOR_SPEED, DEFAULT_MAX_ACCEL,
    DEFAULT_NAV_CONSTANT,
};
use glide_evade_core::geometry::Vec3;
use glide_evade_core::mission::{MissionConfig, DEFAULT_C_THETA, DEFAULT_L1, DEFAULT_L2, DEFAULT_N, DEFAULT_N_I};
use glide_evade_core::scp::{StopCriteria, TrustMode, TrustRegionSchedule, DEFAULT_MAX_OUTER_ITER};
use glide_evade_core::vehicle::{ControlInput, GlideState, VehicleParams, StateVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    /// Unreadable file or malformed TOML; the message carries line and column.
    Parse(String),
    /// Well-formed file describing an invalid mission.
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustModeName {
    Variable,
    Constant,
    Linesearch,
}

impl TrustModeName {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "variable" => Some(Self::Variable),
            "constant" => Some(Self::Constant),
            "linesearch" => Some(Self::Linesearch),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HgvSection {
    pub h: f64,
    pub x_p: f64,
    pub y_p: f64,
    pub v: f64,
    pub theta_deg: f64,
    pub psi_deg: f64,
    pub sigma_deg: f64,
}

impl Default for HgvSection {
    fn default() -> Self {
        Self {
            h: 30e3,
            x_p: 600e3,
            y_p: 0.0,
            v: 2500.0,
            theta_deg: 0.0,
            psi_deg: 180.0,
            sigma_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleSection {
    pub mass: f64,
    pub ref_area: f64,
    pub cl0: f64,
    pub cl_alpha: f64,
    pub cd0: f64,
    pub cd_alpha2: f64,
    pub rho0: f64,
    pub scale_height: f64,
    pub gravity: f64,
    pub alpha_min_deg: f64,
    pub alpha_max_deg: f64,
    pub sigma_dot_max_degps: f64,
}

impl Default for VehicleSection {
    fn default() -> Self {
        let p = VehicleParams::default();
        Self {
            mass: p.mass,
            ref_area: p.ref_area,
            cl0: p.cl0,
            cl_alpha: p.cl_alpha,
            cd0: p.cd0,
            cd_alpha2: p.cd_alpha2,
            rho0: p.rho0,
            scale_height: p.scale_height,
            gravity: p.gravity,
            alpha_min_deg: -4.0,
            alpha_max_deg: 10.0,
            sigma_dot_max_degps: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub n_i: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: DEFAULT_N,
            n_i: DEFAULT_N_I,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterceptorSection {
    pub speed: f64,
    pub nav_constant: f64,
    pub max_accel: f64,
    pub heading_mode: String,
    pub positions: Vec<[f64; 3]>,
}

impl Default for InterceptorSection {
    fn default() -> Self {
        Self {
            speed: DEFAULT_INTERCEPTOR_SPEED,
            nav_constant: DEFAULT_NAV_CONSTANT,
            max_accel: DEFAULT_MAX_ACCEL,
            heading_mode: HeadingMode::default().as_str().into(),
            positions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveSection {
    pub c_theta: f64,
    pub chi_deg: f64,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        Self {
            c_theta: DEFAULT_C_THETA,
            chi_deg: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrustRegionSection {
    pub mode: TrustModeName,
    pub delta0: [f64; 6],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<[f64; 6]>,
    pub l1: f64,
    pub l2: f64,
}

impl Default for TrustRegionSection {
    fn default() -> Self {
        Self {
            mode: TrustModeName::Variable,
            delta0: [5000.0, 5000.0, 1000.0, 40.0, 40.0, 40.0],
            constant: None,
            l1: DEFAULT_L1,
            l2: DEFAULT_L2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopSection {
    pub epsilon: [f64; 6],
    pub max_outer_iter: usize,
}

impl Default for StopSection {
    fn default() -> Self {
        Self {
            epsilon: [300.0, 500.0, 50.0, 0.5, 0.5, 2.0],
            max_outer_iter: DEFAULT_MAX_OUTER_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub backend: String,
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
    pub static_regularization: f64,
    pub refinement_steps: usize,
    pub equilibration_passes: usize,
    pub step_fraction: f64,
    pub presolve: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            backend: InteriorPointSolver::NAME.into(),
            tol_feas: s.tol_feas,
            tol_gap: s.tol_gap,
            max_iter: s.max_iter,
            static_regularization: s.static_regularization,
            refinement_steps: s.refinement_steps,
            equilibration_passes: s.equilibration_passes,
            step_fraction: s.step_fraction,
            presolve: s.presolve,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialGuessSection {
    pub alpha_deg: f64,
    pub sigma_dot_degps: f64,
}

impl Default for InitialGuessSection {
    fn default() -> Self {
        Self {
            alpha_deg: 2.0,
            sigma_dot_degps: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngagementSection {
    pub dt: f64,
    pub record_every: usize,
}

impl Default for EngagementSection {
    fn default() -> Self {
        let e = EngagementSettings::default();
        Self {
            dt: e.dt,
            record_every: e.record_every,
        }
    }
}

/// A config file with every default filled in.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub hgv: HgvSection,
    pub vehicle: VehicleSection,
    pub grid: GridSection,
    pub interceptor: InterceptorSection,
    pub objective: ObjectiveSection,
    pub trust_region: TrustRegionSection,
    pub stop: StopSection,
    pub solver: SolverSection,
    pub initial_guess: InitialGuessSection,
    pub engagement: EngagementSection,
}

/// Overrides from the command line, applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub solver_backend: Option<String>,
    pub trust_mode: Option<TrustModeName>,
}

fn deg_vector(v: [f64; 6]) -> StateVector {
    [v[0], v[1], v[2], v[3].to_radians(), v[4].to_radians(), v[5].to_radians()]
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt {
            self.engagement.dt = dt;
        }
        if let Some(b) = &o.solver_backend {
            self.solver.backend = b.clone();
        }
        if let Some(m) = o.trust_mode {
            self.trust_region.mode = m;
        }
    }

    /// The resolved config as TOML, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Converts to internal units and validates the result.
    pub fn resolve(&self, default_name: &str) -> Result<MissionConfig, ConfigError> {
        let invalid = |m: String| ConfigError::Invalid(m);
        if self.interceptor.positions.is_empty() {
            return Err(invalid("interceptor.positions must list one or two (x_p, y_p, h) positions".into()));
        }
        let heading0_mode = HeadingMode::parse(&self.interceptor.heading_mode).ok_or_else(|| {
            invalid(format!(
                "interceptor.heading_mode must be \"at_hgv_initial\" or \"along_los\", got \"{}\"",
                self.interceptor.heading_mode
            ))
        })?;
        backend_by_name(&self.solver.backend).map_err(|e| invalid(format!("solver.backend: {e}")))?;
        let h = &self.hgv;
        let v = &self.vehicle;
        let tr = &self.trust_region;
        let delta0 = deg_vector(tr.delta0);
        let mode = match tr.mode {
            TrustModeName::Variable => TrustMode::VariableSigmoid,
            TrustModeName::Constant => TrustMode::Constant(deg_vector(tr.constant.unwrap_or(tr.delta0))),
            TrustModeName::Linesearch => TrustMode::LineSearch,
        };
        let mission = MissionConfig {
            name: self.name.clone().unwrap_or_else(|| default_name.into()),
            x_p0: h.x_p,
            initial_state: GlideState::new(
                h.h,
                h.y_p,
                h.v,
                h.theta_deg.to_radians(),
                h.psi_deg.to_radians(),
                h.sigma_deg.to_radians(),
            ),
            vehicle: VehicleParams {
                mass: v.mass,
                ref_area: v.ref_area,
                cl0: v.cl0,
                cl_alpha: v.cl_alpha,
                cd0: v.cd0,
                cd_alpha2: v.cd_alpha2,
                rho0: v.rho0,
                scale_height: v.scale_height,
                gravity: v.gravity,
                alpha_min: v.alpha_min_deg.to_radians(),
                alpha_max: v.alpha_max_deg.to_radians(),
                sigma_dot_max: v.sigma_dot_max_degps.to_radians(),
            },
            n: self.grid.n,
            n_i: self.grid.n_i,
            interceptors: self
                .interceptor
                .positions
                .iter()
                .map(|p| InterceptorConfig {
                    position0: Vec3::new(p[0], p[1], p[2]),
                    speed: self.interceptor.speed,
                    nav_constant: self.interceptor.nav_constant,
                    max_accel: self.interceptor.max_accel,
                    heading0_mode,
                })
                .collect(),
            c_theta: self.objective.c_theta,
            chi: self.objective.chi_deg.to_radians(),
            schedule: TrustRegionSchedule {
                delta0,
                l1: tr.l1,
                l2: tr.l2,
                mode,
            },
            stop: StopCriteria {
                epsilon: deg_vector(self.stop.epsilon),
                max_outer_iter: self.stop.max_outer_iter,
            },
            solver: SolverSettings {
                tol_feas: self.solver.tol_feas,
                tol_gap: self.solver.tol_gap,
                max_iter: self.solver.max_iter,
                static_regularization: self.solver.static_regularization,
                refinement_steps: self.solver.refinement_steps,
                equilibration_passes: self.solver.equilibration_passes,
                step_fraction: self.solver.step_fraction,
                presolve: self.solver.presolve,
            },
            solver_backend: self.solver.backend.clone(),
            initial_control: ControlInput::new(
                self.initial_guess.alpha_deg.to_radians(),
                self.initial_guess.sigma_dot_degps.to_radians(),
            ),
            engagement: EngagementSettings {
                dt: self.engagement.dt,
                record_every: self.engagement.record_every,
            },
        };
        mission.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(mission)
    }
}

/// A loaded config: the file with defaults and overrides applied, and the
/// mission it resolves to.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub file: FileConfig,
    pub mission: MissionConfig,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
    let mut file = FileConfig::parse(&text).map_err(|e| match e {
        ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    file.apply(overrides);
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mission");
    let mission = file.resolve(stem)?;
    file.name = Some(mission.name.clone());
    log::info!("resolved config {}:\n{}", path.display(), file.to_toml());
    Ok(LoadedConfig { file, mission })
}

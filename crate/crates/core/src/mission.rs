//! Mission scenarios: initial state, interceptor layout and optimizer settings.

use core::f64::consts::PI;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::conic::{ConicBackend, SolverSettings};
use crate::engagement::{engage_with, EngagementResult, EngagementSettings, InterceptorConfig};
use crate::geometry::Vec3;
use crate::scp::{iterate, Clock, ScpRun, ScpSettings, StopCriteria, TrustMode, TrustRegionSchedule, DEFAULT_MAX_OUTER_ITER};
use crate::strategy::{expected_for_positions, ExpectedAngles, DEFAULT_CHI};
use crate::transcription::{DownrangeGrid, ObjectiveSpec, TrajectoryProfile};
use crate::vehicle::{propagate, ControlInput, GlideState, StateVector, VehicleParams};
use crate::{Error, Result};

const DEG: f64 = PI / 180.0;

pub const DEFAULT_DELTA0: StateVector = [5000.0, 5000.0, 1000.0, 40.0 * DEG, 40.0 * DEG, 40.0 * DEG];
pub const SMALL_DELTA: StateVector = [2000.0, 5000.0, 500.0, 20.0 * DEG, 20.0 * DEG, 20.0 * DEG];
pub const DEFAULT_EPSILON: StateVector = [300.0, 500.0, 50.0, 0.5 * DEG, 0.5 * DEG, 2.0 * DEG];
pub const DEFAULT_L1: f64 = 2.5;
pub const DEFAULT_L2: f64 = 5.0;
pub const DEFAULT_C_THETA: f64 = 1e-6;
pub const DEFAULT_N: usize = 200;
pub const DEFAULT_N_I: usize = 50;
/// Interceptor launch speed used by the bundled missions, m/s.
pub const MISSION_INTERCEPTOR_SPEED: f64 = 1200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub name: String,
    /// Initial downrange distance to the target, m.
    pub x_p0: f64,
    pub initial_state: GlideState,
    pub vehicle: VehicleParams,
    pub n: usize,
    /// Node at which the evasive heading must be reached.
    pub n_i: usize,
    pub interceptors: Vec<InterceptorConfig>,
    pub c_theta: f64,
    /// Evasion margin, rad.
    pub chi: f64,
    pub schedule: TrustRegionSchedule,
    pub stop: StopCriteria,
    pub solver: SolverSettings,
    pub solver_backend: String,
    /// Constant control used to build the initial guess.
    pub initial_control: ControlInput,
    pub engagement: EngagementSettings,
}

impl MissionConfig {
    fn base(name: &str, interceptors: [(f64, f64, f64); 2]) -> Self {
        Self {
            name: name.into(),
            x_p0: 600e3,
            initial_state: GlideState::new(30e3, 0.0, 2500.0, 0.0, PI, 0.0),
            vehicle: VehicleParams::default(),
            n: DEFAULT_N,
            n_i: DEFAULT_N_I,
            interceptors: interceptors
                .iter()
                .map(|&(h, x, y)| InterceptorConfig {
                    speed: MISSION_INTERCEPTOR_SPEED,
                    ..InterceptorConfig::at(Vec3::new(x, y, h))
                })
                .collect(),
            c_theta: DEFAULT_C_THETA,
            chi: DEFAULT_CHI,
            schedule: TrustRegionSchedule {
                delta0: DEFAULT_DELTA0,
                l1: DEFAULT_L1,
                l2: DEFAULT_L2,
                mode: TrustMode::VariableSigmoid,
            },
            stop: StopCriteria {
                epsilon: DEFAULT_EPSILON,
                max_outer_iter: DEFAULT_MAX_OUTER_ITER,
            },
            solver: SolverSettings::default(),
            solver_backend: crate::conic::InteriorPointSolver::NAME.into(),
            initial_control: ControlInput::new(2.0 * DEG, 0.0),
            engagement: EngagementSettings::default(),
        }
    }

    /// Interceptors on either side of the initial ground track.
    pub fn mission1() -> Self {
        Self::base("mission1", [(0.0, 450e3, -5e3), (0.0, 450e3, 10e3)])
    }

    /// Both interceptors on the negative-crossrange side.
    pub fn mission2() -> Self {
        Self::base("mission2", [(0.0, 450e3, -5e3), (0.0, 450e3, -10e3)])
    }

    /// Both interceptors on the positive-crossrange side.
    pub fn mission3() -> Self {
        Self::base("mission3", [(0.0, 450e3, 15e3), (0.0, 450e3, 10e3)])
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "mission1" => Some(Self::mission1()),
            "mission2" => Some(Self::mission2()),
            "mission3" => Some(Self::mission3()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_p0 > 0.0 && self.x_p0.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("x_p0 must be positive, got {}", self.x_p0)));
        }
        self.initial_state
            .check_domain()
            .map_err(|e| Error::InvalidParameter(alloc::format!("initial state: {e}")))?;
        self.vehicle.validate()?;
        self.grid()?;
        if self.interceptors.is_empty() || self.interceptors.len() > 2 {
            return Err(Error::InvalidParameter(alloc::format!(
                "one or two interceptors are supported, got {}",
                self.interceptors.len()
            )));
        }
        for i in &self.interceptors {
            i.validate()?;
        }
        if !(self.c_theta >= 0.0 && self.c_theta.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("c_theta must be non-negative, got {}", self.c_theta)));
        }
        if !(self.chi > 0.0 && self.chi < PI / 2.0) {
            return Err(Error::InvalidParameter(alloc::format!("chi must lie in (0, pi/2), got {}", self.chi)));
        }
        if !(self.engagement.dt > 0.0 && self.engagement.dt.is_finite()) || self.engagement.record_every == 0 {
            return Err(Error::InvalidParameter(alloc::format!(
                "invalid engagement settings {:?}",
                self.engagement
            )));
        }
        self.schedule.validate()?;
        self.stop.validate()?;
        self.solver.validate()
    }

    /// Fails for `n_i > n` or `n = 0`.
    pub fn grid(&self) -> Result<DownrangeGrid> {
        DownrangeGrid::new(self.x_p0, self.n, self.n_i)
    }

    pub fn hgv_position0(&self) -> Vec3 {
        Vec3::new(self.x_p0, self.initial_state.y_p, self.initial_state.h)
    }

    pub fn expected_angles(&self) -> Result<ExpectedAngles> {
        let positions: Vec<Vec3> = self.interceptors.iter().map(|i| i.position0).collect();
        expected_for_positions(self.hgv_position0(), &positions, self.chi)
    }

    pub fn objective(&self) -> Result<ObjectiveSpec> {
        ObjectiveSpec::new(&self.grid()?, &self.expected_angles()?, self.c_theta)
    }

    /// RK4 propagation of the constant initial control.
    pub fn initial_guess(&self) -> Result<TrajectoryProfile> {
        let grid = self.grid()?;
        let controls = vec![self.initial_control; grid.num_nodes()];
        propagate(&self.initial_state, &controls, &grid, &self.vehicle, 1)
    }

    pub fn scp_settings(&self) -> ScpSettings {
        ScpSettings {
            schedule: self.schedule,
            stop: self.stop,
            solver: self.solver,
        }
    }

    /// Runs the optimizer from the initial guess.
    pub fn optimize(&self, backend: &mut dyn ConicBackend, clock: &dyn Clock) -> Result<ScpRun> {
        self.validate()?;
        iterate(
            self.initial_guess()?,
            &self.objective()?,
            &self.vehicle,
            &self.scp_settings(),
            backend,
            clock,
        )
    }

    pub fn engage(&self, profile: &TrajectoryProfile) -> Result<EngagementResult> {
        engage_with(profile, &self.interceptors, &self.engagement)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_missions_validate() {
        for name in ["mission1", "mission2", "mission3"] {
            let m = MissionConfig::builtin(name).unwrap();
            m.validate().unwrap();
            assert_eq!(m.name, name);
            assert_eq!(m.interceptors.len(), 2);
        }
        assert!(MissionConfig::builtin("mission4").is_none());
    }

    #[test]
    fn mission1_expected_angles() {
        let e = MissionConfig::mission1().expected_angles().unwrap();
        assert!((e.theta_ex - 1.373_826_734_387_238_8).abs() < 1e-9);
        assert!((e.psi_ex - 3.124_969_069_641_005).abs() < 1e-9);
    }

    #[test]
    fn invalid_layouts_rejected() {
        let mut m = MissionConfig::mission1();
        m.n_i = m.n + 1;
        assert!(m.validate().is_err());
        let mut m = MissionConfig::mission1();
        m.x_p0 = 0.0;
        assert!(m.validate().is_err());
        let mut m = MissionConfig::mission1();
        m.interceptors.clear();
        assert!(m.validate().is_err());
        let mut m = MissionConfig::mission1();
        m.engagement.dt = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn initial_guess_spans_grid() {
        let m = MissionConfig::mission1();
        let g = m.initial_guess().unwrap();
        assert_eq!(g.states.len(), m.n + 1);
        assert_eq!(g.states[0], m.initial_state);
        assert!(g.controls.iter().all(|u| *u == m.initial_control));
        // Zero bank keeps the guess on the ground track.
        assert!(g.states.iter().all(|s| s.y_p.abs() < 1e-9));
    }
}

//! Successive second-order cone programming with a sigmoid-shrinking trust
//! region, plus constant-radius and line-search variants for comparison.

use alloc::vec::Vec;

use num_traits::Float;

use crate::conic::{ConicBackend, SolveStatus, SolverSettings};
use crate::transcription::{assemble, ObjectiveSpec, TrajectoryProfile, VariableLayout, STATE_SCALE};
use crate::vehicle::{downrange_derivatives, ControlInput, GlideState, StateVector, VehicleParams};
use crate::{Error, Result};

pub const DEFAULT_MAX_OUTER_ITER: usize = 100;

/// Penalty weight on the scaled trapezoid defect in the line-search merit.
pub const MERIT_DEFECT_WEIGHT: f64 = 1e4;

/// Backtracking stops after `lambda = 2^-LINE_SEARCH_HALVINGS`.
pub const LINE_SEARCH_HALVINGS: u32 = 8;

/// `1 / (1 + exp(k / l1 - l2))`.
pub fn sgm(k: usize, l1: f64, l2: f64) -> f64 {
    1.0 / (1.0 + (k as f64 / l1 - l2).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrustMode {
    /// `delta(k) = sgm(k) * delta0`.
    VariableSigmoid,
    Constant(StateVector),
    /// Fixed `delta0` box with a backtracking step toward each subproblem
    /// solution.
    LineSearch,
}

impl TrustMode {
    pub fn name(&self) -> &'static str {
        match self {
            TrustMode::VariableSigmoid => "variable",
            TrustMode::Constant(_) => "constant",
            TrustMode::LineSearch => "linesearch",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustRegionSchedule {
    pub delta0: StateVector,
    pub l1: f64,
    pub l2: f64,
    pub mode: TrustMode,
}

impl TrustRegionSchedule {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: &StateVector| v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !positive(&self.delta0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "trust-region delta0 must be positive, got {:?}",
                self.delta0
            )));
        }
        if let TrustMode::Constant(r) = &self.mode {
            if !positive(r) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "constant trust-region radius must be positive, got {r:?}"
                )));
            }
        }
        if !(self.l1 > 0.0 && self.l2 > 0.0 && self.l1.is_finite() && self.l2.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "sigmoid shape constants must be positive, got l1 = {}, l2 = {}",
                self.l1,
                self.l2
            )));
        }
        Ok(())
    }

    /// Radius for the subproblem solved at outer iteration `k` (from 0).
    pub fn radius(&self, k: usize) -> StateVector {
        match self.mode {
            TrustMode::VariableSigmoid => self.delta0.map(|d| sgm(k, self.l1, self.l2) * d),
            TrustMode::Constant(r) => r,
            TrustMode::LineSearch => self.delta0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub epsilon: StateVector,
    pub max_outer_iter: usize,
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Error::InvalidParameter(alloc::format!(
                "stopping tolerances must be non-negative, got {:?}",
                self.epsilon
            )));
        }
        if self.max_outer_iter == 0 {
            return Err(Error::InvalidParameter("max_outer_iter must be >= 1".into()));
        }
        Ok(())
    }

    pub fn met(&self, deltas: &StateVector) -> bool {
        deltas.iter().zip(&self.epsilon).all(|(d, e)| d <= e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1 for the first subproblem.
    pub k: usize,
    /// `max_i |x_i^(k) - x_i^(k-1)|` per state component.
    pub state_deltas: StateVector,
    /// Objective of the accepted iterate.
    pub objective: f64,
    pub solve_status: SolveStatus,
    pub solver_iterations: usize,
    /// Wall time of the subproblem solve, s.
    pub wall_time: f64,
    pub radius: StateVector,
    /// Accepted fraction of the step to the subproblem solution; 1 outside
    /// line-search mode.
    pub step_length: f64,
}

/// Source of wall-clock seconds. The core never reads a clock itself.
pub trait Clock {
    fn now(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScpSettings {
    pub schedule: TrustRegionSchedule,
    pub stop: StopCriteria,
    pub solver: SolverSettings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScpRun {
    pub initial: TrajectoryProfile,
    /// Last accepted iterate.
    pub profile: TrajectoryProfile,
    /// Iterate before [`ScpRun::profile`]; equals `initial` after one step.
    pub previous: TrajectoryProfile,
    pub history: Vec<IterationRecord>,
    /// Accepted iterate of every outer iteration; `iterates[k - 1]` belongs
    /// to `history[k - 1]`.
    pub iterates: Vec<TrajectoryProfile>,
    pub converged: bool,
}

impl ScpRun {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn total_solve_time(&self) -> f64 {
        self.history.iter().map(|r| r.wall_time).sum()
    }
}

/// Iterates from `initial` until the stopping rule holds or the iteration
/// cap is reached. Running out of iterations is reported through
/// [`ScpRun::converged`], not as an error.
pub fn iterate(
    initial: TrajectoryProfile,
    objective: &ObjectiveSpec,
    params: &VehicleParams,
    settings: &ScpSettings,
    backend: &mut dyn ConicBackend,
    clock: &dyn Clock,
) -> Result<ScpRun> {
    settings.schedule.validate()?;
    settings.stop.validate()?;
    settings.solver.validate()?;
    let layout = VariableLayout::new(&initial.grid);
    let line_search = settings.schedule.mode == TrustMode::LineSearch;
    let mut current = initial.clone();
    let mut previous = initial.clone();
    let mut history = Vec::new();
    let mut iterates = Vec::new();
    for k in 0..settings.stop.max_outer_iter {
        let iteration = k + 1;
        let radius = settings.schedule.radius(k);
        let program = assemble(&current, objective, &radius, params)?;
        let start = clock.now();
        let solution = backend.solve(&program, &settings.solver)?;
        let wall_time = clock.now() - start;
        match solution.status {
            SolveStatus::Optimal | SolveStatus::AlmostOptimal => {}
            SolveStatus::Infeasible => return Err(Error::InfeasibleSubproblem { iteration }),
            status => return Err(Error::SolverFailure { iteration, status }),
        }
        let (states, controls) = layout.unpack(&solution.x);
        let candidate = TrajectoryProfile::new(current.grid, states, controls)?;
        let (next, step_length) = if line_search {
            let merit = |p: &TrajectoryProfile| merit(p, objective, params);
            let step = line_search_step(&current, &candidate, merit);
            // Without progress the full step is taken so the run cannot stall.
            match step.lambda {
                Some(lambda) => (step.profile, lambda),
                None => (candidate, 1.0),
            }
        } else {
            (candidate, 1.0)
        };
        let state_deltas = next.max_state_difference(&current);
        let record = IterationRecord {
            k: iteration,
            state_deltas,
            objective: objective.evaluate(&next),
            solve_status: solution.status,
            solver_iterations: solution.iterations,
            wall_time,
            radius,
            step_length,
        };
        log::info!(
            "scp k={iteration} status={} ipm_iters={} J={:.6e} dh={:.3} dyp={:.3} dv={:.3} dtheta={:.4}deg dpsi={:.4}deg dsigma={:.4}deg step={step_length}",
            solution.status,
            solution.iterations,
            record.objective,
            state_deltas[0],
            state_deltas[1],
            state_deltas[2],
            state_deltas[3].to_degrees(),
            state_deltas[4].to_degrees(),
            state_deltas[5].to_degrees(),
        );
        history.push(record);
        iterates.push(next.clone());
        previous = core::mem::replace(&mut current, next);
        if settings.stop.met(&state_deltas) {
            return Ok(ScpRun {
                initial,
                profile: current,
                previous,
                history,
                iterates,
                converged: true,
            });
        }
    }
    Ok(ScpRun {
        initial,
        profile: current,
        previous,
        history,
        iterates,
        converged: false,
    })
}

/// [`iterate`] with non-convergence turned into an error.
pub fn run(
    initial: TrajectoryProfile,
    objective: &ObjectiveSpec,
    params: &VehicleParams,
    settings: &ScpSettings,
    backend: &mut dyn ConicBackend,
    clock: &dyn Clock,
) -> Result<ScpRun> {
    let out = iterate(initial, objective, params, settings, backend, clock)?;
    if out.converged {
        Ok(out)
    } else {
        Err(Error::NonConvergence {
            iterations: out.iterations(),
        })
    }
}

/// Sum over intervals of the scaled nonlinear trapezoid defect
/// `|x_i - x_{i-1} - (dx/2)(f_{i-1} + f_i)| / STATE_SCALE`, componentwise
/// absolute values.
pub fn trapezoid_defect(profile: &TrajectoryProfile, params: &VehicleParams) -> Result<f64> {
    let half = 0.5 * profile.grid.step();
    let rates = profile
        .states
        .iter()
        .zip(&profile.controls)
        .map(|(x, u)| downrange_derivatives(x, u, params))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for i in 1..profile.states.len() {
        let (a, b) = (profile.states[i - 1].to_array(), profile.states[i].to_array());
        for k in 0..6 {
            let d = b[k] - a[k] - half * (rates[i - 1][k] + rates[i][k]);
            total += d.abs() / STATE_SCALE[k];
        }
    }
    Ok(total)
}

/// Line-search merit: objective plus weighted trapezoid defect. `None` for
/// profiles the dynamics cannot be evaluated on.
pub fn merit(profile: &TrajectoryProfile, objective: &ObjectiveSpec, params: &VehicleParams) -> Option<f64> {
    let defect = trapezoid_defect(profile, params).ok()?;
    let m = objective.evaluate(profile) + MERIT_DEFECT_WEIGHT * defect;
    m.is_finite().then_some(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchStep {
    pub profile: TrajectoryProfile,
    /// Accepted step length; `None` when no trial lowered the merit and
    /// `profile` is the previous iterate.
    pub lambda: Option<f64>,
}

/// Largest `lambda` in `1, 1/2, ..., 2^-8` for which
/// `previous + lambda (candidate - previous)` has lower merit than
/// `previous`.
pub fn line_search_step<F>(previous: &TrajectoryProfile, candidate: &TrajectoryProfile, merit: F) -> LineSearchStep
where
    F: Fn(&TrajectoryProfile) -> Option<f64>,
{
    let base = merit(previous).unwrap_or(f64::INFINITY);
    for h in 0..=LINE_SEARCH_HALVINGS {
        let lambda = 0.5f64.powi(h as i32);
        let Some(trial) = blend(previous, candidate, lambda) else {
            continue;
        };
        if merit(&trial).is_some_and(|m| m < base) {
            return LineSearchStep {
                profile: trial,
                lambda: Some(lambda),
            };
        }
    }
    LineSearchStep {
        profile: previous.clone(),
        lambda: None,
    }
}

fn blend(a: &TrajectoryProfile, b: &TrajectoryProfile, lambda: f64) -> Option<TrajectoryProfile> {
    if lambda == 1.0 {
        return Some(b.clone());
    }
    let mix = |x: f64, y: f64| x + lambda * (y - x);
    let states = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| {
            let (x, y) = (x.to_array(), y.to_array());
            GlideState::from_array(core::array::from_fn(|k| mix(x[k], y[k])))
        })
        .collect();
    let controls = a
        .controls
        .iter()
        .zip(&b.controls)
        .map(|(x, y)| ControlInput::new(mix(x.alpha, y.alpha), mix(x.sigma_dot, y.sigma_dot)))
        .collect();
    TrajectoryProfile::new(a.grid, states, controls).ok()
}

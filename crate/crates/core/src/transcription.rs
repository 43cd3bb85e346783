//! Transcription of the linearized trajectory problem into a second-order
//! cone program.
//!
//! Decision vector, in order:
//!
//! ```text
//! z = [x_0 .. x_N, u_0 .. u_N, varsigma, vartheta_1 .. vartheta_{N_I}]
//! ```
//!
//! Every column is stored scaled: a physical value equals the stored value
//! times [`STATE_SCALE`] (states) or 1 (controls, angle slacks). The terminal
//! slack shares the crossrange scale. Dynamics rows are divided by the scale
//! of the state they constrain, so the assembled program is well conditioned
//! without touching its feasible set.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::conic::{Cone, ConicProgram, CscMatrix, Triplets};
use crate::linearize::{linearize, LinearizedNode};
use crate::strategy::ExpectedAngles;
use crate::vehicle::{elapsed_times, ControlInput, GlideState, StateVector, VehicleParams};
use crate::{Error, Result};

/// Physical units per stored unit for `(h, y_p, v, theta, psi, sigma)`.
pub const STATE_SCALE: StateVector = [1e4, 1e4, 1e3, 1.0, 1.0, 1.0];

/// Uniform downrange grid from `x_p0` to `x_pf = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownrangeGrid {
    pub x_p0: f64,
    /// Number of intervals `N`.
    pub n: usize,
    /// Maneuver-window node count `N_I`.
    pub n_i: usize,
}

impl DownrangeGrid {
    pub fn new(x_p0: f64, n: usize, n_i: usize) -> Result<Self> {
        if !(x_p0 > 0.0 && x_p0.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "initial downrange must be positive, got {x_p0}"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(alloc::format!("grid needs N >= 2, got {n}")));
        }
        if n_i < 1 || n_i > n {
            return Err(Error::InvalidParameter(alloc::format!(
                "maneuver window N_I = {n_i} outside [1, {n}]"
            )));
        }
        Ok(Self { x_p0, n, n_i })
    }

    pub fn x_pf(&self) -> f64 {
        0.0
    }

    /// Signed step `(x_pf - x_p0) / N`, negative.
    pub fn step(&self) -> f64 {
        (self.x_pf() - self.x_p0) / self.n as f64
    }

    pub fn num_nodes(&self) -> usize {
        self.n + 1
    }

    pub fn station(&self, i: usize) -> f64 {
        if i == self.n {
            self.x_pf()
        } else {
            self.x_p0 + i as f64 * self.step()
        }
    }

    pub fn stations(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.station(i)).collect()
    }
}

/// States and controls at every grid node plus reconstructed elapsed time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryProfile {
    pub grid: DownrangeGrid,
    pub states: Vec<GlideState>,
    pub controls: Vec<ControlInput>,
    pub times: Vec<f64>,
}

impl TrajectoryProfile {
    pub fn new(grid: DownrangeGrid, states: Vec<GlideState>, controls: Vec<ControlInput>) -> Result<Self> {
        let nodes = grid.num_nodes();
        if states.len() != nodes || controls.len() != nodes {
            return Err(Error::Dimension(alloc::format!(
                "profile has {} states and {} controls for {} nodes",
                states.len(),
                controls.len(),
                nodes
            )));
        }
        let stations = grid.stations();
        for (s, x) in states.iter().zip(&stations) {
            s.check_domain().map_err(|reason| Error::Domain { station: *x, reason })?;
        }
        let times = elapsed_times(&states, &stations);
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain {
                station: f64::NAN,
                reason: "reconstructed time is not increasing",
            });
        }
        Ok(Self {
            grid,
            states,
            controls,
            times,
        })
    }

    pub fn final_state(&self) -> &GlideState {
        self.states.last().expect("profile has at least three nodes")
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().expect("profile has at least three nodes")
    }

    /// Componentwise `max_i |x_i - other_i|` over all nodes.
    pub fn max_state_difference(&self, other: &TrajectoryProfile) -> StateVector {
        let mut d = [0.0; 6];
        for (a, b) in self.states.iter().zip(&other.states) {
            let (a, b) = (a.to_array(), b.to_array());
            for k in 0..6 {
                d[k] = d[k].max((a[k] - b[k]).abs());
            }
        }
        d
    }
}

/// Column layout of the decision vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    pub n: usize,
    pub n_i: usize,
}

impl VariableLayout {
    pub fn new(grid: &DownrangeGrid) -> Self {
        Self { n: grid.n, n_i: grid.n_i }
    }

    pub fn state(&self, node: usize, k: usize) -> usize {
        6 * node + k
    }

    pub fn control(&self, node: usize, k: usize) -> usize {
        6 * (self.n + 1) + 2 * node + k
    }

    pub fn terminal_slack(&self) -> usize {
        8 * (self.n + 1)
    }

    /// Column of `vartheta_j`, `j` in `1..=N_I`.
    pub fn angle_slack(&self, j: usize) -> usize {
        self.terminal_slack() + j
    }

    pub fn num_vars(&self) -> usize {
        8 * (self.n + 1) + 1 + self.n_i
    }

    /// Stored vector for a profile with all slacks at zero.
    pub fn pack(&self, states: &[GlideState], controls: &[ControlInput]) -> Vec<f64> {
        let mut z = vec![0.0; self.num_vars()];
        for (i, s) in states.iter().enumerate() {
            for (k, v) in s.to_array().iter().enumerate() {
                z[self.state(i, k)] = v / STATE_SCALE[k];
            }
        }
        for (i, u) in controls.iter().enumerate() {
            z[self.control(i, 0)] = u.alpha;
            z[self.control(i, 1)] = u.sigma_dot;
        }
        z
    }

    /// Physical states and controls from a stored vector.
    pub fn unpack(&self, z: &[f64]) -> (Vec<GlideState>, Vec<ControlInput>) {
        let states = (0..=self.n)
            .map(|i| GlideState::from_array(core::array::from_fn(|k| z[self.state(i, k)] * STATE_SCALE[k])))
            .collect();
        let controls = (0..=self.n)
            .map(|i| ControlInput::new(z[self.control(i, 0)], z[self.control(i, 1)]))
            .collect();
        (states, controls)
    }
}

/// Linear equality block `M z = F`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualityBlock {
    pub m: CscMatrix,
    pub f: Vec<f64>,
}

/// Conic inequality block `G z + s = h`, `s` in the listed cones.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityBlock {
    pub g: Triplets,
    pub h: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl InequalityBlock {
    fn new(ncols: usize) -> Self {
        Self {
            g: Triplets::new(0, ncols),
            h: Vec::new(),
            cones: Vec::new(),
        }
    }

    fn push_row(&mut self, entries: &[(usize, f64)], h: f64) {
        let row = self.h.len();
        self.g.nrows = row + 1;
        for &(col, v) in entries {
            self.g.push(row, col, v);
        }
        self.h.push(h);
    }

    /// Appends rows of `other` below this block.
    pub fn append(&mut self, other: InequalityBlock) {
        let offset = self.h.len();
        self.g.nrows = offset + other.h.len();
        for k in 0..other.g.len() {
            self.g.push(offset + other.g.rows[k], other.g.cols[k], other.g.values[k]);
        }
        self.h.extend(other.h);
        self.cones.extend(other.cones);
    }
}

/// Objective weights and targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveSpec {
    pub c_theta: f64,
    pub theta_ex: f64,
    pub psi_ex: f64,
    /// `1 + N_I`.
    pub slack_count: usize,
}

impl ObjectiveSpec {
    pub fn new(grid: &DownrangeGrid, expected: &ExpectedAngles, c_theta: f64) -> Result<Self> {
        if !(c_theta > 0.0 && c_theta.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("c_theta must be positive, got {c_theta}")));
        }
        Ok(Self {
            c_theta,
            theta_ex: expected.theta_ex,
            psi_ex: expected.psi_ex,
            slack_count: 1 + grid.n_i,
        })
    }

    /// `J = |y_pf| + c_theta * sum_j |(theta_j, psi_j) - (theta_ex, psi_ex)|`
    /// evaluated on a profile.
    pub fn evaluate(&self, profile: &TrajectoryProfile) -> f64 {
        let window = &profile.states[1..=profile.grid.n_i];
        let angles: f64 = window
            .iter()
            .map(|s| (s.theta - self.theta_ex).hypot(s.psi - self.psi_ex))
            .sum();
        profile.final_state().y_p.abs() + self.c_theta * angles
    }
}

/// Trapezoidal collocation rows for given linearizations, including the six
/// initial-condition rows first.
pub fn trapezoid_equalities(
    grid: &DownrangeGrid,
    nodes: &[LinearizedNode],
    initial: &StateVector,
) -> Result<EqualityBlock> {
    if nodes.len() != grid.num_nodes() {
        return Err(Error::Dimension(alloc::format!(
            "{} linearizations for {} nodes",
            nodes.len(),
            grid.num_nodes()
        )));
    }
    let layout = VariableLayout::new(grid);
    let rows = 6 * grid.num_nodes();
    let mut t = Triplets::new(rows, layout.num_vars());
    let mut f = vec![0.0; rows];
    for k in 0..6 {
        t.push(k, layout.state(0, k), 1.0);
        f[k] = initial[k] / STATE_SCALE[k];
    }
    let half = 0.5 * grid.step();
    for i in 1..=grid.n {
        let (prev, cur) = (&nodes[i - 1], &nodes[i]);
        for r in 0..6 {
            let row = 6 * i + r;
            let inv = 1.0 / STATE_SCALE[r];
            for col in 0..6 {
                // H_{i-1} = I + (dx/2) A_{i-1},  H_i = -I + (dx/2) A_i
                let eye = if col == r { 1.0 } else { 0.0 };
                let hp = eye + half * prev.a[r][col];
                let hc = -eye + half * cur.a[r][col];
                if hp != 0.0 {
                    t.push(row, layout.state(i - 1, col), hp * STATE_SCALE[col] * inv);
                }
                if hc != 0.0 {
                    t.push(row, layout.state(i, col), hc * STATE_SCALE[col] * inv);
                }
            }
            for col in 0..2 {
                if prev.b[r][col] != 0.0 {
                    t.push(row, layout.control(i - 1, col), half * prev.b[r][col] * inv);
                }
                if cur.b[r][col] != 0.0 {
                    t.push(row, layout.control(i, col), half * cur.b[r][col] * inv);
                }
            }
            f[row] = -half * (prev.c[r] + cur.c[r]) * inv;
        }
    }
    Ok(EqualityBlock { m: t.to_csc()?, f })
}

/// Linearizes the reference at every node and builds the collocation rows.
pub fn build_dynamics_constraints(reference: &TrajectoryProfile, params: &VehicleParams) -> Result<EqualityBlock> {
    let nodes = reference
        .states
        .iter()
        .zip(&reference.controls)
        .map(|(x, u)| linearize(x, u, params))
        .collect::<Result<Vec<_>>>()?;
    trapezoid_equalities(&reference.grid, &nodes, &reference.states[0].to_array())
}

/// Linear cost and the slack cones: `|y_pN| <= varsigma` as two orthant rows,
/// then one 3-cone `(vartheta_j, theta_j - theta_ex, psi_j - psi_ex)` per
/// maneuver-window node.
pub fn build_objective(grid: &DownrangeGrid, objective: &ObjectiveSpec) -> (Vec<f64>, InequalityBlock) {
    let layout = VariableLayout::new(grid);
    let mut cost = vec![0.0; layout.num_vars()];
    cost[layout.terminal_slack()] = STATE_SCALE[1];
    for j in 1..=grid.n_i {
        cost[layout.angle_slack(j)] = objective.c_theta;
    }
    let mut block = InequalityBlock::new(layout.num_vars());
    let y_n = layout.state(grid.n, 1);
    let sl = layout.terminal_slack();
    block.push_row(&[(y_n, 1.0), (sl, -1.0)], 0.0);
    block.push_row(&[(y_n, -1.0), (sl, -1.0)], 0.0);
    block.cones.push(Cone::NonNegative(2));
    for j in 1..=grid.n_i {
        block.push_row(&[(layout.angle_slack(j), -1.0)], 0.0);
        block.push_row(&[(layout.state(j, 3), -1.0)], -objective.theta_ex);
        block.push_row(&[(layout.state(j, 4), -1.0)], -objective.psi_ex);
        block.cones.push(Cone::SecondOrder(3));
    }
    (cost, block)
}

/// State trust region `|x_i - x_i^(k)| <= radius` for nodes `1..=N` and the
/// physical control bounds at every node.
pub fn build_trust_region(
    reference: &TrajectoryProfile,
    radius: &StateVector,
    params: &VehicleParams,
) -> Result<InequalityBlock> {
    if radius.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter(alloc::format!("trust-region radius {radius:?}")));
    }
    let grid = &reference.grid;
    let layout = VariableLayout::new(grid);
    let mut block = InequalityBlock::new(layout.num_vars());
    for (i, s) in reference.states.iter().enumerate().skip(1) {
        let x = s.to_array();
        for k in 0..6 {
            let col = layout.state(i, k);
            let (c, d) = (x[k] / STATE_SCALE[k], radius[k] / STATE_SCALE[k]);
            block.push_row(&[(col, 1.0)], c + d);
            block.push_row(&[(col, -1.0)], -(c - d));
        }
    }
    for i in 0..=grid.n {
        let (a, sd) = (layout.control(i, 0), layout.control(i, 1));
        block.push_row(&[(a, 1.0)], params.alpha_max);
        block.push_row(&[(a, -1.0)], -params.alpha_min);
        block.push_row(&[(sd, 1.0)], params.sigma_dot_max);
        block.push_row(&[(sd, -1.0)], params.sigma_dot_max);
    }
    block.cones.push(Cone::NonNegative(block.h.len()));
    Ok(block)
}

/// The full subproblem about `reference`.
pub fn assemble(
    reference: &TrajectoryProfile,
    objective: &ObjectiveSpec,
    radius: &StateVector,
    params: &VehicleParams,
) -> Result<ConicProgram> {
    let grid = &reference.grid;
    if objective.slack_count != 1 + grid.n_i {
        return Err(Error::Dimension(alloc::format!(
            "objective has {} slacks, grid needs {}",
            objective.slack_count,
            1 + grid.n_i
        )));
    }
    let eq = build_dynamics_constraints(reference, params)?;
    let mut ineq = build_trust_region(reference, radius, params)?;
    let (cost, obj) = build_objective(grid, objective);
    ineq.append(obj);
    let program = ConicProgram {
        c: cost,
        a: eq.m,
        b: eq.f,
        g: ineq.g.to_csc()?,
        h: ineq.h,
        cones: ineq.cones,
    };
    program.validate()?;
    Ok(program)
}

#[cfg(test)]
mod tests {
    use core::f64::consts::PI;

    use super::*;
    use crate::conic::{solve, SolveStatus, SolverSettings};
    use crate::vehicle::propagate;

    fn mission_grid() -> DownrangeGrid {
        DownrangeGrid::new(600e3, 200, 50).unwrap()
    }

    fn guess(grid: &DownrangeGrid) -> TrajectoryProfile {
        let s = GlideState::new(30e3, 0.0, 2500.0, 0.0, PI, 0.0);
        let u = vec![ControlInput::new(2.0f64.to_radians(), 0.0); grid.num_nodes()];
        propagate(&s, &u, grid, &VehicleParams::default(), 1).unwrap()
    }

    fn expected() -> ExpectedAngles {
        ExpectedAngles {
            theta_ex: 1.373_826_734_387_238_8,
            psi_ex: 3.124_969_069_641_005,
            chi: crate::strategy::DEFAULT_CHI,
        }
    }

    fn residual(eq: &EqualityBlock, z: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = eq.f.iter().map(|f| -f).collect();
        eq.m.gemv(1.0, z, &mut r);
        r
    }

    #[test]
    fn grid_invariants() {
        let g = mission_grid();
        assert_eq!(g.step(), -3000.0);
        assert_eq!(g.stations().len(), 201);
        assert_eq!(g.station(200), 0.0);
        assert!(DownrangeGrid::new(600e3, 1, 1).is_err());
        assert!(DownrangeGrid::new(600e3, 10, 11).is_err());
        assert!(DownrangeGrid::new(600e3, 10, 0).is_err());
        assert!(DownrangeGrid::new(0.0, 10, 2).is_err());
    }

    #[test]
    fn mission_dimensions() {
        let layout = VariableLayout::new(&mission_grid());
        assert_eq!(layout.num_vars(), 6 * 201 + 2 * 201 + 1 + 50);
        assert_eq!(layout.num_vars(), 1659);
    }

    #[test]
    fn pack_unpack_round_trip() {
        let g = mission_grid();
        let p = guess(&g);
        let layout = VariableLayout::new(&g);
        let (s, u) = layout.unpack(&layout.pack(&p.states, &p.controls));
        for (a, b) in s.iter().zip(&p.states) {
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
        assert_eq!(u, p.controls);
    }

    #[test]
    fn constant_rate_integrates_exactly() {
        let g = DownrangeGrid::new(100.0, 4, 1).unwrap();
        let rate = [1.0, -2.0, 0.5, 1e-3, -1e-3, 2e-3];
        let node = LinearizedNode {
            a: [[0.0; 6]; 6],
            b: [[0.0; 2]; 6],
            c: rate,
        };
        let x0 = [3e4, 0.0, 2500.0, 0.0, PI, 0.0];
        let eq = trapezoid_equalities(&g, &[node; 5], &x0).unwrap();
        let layout = VariableLayout::new(&g);
        let states: Vec<GlideState> = (0..=4)
            .map(|i| GlideState::from_array(core::array::from_fn(|k| x0[k] + i as f64 * g.step() * rate[k])))
            .collect();
        let z = layout.pack(&states, &[ControlInput::default(); 5]);
        assert!(residual(&eq, &z).iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn scalar_linear_dynamics_match_trapezoid_recurrence() {
        let g = DownrangeGrid::new(10.0, 2, 1).unwrap();
        let a = -0.07;
        let mut node = LinearizedNode {
            a: [[0.0; 6]; 6],
            b: [[0.0; 2]; 6],
            c: [0.0; 6],
        };
        for k in 0..6 {
            node.a[k][k] = a;
        }
        let x0 = [1.0, 2.0, 3.0, 0.1, 3.0, -0.2];
        let eq = trapezoid_equalities(&g, &[node; 3], &x0).unwrap();
        let d = g.step();
        let ratio = (1.0 + a * d / 2.0) / (1.0 - a * d / 2.0);
        let states: Vec<GlideState> = (0..=2)
            .map(|i| GlideState::from_array(core::array::from_fn(|k| x0[k] * ratio.powi(i))))
            .collect();
        let layout = VariableLayout::new(&g);
        let z = layout.pack(&states, &[ControlInput::default(); 3]);
        assert!(residual(&eq, &z).iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn reference_defect_is_small_for_propagated_guess() {
        let g = mission_grid();
        let p = guess(&g);
        let eq = build_dynamics_constraints(&p, &VehicleParams::default()).unwrap();
        let layout = VariableLayout::new(&g);
        let r = residual(&eq, &layout.pack(&p.states, &p.controls));
        assert!(r[..6].iter().all(|v| *v == 0.0));
        // RK4 versus trapezoid on a 3 km step: defects of a few meters at most.
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-3, "defect {worst}");
    }

    #[test]
    fn exact_match_has_zero_objective() {
        let g = DownrangeGrid::new(1000.0, 4, 2).unwrap();
        let obj = ObjectiveSpec::new(&g, &expected(), 1e-6).unwrap();
        let (cost, block) = build_objective(&g, &obj);
        let layout = VariableLayout::new(&g);
        let states = vec![GlideState::new(3e4, 0.0, 2500.0, obj.theta_ex, obj.psi_ex, 0.0); 5];
        let z = layout.pack(&states, &[ControlInput::default(); 5]);
        let mut s = block.h.clone();
        block.g.to_csc().unwrap().gemv(-1.0, &z, &mut s);
        assert!(s.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(cost.iter().zip(&z).map(|(c, x)| c * x).sum::<f64>(), 0.0);
        assert_eq!(block.cones, vec![Cone::NonNegative(2), Cone::SecondOrder(3), Cone::SecondOrder(3)]);
    }

    #[test]
    fn paper_weight_and_radius_build() {
        let g = mission_grid();
        let obj = ObjectiveSpec::new(&g, &expected(), 1e-6).unwrap();
        assert_eq!(obj.slack_count, 51);
        assert!(ObjectiveSpec::new(&g, &expected(), 0.0).is_err());
        let d = 40f64.to_radians();
        let radius = [5000.0, 5000.0, 1000.0, d, d, d];
        let p = guess(&g);
        let block = build_trust_region(&p, &radius, &VehicleParams::default()).unwrap();
        assert_eq!(block.h.len(), 12 * 200 + 4 * 201);
        assert!(build_trust_region(&p, &[-1.0; 6], &VehicleParams::default()).is_err());
    }

    #[test]
    fn angle_slack_reaches_pythagorean_value() {
        let g = DownrangeGrid::new(1000.0, 2, 1).unwrap();
        let e = expected();
        let obj = ObjectiveSpec::new(&g, &e, 1.0).unwrap();
        let (cost, block) = build_objective(&g, &obj);
        let layout = VariableLayout::new(&g);
        // Pin every state and control through equalities.
        let states = vec![GlideState::new(3e4, 0.0, 2500.0, e.theta_ex + 3e-3, e.psi_ex + 4e-3, 0.0); 3];
        let z0 = layout.pack(&states, &[ControlInput::default(); 3]);
        let pinned = layout.terminal_slack();
        let mut a = Triplets::new(pinned, layout.num_vars());
        for j in 0..pinned {
            a.push(j, j, 1.0);
        }
        let program = ConicProgram {
            c: cost,
            a: a.to_csc().unwrap(),
            b: z0[..pinned].to_vec(),
            g: block.g.to_csc().unwrap(),
            h: block.h,
            cones: block.cones,
        };
        let sol = solve(&program, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[layout.angle_slack(1)] - 5e-3).abs() < 1e-9);
        assert!(sol.x[layout.terminal_slack()].abs() < 1e-9);
    }

    #[test]
    fn assembled_program_validates_and_pins_initial_state() {
        let g = mission_grid();
        let p = guess(&g);
        let obj = ObjectiveSpec::new(&g, &expected(), 1e-6).unwrap();
        let d = 40f64.to_radians();
        let prog = assemble(&p, &obj, &[5000.0, 5000.0, 1000.0, d, d, d], &VehicleParams::default()).unwrap();
        assert_eq!(prog.num_vars(), 1659);
        assert_eq!(prog.num_eq(), 6 * 201);
        let sol = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.primal_objective >= -1e-6);
        let layout = VariableLayout::new(&g);
        let (states, controls) = layout.unpack(&sol.x);
        let x0 = p.states[0].to_array();
        for (k, v) in states[0].to_array().iter().enumerate() {
            assert!((v - x0[k]).abs() <= 1e-6 * x0[k].abs().max(1.0));
        }
        let params = VehicleParams::default();
        for u in &controls {
            assert!(u.alpha >= params.alpha_min - 1e-7 && u.alpha <= params.alpha_max + 1e-7);
            assert!(u.sigma_dot.abs() <= params.sigma_dot_max + 1e-7);
        }
        for (s, r) in states.iter().zip(&p.states) {
            let (s, r) = (s.to_array(), r.to_array());
            for k in 0..6 {
                let tol = 1e-6 * STATE_SCALE[k];
                assert!((s[k] - r[k]).abs() <= [5000.0, 5000.0, 1000.0, d, d, d][k] + tol);
            }
        }
    }

    #[test]
    fn zero_radius_pins_states_to_reference() {
        let g = DownrangeGrid::new(60e3, 20, 5).unwrap();
        let p = guess(&g);
        let obj = ObjectiveSpec::new(&g, &expected(), 1e-6).unwrap();
        let params = VehicleParams::default();
        let mut ineq = build_trust_region(&p, &[0.0; 6], &params).unwrap();
        let (cost, o) = build_objective(&g, &obj);
        ineq.append(o);
        let layout = VariableLayout::new(&g);
        let prog = ConicProgram {
            c: cost,
            a: CscMatrix::zeros(0, layout.num_vars()),
            b: Vec::new(),
            g: ineq.g.to_csc().unwrap(),
            h: ineq.h,
            cones: ineq.cones,
        };
        let sol = solve(&prog, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let (states, _) = layout.unpack(&sol.x);
        for (s, r) in states.iter().zip(&p.states).skip(1) {
            for (a, b) in s.to_array().iter().zip(r.to_array()) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}

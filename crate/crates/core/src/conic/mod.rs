//! Second-order cone programming.
//!
//! Programs take the standard form
//!
//! ```text
//! minimize    c^T x
//! subject to  A x = b
//!             G x + s = h,   s in K
//! ```
//!
//! where `K` is a product of nonnegative orthants and second-order cones
//! `{(t, u) : |u|_2 <= t}`. The built-in [`InteriorPointSolver`] is a
//! homogeneous self-dual primal-dual method with Nesterov-Todd scaling and
//! Mehrotra predictor-corrector steps. Other solvers plug in through
//! [`ConicBackend`].

mod cones;
mod equilibrate;
mod ipm;
mod kkt;
mod ldl;
mod presolve;
pub mod random;
pub mod sparse;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

pub use sparse::{CscMatrix, Triplets};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cone {
    /// `dim` coordinates, each `>= 0`.
    NonNegative(usize),
    /// `(t, u)` of total length `dim` with `|u| <= t`.
    SecondOrder(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match *self {
            Cone::NonNegative(d) | Cone::SecondOrder(d) => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub c: Vec<f64>,
    pub a: CscMatrix,
    pub b: Vec<f64>,
    pub g: CscMatrix,
    pub h: Vec<f64>,
    /// Cones in the order their rows appear in `g` and `h`.
    pub cones: Vec<Cone>,
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_eq(&self) -> usize {
        self.b.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.h.len()
    }

    /// Structural checks: dimensions agree, cones cover `h`, data is finite.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |msg: String| Err(Error::InvalidProgram(msg));
        if n == 0 {
            return bad("program has no variables".into());
        }
        if self.a.ncols != n || self.g.ncols != n {
            return bad(alloc::format!(
                "constraint matrices have {} and {} columns for {} variables",
                self.a.ncols,
                self.g.ncols,
                n
            ));
        }
        if self.a.nrows != self.b.len() {
            return bad(alloc::format!("A has {} rows, b has {}", self.a.nrows, self.b.len()));
        }
        if self.g.nrows != self.h.len() {
            return bad(alloc::format!("G has {} rows, h has {}", self.g.nrows, self.h.len()));
        }
        let cone_rows: usize = self.cones.iter().map(Cone::dim).sum();
        if cone_rows != self.h.len() {
            return bad(alloc::format!(
                "cones cover {} rows, inequality block has {}",
                cone_rows,
                self.h.len()
            ));
        }
        if self.cones.iter().any(|c| c.dim() == 0) {
            return bad("empty cone".into());
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !(finite(&self.c) && finite(&self.b) && finite(&self.h) && self.a.is_finite() && self.g.is_finite())
        {
            return bad("program data must be finite".into());
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        sparse::dot(&self.c, x)
    }

    /// Relative residuals and gap of a candidate primal-dual point, using
    /// infinity norms.
    pub fn kkt_residuals(&self, x: &[f64], y: &[f64], z: &[f64], s: &[f64]) -> KktResiduals {
        let mut ra = vec![0.0; self.num_eq()];
        self.a.gemv(1.0, x, &mut ra);
        ra.iter_mut().zip(&self.b).for_each(|(r, b)| *r -= b);
        let mut rg = s.to_vec();
        self.g.gemv(1.0, x, &mut rg);
        rg.iter_mut().zip(&self.h).for_each(|(r, h)| *r -= h);
        let mut rd = self.c.clone();
        self.a.gemv_t(1.0, y, &mut rd);
        self.g.gemv_t(1.0, z, &mut rd);
        let primal = (sparse::norm_inf(&ra) / (1.0 + sparse::norm_inf(&self.b)))
            .max(sparse::norm_inf(&rg) / (1.0 + sparse::norm_inf(&self.h)));
        let dual = sparse::norm_inf(&rd) / (1.0 + sparse::norm_inf(&self.c));
        let pcost = self.objective(x);
        let dcost = -sparse::dot(&self.b, y) - sparse::dot(&self.h, z);
        let gap = sparse::dot(s, z).abs().max((pcost - dcost).abs()) / pcost.abs().min(dcost.abs()).max(1.0);
        KktResiduals { primal, dual, gap }
    }

    /// Plain-text sparse dump: header, then `c`, `A`, `b`, `G`, `h` as
    /// `row col value` / `index value` lines, then one cone per line.
    pub fn to_sparse_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "conic-program n={} m={} p={}",
            self.num_vars(),
            self.num_eq(),
            self.num_ineq()
        );
        let vector = |out: &mut String, name: &str, v: &[f64]| {
            let _ = writeln!(out, "[{name}]");
            for (i, x) in v.iter().enumerate() {
                if *x != 0.0 {
                    let _ = writeln!(out, "{i} {x:e}");
                }
            }
        };
        let matrix = |out: &mut String, name: &str, m: &CscMatrix| {
            let _ = writeln!(out, "[{name}] {}x{}", m.nrows, m.ncols);
            for (i, j, v) in m.iter() {
                let _ = writeln!(out, "{i} {j} {v:e}");
            }
        };
        vector(&mut out, "c", &self.c);
        matrix(&mut out, "A", &self.a);
        vector(&mut out, "b", &self.b);
        matrix(&mut out, "G", &self.g);
        vector(&mut out, "h", &self.h);
        let _ = writeln!(out, "[cones]");
        for c in &self.cones {
            match c {
                Cone::NonNegative(d) => {
                    let _ = writeln!(out, "nonnegative {d}");
                }
                Cone::SecondOrder(d) => {
                    let _ = writeln!(out, "second_order {d}");
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    /// Stalled, but the best iterate meets the tolerances relaxed by
    /// [`REDUCED_ACCURACY_FACTOR`].
    AlmostOptimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::AlmostOptimal => "almost_optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl core::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Tolerance multiplier behind [`SolveStatus::AlmostOptimal`].
pub const REDUCED_ACCURACY_FACTOR: f64 = 1e3;

impl KktResiduals {
    pub fn within(&self, tol_feas: f64, tol_gap: f64) -> bool {
        self.primal <= tol_feas && self.dual <= tol_feas && self.gap <= tol_gap
    }

    /// Largest residual measured in units of its tolerance.
    pub fn score(&self, tol_feas: f64, tol_gap: f64) -> f64 {
        (self.primal / tol_feas).max(self.dual / tol_feas).max(self.gap / tol_gap)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Primal variables.
    pub x: Vec<f64>,
    /// Equality duals.
    pub y: Vec<f64>,
    /// Cone duals.
    pub z: Vec<f64>,
    /// Cone slacks `h - G x`.
    pub s: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub kkt: KktResiduals,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
    pub static_regularization: f64,
    pub refinement_steps: usize,
    pub equilibration_passes: usize,
    pub step_fraction: f64,
    pub presolve: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            max_iter: 200,
            static_regularization: 1e-9,
            refinement_steps: 50,
            equilibration_passes: 15,
            step_fraction: 0.99,
            presolve: true,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol_feas > 0.0
            && self.tol_gap > 0.0
            && self.max_iter > 0
            && self.static_regularization >= 0.0
            && self.step_fraction > 0.0
            && self.step_fraction < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!("invalid solver settings {self:?}")))
        }
    }
}

/// A conic solver usable by the trajectory optimizer.
pub trait ConicBackend: Send {
    fn name(&self) -> &str;
    fn solve(&mut self, program: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution>;
}

/// Built-in interior-point solver.
#[derive(Debug, Clone, Default)]
pub struct InteriorPointSolver;

impl InteriorPointSolver {
    pub const NAME: &'static str = "builtin";

    pub fn new() -> Self {
        Self
    }
}

impl ConicBackend for InteriorPointSolver {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn solve(&mut self, program: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution> {
        solve(program, settings)
    }
}

/// Looks up a backend by name; only the built-in solver ships in this crate.
pub fn backend_by_name(name: &str) -> Result<Box<dyn ConicBackend>> {
    match name {
        InteriorPointSolver::NAME | "ipm" => Ok(Box::new(InteriorPointSolver::new())),
        other => Err(Error::InvalidParameter(alloc::format!("unknown solver backend '{other}'"))),
    }
}

/// Solves with the built-in interior-point method.
pub fn solve(program: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution> {
    program.validate()?;
    settings.validate()?;
    let (pre, outcome) = if settings.presolve {
        let (p, o) = presolve::presolve(program);
        (Some(p), o)
    } else {
        (None, presolve::PresolveOutcome::Reduced)
    };
    if outcome == presolve::PresolveOutcome::Infeasible {
        return Ok(failed(program, SolveStatus::Infeasible, 0));
    }
    let pre = pre.filter(|p| !p.is_trivial());
    let reduced = pre.as_ref().map_or(program, |p| &p.program);

    let out = if reduced.num_vars() == 0 {
        constant_program(reduced)
    } else {
        ipm::run(reduced, settings)?
    };
    let (x, y, z, s) = match &pre {
        Some(p) => p.postsolve(program, &out.x, &out.y, &out.z, &out.s),
        None => (out.x, out.y, out.z, out.s),
    };
    let mut status = out.status;
    let kkt = program.kkt_residuals(&x, &y, &z, &s);
    let (tf, tg) = (settings.tol_feas, settings.tol_gap);
    let r = REDUCED_ACCURACY_FACTOR;
    if matches!(status, SolveStatus::Optimal | SolveStatus::AlmostOptimal) {
        status = if kkt.within(tf, tg) {
            SolveStatus::Optimal
        } else if kkt.within(r * tf, r * tg) {
            SolveStatus::AlmostOptimal
        } else {
            SolveStatus::NumericalFailure
        };
    }
    let (primal_objective, dual_objective) = match status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => (f64::NAN, f64::NAN),
        _ => (
            program.objective(&x),
            -sparse::dot(&program.b, &y) - sparse::dot(&program.h, &z),
        ),
    };
    Ok(ConicSolution {
        status,
        x,
        y,
        z,
        s,
        primal_objective,
        dual_objective,
        kkt,
        iterations: out.iterations,
    })
}

fn failed(program: &ConicProgram, status: SolveStatus, iterations: usize) -> ConicSolution {
    ConicSolution {
        status,
        x: vec![0.0; program.num_vars()],
        y: vec![0.0; program.num_eq()],
        z: vec![0.0; program.num_ineq()],
        s: vec![0.0; program.num_ineq()],
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        kkt: KktResiduals::default(),
        iterations,
    }
}

/// Every variable was fixed by presolve: only feasibility of `h` remains.
fn constant_program(p: &ConicProgram) -> ipm::IpmOutput {
    let cones = cones::ConeSet::new(&p.cones);
    let feasible = p.b.iter().all(|b| b.abs() <= 1e-9) && (cones.dim == 0 || cones.min_eigenvalue(&p.h) >= -1e-9);
    ipm::IpmOutput {
        status: if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible },
        x: Vec::new(),
        y: vec![0.0; p.num_eq()],
        z: vec![0.0; p.num_ineq()],
        s: p.h.clone(),
        iterations: 0,
    }
}

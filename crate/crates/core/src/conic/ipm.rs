//! Homogeneous self-dual interior-point iteration.
//!
//! The embedding adds `tau` and `kappa`:
//!
//! ```text
//! A^T y + G^T z + c tau = 0
//! -A x + b tau          = 0
//! s + G x - h tau       = 0
//! kappa + c^T x + b^T y + h^T z = 0
//! ```
//!
//! with `s, z` in the cone and `tau, kappa >= 0`. Termination is judged on the
//! unscaled problem after dividing by `tau`; a vanishing `tau` yields
//! infeasibility or unboundedness certificates.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::cones::{ConeSet, Scaling};
use super::equilibrate::{equilibrate, Equilibration};
use super::kkt::KktSystem;
use super::sparse::{dot, norm_inf, CscMatrix};
use super::{ConicProgram, KktResiduals, SolveStatus, SolverSettings, REDUCED_ACCURACY_FACTOR};
use crate::Result;

const MIN_STEP: f64 = 1e-10;

/// Relative KKT solve residual above which the static regularization is
/// raised tenfold and the iteration's directions recomputed.
const SOLVE_ACCURACY: f64 = 1e-8;
const MAX_STATIC_REGULARIZATION: f64 = 1e-6;
/// Directions with a worse relative KKT residual are not taken.
const USABLE_ACCURACY: f64 = 1e-4;

pub(crate) struct IpmOutput {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub iterations: usize,
}

struct Scaled {
    c: Vec<f64>,
    a: CscMatrix,
    b: Vec<f64>,
    g: CscMatrix,
    h: Vec<f64>,
}

struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Residuals {
    rx: Vec<f64>,
    ry: Vec<f64>,
    rz: Vec<f64>,
    rt: f64,
}

fn split3(v: &[f64], n: usize, m: usize) -> (&[f64], &[f64], &[f64]) {
    let (x, rest) = v.split_at(n);
    let (y, z) = rest.split_at(m);
    (x, y, z)
}

fn concat3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len() + c.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v.extend_from_slice(c);
    v
}

struct Solver<'a> {
    orig: &'a ConicProgram,
    sp: Scaled,
    eq: Equilibration,
    cones: ConeSet,
    kkt: KktSystem,
    scaling: Scaling,
    settings: &'a SolverSettings,
    n: usize,
    m: usize,
    p: usize,
    /// Worst relative solve residual since the last factorization.
    solve_error: f64,
}

impl<'a> Solver<'a> {
    fn kkt_solve(&mut self, rhs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rhs.len()];
        let err = self.kkt.solve(
            &self.sp.a,
            &self.sp.g,
            &self.cones,
            &self.scaling,
            rhs,
            &mut out,
            self.settings.refinement_steps,
        );
        self.solve_error = if err.is_finite() { self.solve_error.max(err) } else { f64::INFINITY };
        out
    }

    fn refactor(&mut self) -> bool {
        self.solve_error = 0.0;
        self.kkt.factor(&self.cones, &self.scaling).is_ok()
    }

    fn residuals(&self, it: &Iterate) -> Residuals {
        let sp = &self.sp;
        let mut rx: Vec<f64> = sp.c.iter().map(|c| c * it.tau).collect();
        sp.a.gemv_t(1.0, &it.y, &mut rx);
        sp.g.gemv_t(1.0, &it.z, &mut rx);
        let mut ry: Vec<f64> = sp.b.iter().map(|b| b * it.tau).collect();
        sp.a.gemv(-1.0, &it.x, &mut ry);
        let mut rz: Vec<f64> = it.s.iter().zip(&sp.h).map(|(s, h)| s - h * it.tau).collect();
        sp.g.gemv(1.0, &it.x, &mut rz);
        let rt = it.kappa + dot(&sp.c, &it.x) + dot(&sp.b, &it.y) + dot(&sp.h, &it.z);
        Residuals { rx, ry, rz, rt }
    }

    /// Solves the Newton system for complementarity targets `ds_target`
    /// (cone part) and `dk_target` (tau-kappa part), with affine residuals
    /// scaled by `r_scale`. `u1` is the precomputed solution for `[-c; b; h]`.
    fn direction(
        &mut self,
        it: &Iterate,
        res: &Residuals,
        u1: &[f64],
        r_scale: f64,
        ds_target: &[f64],
        dk_target: f64,
    ) -> Direction {
        let (n, m, p) = (self.n, self.m, self.p);
        let mut q = vec![0.0; p];
        self.cones.inverse_product(&self.scaling.lambda, ds_target, &mut q);
        let mut wq = vec![0.0; p];
        self.scaling.apply(&self.cones, &q, &mut wq);
        let rhs = concat3(
            &res.rx.iter().map(|v| -r_scale * v).collect::<Vec<_>>(),
            &res.ry.iter().map(|v| r_scale * v).collect::<Vec<_>>(),
            &res.rz.iter().zip(&wq).map(|(r, w)| -r_scale * r - w).collect::<Vec<_>>(),
        );
        let u2 = self.kkt_solve(&rhs);
        let (u1x, u1y, u1z) = split3(u1, n, m);
        let (u2x, u2y, u2z) = split3(&u2, n, m);
        let sp = &self.sp;
        let num = -r_scale * res.rt - dk_target / it.tau
            - (dot(&sp.c, u2x) + dot(&sp.b, u2y) + dot(&sp.h, u2z));
        let den = -it.kappa / it.tau + dot(&sp.c, u1x) + dot(&sp.b, u1y) + dot(&sp.h, u1z);
        let dtau = num / den;
        let dx: Vec<f64> = u2x.iter().zip(u1x).map(|(a, b)| a + dtau * b).collect();
        let dy: Vec<f64> = u2y.iter().zip(u1y).map(|(a, b)| a + dtau * b).collect();
        let dz: Vec<f64> = u2z.iter().zip(u1z).map(|(a, b)| a + dtau * b).collect();
        // ds = W (q - W dz)
        let mut wdz = vec![0.0; p];
        self.scaling.apply(&self.cones, &dz, &mut wdz);
        let diff: Vec<f64> = q.iter().zip(&wdz).map(|(a, b)| a - b).collect();
        let mut ds = vec![0.0; p];
        self.scaling.apply(&self.cones, &diff, &mut ds);
        let dkappa = (dk_target - it.kappa * dtau) / it.tau;
        Direction {
            x: dx,
            y: dy,
            z: dz,
            s: ds,
            tau: dtau,
            kappa: dkappa,
        }
    }

    fn max_step(&self, it: &Iterate, d: &Direction) -> f64 {
        let mut a = self.cones.max_step(&it.s, &d.s).min(self.cones.max_step(&it.z, &d.z));
        if d.tau < 0.0 {
            a = a.min(-it.tau / d.tau);
        }
        if d.kappa < 0.0 {
            a = a.min(-it.kappa / d.kappa);
        }
        a
    }

    fn unscaled(&self, it: &Iterate, tau: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        self.eq.unscale(tau, &it.x, &it.y, &it.z, &it.s)
    }

    /// Primal infeasibility certificate: `A^T y + G^T z ~ 0`, `b^T y + h^T z < 0`.
    fn primal_infeasible(&self, y: &[f64], z: &[f64]) -> Option<f64> {
        let o = self.orig;
        let t = dot(&o.b, y) + dot(&o.h, z);
        if !(t < 0.0) {
            return None;
        }
        let mut r = vec![0.0; self.n];
        o.a.gemv_t(1.0, y, &mut r);
        o.g.gemv_t(1.0, z, &mut r);
        (norm_inf(&r) <= self.settings.tol_feas * -t).then_some(-t)
    }

    /// Dual infeasibility certificate: `A x ~ 0`, `G x + s ~ 0`, `c^T x < 0`.
    fn dual_infeasible(&self, x: &[f64], s: &[f64]) -> Option<f64> {
        let o = self.orig;
        let t = dot(&o.c, x);
        if !(t < 0.0) {
            return None;
        }
        let mut ax = vec![0.0; self.m];
        o.a.gemv(1.0, x, &mut ax);
        let mut gx = s.to_vec();
        o.g.gemv(1.0, x, &mut gx);
        (norm_inf(&ax).max(norm_inf(&gx)) <= self.settings.tol_feas * -t).then_some(-t)
    }
}

pub(crate) fn run(program: &ConicProgram, settings: &SolverSettings) -> Result<IpmOutput> {
    let (n, m, p) = (program.num_vars(), program.num_eq(), program.num_ineq());
    let cones = ConeSet::new(&program.cones);
    let mut sp = Scaled {
        c: program.c.clone(),
        a: program.a.clone(),
        b: program.b.clone(),
        g: program.g.clone(),
        h: program.h.clone(),
    };
    let eq = equilibrate(
        &mut sp.c,
        &mut sp.a,
        &mut sp.b,
        &mut sp.g,
        &mut sp.h,
        &cones,
        settings.equilibration_passes,
    );
    let kkt = KktSystem::new(&sp.a, &sp.g, &cones, settings.static_regularization)?;
    let scaling = Scaling::identity(&cones);
    let mut solver = Solver {
        orig: program,
        sp,
        eq,
        cones,
        kkt,
        scaling,
        settings,
        n,
        m,
        p,
        solve_error: 0.0,
    };
    let fail = |status: SolveStatus, it: &Iterate, solver: &Solver, k: usize| {
        let tau = if it.tau > 0.0 { it.tau } else { 1.0 };
        let (x, y, z, s) = solver.unscaled(it, tau);
        IpmOutput {
            status,
            x,
            y,
            z,
            s,
            iterations: k,
        }
    };

    // Starting point: least-norm primal and dual points shifted into the cone.
    let zero_it = Iterate {
        x: vec![0.0; n],
        y: vec![0.0; m],
        z: solver.cones.identity(),
        s: solver.cones.identity(),
        tau: 1.0,
        kappa: 1.0,
    };
    if !solver.refactor() {
        return Ok(fail(SolveStatus::NumericalFailure, &zero_it, &solver, 0));
    }
    let primal = solver.kkt_solve(&concat3(&vec![0.0; n], &solver.sp.b.clone(), &solver.sp.h.clone()));
    let neg_c: Vec<f64> = solver.sp.c.iter().map(|v| -v).collect();
    let dual = solver.kkt_solve(&concat3(&neg_c, &vec![0.0; m], &vec![0.0; p]));
    let (px, _, pz) = split3(&primal, n, m);
    let (_, dy, dz) = split3(&dual, n, m);
    let mut s: Vec<f64> = pz.iter().map(|v| -v).collect();
    let mut z = dz.to_vec();
    solver.cones.shift_to_interior(&mut s);
    solver.cones.shift_to_interior(&mut z);
    let mut it = Iterate {
        x: px.to_vec(),
        y: dy.to_vec(),
        z,
        s,
        tau: 1.0,
        kappa: 1.0,
    };

    let mut best: Option<Best> = None;
    let degree = solver.cones.degree as f64;
    let e = solver.cones.identity();
    let fraction = settings.step_fraction;
    for k in 0..=settings.max_iter {
        let res = solver.residuals(&it);
        let mu = (dot(&it.s, &it.z) + it.tau * it.kappa) / (degree + 1.0);

        let (x, y, z, s) = solver.unscaled(&it, it.tau);
        let kkt = program.kkt_residuals(&x, &y, &z, &s);
        if kkt.within(settings.tol_feas, settings.tol_gap) {
            return Ok(IpmOutput {
                status: SolveStatus::Optimal,
                x,
                y,
                z,
                s,
                iterations: k,
            });
        }
        let (xr, yr, zr, sr) = solver.unscaled(&it, 1.0);
        if let Some(t) = solver.primal_infeasible(&yr, &zr) {
            return Ok(IpmOutput {
                status: SolveStatus::Infeasible,
                x: vec![0.0; n],
                y: yr.iter().map(|v| v / t).collect(),
                z: zr.iter().map(|v| v / t).collect(),
                s: vec![0.0; p],
                iterations: k,
            });
        }
        if let Some(t) = solver.dual_infeasible(&xr, &sr) {
            return Ok(IpmOutput {
                status: SolveStatus::Unbounded,
                x: xr.iter().map(|v| v / t).collect(),
                y: vec![0.0; m],
                z: vec![0.0; p],
                s: sr.iter().map(|v| v / t).collect(),
                iterations: k,
            });
        }
        let score = kkt.score(settings.tol_feas, settings.tol_gap);
        if best.as_ref().is_none_or(|b| score < b.score) {
            best = Some(Best { score, kkt, x, y, z, s });
        }
        if k == settings.max_iter {
            return Ok(stalled(SolveStatus::MaxIter, best, settings, k));
        }

        if !solver.scaling.update(&solver.cones, &it.s, &it.z) {
            return Ok(stalled(SolveStatus::NumericalFailure, best, settings, k));
        }
        solver.kkt.set_static_regularization(settings.static_regularization);
        let mut candidate = None;
        let (d, sigma) = loop {
            if !solver.refactor() {
                return Ok(stalled(SolveStatus::NumericalFailure, best, settings, k));
            }
            let rhs1 = concat3(&neg_c, &solver.sp.b.clone(), &solver.sp.h.clone());
            let u1 = solver.kkt_solve(&rhs1);

            // Predictor.
            let mut lam_sq = vec![0.0; p];
            solver.cones.product(&solver.scaling.lambda, &solver.scaling.lambda, &mut lam_sq);
            let aff_target: Vec<f64> = lam_sq.iter().map(|v| -v).collect();
            let aff = solver.direction(&it, &res, &u1, 1.0, &aff_target, -it.tau * it.kappa);
            let alpha_aff = solver.max_step(&it, &aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3);

            // Corrector with second-order term.
            let mut ws = vec![0.0; p];
            let mut wz = vec![0.0; p];
            solver.scaling.apply_inverse(&solver.cones, &aff.s, &mut ws);
            solver.scaling.apply(&solver.cones, &aff.z, &mut wz);
            let mut cross = vec![0.0; p];
            solver.cones.product(&ws, &wz, &mut cross);
            let target: Vec<f64> = (0..p).map(|i| -lam_sq[i] - cross[i] + sigma * mu * e[i]).collect();
            let dk = -it.tau * it.kappa - aff.tau * aff.kappa + sigma * mu;
            let d = solver.direction(&it, &res, &u1, 1.0 - sigma, &target, dk);
            let reg = solver.kkt.static_regularization();
            let err = solver.solve_error;
            if candidate.as_ref().is_none_or(|c: &(f64, Direction, f64)| err < c.0) {
                candidate = Some((err, d, sigma));
            }
            if err <= SOLVE_ACCURACY || reg >= MAX_STATIC_REGULARIZATION {
                let (err, d, sigma) = candidate.expect("set above");
                if !(err <= USABLE_ACCURACY) {
                    return Ok(stalled(SolveStatus::NumericalFailure, best, settings, k));
                }
                break (d, sigma);
            }
            log::debug!("ipm k={k}: KKT residual {err:.1e}, static regularization {reg:.0e} -> {:.0e}", 10.0 * reg);
            solver.kkt.set_static_regularization(10.0 * reg);
        };
        let alpha = (fraction * solver.max_step(&it, &d)).min(1.0);
        let finite = d.x.iter().chain(&d.y).chain(&d.z).chain(&d.s).all(|v| v.is_finite())
            && d.tau.is_finite()
            && d.kappa.is_finite();
        if !finite || !(alpha > MIN_STEP) {
            return Ok(stalled(SolveStatus::NumericalFailure, best, settings, k));
        }
        let axpy = |v: &mut [f64], dv: &[f64]| v.iter_mut().zip(dv).for_each(|(a, b)| *a += alpha * b);
        axpy(&mut it.x, &d.x);
        axpy(&mut it.y, &d.y);
        axpy(&mut it.z, &d.z);
        axpy(&mut it.s, &d.s);
        it.tau += alpha * d.tau;
        it.kappa += alpha * d.kappa;
        if let Some(level) = log_level() {
            log::log!(
                level,
                "ipm k={k} pres={:.2e} dres={:.2e} gap={:.2e} mu={mu:.2e} sigma={sigma:.3} alpha={alpha:.3} tau={:.2e} kkt_err={:.1e}",
                kkt.primal,
                kkt.dual,
                kkt.gap,
                it.tau,
                solver.solve_error
            );
        }
    }
    unreachable!("loop returns at k == max_iter")
}

/// Lowest-scoring iterate seen so far, unscaled.
struct Best {
    score: f64,
    kkt: KktResiduals,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    s: Vec<f64>,
}

fn stalled(status: SolveStatus, best: Option<Best>, settings: &SolverSettings, k: usize) -> IpmOutput {
    let best = best.expect("the first iteration always records an iterate");
    let r = REDUCED_ACCURACY_FACTOR;
    let status = if best.kkt.within(r * settings.tol_feas, r * settings.tol_gap) {
        SolveStatus::AlmostOptimal
    } else {
        status
    };
    log::debug!("ipm stalled at k={k}: {status}, best {:?}", best.kkt);
    IpmOutput {
        status,
        x: best.x,
        y: best.y,
        z: best.z,
        s: best.s,
        iterations: k,
    }
}

fn log_level() -> Option<log::Level> {
    let level = log::Level::Trace;
    (level <= log::max_level()).then_some(level)
}

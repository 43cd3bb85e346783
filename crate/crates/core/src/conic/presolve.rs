//! Removes variables pinned by a pair of equal singleton bounds and the
//! constraint rows left empty afterwards.

use alloc::vec;
use alloc::vec::Vec;

use super::cones::{ConeSet, Kind};
use super::sparse::{norm_inf, CscMatrix, Triplets};
use super::{Cone, ConicProgram};

const EMPTY_ROW_TOL: f64 = 1e-9;

/// Tightest singleton bound rows found for one fixed column.
#[derive(Debug, Clone, Copy)]
struct FixedColumn {
    col: usize,
    value: f64,
    /// `(row, coefficient)` with positive coefficient (upper bound).
    upper: (usize, f64),
    /// `(row, coefficient)` with negative coefficient (lower bound).
    lower: (usize, f64),
}

#[derive(Debug, Clone)]
pub(crate) struct Presolved {
    pub program: ConicProgram,
    keep_cols: Vec<usize>,
    keep_eq: Vec<usize>,
    keep_ineq: Vec<usize>,
    fixed: Vec<FixedColumn>,
    n: usize,
    m: usize,
    p: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PresolveOutcome {
    Reduced,
    Infeasible,
}

pub(crate) fn presolve(prog: &ConicProgram) -> (Presolved, PresolveOutcome) {
    let (n, m, p) = (prog.num_vars(), prog.num_eq(), prog.num_ineq());
    let cones = ConeSet::new(&prog.cones);
    let mut in_orthant = vec![false; p];
    for blk in &cones.blocks {
        if blk.kind == Kind::NonNegative {
            in_orthant[blk.range()].iter_mut().for_each(|v| *v = true);
        }
    }
    let mut row_count = vec![0usize; p];
    let mut row_entry = vec![(0usize, 0.0f64); p];
    for (i, j, v) in prog.g.iter() {
        if v != 0.0 {
            row_count[i] += 1;
            row_entry[i] = (j, v);
        }
    }
    let mut ub: Vec<Option<(f64, usize, f64)>> = vec![None; n];
    let mut lb: Vec<Option<(f64, usize, f64)>> = vec![None; n];
    for i in 0..p {
        if !in_orthant[i] || row_count[i] != 1 {
            continue;
        }
        let (j, a) = row_entry[i];
        let bound = prog.h[i] / a;
        if a > 0.0 {
            if ub[j].is_none_or(|(u, _, _)| bound < u) {
                ub[j] = Some((bound, i, a));
            }
        } else if lb[j].is_none_or(|(l, _, _)| bound > l) {
            lb[j] = Some((bound, i, a));
        }
    }
    let mut fixed = Vec::new();
    let mut outcome = PresolveOutcome::Reduced;
    for j in 0..n {
        if let (Some((u, ur, ua)), Some((l, lr, la))) = (ub[j], lb[j]) {
            if u == l {
                fixed.push(FixedColumn {
                    col: j,
                    value: u,
                    upper: (ur, ua),
                    lower: (lr, la),
                });
            } else if l > u {
                outcome = PresolveOutcome::Infeasible;
            }
        }
    }

    let mut is_fixed = vec![None; n];
    for f in &fixed {
        is_fixed[f.col] = Some(f.value);
    }
    let mut b = prog.b.clone();
    let mut h = prog.h.clone();
    let mut eq_live = vec![false; m];
    let mut ineq_live = vec![false; p];
    for (i, j, v) in prog.a.iter() {
        match is_fixed[j] {
            Some(x) => b[i] -= v * x,
            None => eq_live[i] |= v != 0.0,
        }
    }
    for (i, j, v) in prog.g.iter() {
        match is_fixed[j] {
            Some(x) => h[i] -= v * x,
            None => ineq_live[i] |= v != 0.0,
        }
    }
    let keep_cols: Vec<usize> = (0..n).filter(|&j| is_fixed[j].is_none()).collect();
    let b_tol = EMPTY_ROW_TOL * (1.0 + norm_inf(&prog.b));
    let h_tol = EMPTY_ROW_TOL * (1.0 + norm_inf(&prog.h));
    let mut keep_eq = Vec::with_capacity(m);
    for i in 0..m {
        if eq_live[i] {
            keep_eq.push(i);
        } else if b[i].abs() > b_tol {
            outcome = PresolveOutcome::Infeasible;
        }
    }
    let mut keep_ineq = Vec::with_capacity(p);
    let mut new_cones = Vec::with_capacity(prog.cones.len());
    for blk in &cones.blocks {
        match blk.kind {
            Kind::SecondOrder => {
                keep_ineq.extend(blk.range());
                new_cones.push(Cone::SecondOrder(blk.dim));
            }
            Kind::NonNegative => {
                let before = keep_ineq.len();
                for i in blk.range() {
                    if ineq_live[i] {
                        keep_ineq.push(i);
                    } else if h[i] < -h_tol {
                        outcome = PresolveOutcome::Infeasible;
                    }
                }
                let kept = keep_ineq.len() - before;
                if kept > 0 {
                    new_cones.push(Cone::NonNegative(kept));
                }
            }
        }
    }

    let mut col_map = vec![usize::MAX; n];
    for (k, &j) in keep_cols.iter().enumerate() {
        col_map[j] = k;
    }
    let reduce = |mat: &CscMatrix, keep_rows: &[usize]| {
        let mut row_map = vec![usize::MAX; mat.nrows];
        for (k, &i) in keep_rows.iter().enumerate() {
            row_map[i] = k;
        }
        let mut t = Triplets::new(keep_rows.len(), keep_cols.len());
        for (i, j, v) in mat.iter() {
            if col_map[j] != usize::MAX && row_map[i] != usize::MAX {
                t.push(row_map[i], col_map[j], v);
            }
        }
        t.to_csc().expect("indices remapped into range")
    };
    let program = ConicProgram {
        c: keep_cols.iter().map(|&j| prog.c[j]).collect(),
        a: reduce(&prog.a, &keep_eq),
        b: keep_eq.iter().map(|&i| b[i]).collect(),
        g: reduce(&prog.g, &keep_ineq),
        h: keep_ineq.iter().map(|&i| h[i]).collect(),
        cones: new_cones,
    };
    (
        Presolved {
            program,
            keep_cols,
            keep_eq,
            keep_ineq,
            fixed,
            n,
            m,
            p,
        },
        outcome,
    )
}

impl Presolved {
    pub fn is_trivial(&self) -> bool {
        self.fixed.is_empty() && self.keep_eq.len() == self.m && self.keep_ineq.len() == self.p
    }

    /// Expands a reduced primal point to the original columns.
    pub fn expand_primal(&self, xr: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (k, &j) in self.keep_cols.iter().enumerate() {
            x[j] = xr[k];
        }
        for f in &self.fixed {
            x[f.col] = f.value;
        }
        x
    }

    /// Restores `(x, y, z, s)` for the original program. Duals of removed
    /// bound rows are chosen so that stationarity holds for the fixed columns;
    /// removed rows only ever belong to the orthant.
    pub fn postsolve(
        &self,
        original: &ConicProgram,
        xr: &[f64],
        yr: &[f64],
        zr: &[f64],
        sr: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        let x = self.expand_primal(xr);
        let mut y = vec![0.0; self.m];
        for (k, &i) in self.keep_eq.iter().enumerate() {
            y[i] = yr[k];
        }
        let mut z = vec![0.0; self.p];
        for (k, &i) in self.keep_ineq.iter().enumerate() {
            z[i] = zr[k];
        }
        let mut grad = original.c.clone();
        original.a.gemv_t(1.0, &y, &mut grad);
        original.g.gemv_t(1.0, &z, &mut grad);
        for f in &self.fixed {
            let r = grad[f.col];
            if r < 0.0 {
                z[f.upper.0] = -r / f.upper.1;
            } else if r > 0.0 {
                z[f.lower.0] = r / -f.lower.1;
            }
        }
        let mut gx = vec![0.0; self.p];
        original.g.gemv(1.0, &x, &mut gx);
        let mut s: Vec<f64> = (0..self.p).map(|i| (original.h[i] - gx[i]).max(0.0)).collect();
        for (k, &i) in self.keep_ineq.iter().enumerate() {
            s[i] = sr[k];
        }
        (x, y, z, s)
    }
}

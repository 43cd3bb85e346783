//! Reduced KKT system
//!
//! ```text
//! [ 0  A^T  G^T ] [dx]   [r_x]
//! [ A   0    0  ] [dy] = [r_y]
//! [ G   0  -W^2 ] [dz]   [r_z]
//! ```
//!
//! factored once per interior-point iteration with static regularization and
//! solved with iterative refinement against the unregularized matrix.

use alloc::vec;
use alloc::vec::Vec;

use super::cones::{ConeSet, Scaling};
use super::ldl::{minimum_degree, LdlFactor};
use super::sparse::{norm_inf, CscMatrix, Triplets};
use crate::{Error, Result};

const DYNAMIC_EPS: f64 = 1e-13;
const DYNAMIC_DELTA: f64 = 1e-7;

pub(crate) struct KktSystem {
    n: usize,
    m: usize,
    /// `perm[k]` = original index at permuted position k.
    perm: Vec<usize>,
    /// Permuted upper triangle; values rewritten before each factorization.
    upper: CscMatrix,
    /// Source entry k lands in `upper.values[slot[k]]`.
    slot: Vec<usize>,
    /// Values of the entries that never change; the `x` diagonal comes
    /// first and the `y` diagonal last.
    fixed_values: Vec<f64>,
    signs: Vec<i8>,
    factor: LdlFactor,
    static_reg: f64,
    work: Vec<f64>,
    resid: Vec<f64>,
}

impl KktSystem {
    pub fn new(a: &CscMatrix, g: &CscMatrix, cones: &ConeSet, static_reg: f64) -> Result<Self> {
        let (n, m, p) = (a.ncols, a.nrows, g.nrows);
        let dim = n + m + p;
        let mut t = Triplets::new(dim, dim);
        for j in 0..n {
            t.push(j, j, 0.0);
        }
        for (i, j, v) in a.iter() {
            t.push(j, n + i, v);
        }
        for (i, j, v) in g.iter() {
            t.push(j, n + m + i, v);
        }
        for i in 0..m {
            t.push(n + i, n + i, 0.0);
        }
        let fixed_values = t.values.clone();
        let identity = Scaling::identity(cones);
        identity.for_each_w2_upper(cones, |i, j, _| t.push(n + m + i, n + m + j, 0.0));

        // Order on the pattern, then map every source entry into the
        // permuted upper triangle.
        let pattern = t.to_csc()?;
        let perm = minimum_degree(&pattern);
        let mut iperm = vec![0usize; dim];
        for (k, &o) in perm.iter().enumerate() {
            iperm[o] = k;
        }
        let mut pt = Triplets::new(dim, dim);
        for k in 0..t.len() {
            let (r, c) = (iperm[t.rows[k]], iperm[t.cols[k]]);
            let (r, c) = if r <= c { (r, c) } else { (c, r) };
            pt.push(r, c, 0.0);
        }
        let upper = pt.to_csc()?;
        let slot = (0..pt.len())
            .map(|k| {
                let (r, c) = (pt.rows[k], pt.cols[k]);
                let col = &upper.rowind[upper.colptr[c]..upper.colptr[c + 1]];
                upper.colptr[c] + col.binary_search(&r).expect("entry present by construction")
            })
            .collect();
        let signs = perm.iter().map(|&o| if o < n { 1 } else { -1 }).collect();
        let factor = LdlFactor::symbolic(&upper)?;
        Ok(Self {
            n,
            m,
            perm,
            upper,
            slot,
            fixed_values,
            signs,
            factor,
            static_reg,
            work: vec![0.0; dim],
            resid: vec![0.0; dim],
        })
    }

    /// Refactors with the current cone scaling.
    pub fn factor(&mut self, cones: &ConeSet, scaling: &Scaling) -> Result<usize> {
        self.upper.values.iter_mut().for_each(|v| *v = 0.0);
        for (k, &v) in self.fixed_values.iter().enumerate() {
            self.upper.values[self.slot[k]] += v;
        }
        let reg = self.static_reg;
        let fixed = self.fixed_values.len();
        for k in 0..self.n {
            self.upper.values[self.slot[k]] += reg;
        }
        for k in fixed - self.m..fixed {
            self.upper.values[self.slot[k]] -= reg;
        }
        let mut k = fixed;
        let (values, slot) = (&mut self.upper.values, &self.slot);
        scaling.for_each_w2_upper(cones, |i, j, v| {
            values[slot[k]] += -v - if i == j { reg } else { 0.0 };
            k += 1;
        });
        self.factor
            .numeric(&self.upper, &self.signs, DYNAMIC_EPS, DYNAMIC_DELTA)
            .map_err(|_| Error::InvalidProgram("KKT factorization broke down".into()))
    }

    /// `out = K x` for the unregularized matrix.
    fn multiply(
        &self,
        a: &CscMatrix,
        g: &CscMatrix,
        cones: &ConeSet,
        scaling: &Scaling,
        x: &[f64],
        out: &mut [f64],
    ) {
        let (n, m) = (self.n, self.m);
        let (xx, rest) = x.split_at(n);
        let (xy, xz) = rest.split_at(m);
        out.iter_mut().for_each(|v| *v = 0.0);
        {
            let (ox, rest) = out.split_at_mut(n);
            let (oy, oz) = rest.split_at_mut(m);
            a.gemv_t(1.0, xy, ox);
            g.gemv_t(1.0, xz, ox);
            a.gemv(1.0, xx, oy);
            g.gemv(1.0, xx, oz);
            let mut t = vec![0.0; xz.len()];
            let mut w2z = vec![0.0; xz.len()];
            scaling.apply(cones, xz, &mut t);
            scaling.apply(cones, &t, &mut w2z);
            for (o, v) in oz.iter_mut().zip(&w2z) {
                *o -= v;
            }
        }
    }

    fn solve_factored(&mut self, rhs: &[f64], out: &mut [f64]) {
        for (k, &o) in self.perm.iter().enumerate() {
            self.work[k] = rhs[o];
        }
        self.factor.solve(&mut self.work);
        for (k, &o) in self.perm.iter().enumerate() {
            out[o] = self.work[k];
        }
    }

    pub fn static_regularization(&self) -> f64 {
        self.static_reg
    }

    /// Takes effect at the next [`Self::factor`].
    pub fn set_static_regularization(&mut self, reg: f64) {
        self.static_reg = reg;
    }

    /// Solves `K x = rhs` with up to `refine` refinement sweeps and returns
    /// the final residual `|rhs - K x|_inf / (1 + |rhs|_inf)`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve(
        &mut self,
        a: &CscMatrix,
        g: &CscMatrix,
        cones: &ConeSet,
        scaling: &Scaling,
        rhs: &[f64],
        out: &mut [f64],
        refine: usize,
    ) -> f64 {
        self.solve_factored(rhs, out);
        let scale = 1.0 + norm_inf(rhs);
        let target = 1e-14 * scale;
        let mut prev = f64::INFINITY;
        let mut correction = vec![0.0; rhs.len()];
        let mut sweeps = 0;
        loop {
            let mut kx = core::mem::take(&mut self.resid);
            self.multiply(a, g, cones, scaling, out, &mut kx);
            for (r, b) in kx.iter_mut().zip(rhs) {
                *r = b - *r;
            }
            let err = norm_inf(&kx);
            self.resid = kx;
            if !out.iter().all(|v| v.is_finite()) {
                return f64::INFINITY;
            }
            if err <= target || sweeps == refine {
                return err / scale;
            }
            if err >= 0.9 * prev {
                // The last correction did not help; undo it.
                for (o, d) in out.iter_mut().zip(&correction) {
                    *o -= d;
                }
                return prev / scale;
            }
            prev = err;
            sweeps += 1;
            let r = core::mem::take(&mut self.resid);
            self.solve_factored(&r, &mut correction);
            self.resid = r;
            for (o, d) in out.iter_mut().zip(&correction) {
                *o += d;
            }
        }
    }
}

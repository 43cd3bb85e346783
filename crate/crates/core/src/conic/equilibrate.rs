//! Ruiz equilibration of `[A; G]` with cone-preserving row scaling.
//!
//! The scaled problem has `A' = E A D`, `G' = F G D`, `c' = D c`,
//! `b' = E b`, `h' = F h`. `F` is constant within each second-order block so
//! the cone is mapped onto itself. The cost gets no extra scalar factor.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::cones::{ConeSet, Kind};
use super::sparse::{norm_inf, CscMatrix};

const MIN_NORM: f64 = 1e-4;
const MAX_NORM: f64 = 1e4;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Equilibration {
    /// Column scaling `D`.
    pub d: Vec<f64>,
    /// Equality row scaling `E`.
    pub e: Vec<f64>,
    /// Inequality row scaling `F`.
    pub f: Vec<f64>,
}

impl Equilibration {
    pub fn identity(n: usize, m: usize, p: usize) -> Self {
        Self {
            d: vec![1.0; n],
            e: vec![1.0; m],
            f: vec![1.0; p],
        }
    }

    /// Maps a scaled primal-dual point back to the unscaled problem. `tau`
    /// divides every component.
    pub fn unscale(
        &self,
        tau: f64,
        x: &[f64],
        y: &[f64],
        z: &[f64],
        s: &[f64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            x.iter().zip(&self.d).map(|(v, d)| v * d / tau).collect(),
            y.iter().zip(&self.e).map(|(v, e)| v * e / tau).collect(),
            z.iter().zip(&self.f).map(|(v, f)| v * f / tau).collect(),
            s.iter().zip(&self.f).map(|(v, f)| v / (f * tau)).collect(),
        )
    }
}

fn scale_matrix(mat: &mut CscMatrix, rows: &[f64], cols: &[f64]) {
    for j in 0..mat.ncols {
        for q in mat.colptr[j]..mat.colptr[j + 1] {
            mat.values[q] *= rows[mat.rowind[q]] * cols[j];
        }
    }
}

fn inv_sqrt_norm(v: f64) -> f64 {
    if v == 0.0 {
        1.0
    } else {
        1.0 / v.clamp(MIN_NORM, MAX_NORM).sqrt()
    }
}

/// Scales `a`, `g`, `c`, `b`, `h` in place and returns the applied scaling.
pub(crate) fn equilibrate(
    c: &mut [f64],
    a: &mut CscMatrix,
    b: &mut [f64],
    g: &mut CscMatrix,
    h: &mut [f64],
    cones: &ConeSet,
    iterations: usize,
) -> Equilibration {
    let (n, m, p) = (a.ncols, a.nrows, g.nrows);
    let mut eq = Equilibration::identity(n, m, p);
    let mut col = vec![0.0; n];
    let mut row_a = vec![0.0; m];
    let mut row_g = vec![0.0; p];
    for _ in 0..iterations {
        col.iter_mut().for_each(|v| *v = 0.0);
        row_a.iter_mut().for_each(|v| *v = 0.0);
        row_g.iter_mut().for_each(|v| *v = 0.0);
        for (i, j, v) in a.iter() {
            col[j] = col[j].max(v.abs());
            row_a[i] = row_a[i].max(v.abs());
        }
        for (i, j, v) in g.iter() {
            col[j] = col[j].max(v.abs());
            row_g[i] = row_g[i].max(v.abs());
        }
        for blk in &cones.blocks {
            if blk.kind == Kind::SecondOrder {
                let r = blk.range();
                let mx = norm_inf(&row_g[r.clone()]);
                row_g[r].iter_mut().for_each(|v| *v = mx);
            }
        }
        let dc: Vec<f64> = col.iter().map(|&v| inv_sqrt_norm(v)).collect();
        let ea: Vec<f64> = row_a.iter().map(|&v| inv_sqrt_norm(v)).collect();
        let fg: Vec<f64> = row_g.iter().map(|&v| inv_sqrt_norm(v)).collect();
        scale_matrix(a, &ea, &dc);
        scale_matrix(g, &fg, &dc);
        for (acc, s) in eq.d.iter_mut().zip(&dc) {
            *acc *= s;
        }
        for (acc, s) in eq.e.iter_mut().zip(&ea) {
            *acc *= s;
        }
        for (acc, s) in eq.f.iter_mut().zip(&fg) {
            *acc *= s;
        }
    }
    for (cj, d) in c.iter_mut().zip(&eq.d) {
        *cj *= d;
    }
    for (bi, e) in b.iter_mut().zip(&eq.e) {
        *bi *= e;
    }
    for (hi, f) in h.iter_mut().zip(&eq.f) {
        *hi *= f;
    }
    eq
}

//! Cone algebra for the nonnegative orthant and second-order cones:
//! Jordan products, Nesterov-Todd scaling and step-to-boundary.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::Cone;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    NonNegative,
    SecondOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Block {
    pub kind: Kind,
    pub offset: usize,
    pub dim: usize,
}

impl Block {
    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.dim
    }
}

/// Flattened cone layout of the inequality slack vector.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ConeSet {
    pub blocks: Vec<Block>,
    pub dim: usize,
    /// Barrier degree: one per orthant coordinate, one per second-order cone.
    pub degree: usize,
}

impl ConeSet {
    pub fn new(cones: &[Cone]) -> Self {
        let mut blocks = Vec::with_capacity(cones.len());
        let mut offset = 0;
        let mut degree = 0;
        for cone in cones {
            let (kind, dim) = match *cone {
                Cone::NonNegative(d) => (Kind::NonNegative, d),
                Cone::SecondOrder(d) => (Kind::SecondOrder, d),
            };
            if dim == 0 {
                continue;
            }
            degree += match kind {
                Kind::NonNegative => dim,
                Kind::SecondOrder => 1,
            };
            blocks.push(Block { kind, offset, dim });
            offset += dim;
        }
        Self {
            blocks,
            dim: offset,
            degree,
        }
    }

    /// Identity element `e`.
    pub fn identity(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.dim];
        for b in &self.blocks {
            match b.kind {
                Kind::NonNegative => e[b.range()].iter_mut().for_each(|x| *x = 1.0),
                Kind::SecondOrder => e[b.offset] = 1.0,
            }
        }
        e
    }

    /// Smallest spectral value over all blocks.
    pub fn min_eigenvalue(&self, u: &[f64]) -> f64 {
        let mut lo = f64::INFINITY;
        for b in &self.blocks {
            let v = &u[b.range()];
            let e = match b.kind {
                Kind::NonNegative => v.iter().fold(f64::INFINITY, |m, x| m.min(*x)),
                Kind::SecondOrder => v[0] - norm2(&v[1..]),
            };
            lo = lo.min(e);
        }
        lo
    }

    /// Moves `u` into the interior by adding a multiple of `e` if needed.
    pub fn shift_to_interior(&self, u: &mut [f64]) {
        let r = self.min_eigenvalue(u);
        if r <= 0.0 || !r.is_finite() {
            let shift = 1.0 - if r.is_finite() { r } else { 0.0 };
            for b in &self.blocks {
                match b.kind {
                    Kind::NonNegative => u[b.range()].iter_mut().for_each(|x| *x += shift),
                    Kind::SecondOrder => u[b.offset] += shift,
                }
            }
        }
    }

    /// Jordan product `u o v`.
    pub fn product(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        for b in &self.blocks {
            let r = b.range();
            let (u, v, o) = (&u[r.clone()], &v[r.clone()], &mut out[r]);
            match b.kind {
                Kind::NonNegative => {
                    for k in 0..b.dim {
                        o[k] = u[k] * v[k];
                    }
                }
                Kind::SecondOrder => {
                    o[0] = dot(u, v);
                    for k in 1..b.dim {
                        o[k] = u[0] * v[k] + v[0] * u[k];
                    }
                }
            }
        }
    }

    /// Solves `lambda o x = d` for `x`.
    pub fn inverse_product(&self, lambda: &[f64], d: &[f64], out: &mut [f64]) {
        for b in &self.blocks {
            let r = b.range();
            let (l, d, o) = (&lambda[r.clone()], &d[r.clone()], &mut out[r]);
            match b.kind {
                Kind::NonNegative => {
                    for k in 0..b.dim {
                        o[k] = d[k] / l[k];
                    }
                }
                Kind::SecondOrder => {
                    let det = l[0] * l[0] - dot(&l[1..], &l[1..]);
                    let x0 = (l[0] * d[0] - dot(&l[1..], &d[1..])) / det;
                    o[0] = x0;
                    for k in 1..b.dim {
                        o[k] = (d[k] - x0 * l[k]) / l[0];
                    }
                }
            }
        }
    }

    /// Largest `alpha` keeping `u + alpha du` in the cone, infinite if
    /// unbounded.
    pub fn max_step(&self, u: &[f64], du: &[f64]) -> f64 {
        let mut alpha = f64::INFINITY;
        for b in &self.blocks {
            let r = b.range();
            let (u, du) = (&u[r.clone()], &du[r]);
            match b.kind {
                Kind::NonNegative => {
                    for k in 0..b.dim {
                        if du[k] < 0.0 {
                            alpha = alpha.min(-u[k] / du[k]);
                        }
                    }
                }
                Kind::SecondOrder => alpha = alpha.min(soc_max_step(u, du)),
            }
        }
        alpha
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `u^T J v` with `J = diag(1, -1, ..., -1)`.
fn jdot(u: &[f64], v: &[f64]) -> f64 {
    u[0] * v[0] - dot(&u[1..], &v[1..])
}

/// Smallest positive root of `|u1 + a du1| = u0 + a du0` for interior `u`.
fn soc_max_step(u: &[f64], du: &[f64]) -> f64 {
    let qa = jdot(du, du);
    let qb = 2.0 * jdot(u, du);
    let qc = jdot(u, u).max(0.0);
    let mut best = f64::INFINITY;
    let mut consider = |r: f64| {
        if r > 0.0 && r < best {
            best = r;
        }
    };
    if qa == 0.0 {
        if qb < 0.0 {
            consider(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let q = -0.5 * (qb + qb.signum() * disc.sqrt());
            if q != 0.0 {
                consider(q / qa);
                consider(qc / q);
            } else {
                consider((-qc / qa).max(0.0).sqrt());
            }
        }
    }
    if du[0] < 0.0 {
        best = best.min(-u[0] / du[0]);
    }
    best
}

/// Nesterov-Todd scaling `W` with `W z = W^{-1} s = lambda`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Scaling {
    /// Diagonal of `W` on orthant coordinates, unused elsewhere.
    diag: Vec<f64>,
    /// Per second-order block: `eta` and the normalized `w`.
    soc: Vec<(f64, Vec<f64>)>,
    pub lambda: Vec<f64>,
}

impl Scaling {
    pub fn identity(cones: &ConeSet) -> Self {
        let soc = cones
            .blocks
            .iter()
            .filter(|b| b.kind == Kind::SecondOrder)
            .map(|b| {
                let mut w = vec![0.0; b.dim];
                w[0] = 1.0;
                (1.0, w)
            })
            .collect();
        Self {
            diag: vec![1.0; cones.dim],
            soc,
            lambda: cones.identity(),
        }
    }

    /// Recomputes the scaling at strictly interior `s`, `z`. Returns false
    /// if either point has drifted onto the boundary.
    pub fn update(&mut self, cones: &ConeSet, s: &[f64], z: &[f64]) -> bool {
        let mut k = 0;
        for b in &cones.blocks {
            let r = b.range();
            match b.kind {
                Kind::NonNegative => {
                    for i in r {
                        if !(s[i] > 0.0 && z[i] > 0.0) {
                            return false;
                        }
                        self.diag[i] = (s[i] / z[i]).sqrt();
                        self.lambda[i] = (s[i] * z[i]).sqrt();
                    }
                }
                Kind::SecondOrder => {
                    let (s, z) = (&s[r.clone()], &z[r.clone()]);
                    let ss = jdot(s, s);
                    let zz = jdot(z, z);
                    if !(ss > 0.0 && zz > 0.0 && s[0] > 0.0 && z[0] > 0.0) {
                        return false;
                    }
                    let (a, bn) = (ss.sqrt(), zz.sqrt());
                    let sz: f64 = s.iter().zip(z).map(|(x, y)| x * y).sum::<f64>() / (a * bn);
                    let gamma = ((1.0 + sz) / 2.0).sqrt();
                    let (eta, w) = &mut self.soc[k];
                    *eta = (a / bn).sqrt();
                    w[0] = (s[0] / a + z[0] / bn) / (2.0 * gamma);
                    for i in 1..b.dim {
                        w[i] = (s[i] / a - z[i] / bn) / (2.0 * gamma);
                    }
                    k += 1;
                    let mut lam = vec![0.0; b.dim];
                    soc_apply(*eta, w, z, &mut lam);
                    self.lambda[b.range()].copy_from_slice(&lam);
                }
            }
        }
        true
    }

    /// `out = W v`
    pub fn apply(&self, cones: &ConeSet, v: &[f64], out: &mut [f64]) {
        let mut k = 0;
        for b in &cones.blocks {
            let r = b.range();
            match b.kind {
                Kind::NonNegative => {
                    for i in r {
                        out[i] = self.diag[i] * v[i];
                    }
                }
                Kind::SecondOrder => {
                    let (eta, w) = &self.soc[k];
                    k += 1;
                    soc_apply(*eta, w, &v[r.clone()], &mut out[r]);
                }
            }
        }
    }

    /// `out = W^{-1} v`
    pub fn apply_inverse(&self, cones: &ConeSet, v: &[f64], out: &mut [f64]) {
        let mut k = 0;
        for b in &cones.blocks {
            let r = b.range();
            match b.kind {
                Kind::NonNegative => {
                    for i in r {
                        out[i] = v[i] / self.diag[i];
                    }
                }
                Kind::SecondOrder => {
                    let (eta, w) = &self.soc[k];
                    k += 1;
                    let (v, o) = (&v[r.clone()], &mut out[r]);
                    let w1v1 = dot(&w[1..], &v[1..]);
                    let t = v[0] - w1v1 / (1.0 + w[0]);
                    o[0] = (w[0] * v[0] - w1v1) / eta;
                    for i in 1..b.dim {
                        o[i] = (v[i] - t * w[i]) / eta;
                    }
                }
            }
        }
    }

    /// Calls `f(row, col, value)` for the upper triangle of `W^2`, block by
    /// block, in a fixed order.
    pub fn for_each_w2_upper(&self, cones: &ConeSet, mut f: impl FnMut(usize, usize, f64)) {
        let mut k = 0;
        for b in &cones.blocks {
            match b.kind {
                Kind::NonNegative => {
                    for i in b.range() {
                        f(i, i, self.diag[i] * self.diag[i]);
                    }
                }
                Kind::SecondOrder => {
                    let (eta, w) = &self.soc[k];
                    k += 1;
                    let e2 = eta * eta;
                    let o = b.offset;
                    for j in 0..b.dim {
                        for i in 0..=j {
                            let v = match (i, j) {
                                (0, 0) => dot(w, w),
                                (0, j) => 2.0 * w[0] * w[j],
                                (i, j) => 2.0 * w[i] * w[j] + if i == j { 1.0 } else { 0.0 },
                            };
                            f(o + i, o + j, e2 * v);
                        }
                    }
                }
            }
        }
    }

    /// Number of upper-triangle entries emitted by [`Self::for_each_w2_upper`].
    #[cfg(test)]
    pub fn w2_upper_len(cones: &ConeSet) -> usize {
        cones
            .blocks
            .iter()
            .map(|b| match b.kind {
                Kind::NonNegative => b.dim,
                Kind::SecondOrder => b.dim * (b.dim + 1) / 2,
            })
            .sum()
    }
}

fn soc_apply(eta: f64, w: &[f64], v: &[f64], out: &mut [f64]) {
    let w1v1 = dot(&w[1..], &v[1..]);
    let t = v[0] + w1v1 / (1.0 + w[0]);
    out[0] = eta * (w[0] * v[0] + w1v1);
    for i in 1..w.len() {
        out[i] = eta * (v[i] + t * w[i]);
    }
}

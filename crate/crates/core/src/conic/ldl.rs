//! Sparse `L D L^T` factorization of symmetric quasi-definite matrices,
//! up-looking with an elimination tree, plus a minimum-degree fill-reducing
//! ordering.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use super::sparse::CscMatrix;
use crate::{Error, Result};

const NONE: usize = usize::MAX;

/// Minimum-degree ordering of a symmetric pattern given by its upper
/// triangle. Returns `perm` with `perm[k]` = original index eliminated k-th.
/// Ties are broken by the lower index, so the result is deterministic.
pub(crate) fn minimum_degree(upper: &CscMatrix) -> Vec<usize> {
    let n = upper.ncols;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in upper.iter() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
        (0..n).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut done = vec![false; n];
    let mut perm = Vec::with_capacity(n);
    let mut merged = Vec::new();
    while let Some(Reverse((deg, v))) = heap.pop() {
        if done[v] || deg != adj[v].len() {
            continue;
        }
        done[v] = true;
        perm.push(v);
        let nbrs = core::mem::take(&mut adj[v]);
        for &u in &nbrs {
            // adj[u] <- (adj[u] U nbrs) \ {u, v}
            merged.clear();
            let (a, b) = (&adj[u], &nbrs);
            let (mut p, mut q) = (0, 0);
            while p < a.len() || q < b.len() {
                let next = match (a.get(p), b.get(q)) {
                    (Some(&x), Some(&y)) if x == y => {
                        p += 1;
                        q += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        p += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        q += 1;
                        y
                    }
                    (Some(&x), None) => {
                        p += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        q += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                if next != u && next != v {
                    merged.push(next);
                }
            }
            core::mem::swap(&mut adj[u], &mut merged);
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    perm
}

/// Factor storage; the symbolic part is reused across numeric refactorizations
/// of matrices sharing one pattern.
#[derive(Debug, Clone)]
pub(crate) struct LdlFactor {
    n: usize,
    etree: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    // workspace
    y_vals: Vec<f64>,
    y_mark: Vec<bool>,
    y_idx: Vec<usize>,
    elim: Vec<usize>,
    next_in_col: Vec<usize>,
}

impl LdlFactor {
    /// Elimination tree and column counts of `L` for an upper-triangular
    /// pattern whose every column ends with its diagonal.
    pub fn symbolic(upper: &CscMatrix) -> Result<Self> {
        let n = upper.ncols;
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            let mut has_diag = false;
            for p in upper.colptr[j]..upper.colptr[j + 1] {
                let mut i = upper.rowind[p];
                if i > j {
                    return Err(Error::InvalidProgram("factor input is not upper triangular".into()));
                }
                if i == j {
                    has_diag = true;
                }
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
            if !has_diag {
                return Err(Error::InvalidProgram("factor input lacks a diagonal entry".into()));
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let total = lp[n];
        Ok(Self {
            n,
            etree,
            lp,
            li: vec![0; total],
            lx: vec![0.0; total],
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            y_vals: vec![0.0; n],
            y_mark: vec![false; n],
            y_idx: vec![0; n],
            elim: vec![0; n],
            next_in_col: vec![0; n],
        })
    }

    /// Numeric factorization. Pivots whose sign disagrees with `signs` or
    /// whose magnitude falls below `eps` are replaced by `sign * delta`.
    /// Returns the number of replaced pivots.
    pub fn numeric(&mut self, upper: &CscMatrix, signs: &[i8], eps: f64, delta: f64) -> Result<usize> {
        let n = self.n;
        let mut bumped = 0;
        self.next_in_col.copy_from_slice(&self.lp[..n]);
        for k in 0..n {
            let mut nnz_y = 0;
            self.d[k] = 0.0;
            for p in upper.colptr[k]..upper.colptr[k + 1] {
                let b = upper.rowind[p];
                if b == k {
                    self.d[k] = upper.values[p];
                    continue;
                }
                self.y_vals[b] = upper.values[p];
                if !self.y_mark[b] {
                    self.y_mark[b] = true;
                    self.elim[0] = b;
                    let mut n_elim = 1;
                    let mut next = self.etree[b];
                    while next != NONE && next < k {
                        if self.y_mark[next] {
                            break;
                        }
                        self.y_mark[next] = true;
                        self.elim[n_elim] = next;
                        n_elim += 1;
                        next = self.etree[next];
                    }
                    while n_elim > 0 {
                        n_elim -= 1;
                        self.y_idx[nnz_y] = self.elim[n_elim];
                        nnz_y += 1;
                    }
                }
            }
            for t in (0..nnz_y).rev() {
                let c = self.y_idx[t];
                let slot = self.next_in_col[c];
                let yc = self.y_vals[c];
                for q in self.lp[c]..slot {
                    self.y_vals[self.li[q]] -= self.lx[q] * yc;
                }
                self.li[slot] = k;
                self.lx[slot] = yc * self.dinv[c];
                self.d[k] -= yc * self.lx[slot];
                self.next_in_col[c] += 1;
                self.y_vals[c] = 0.0;
                self.y_mark[c] = false;
            }
            let s = f64::from(signs[k]);
            if !(self.d[k] * s > eps) {
                if !self.d[k].is_finite() {
                    return Err(Error::InvalidProgram("non-finite pivot".into()));
                }
                self.d[k] = s * delta;
                bumped += 1;
            }
            self.dinv[k] = 1.0 / self.d[k];
        }
        Ok(bumped)
    }

    /// Solves `L D L^T x = b` in place.
    pub fn solve(&self, x: &mut [f64]) {
        for i in 0..self.n {
            let xi = x[i];
            for q in self.lp[i]..self.lp[i + 1] {
                x[self.li[q]] -= self.lx[q] * xi;
            }
        }
        for i in 0..self.n {
            x[i] *= self.dinv[i];
        }
        for i in (0..self.n).rev() {
            let mut acc = x[i];
            for q in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[q] * x[self.li[q]];
            }
            x[i] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::sparse::Triplets;

    fn upper_of(dense: &[f64], n: usize) -> CscMatrix {
        let mut t = Triplets::new(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = dense[i * n + j];
                if v != 0.0 || i == j {
                    t.push(i, j, v);
                }
            }
        }
        t.to_csc().unwrap()
    }

    #[test]
    fn factor_solves_quasi_definite_system() {
        // [[4, 1, 2], [1, 3, 0], [2, 0, -5]] with signs (+, +, -).
        let k = [4.0, 1.0, 2.0, 1.0, 3.0, 0.0, 2.0, 0.0, -5.0];
        let u = upper_of(&k, 3);
        let mut f = LdlFactor::symbolic(&u).unwrap();
        assert_eq!(f.numeric(&u, &[1, 1, -1], 1e-14, 1e-7).unwrap(), 0);
        let mut x = [1.0, 2.0, 3.0];
        f.solve(&mut x);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| k[i * 3 + j] * x[j]).sum();
            assert!((r - [1.0, 2.0, 3.0][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn arrow_matrix_ordering_avoids_fill() {
        // Hub 0 connected to all others: min degree eliminates leaves until
        // the hub ties with the last leaf.
        let n = 6;
        let mut t = Triplets::new(n, n);
        for j in 0..n {
            t.push(0, j, 1.0);
            t.push(j, j, 10.0);
        }
        let u = t.to_csc().unwrap();
        let perm = minimum_degree(&u);
        assert!(perm.iter().position(|&v| v == 0).unwrap() >= n - 2);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn wrong_sign_pivot_is_regularized() {
        let u = upper_of(&[0.0], 1);
        let mut f = LdlFactor::symbolic(&u).unwrap();
        assert_eq!(f.numeric(&u, &[-1], 1e-14, 1e-7).unwrap(), 1);
        let mut x = [1.0];
        f.solve(&mut x);
        assert!((x[0] + 1e7).abs() < 1e-3);
    }
}

//! Seeded generator of feasible, bounded SOCPs for solver cross-checks.
//!
//! The stream is SplitMix64 so that other languages can regenerate the exact
//! same instances from a seed.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::{Cone, ConicProgram, CscMatrix};

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    pub fn below(&mut self, k: u64) -> usize {
        (self.next_u64() % k) as usize
    }
}

/// Random program with a strictly feasible point and a box `|x_i| <= 5`, so
/// an optimum always exists.
///
/// Draw order: `n`, `m`, cone count, cone sizes, `x0`, `A` (row-major),
/// each cone's `G` rows (row-major) then its slack, then `c`.
pub fn random_feasible_socp(seed: u64) -> ConicProgram {
    let mut rng = SplitMix64::new(seed);
    let n = 4 + rng.below(5);
    let m = rng.below(3);
    let k = 1 + rng.below(3);
    let dims: Vec<usize> = (0..k).map(|_| 3 + rng.below(3)).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.symmetric()).collect();
    let mut a = vec![0.0; m * n];
    a.iter_mut().for_each(|v| *v = rng.symmetric());
    let b: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[i * n + j] * x0[j]).sum()).collect();

    let p = 2 * n + dims.iter().sum::<usize>();
    let mut g = vec![0.0; p * n];
    let mut h = vec![0.0; p];
    for j in 0..n {
        g[j * n + j] = 1.0;
        g[(n + j) * n + j] = -1.0;
        h[j] = 5.0;
        h[n + j] = 5.0;
    }
    let mut row = 2 * n;
    for &d in &dims {
        for r in row..row + d {
            for j in 0..n {
                g[r * n + j] = rng.symmetric();
            }
        }
        let u: Vec<f64> = (1..d).map(|_| rng.symmetric()).collect();
        let t = u.iter().map(|x| x * x).sum::<f64>().sqrt() + 0.5 + rng.next_f64();
        for (r, s) in (row..row + d).zip(core::iter::once(t).chain(u)) {
            h[r] = (0..n).map(|j| g[r * n + j] * x0[j]).sum::<f64>() + s;
        }
        row += d;
    }
    let c: Vec<f64> = (0..n).map(|_| rng.symmetric()).collect();
    let mut cones = vec![Cone::NonNegative(2 * n)];
    cones.extend(dims.iter().map(|&d| Cone::SecondOrder(d)));
    ConicProgram {
        c,
        a: CscMatrix::from_dense(m, n, &a),
        b,
        g: CscMatrix::from_dense(p, n, &g),
        h,
        cones,
    }
}

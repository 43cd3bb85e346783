//! Central finite-difference oracle for the analytic Jacobians.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::linearize::{ControlMatrix, LinearizedNode, StateMatrix};
use crate::vehicle::{downrange_derivatives, ControlInput, GlideState, VehicleParams};
use crate::{Error, Result};

/// Relative perturbation: step = `FD_STEP * max(1, |x|)`.
pub const FD_STEP: f64 = 1e-6;

/// Default pass threshold on the relative entry error.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// Roundoff bound multiplier: a central difference of values near `f`
/// carries an error up to about `eps * (|f(x+h)| + |f(x-h)|) / (2h)`.
const ROUNDOFF_SAFETY: f64 = 8.0;

struct Differences {
    a: StateMatrix,
    b: ControlMatrix,
    a_noise: StateMatrix,
    b_noise: ControlMatrix,
}

fn differences(x: &GlideState, u: &ControlInput, p: &VehicleParams) -> Result<Differences> {
    let mut d = Differences {
        a: [[0.0; 6]; 6],
        b: [[0.0; 2]; 6],
        a_noise: [[0.0; 6]; 6],
        b_noise: [[0.0; 2]; 6],
    };
    let noise = |fp: f64, fm: f64, width: f64| ROUNDOFF_SAFETY * f64::EPSILON * (fp.abs() + fm.abs()) / width;
    let xs = x.to_array();
    for j in 0..6 {
        let step = FD_STEP * xs[j].abs().max(1.0);
        let (mut plus, mut minus) = (xs, xs);
        plus[j] += step;
        minus[j] -= step;
        let fp = downrange_derivatives(&GlideState::from_array(plus), u, p)?;
        let fm = downrange_derivatives(&GlideState::from_array(minus), u, p)?;
        let width = plus[j] - minus[j];
        for i in 0..6 {
            d.a[i][j] = (fp[i] - fm[i]) / width;
            d.a_noise[i][j] = noise(fp[i], fm[i], width);
        }
    }
    let us = u.to_array();
    for j in 0..2 {
        let step = FD_STEP * us[j].abs().max(1.0);
        let (mut plus, mut minus) = (us, us);
        plus[j] += step;
        minus[j] -= step;
        let fp = downrange_derivatives(x, &ControlInput::from_array(plus), p)?;
        let fm = downrange_derivatives(x, &ControlInput::from_array(minus), p)?;
        let width = plus[j] - minus[j];
        for i in 0..6 {
            d.b[i][j] = (fp[i] - fm[i]) / width;
            d.b_noise[i][j] = noise(fp[i], fm[i], width);
        }
    }
    Ok(d)
}

/// Central-difference `A` and `B` of the downrange dynamics.
pub fn finite_difference(
    x: &GlideState,
    u: &ControlInput,
    p: &VehicleParams,
) -> Result<(StateMatrix, ControlMatrix)> {
    let d = differences(x, u, p)?;
    Ok((d.a, d.b))
}

/// Maps a point of the unit cube `[0, 1)^8` to an in-domain state and an
/// admissible control, covering the glide envelope.
pub fn sample_point(unit: [f64; 8], p: &VehicleParams) -> (GlideState, ControlInput) {
    let lerp = |lo: f64, hi: f64, w: f64| lo + (hi - lo) * w;
    (
        GlideState::new(
            lerp(5e3, 60e3, unit[0]),
            lerp(-50e3, 50e3, unit[1]),
            lerp(800.0, 3500.0, unit[2]),
            lerp(-1.2, 1.2, unit[3]),
            lerp(FRAC_PI_2 + 0.2, 3.0 * FRAC_PI_2 - 0.2, unit[4]),
            lerp(-1.4, 1.4, unit[5]),
        ),
        ControlInput::new(
            lerp(p.alpha_min, p.alpha_max, unit[6]),
            lerp(-p.sigma_dot_max, p.sigma_dot_max, unit[7]),
        ),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    pub samples: usize,
    /// Worst relative error per entry of `A` over all samples.
    pub a_error: StateMatrix,
    /// Worst relative error per entry of `B` over all samples.
    pub b_error: ControlMatrix,
}

impl JacobianReport {
    /// `(name, error)` for every entry, `A11`..`A66` then `B11`..`B62`.
    pub fn entries(&self) -> Vec<(String, f64)> {
        let mut out = Vec::with_capacity(48);
        for i in 0..6 {
            for j in 0..6 {
                out.push((format!("A{}{}", i + 1, j + 1), self.a_error[i][j]));
            }
        }
        for i in 0..6 {
            for j in 0..2 {
                out.push((format!("B{}{}", i + 1, j + 1), self.b_error[i][j]));
            }
        }
        out
    }

    pub fn failures(&self, tolerance: f64) -> Vec<(String, f64)> {
        self.entries()
            .into_iter()
            .filter(|(_, e)| !(*e < tolerance))
            .collect()
    }

    pub fn max_error(&self) -> f64 {
        self.entries().iter().map(|(_, e)| *e).fold(0.0, f64::max)
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.failures(tolerance).is_empty()
    }
}

/// Relative discrepancy left after discounting the difference quotient's
/// own roundoff, so structural zeros are not failed on floating-point noise.
fn entry_error(analytic: f64, numeric: f64, roundoff: f64) -> f64 {
    let excess = ((analytic - numeric).abs() - roundoff).max(0.0);
    if excess == 0.0 {
        0.0
    } else {
        excess / analytic.abs().max(numeric.abs())
    }
}

/// Compares `linearizer` against finite differences at every sample.
pub fn check_jacobians<F>(
    samples: &[(GlideState, ControlInput)],
    p: &VehicleParams,
    linearizer: F,
) -> Result<JacobianReport>
where
    F: Fn(&GlideState, &ControlInput, &VehicleParams) -> Result<LinearizedNode>,
{
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "jacobian check needs at least one sample".into(),
        ));
    }
    let mut report = JacobianReport {
        samples: samples.len(),
        a_error: [[0.0; 6]; 6],
        b_error: [[0.0; 2]; 6],
    };
    for (x, u) in samples {
        let node = linearizer(x, u, p)?;
        let d = differences(x, u, p)?;
        for i in 0..6 {
            for j in 0..6 {
                let e = entry_error(node.a[i][j], d.a[i][j], d.a_noise[i][j]);
                report.a_error[i][j] = report.a_error[i][j].max(e);
            }
            for j in 0..2 {
                let e = entry_error(node.b[i][j], d.b[i][j], d.b_noise[i][j]);
                report.b_error[i][j] = report.b_error[i][j].max(e);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearize::linearize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(n: usize, seed: u64) -> Vec<(GlideState, ControlInput)> {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| sample_point(core::array::from_fn(|_| rng.gen()), &p))
            .collect()
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let p = VehicleParams::default();
        let report = check_jacobians(&samples(100, 1), &p, linearize).unwrap();
        assert!(report.passes(DEFAULT_TOLERANCE), "{:?}", report.failures(DEFAULT_TOLERANCE));
    }

    #[test]
    fn sampled_points_are_in_domain() {
        for (x, u) in samples(500, 2) {
            x.check_domain().unwrap();
            let p = VehicleParams::default();
            assert!(u.alpha >= p.alpha_min && u.alpha <= p.alpha_max);
        }
    }

    #[test]
    fn perturbed_entry_is_named() {
        let p = VehicleParams::default();
        let broken = |x: &GlideState, u: &ControlInput, p: &VehicleParams| {
            let mut n = linearize(x, u, p)?;
            n.a[3][3] *= 1.01;
            n.a[3][3] += 1e-9;
            Ok(n)
        };
        let report = check_jacobians(&samples(10, 3), &p, broken).unwrap();
        let failures = report.failures(DEFAULT_TOLERANCE);
        assert_eq!(failures.len(), 1, "{failures:?}");
        assert_eq!(failures[0].0, "A44");
    }

    #[test]
    fn empty_sample_set_rejected() {
        let p = VehicleParams::default();
        assert!(check_jacobians(&[], &p, linearize).is_err());
    }
}

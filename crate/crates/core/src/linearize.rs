//! Analytic linearization of the downrange dynamics about a reference point:
//! `f(x, u) ~ A x + B u + c`.
//!
//! Rows and columns follow `(h, y_p, v, theta, psi, sigma)` and
//! `(alpha, sigma_dot)`.

use num_traits::Float;

use crate::vehicle::{downrange_derivatives, ControlInput, GlideState, StateVector, VehicleParams};
use crate::{Error, Result};

pub type StateMatrix = [[f64; 6]; 6];
pub type ControlMatrix = [[f64; 2]; 6];

/// Structurally nonzero entries of `A` (zero-based row, column).
pub const A_PATTERN: [(usize, usize); 19] = [
    (0, 3),
    (0, 4),
    (1, 4),
    (2, 0),
    (2, 2),
    (2, 3),
    (2, 4),
    (3, 0),
    (3, 2),
    (3, 3),
    (3, 4),
    (3, 5),
    (4, 0),
    (4, 3),
    (4, 4),
    (4, 5),
    (5, 2),
    (5, 3),
    (5, 4),
];

/// Structurally nonzero entries of `B` (zero-based row, column).
pub const B_PATTERN: [(usize, usize); 4] = [(2, 0), (3, 0), (4, 0), (5, 1)];

const DEGENERACY_GUARD: f64 = 1e-9;
const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedNode {
    pub a: StateMatrix,
    pub b: ControlMatrix,
    pub c: StateVector,
}

impl LinearizedNode {
    /// `A x + B u + c`.
    pub fn apply(&self, x: &StateVector, u: &[f64; 2]) -> StateVector {
        core::array::from_fn(|i| {
            let ax: f64 = (0..6).map(|j| self.a[i][j] * x[j]).sum();
            ax + self.b[i][0] * u[0] + self.b[i][1] * u[1] + self.c[i]
        })
    }
}

/// Shared subexpressions of the Jacobian entries.
struct Terms {
    st: f64,
    ct: f64,
    sp: f64,
    cp: f64,
    ss: f64,
    cs: f64,
    /// `rho * S / (2 m)`
    k: f64,
    cl: f64,
    cd: f64,
    v: f64,
    g: f64,
    hs: f64,
}

impl Terms {
    fn new(x: &GlideState, u: &ControlInput, p: &VehicleParams) -> Result<Self> {
        let (st, ct) = x.theta.sin_cos();
        let (sp, cp) = x.psi.sin_cos();
        if (ct * cp).abs() < DEGENERACY_GUARD {
            return Err(Error::DegenerateState("cos(theta) * cos(psi) vanishes"));
        }
        if x.v < 1e-6 {
            return Err(Error::DegenerateState("speed vanishes"));
        }
        let (ss, cs) = x.sigma.sin_cos();
        Ok(Self {
            st,
            ct,
            sp,
            cp,
            ss,
            cs,
            k: p.density(x.h) * p.ref_area / (2.0 * p.mass),
            cl: p.lift_coefficient(u.alpha),
            cd: p.drag_coefficient(u.alpha),
            v: x.v,
            g: p.gravity,
            hs: p.scale_height,
        })
    }
}

fn jacobians(x: &GlideState, u: &ControlInput, p: &VehicleParams) -> Result<(StateMatrix, ControlMatrix)> {
    let Terms {
        st,
        ct,
        sp,
        cp,
        ss,
        cs,
        k,
        cl,
        cd,
        v,
        g,
        hs,
    } = Terms::new(x, u, p)?;
    let tt = st / ct;
    let cc = ct * cp;
    let sd = u.sigma_dot;
    let mut a = [[0.0; 6]; 6];
    let mut b = [[0.0; 2]; 6];

    a[0][3] = 1.0 / (cp * ct * ct);
    a[0][4] = sp * tt / (cp * cp);
    a[1][4] = 1.0 / (cp * cp);

    a[2][0] = k * v * cd / (hs * cc);
    a[2][2] = -k * cd / cc + g * tt / (v * v * cp);
    a[2][3] = -k * v * cd * st / (ct * ct * cp) - g / (v * ct * ct * cp);
    a[2][4] = -k * v * cd * sp / (ct * cp * cp) - g * tt * sp / (v * cp * cp);

    a[3][0] = -k * cl * cs / (hs * cc);
    a[3][2] = 2.0 * g / (v * v * v * cp);
    a[3][3] = k * cl * cs * st / (ct * ct * cp);
    a[3][4] = k * cl * cs * sp / (ct * cp * cp) - g * sp / (v * v * cp * cp);
    a[3][5] = -k * cl * ss / cc;

    a[4][0] = -k * cl * ss / (hs * ct * ct * cp);
    a[4][3] = 2.0 * k * cl * ss * st / (ct * ct * ct * cp);
    a[4][4] = k * cl * ss * sp / (ct * ct * cp * cp);
    a[4][5] = k * cl * cs / (ct * ct * cp);

    a[5][2] = -sd / (v * v * cc);
    a[5][3] = sd * st / (v * ct * ct * cp);
    a[5][4] = sd * sp / (v * ct * cp * cp);

    b[2][0] = -2.0 * k * v * p.cd_alpha2 * u.alpha / cc;
    b[3][0] = k * p.cl_alpha * cs / cc;
    b[4][0] = k * p.cl_alpha * ss / (ct * ct * cp);
    b[5][1] = 1.0 / (v * cc);

    Ok((a, b))
}

/// Analytic `A`, `B` and `c = f - A x - B u` at a reference point.
pub fn linearize(x: &GlideState, u: &ControlInput, p: &VehicleParams) -> Result<LinearizedNode> {
    let (a, b) = jacobians(x, u, p)?;
    let f = downrange_derivatives(x, u, p)?;
    let xs = x.to_array();
    let us = u.to_array();
    let c = core::array::from_fn(|i| {
        let ax: f64 = (0..6).map(|j| a[i][j] * xs[j]).sum();
        f[i] - ax - b[i][0] * us[0] - b[i][1] * us[1]
    });
    Ok(LinearizedNode { a, b, c })
}

/// Expanded closed form of `c`, written term by term from the Jacobian
/// entries and the model forces rather than through matrix products.
pub fn closed_form_residual(
    x: &GlideState,
    u: &ControlInput,
    p: &VehicleParams,
) -> Result<StateVector> {
    let t = Terms::new(x, u, p)?;
    let (h, v, th, ps, sg) = (x.h, x.v, x.theta, x.psi, x.sigma);
    let (al, sd) = (u.alpha, u.sigma_dot);
    let (st, ct, sp, cp, ss, cs, g, m) = (t.st, t.ct, t.sp, t.cp, t.ss, t.cs, t.g, p.mass);
    let rho = p.density(h);
    let s_ref = p.ref_area;
    let lift = 0.5 * rho * v * v * s_ref * t.cl;
    let drag = 0.5 * rho * v * v * s_ref * t.cd;
    let tt = st / ct;
    // Drag and lift groupings as they appear in the expanded expressions.
    let drag_term = rho * v * v * s_ref * t.cd / (2.0 * m) + g * st;
    let lift_term = g * ct / v - rho * v * s_ref * t.cl * cs / (2.0 * m);

    let c1 = tt / cp - th / (cp * ct * ct) - ps * sp * tt / (cp * cp);
    let c2 = sp / cp - ps / (cp * cp);
    let c3 = -drag / (m * v * ct * cp) - g * tt / (v * cp)
        - h * rho * v * s_ref * t.cd / (2.0 * t.hs * m * cp * ct)
        - v * (drag_term / (v * v * cp * ct) - rho * s_ref * t.cd / (m * cp * ct))
        - th * (-g / (v * cp) - st * drag_term / (v * cp * ct * ct))
        - ps * (-sp * drag_term / (v * cp * cp * ct))
        - al * (-rho * v * s_ref * p.cd_alpha2 * al / (m * cp * ct));
    let c4 = lift * cs / (m * v * v * ct * cp) - g / (v * v * cp)
        + h * rho * s_ref * t.cl * cs / (2.0 * t.hs * m * cp * ct)
        - v * (2.0 * g / (v * v * v * cp))
        - th * (g * st / (v * v * cp * ct) - st * lift_term / (v * cp * ct * ct))
        - ps * (-sp * lift_term / (v * cp * cp * ct))
        + sg * rho * s_ref * t.cl * ss / (2.0 * m * cp * ct)
        - al * (rho * s_ref * p.cl_alpha * cs / (2.0 * m * cp * ct));
    let c5 = lift * ss / (m * v * v * ct * ct * cp)
        + h * rho * s_ref * t.cl * ss / (2.0 * t.hs * m * cp * ct * ct)
        - th * (rho * s_ref * t.cl * ss * st / (m * cp * ct * ct * ct))
        - ps * (rho * s_ref * t.cl * ss * sp / (2.0 * m * cp * cp * ct * ct))
        - sg * rho * s_ref * t.cl * cs / (2.0 * m * cp * ct * ct)
        - al * (rho * s_ref * p.cl_alpha * ss / (2.0 * m * cp * ct * ct));
    let c6 = sd / (v * ct * cp)
        - th * sd * st / (v * cp * ct * ct)
        - ps * sd * sp / (v * cp * cp * ct);
    Ok([c1, c2, c3, c4, c5, c6])
}

/// Returns `node.c` after checking it against [`closed_form_residual`].
pub fn affine_residual(
    node: &LinearizedNode,
    x: &GlideState,
    u: &ControlInput,
    p: &VehicleParams,
) -> Result<StateVector> {
    let closed = closed_form_residual(x, u, p)?;
    let f = downrange_derivatives(x, u, p)?;
    let xs = x.to_array();
    let us = u.to_array();
    for i in 0..6 {
        // Scale by the magnitudes that cancel inside c.
        let scale = f[i].abs()
            + (0..6).map(|j| (node.a[i][j] * xs[j]).abs()).sum::<f64>()
            + (0..2).map(|j| (node.b[i][j] * us[j]).abs()).sum::<f64>();
        if (closed[i] - node.c[i]).abs() > RESIDUAL_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::ResidualMismatch {
                row: i,
                closed_form: closed[i],
                definitional: node.c[i],
            });
        }
    }
    Ok(node.c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng) -> (GlideState, ControlInput) {
        (
            GlideState::new(
                rng.gen_range(10e3..50e3),
                rng.gen_range(-30e3..30e3),
                rng.gen_range(1000.0..3000.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(2.2..4.1),
                rng.gen_range(-1.2..1.2),
            ),
            ControlInput::new(rng.gen_range(-0.07..0.17), rng.gen_range(-0.087..0.087)),
        )
    }

    #[test]
    fn level_heading_pi_entries() {
        let p = VehicleParams::default();
        let n = linearize(
            &GlideState::new(30e3, 0.0, 2500.0, 0.0, PI, 0.0),
            &ControlInput::new(0.03, 0.0),
            &p,
        )
        .unwrap();
        assert!((n.a[0][3] + 1.0).abs() < 1e-15);
        assert!((n.a[1][4] - 1.0).abs() < 1e-15);
        assert_eq!(n.a[3][5], 0.0);
    }

    #[test]
    fn structural_zeros_are_exact() {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (x, u) = random_point(&mut rng);
            let n = linearize(&x, &u, &p).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    if !A_PATTERN.contains(&(i, j)) {
                        assert_eq!(n.a[i][j], 0.0, "A[{i}][{j}]");
                    }
                }
                for j in 0..2 {
                    if !B_PATTERN.contains(&(i, j)) {
                        assert_eq!(n.b[i][j], 0.0, "B[{i}][{j}]");
                    }
                }
            }
        }
    }

    #[test]
    fn exact_at_reference() {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (x, u) = random_point(&mut rng);
            let n = linearize(&x, &u, &p).unwrap();
            let f = downrange_derivatives(&x, &u, &p).unwrap();
            let g = n.apply(&x.to_array(), &u.to_array());
            for i in 0..6 {
                assert!((f[i] - g[i]).abs() <= 1e-10 * f[i].abs().max(1e-12), "row {i}");
            }
        }
    }

    #[test]
    fn closed_form_residual_agrees() {
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let (x, u) = random_point(&mut rng);
            let n = linearize(&x, &u, &p).unwrap();
            affine_residual(&n, &x, &u, &p).unwrap();
        }
    }

    #[test]
    fn residual_at_level_heading_pi() {
        // Hand evaluation: c2 = tan(psi) - psi / cos^2(psi) = -pi.
        let p = VehicleParams::default();
        let x = GlideState::new(30e3, 0.0, 2500.0, 0.0, PI, 0.1);
        let u = ControlInput::new(0.03, 0.0);
        let n = linearize(&x, &u, &p).unwrap();
        let c = affine_residual(&n, &x, &u, &p).unwrap();
        assert!((c[1] + PI).abs() < 1e-12);
        // With zero bank rate every term of the bank-angle row vanishes.
        assert_eq!(c[5], 0.0);
    }

    #[test]
    fn printed_expansion_sign_convention() {
        // The expanded expressions as usually printed add the A x terms;
        // that layout equals f + A x + B u, not the residual.
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let (x, u) = random_point(&mut rng);
            let n = linearize(&x, &u, &p).unwrap();
            let (th, ps) = (x.theta, x.psi);
            let printed_c1 = th.tan() / ps.cos()
                + th / (ps.cos() * th.cos().powi(2))
                + ps * ps.sin() * th.tan() / ps.cos().powi(2);
            let printed_c2 = ps.tan() + ps / ps.cos().powi(2);
            let f = downrange_derivatives(&x, &u, &p).unwrap();
            let xs = x.to_array();
            let plus = |i: usize| f[i] + (0..6).map(|j| n.a[i][j] * xs[j]).sum::<f64>();
            assert!((printed_c1 - plus(0)).abs() < 1e-10 * printed_c1.abs().max(1.0));
            assert!((printed_c2 - plus(1)).abs() < 1e-10 * printed_c2.abs().max(1.0));
        }
    }

    #[test]
    fn first_order_accuracy() {
        // Remainder of the linear model shrinks ~4x when the offset halves.
        let p = VehicleParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let (x, u) = random_point(&mut rng);
            let n = linearize(&x, &u, &p).unwrap();
            let dir = [300.0, 200.0, 20.0, 0.01, 0.012, 0.02];
            let remainder = |s: f64| {
                let xp: StateVector = core::array::from_fn(|k| x.to_array()[k] + s * dir[k]);
                let f = downrange_derivatives(&GlideState::from_array(xp), &u, &p).unwrap();
                let g = n.apply(&xp, &u.to_array());
                (0..6).map(|k| (f[k] - g[k]).powi(2)).sum::<f64>().sqrt()
            };
            let ratio = remainder(0.02) / remainder(0.01);
            assert!((ratio - 4.0).abs() < 1.2, "ratio {ratio}");
        }
    }

    #[test]
    fn degenerate_reference_rejected() {
        let p = VehicleParams::default();
        let x = GlideState::new(30e3, 0.0, 2500.0, 0.0, PI / 2.0, 0.0);
        assert!(linearize(&x, &ControlInput::default(), &p).is_err());
    }
}

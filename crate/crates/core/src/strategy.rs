//! Line-of-sight geometry and the expected-angle evasion strategy.
//!
//! The HGV steers so that its velocity ends up perpendicular to the initial
//! line of sight to each interceptor. With two interceptors the per-interceptor
//! targets are merged by a case analysis on which side of the reference axis
//! each interceptor sits.

use core::f64::consts::{FRAC_PI_2, PI};

use num_traits::Float;

use crate::geometry::Vec3;
use crate::vehicle::{wrap_two_pi, GlideState};
use crate::{Error, Result};

/// Default tie-break offset, 0.5 deg.
pub const DEFAULT_CHI: f64 = 0.5 * PI / 180.0;

/// Angles closer than this to the reference axis count as lying on it.
pub const TIE_TOLERANCE: f64 = 1e-12;

const MIN_RANGE: f64 = 1.0;

/// Line of sight from the HGV to an interceptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosAngles {
    /// Elevation, rad.
    pub q_ye: f64,
    /// Azimuth from +x_p, wrapped to `[0, 2*pi)`.
    pub q_ze: f64,
    /// Range, m.
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedAngles {
    pub theta_ex: f64,
    pub psi_ex: f64,
    pub chi: f64,
}

/// Where a single angle sits relative to its reference axis
/// (0 for elevation, pi for azimuth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingleBranch {
    Below,
    Above,
    OnAxis,
}

/// Joint placement of two interceptor angles relative to the reference axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairBranch {
    BothBelow,
    BothAbove,
    Straddling,
    FirstOnAxis,
    SecondOnAxis,
    BothOnAxis,
}

/// Both positions use `x` = downrange, `y` = crossrange, `z` = altitude.
pub fn los_angles(hgv: Vec3, interceptor: Vec3) -> Result<LosAngles> {
    let d = interceptor - hgv;
    let r = d.norm();
    if !(r >= MIN_RANGE) {
        return Err(Error::CoincidentPoints(r));
    }
    Ok(LosAngles {
        q_ye: d.z.atan2(d.x.hypot(d.y)),
        q_ze: wrap_two_pi(d.y.atan2(d.x)),
        r,
    })
}

/// Angle between the HGV velocity and the line of sight, in `[0, pi]`.
pub fn eta(state: &GlideState, los: &LosAngles) -> f64 {
    let c = los.q_ye.cos() * state.theta.cos() * (los.q_ze - state.psi).cos()
        + state.theta.sin() * los.q_ye.sin();
    c.clamp(-1.0, 1.0).acos()
}

pub fn classify(q: f64, axis: f64) -> SingleBranch {
    if (q - axis).abs() <= TIE_TOLERANCE {
        SingleBranch::OnAxis
    } else if q < axis {
        SingleBranch::Below
    } else {
        SingleBranch::Above
    }
}

pub fn classify_pair(q1: f64, q2: f64, axis: f64) -> PairBranch {
    use SingleBranch::*;
    match (classify(q1, axis), classify(q2, axis)) {
        (Below, Below) => PairBranch::BothBelow,
        (Above, Above) => PairBranch::BothAbove,
        (Below, Above) | (Above, Below) => PairBranch::Straddling,
        (OnAxis, OnAxis) => PairBranch::BothOnAxis,
        (OnAxis, _) => PairBranch::FirstOnAxis,
        (_, OnAxis) => PairBranch::SecondOnAxis,
    }
}

fn expect_about(q: f64, axis: f64, chi: f64) -> f64 {
    match classify(q, axis) {
        SingleBranch::Below => q + FRAC_PI_2,
        SingleBranch::Above => q - FRAC_PI_2,
        SingleBranch::OnAxis => q + FRAC_PI_2 - chi,
    }
}

fn merge_pair(q1: f64, q2: f64, axis: f64, chi: f64) -> f64 {
    let e1 = expect_about(q1, axis, chi);
    let e2 = expect_about(q2, axis, chi);
    let sgn = |q: f64| if q > axis { 1.0 } else { -1.0 };
    match classify_pair(q1, q2, axis) {
        PairBranch::BothBelow => e1.max(e2),
        PairBranch::BothAbove => e1.min(e2),
        PairBranch::Straddling => 0.5 * (e1 + e2),
        PairBranch::FirstOnAxis => q1 - sgn(q2) * (FRAC_PI_2 - chi),
        PairBranch::SecondOnAxis => q2 - sgn(q1) * (FRAC_PI_2 - chi),
        PairBranch::BothOnAxis => e1,
    }
}

fn check_chi(chi: f64) -> Result<()> {
    if chi > 0.0 && chi < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "chi must lie in (0, pi/2), got {chi}"
        )))
    }
}

fn check_head_on(q_ye0: f64, q_ze0: f64) -> Result<()> {
    if !(q_ye0 > -FRAC_PI_2 && q_ye0 < FRAC_PI_2) {
        return Err(Error::NotHeadOn("LOS elevation outside (-pi/2, pi/2)"));
    }
    if !(q_ze0 > FRAC_PI_2 && q_ze0 < 3.0 * FRAC_PI_2) {
        return Err(Error::NotHeadOn("LOS azimuth outside (pi/2, 3pi/2)"));
    }
    Ok(())
}

/// Flight-path angle perpendicular to an initial LOS elevation.
pub fn expected_theta(q_ye0: f64, chi: f64) -> f64 {
    expect_about(q_ye0, 0.0, chi)
}

/// Heading perpendicular to an initial LOS azimuth.
pub fn expected_psi(q_ze0: f64, chi: f64) -> f64 {
    expect_about(q_ze0, PI, chi)
}

/// Expected `(theta, psi)` against a single head-on interceptor.
pub fn expected_single(q_ye0: f64, q_ze0: f64, chi: f64) -> Result<(f64, f64)> {
    check_chi(chi)?;
    check_head_on(q_ye0, q_ze0)?;
    Ok((expected_theta(q_ye0, chi), expected_psi(q_ze0, chi)))
}

/// Expected angles against two head-on interceptors.
pub fn expected_two(los1: &LosAngles, los2: &LosAngles, chi: f64) -> Result<ExpectedAngles> {
    check_chi(chi)?;
    check_head_on(los1.q_ye, los1.q_ze)?;
    check_head_on(los2.q_ye, los2.q_ze)?;
    Ok(ExpectedAngles {
        theta_ex: merge_pair(los1.q_ye, los2.q_ye, 0.0, chi),
        psi_ex: merge_pair(los1.q_ze, los2.q_ze, PI, chi),
        chi,
    })
}

/// Expected angles for one or two interceptors seen from `hgv`.
pub fn expected_for_positions(
    hgv: Vec3,
    interceptors: &[Vec3],
    chi: f64,
) -> Result<ExpectedAngles> {
    match interceptors {
        [one] => {
            let los = los_angles(hgv, *one)?;
            let (theta_ex, psi_ex) = expected_single(los.q_ye, los.q_ze, chi)?;
            Ok(ExpectedAngles {
                theta_ex,
                psi_ex,
                chi,
            })
        }
        [a, b] => expected_two(&los_angles(hgv, *a)?, &los_angles(hgv, *b)?, chi),
        _ => Err(Error::InvalidParameter(alloc::format!(
            "expected angles need one or two interceptors, got {}",
            interceptors.len()
        ))),
    }
}

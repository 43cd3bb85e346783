//! HGV point-mass model: exponential atmosphere, lift/drag polars, and the
//! equations of motion in the time domain and with downrange `x_p` as the
//! independent variable.
//!
//! Flat, non-rotating Earth. The downrange form is valid while
//! `cos(theta) * cos(psi) < 0`, i.e. the vehicle keeps flying toward the
//! target so that `x_p` decreases monotonically with time.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_traits::Float;

use crate::transcription::{DownrangeGrid, TrajectoryProfile};
use crate::{Error, Result};

pub const STANDARD_GRAVITY: f64 = 9.81;
pub const SEA_LEVEL_DENSITY: f64 = 1.225;
pub const DENSITY_SCALE_HEIGHT: f64 = 6700.0;

const DEGENERACY_GUARD: f64 = 1e-9;
const MIN_SPEED: f64 = 1e-6;

/// `(h, y_p, v, theta, psi, sigma)` packed in that order.
pub type StateVector = [f64; 6];

/// HGV state at a downrange station.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlideState {
    /// Altitude, m.
    pub h: f64,
    /// Crossrange, m.
    pub y_p: f64,
    /// Speed, m/s.
    pub v: f64,
    /// Flight-path angle, rad.
    pub theta: f64,
    /// Heading angle, rad. `pi` points straight at the target.
    pub psi: f64,
    /// Bank angle, rad.
    pub sigma: f64,
}

impl GlideState {
    pub const fn new(h: f64, y_p: f64, v: f64, theta: f64, psi: f64, sigma: f64) -> Self {
        Self {
            h,
            y_p,
            v,
            theta,
            psi,
            sigma,
        }
    }

    pub fn to_array(self) -> StateVector {
        [self.h, self.y_p, self.v, self.theta, self.psi, self.sigma]
    }

    pub fn from_array(a: StateVector) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    /// Checks the open intervals the downrange formulation relies on.
    pub fn check_domain(&self) -> core::result::Result<(), &'static str> {
        if !self.to_array().iter().all(|x| x.is_finite()) {
            return Err("non-finite state component");
        }
        if self.v <= 0.0 {
            return Err("speed must stay positive");
        }
        if self.theta <= -FRAC_PI_2 || self.theta >= FRAC_PI_2 {
            return Err("flight-path angle left (-pi/2, pi/2)");
        }
        if self.psi <= FRAC_PI_2 || self.psi >= 3.0 * FRAC_PI_2 {
            return Err("heading angle left (pi/2, 3pi/2)");
        }
        Ok(())
    }
}

/// Angle of attack and bank-angle rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    /// rad
    pub alpha: f64,
    /// rad/s
    pub sigma_dot: f64,
}

impl ControlInput {
    pub const fn new(alpha: f64, sigma_dot: f64) -> Self {
        Self { alpha, sigma_dot }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.alpha, self.sigma_dot]
    }

    pub fn from_array(a: [f64; 2]) -> Self {
        Self::new(a[0], a[1])
    }

    fn lerp(self, other: Self, w: f64) -> Self {
        Self::new(
            self.alpha + (other.alpha - self.alpha) * w,
            self.sigma_dot + (other.sigma_dot - self.sigma_dot) * w,
        )
    }
}

/// Mass, aerodynamic polars, atmosphere and control limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Aerodynamic reference area, m^2.
    pub ref_area: f64,
    pub cl0: f64,
    /// 1/rad
    pub cl_alpha: f64,
    pub cd0: f64,
    /// 1/rad^2
    pub cd_alpha2: f64,
    /// Sea-level density, kg/m^3.
    pub rho0: f64,
    /// Density scale height, m.
    pub scale_height: f64,
    /// m/s^2
    pub gravity: f64,
    /// rad
    pub alpha_min: f64,
    /// rad
    pub alpha_max: f64,
    /// rad/s
    pub sigma_dot_max: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 802.2,
            ref_area: 1.0,
            cl0: -0.013,
            cl_alpha: 1.833,
            cd0: 0.015,
            cd_alpha2: 4.596,
            rho0: SEA_LEVEL_DENSITY,
            scale_height: DENSITY_SCALE_HEIGHT,
            gravity: STANDARD_GRAVITY,
            alpha_min: (-4.0f64).to_radians(),
            alpha_max: 10.0f64.to_radians(),
            sigma_dot_max: 5.0f64.to_radians(),
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(alloc::format!("vehicle: {what}")))
            }
        };
        check(self.mass > 0.0, "mass must be > 0")?;
        check(self.ref_area > 0.0, "reference area must be > 0")?;
        check(self.rho0 > 0.0, "sea-level density must be > 0")?;
        check(self.scale_height > 0.0, "scale height must be > 0")?;
        check(self.gravity >= 0.0, "gravity must be >= 0")?;
        check(self.alpha_min < self.alpha_max, "alpha_min must be < alpha_max")?;
        check(self.sigma_dot_max > 0.0, "sigma_dot_max must be > 0")?;
        let all_finite = [
            self.mass,
            self.ref_area,
            self.cl0,
            self.cl_alpha,
            self.cd0,
            self.cd_alpha2,
            self.rho0,
            self.scale_height,
            self.gravity,
            self.alpha_min,
            self.alpha_max,
            self.sigma_dot_max,
        ]
        .iter()
        .all(|x| x.is_finite());
        check(all_finite, "all parameters must be finite")
    }

    /// Exponential atmosphere.
    pub fn density(&self, h: f64) -> f64 {
        self.rho0 * (-h / self.scale_height).exp()
    }

    pub fn lift_coefficient(&self, alpha: f64) -> f64 {
        self.cl0 + self.cl_alpha * alpha
    }

    pub fn drag_coefficient(&self, alpha: f64) -> f64 {
        self.cd0 + self.cd_alpha2 * alpha * alpha
    }

    /// Clamps a control into the admissible box.
    pub fn saturate(&self, ctrl: ControlInput) -> ControlInput {
        ControlInput::new(
            ctrl.alpha.clamp(self.alpha_min, self.alpha_max),
            ctrl.sigma_dot.clamp(-self.sigma_dot_max, self.sigma_dot_max),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroForces {
    /// N
    pub lift: f64,
    /// N
    pub drag: f64,
    /// kg/m^3
    pub density: f64,
}

pub fn aero_forces(state: &GlideState, ctrl: &ControlInput, params: &VehicleParams) -> AeroForces {
    let density = params.density(state.h);
    let dyn_area = 0.5 * density * state.v * state.v * params.ref_area;
    AeroForces {
        lift: dyn_area * params.lift_coefficient(ctrl.alpha),
        drag: dyn_area * params.drag_coefficient(ctrl.alpha),
        density,
    }
}

/// Time-domain state, which additionally carries the downrange coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimeState {
    pub h: f64,
    pub x_p: f64,
    pub y_p: f64,
    pub v: f64,
    pub theta: f64,
    pub psi: f64,
    pub sigma: f64,
}

impl TimeState {
    pub fn from_glide(x_p: f64, s: &GlideState) -> Self {
        Self {
            h: s.h,
            x_p,
            y_p: s.y_p,
            v: s.v,
            theta: s.theta,
            psi: s.psi,
            sigma: s.sigma,
        }
    }

    pub fn glide(&self) -> GlideState {
        GlideState::new(self.h, self.y_p, self.v, self.theta, self.psi, self.sigma)
    }

    pub fn to_array(self) -> [f64; 7] {
        [
            self.h, self.x_p, self.y_p, self.v, self.theta, self.psi, self.sigma,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            h: a[0],
            x_p: a[1],
            y_p: a[2],
            v: a[3],
            theta: a[4],
            psi: a[5],
            sigma: a[6],
        }
    }
}

/// Time derivatives of `(h, x_p, y_p, v, theta, psi, sigma)`.
pub fn time_derivatives(
    state: &TimeState,
    ctrl: &ControlInput,
    params: &VehicleParams,
) -> Result<[f64; 7]> {
    let (st, ct) = state.theta.sin_cos();
    if ct.abs() < DEGENERACY_GUARD {
        return Err(Error::DegenerateState("cos(theta) vanishes"));
    }
    if state.v < MIN_SPEED {
        return Err(Error::DegenerateState("speed vanishes"));
    }
    let (sp, cp) = state.psi.sin_cos();
    let (ss, cs) = state.sigma.sin_cos();
    let aero = aero_forces(&state.glide(), ctrl, params);
    let (m, v, g) = (params.mass, state.v, params.gravity);
    Ok([
        v * st,
        v * ct * cp,
        v * ct * sp,
        -aero.drag / m - g * st,
        aero.lift * cs / (m * v) - g * ct / v,
        aero.lift * ss / (m * v * ct),
        ctrl.sigma_dot,
    ])
}

/// Derivatives of `(h, y_p, v, theta, psi, sigma)` with respect to `x_p`.
pub fn downrange_derivatives(
    state: &GlideState,
    ctrl: &ControlInput,
    params: &VehicleParams,
) -> Result<StateVector> {
    let (st, ct) = state.theta.sin_cos();
    let (sp, cp) = state.psi.sin_cos();
    if (ct * cp).abs() < DEGENERACY_GUARD {
        return Err(Error::DegenerateState("cos(theta) * cos(psi) vanishes"));
    }
    if state.v < MIN_SPEED {
        return Err(Error::DegenerateState("speed vanishes"));
    }
    let (ss, cs) = state.sigma.sin_cos();
    let aero = aero_forces(state, ctrl, params);
    let (m, v, g) = (params.mass, state.v, params.gravity);
    let tan_t = st / ct;
    Ok([
        tan_t / cp,
        sp / cp,
        -aero.drag / (m * v * ct * cp) - g * tan_t / (v * cp),
        aero.lift * cs / (m * v * v * ct * cp) - g / (v * v * cp),
        aero.lift * ss / (m * v * v * ct * ct * cp),
        ctrl.sigma_dot / (v * ct * cp),
    ])
}

fn axpy(y: &StateVector, a: f64, x: &StateVector) -> StateVector {
    core::array::from_fn(|k| y[k] + a * x[k])
}

fn rk4_step(
    x: &StateVector,
    step: f64,
    u0: &ControlInput,
    u_mid: &ControlInput,
    u1: &ControlInput,
    params: &VehicleParams,
) -> Result<StateVector> {
    let f = |s: &StateVector, u: &ControlInput| {
        downrange_derivatives(&GlideState::from_array(*s), u, params)
    };
    let k1 = f(x, u0)?;
    let k2 = f(&axpy(x, 0.5 * step, &k1), u_mid)?;
    let k3 = f(&axpy(x, 0.5 * step, &k2), u_mid)?;
    let k4 = f(&axpy(x, step, &k3), u1)?;
    Ok(core::array::from_fn(|k| {
        x[k] + step / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
    }))
}

/// Fixed-step RK4 over arbitrary stations with controls held piecewise
/// linear between nodes (`controls[i]` applies at `stations[i]`). Each
/// interval is split into `substeps` equal RK4 steps.
pub fn propagate_stations(
    initial: &GlideState,
    controls: &[ControlInput],
    stations: &[f64],
    params: &VehicleParams,
    substeps: usize,
) -> Result<Vec<GlideState>> {
    if controls.len() != stations.len() {
        return Err(Error::Dimension(alloc::format!(
            "{} controls for {} stations",
            controls.len(),
            stations.len()
        )));
    }
    if substeps == 0 {
        return Err(Error::InvalidParameter("substeps must be >= 1".into()));
    }
    if stations.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "stations must decrease strictly".into(),
        ));
    }
    initial.check_domain().map_err(|reason| Error::Domain {
        station: stations.first().copied().unwrap_or(f64::NAN),
        reason,
    })?;

    let mut states = Vec::with_capacity(stations.len());
    states.push(*initial);
    let mut x = initial.to_array();
    for i in 1..stations.len() {
        let span = stations[i] - stations[i - 1];
        let step = span / substeps as f64;
        let (ua, ub) = (controls[i - 1], controls[i]);
        for s in 0..substeps {
            let w0 = s as f64 / substeps as f64;
            let w1 = (s + 1) as f64 / substeps as f64;
            let u0 = ua.lerp(ub, w0);
            let u1 = ua.lerp(ub, w1);
            let um = ua.lerp(ub, 0.5 * (w0 + w1));
            x = rk4_step(&x, step, &u0, &um, &u1, params).map_err(|e| match e {
                Error::DegenerateState(reason) => Error::Domain {
                    station: stations[i - 1] + w0 * span,
                    reason,
                },
                other => other,
            })?;
            GlideState::from_array(x)
                .check_domain()
                .map_err(|reason| Error::Domain {
                    station: stations[i - 1] + w1 * span,
                    reason,
                })?;
        }
        states.push(GlideState::from_array(x));
    }
    Ok(states)
}

/// Elapsed time at each station, integrating `dt/dx_p = 1/(v cos(theta) cos(psi))`
/// with the trapezoidal rule.
pub fn elapsed_times(states: &[GlideState], stations: &[f64]) -> Vec<f64> {
    let inv_rate = |s: &GlideState| 1.0 / (s.v * s.theta.cos() * s.psi.cos());
    let mut times = Vec::with_capacity(states.len());
    let mut t = 0.0;
    for (i, s) in states.iter().enumerate() {
        if i > 0 {
            let dx = stations[i] - stations[i - 1];
            t += 0.5 * dx * (inv_rate(&states[i - 1]) + inv_rate(s));
        }
        times.push(t);
    }
    times
}

/// Propagates node controls over a downrange grid into a full profile.
pub fn propagate(
    initial: &GlideState,
    controls: &[ControlInput],
    grid: &DownrangeGrid,
    params: &VehicleParams,
    substeps: usize,
) -> Result<TrajectoryProfile> {
    let stations = grid.stations();
    let states = propagate_stations(initial, controls, &stations, params, substeps)?;
    TrajectoryProfile::new(*grid, states, controls.to_vec())
}

/// Heading wrapped into `[0, 2*pi)`.
pub fn wrap_two_pi(angle: f64) -> f64 {
    let tau = 2.0 * PI;
    let r = angle % tau;
    if r < 0.0 {
        r + tau
    } else {
        r
    }
}

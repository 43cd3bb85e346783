//! Proportional-navigation interceptors flown against an HGV that replays a
//! trajectory profile open loop in the time domain.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::geometry::Vec3;
use crate::strategy::{eta, los_angles};
use crate::transcription::TrajectoryProfile;
use crate::vehicle::{GlideState, STANDARD_GRAVITY};
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 0.001;
pub const DEFAULT_NAV_CONSTANT: f64 = 5.0;
pub const DEFAULT_MAX_ACCEL: f64 = 6.0 * STANDARD_GRAVITY;
pub const DEFAULT_INTERCEPTOR_SPEED: f64 = 1500.0;

/// How the interceptor velocity is pointed at launch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HeadingMode {
    /// Straight at the HGV's initial position.
    #[default]
    AtHgvInitial,
    /// Constant-bearing course against the HGV's initial velocity, so the
    /// line of sight starts without rotating. Falls back to
    /// [`HeadingMode::AtHgvInitial`] when no such course exists.
    AlongLos,
}

impl HeadingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeadingMode::AtHgvInitial => "at_hgv_initial",
            HeadingMode::AlongLos => "along_los",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "at_hgv_initial" => Some(HeadingMode::AtHgvInitial),
            "along_los" => Some(HeadingMode::AlongLos),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptorConfig {
    /// `(x, y, h)` in the penetration frame, m.
    pub position0: Vec3,
    /// m/s
    pub speed: f64,
    pub nav_constant: f64,
    /// m/s^2
    pub max_accel: f64,
    pub heading0_mode: HeadingMode,
}

impl InterceptorConfig {
    pub fn at(position0: Vec3) -> Self {
        Self {
            position0,
            speed: DEFAULT_INTERCEPTOR_SPEED,
            nav_constant: DEFAULT_NAV_CONSTANT,
            max_accel: DEFAULT_MAX_ACCEL,
            heading0_mode: HeadingMode::AtHgvInitial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.position0;
        if ![p.x, p.y, p.z].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("interceptor position must be finite".into()));
        }
        for (name, v) in [
            ("interceptor speed", self.speed),
            ("navigation constant", self.nav_constant),
            ("interceptor acceleration limit", self.max_accel),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(alloc::format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub position: Vec3,
    pub velocity: Vec3,
}

/// HGV position and velocity at time `t` along a profile. Positions are
/// interpolated linearly between nodes; the velocity comes from the
/// interpolated `(v, theta, psi)`.
pub fn replay_hgv(profile: &TrajectoryProfile, t: f64) -> Result<Kinematics> {
    let times = &profile.times;
    let end = *times.last().expect("profile has nodes");
    if !(t >= 0.0 && t <= end) {
        return Err(Error::OutOfSpan { t, start: 0.0, end });
    }
    let i = times.partition_point(|&ti| ti <= t).clamp(1, times.len() - 1) - 1;
    Ok(replay_in(profile, i, t))
}

fn replay_in(profile: &TrajectoryProfile, i: usize, t: f64) -> Kinematics {
    let (t0, t1) = (profile.times[i], profile.times[i + 1]);
    let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    let (a, b) = (&profile.states[i], &profile.states[i + 1]);
    let pa = node_position(profile, i);
    let pb = node_position(profile, i + 1);
    let lerp = |x: f64, y: f64| x + (y - x) * w;
    let v = lerp(a.v, b.v);
    Kinematics {
        position: pa.lerp(pb, w),
        velocity: Vec3::from_angles(lerp(a.theta, b.theta), lerp(a.psi, b.psi)) * v,
    }
}

/// `(x_p, y_p, h)` of node `i`.
pub fn node_position(profile: &TrajectoryProfile, i: usize) -> Vec3 {
    let s = &profile.states[i];
    Vec3::new(profile.grid.station(i), s.y_p, s.h)
}

/// True proportional navigation: `N (omega x v_I)` with the line-of-sight
/// rate `omega = (r x v_rel) / |r|^2`, kept perpendicular to `v_I` and
/// clipped at `max_accel`.
pub fn pn_command(interceptor: &Kinematics, target: &Kinematics, cfg: &InterceptorConfig) -> Vec3 {
    let r = target.position - interceptor.position;
    let rr = r.norm_squared();
    if rr == 0.0 {
        return Vec3::ZERO;
    }
    let v_rel = target.velocity - interceptor.velocity;
    let omega = r.cross(v_rel) * (1.0 / rr);
    let vi = interceptor.velocity;
    let mut a = omega.cross(vi) * cfg.nav_constant;
    let vv = vi.norm_squared();
    if vv > 0.0 {
        a -= vi * (a.dot(vi) / vv);
    }
    let mag = a.norm();
    if mag > cfg.max_accel {
        a = a * (cfg.max_accel / mag);
    }
    a
}

/// One semi-implicit Euler step at constant speed.
pub fn pn_step(
    interceptor: &Kinematics,
    target: &Kinematics,
    cfg: &InterceptorConfig,
    dt: f64,
) -> Kinematics {
    let a = pn_command(interceptor, target, cfg);
    let v = interceptor.velocity + a * dt;
    let n = v.norm();
    let velocity = if n > 0.0 { v * (cfg.speed / n) } else { interceptor.velocity };
    Kinematics {
        position: interceptor.position + velocity * dt,
        velocity,
    }
}

/// Launch velocity for `cfg` against an HGV starting at `hgv`.
pub fn launch_velocity(cfg: &InterceptorConfig, hgv: &Kinematics) -> Vec3 {
    let r = hgv.position - cfg.position0;
    let aim = |d: Vec3| {
        let n = d.norm();
        if n > 0.0 {
            d * (cfg.speed / n)
        } else {
            Vec3::new(cfg.speed, 0.0, 0.0)
        }
    };
    match cfg.heading0_mode {
        HeadingMode::AtHgvInitial => aim(r),
        HeadingMode::AlongLos => match intercept_time(r, hgv.velocity, cfg.speed) {
            Some(t) => aim(r + hgv.velocity * t),
            None => aim(r),
        },
    }
}

/// Smallest `t > 0` with `|r + v t| = speed t`.
fn intercept_time(r: Vec3, v: Vec3, speed: f64) -> Option<f64> {
    let a = v.norm_squared() - speed * speed;
    let b = 2.0 * r.dot(v);
    let c = r.norm_squared();
    if a.abs() < 1e-12 {
        return (b < 0.0).then(|| -c / b);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
        .into_iter()
        .filter(|t| *t > 0.0)
        .reduce(f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngagementSettings {
    /// s
    pub dt: f64,
    /// Keep every `record_every`-th step in [`EngagementResult::samples`].
    pub record_every: usize,
}

impl Default for EngagementSettings {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            record_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngagementSample {
    pub t: f64,
    pub hgv: Vec3,
    pub interceptors: Vec<Vec3>,
    pub ranges: Vec<f64>,
}

/// Closing geometry of one interceptor at an HGV node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosingSample {
    pub t: f64,
    /// Range, m.
    pub r: f64,
    /// Range rate, m/s.
    pub r_dot: f64,
    /// Line-of-sight elevation from the HGV, rad.
    pub q_ye: f64,
    /// Line-of-sight azimuth from the HGV, rad.
    pub q_ze: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngagementResult {
    /// Minimum sampled range per interceptor, m.
    pub miss_distance: Vec<f64>,
    /// Time of the minimum, s.
    pub t_closest: Vec<f64>,
    pub samples: Vec<EngagementSample>,
    /// `eta_history[k][i]`: angle between the HGV velocity and the line of
    /// sight to interceptor `k` at node `i`. After closest approach the
    /// interceptor's last simulated position is used.
    pub eta_history: Vec<Vec<f64>>,
    /// `r_q_history[k][i]`: closing geometry of interceptor `k` at node `i`.
    pub r_q_history: Vec<Vec<ClosingSample>>,
}

/// Simulates all interceptors from `t = 0` until each passes closest
/// approach or the HGV reaches the end of its profile.
pub fn engage(
    profile: &TrajectoryProfile,
    interceptors: &[InterceptorConfig],
    dt: f64,
) -> Result<EngagementResult> {
    engage_with(
        profile,
        interceptors,
        &EngagementSettings {
            dt,
            ..EngagementSettings::default()
        },
    )
}

pub fn engage_with(
    profile: &TrajectoryProfile,
    interceptors: &[InterceptorConfig],
    settings: &EngagementSettings,
) -> Result<EngagementResult> {
    if interceptors.is_empty() {
        return Err(Error::InvalidParameter("engagement needs at least one interceptor".into()));
    }
    if !(settings.dt > 0.0 && settings.dt.is_finite()) || settings.record_every == 0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "engagement step {} s / record_every {}",
            settings.dt,
            settings.record_every
        )));
    }
    for cfg in interceptors {
        cfg.validate()?;
    }
    let count = interceptors.len();
    let nodes = profile.states.len();
    let end = profile.duration();
    let hgv0 = replay_in(profile, 0, 0.0);
    let mut state: Vec<Kinematics> = interceptors
        .iter()
        .map(|cfg| Kinematics {
            position: cfg.position0,
            velocity: launch_velocity(cfg, &hgv0),
        })
        .collect();
    let mut active = vec![true; count];
    let mut miss = vec![f64::INFINITY; count];
    let mut t_closest = vec![0.0; count];
    let mut eta_history = vec![Vec::with_capacity(nodes); count];
    let mut r_q_history = vec![Vec::with_capacity(nodes); count];
    let mut samples = Vec::new();

    let mut segment = 0;
    let mut next_node = 0;
    let mut step: u64 = 0;
    loop {
        let t = step as f64 * settings.dt;
        let t = t.min(end);
        while segment + 2 < nodes && profile.times[segment + 1] <= t {
            segment += 1;
        }
        let hgv = replay_in(profile, segment, t);
        while next_node < nodes && profile.times[next_node] <= t {
            record_node(profile, next_node, &state, &mut eta_history, &mut r_q_history);
            next_node += 1;
        }

        let mut ranges = Vec::with_capacity(count);
        for k in 0..count {
            let r = hgv.position - state[k].position;
            let range = r.norm();
            ranges.push(range);
            if !active[k] {
                continue;
            }
            if range < miss[k] {
                miss[k] = range;
                t_closest[k] = t;
            }
            let v_rel = hgv.velocity - state[k].velocity;
            if range == 0.0 || (step > 0 && r.dot(v_rel) > 0.0) {
                active[k] = false;
            }
        }
        if step % settings.record_every as u64 == 0 {
            samples.push(EngagementSample {
                t,
                hgv: hgv.position,
                interceptors: state.iter().map(|s| s.position).collect(),
                ranges,
            });
        }
        if t >= end || !active.iter().any(|a| *a) {
            break;
        }
        for k in 0..count {
            if active[k] {
                state[k] = pn_step(&state[k], &hgv, &interceptors[k], settings.dt);
            }
        }
        step += 1;
    }
    while next_node < nodes {
        record_node(profile, next_node, &state, &mut eta_history, &mut r_q_history);
        next_node += 1;
    }
    Ok(EngagementResult {
        miss_distance: miss,
        t_closest,
        samples,
        eta_history,
        r_q_history,
    })
}

fn record_node(
    profile: &TrajectoryProfile,
    i: usize,
    state: &[Kinematics],
    eta_history: &mut [Vec<f64>],
    r_q_history: &mut [Vec<ClosingSample>],
) {
    let s: &GlideState = &profile.states[i];
    let p = node_position(profile, i);
    let v = Vec3::from_angles(s.theta, s.psi) * s.v;
    for (k, int) in state.iter().enumerate() {
        let r = int.position - p;
        let range = r.norm();
        let r_dot = if range > 0.0 { r.dot(int.velocity - v) / range } else { 0.0 };
        let (q_ye, q_ze, e) = match los_angles(p, int.position) {
            Ok(los) => (los.q_ye, los.q_ze, eta(s, &los)),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        eta_history[k].push(e);
        r_q_history[k].push(ClosingSample {
            t: profile.times[i],
            r: range,
            r_dot,
            q_ye,
            q_ze,
        });
    }
}

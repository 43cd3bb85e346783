use std::path::Path;

use glide_evade::config::{ConfigError, FileConfig, Overrides, TrustModeName};
use glide_evade::{bundled_mission, load_config};
use glide_evade_core::mission::{MissionConfig, SMALL_DELTA};
use glide_evade_core::scp::TrustMode;

/// Degree to radian conversion may differ from the core constants in the
/// last bit.
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs())
}

fn floats(m: &MissionConfig) -> Vec<f64> {
    let v = &m.vehicle;
    let mut out = vec![m.x_p0, m.c_theta, m.chi, m.schedule.l1, m.schedule.l2, m.engagement.dt];
    out.extend(m.initial_state.to_array());
    out.extend([
        v.mass,
        v.ref_area,
        v.cl0,
        v.cl_alpha,
        v.cd0,
        v.cd_alpha2,
        v.rho0,
        v.scale_height,
        v.gravity,
        v.alpha_min,
        v.alpha_max,
        v.sigma_dot_max,
    ]);
    out.extend(m.schedule.delta0);
    out.extend(m.stop.epsilon);
    out.extend([m.solver.tol_feas, m.solver.tol_gap, m.solver.step_fraction, m.solver.static_regularization]);
    out.extend(m.initial_control.to_array());
    for i in &m.interceptors {
        out.extend([i.position0.x, i.position0.y, i.position0.z, i.speed, i.nav_constant, i.max_accel]);
    }
    out
}

fn assert_same_mission(a: &MissionConfig, b: &MissionConfig) {
    let (fa, fb) = (floats(a), floats(b));
    assert_eq!(fa.len(), fb.len());
    for (k, (x, y)) in fa.iter().zip(&fb).enumerate() {
        assert!(close(*x, *y), "value {k}: {x} vs {y}");
    }
    assert_eq!(a.name, b.name);
    assert_eq!((a.n, a.n_i), (b.n, b.n_i));
    assert_eq!(a.schedule.mode, b.schedule.mode);
    assert_eq!(a.stop.max_outer_iter, b.stop.max_outer_iter);
    assert_eq!(a.solver.max_iter, b.solver.max_iter);
    assert_eq!(a.solver_backend, b.solver_backend);
    assert_eq!(a.engagement.record_every, b.engagement.record_every);
    assert!(a.interceptors.iter().zip(&b.interceptors).all(|(x, y)| x.heading0_mode == y.heading0_mode));
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const MINIMAL: &str = "[interceptor]\npositions = [[450000.0, -5000.0, 0.0], [450000.0, 10000.0, 0.0]]\n";

#[test]
fn bundled_missions_match_core_constructors() {
    for (name, core) in [
        ("mission1", MissionConfig::mission1()),
        ("mission2", MissionConfig::mission2()),
        ("mission3", MissionConfig::mission3()),
    ] {
        let loaded = load_config(&bundled_mission(name), &Overrides::default()).unwrap();
        assert_same_mission(&loaded.mission, &core);
    }
}

#[test]
fn bundled_mission1_initial_conditions() {
    let m = load_config(&bundled_mission("mission1"), &Overrides::default()).unwrap().mission;
    assert_eq!(m.x_p0, 600e3);
    assert_eq!((m.initial_state.h, m.initial_state.y_p, m.initial_state.v), (30e3, 0.0, 2500.0));
    assert_eq!(m.initial_state.theta, 0.0);
    assert!(close(m.initial_state.psi, std::f64::consts::PI));
    assert_eq!(m.initial_state.sigma, 0.0);
    assert_eq!((m.n, m.n_i), (200, 50));
    assert_eq!(m.vehicle.mass, 802.2);
    assert!(close(m.vehicle.alpha_max, 10f64.to_radians()));
}

#[test]
fn minimal_config_takes_defaults_and_echoes_them() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "short.toml", MINIMAL);
    let loaded = load_config(&path, &Overrides::default()).unwrap();
    assert_eq!(loaded.mission.name, "short");
    assert!(close(loaded.mission.chi, 0.5f64.to_radians()));
    let echo = loaded.file.to_toml();
    assert!(echo.contains("chi_deg = 0.5"), "{echo}");
    assert!(echo.contains("name = \"short\""), "{echo}");
    // The echo is itself a complete config.
    let again = FileConfig::parse(&echo).unwrap();
    assert_eq!(again, loaded.file);
}

#[test]
fn window_larger_than_grid_rejected() {
    let text = format!("{MINIMAL}[grid]\nn = 20\nn_i = 21\n");
    let err = FileConfig::parse(&text).unwrap().resolve("m").unwrap_err();
    assert!(matches!(&err, ConfigError::Invalid(m) if m.contains("N_I")), "{err}");
}

#[test]
fn unknown_keys_rejected() {
    for text in [
        format!("{MINIMAL}[solver]\ntolerance = 1e-6\n"),
        format!("colour = 1\n{MINIMAL}"),
        format!("{MINIMAL}[extra]\nx = 1\n"),
    ] {
        let err = FileConfig::parse(&text).unwrap_err();
        assert!(matches!(&err, ConfigError::Parse(m) if m.contains("unknown")), "{err}");
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let err = FileConfig::parse("[grid]\nn = 20\nn_i = = 3\n").unwrap_err();
    assert!(matches!(&err, ConfigError::Parse(m) if m.contains("line 3")), "{err}");
}

#[test]
fn missing_interceptors_rejected() {
    let err = FileConfig::parse("").unwrap().resolve("m").unwrap_err();
    assert!(matches!(&err, ConfigError::Invalid(m) if m.contains("interceptor.positions")), "{err}");
}

#[test]
fn bad_enumerations_rejected() {
    let text = format!("{MINIMAL}[trust_region]\nmode = \"adaptive\"\n");
    assert!(FileConfig::parse(&text).is_err());
    let text = MINIMAL.replace("[interceptor]\n", "[interceptor]\nheading_mode = \"lead\"\n");
    assert!(FileConfig::parse(&text).unwrap().resolve("m").is_err());
    let text = format!("{MINIMAL}[solver]\nbackend = \"mosek\"\n");
    let err = FileConfig::parse(&text).unwrap().resolve("m").unwrap_err();
    assert!(err.to_string().contains("solver.backend"), "{err}");
}

#[test]
fn documented_keys_reach_the_mission() {
    let text = format!(
        "{}speed = 1800.0\n[solver]\nbackend = \"builtin\"\ntol_feas = 1e-7\ntol_gap = 1e-6\nmax_iter = 50\n",
        MINIMAL.replace("positions", "heading_mode = \"along_los\"\npositions")
    );
    let m = FileConfig::parse(&text).unwrap().resolve("m").unwrap();
    assert!(m.interceptors.iter().all(|i| i.speed == 1800.0));
    assert_eq!((m.solver.tol_feas, m.solver.tol_gap, m.solver.max_iter), (1e-7, 1e-6, 50));
}

#[test]
fn overrides_apply_before_resolution() {
    let mut file = FileConfig::parse(&format!(
        "{MINIMAL}[trust_region]\nconstant = [2000.0, 5000.0, 500.0, 20.0, 20.0, 20.0]\n"
    ))
    .unwrap();
    file.apply(&Overrides {
        dt: Some(5e-4),
        solver_backend: Some("ipm".into()),
        trust_mode: Some(TrustModeName::Constant),
    });
    let m = file.resolve("m").unwrap();
    assert_eq!(m.engagement.dt, 5e-4);
    assert_eq!(m.solver_backend, "ipm");
    let TrustMode::Constant(r) = m.schedule.mode else {
        panic!("{:?}", m.schedule.mode)
    };
    for (a, b) in r.iter().zip(&SMALL_DELTA) {
        assert!(close(*a, *b));
    }
    assert!(file.to_toml().contains("mode = \"constant\""));
}

#[test]
fn unreadable_file_is_a_parse_error() {
    let err = load_config(Path::new("/nonexistent/m.toml"), &Overrides::default()).unwrap_err();
    assert!(matches!(err, ConfigError::Parse(_)));
}

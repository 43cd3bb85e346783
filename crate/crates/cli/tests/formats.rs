use glide_evade::formats::{
    as_written, engagement_rows, read_trajectory, write_csv, write_engagement, write_history, write_trajectory,
    FormatError, TrajectoryRow, TRAJECTORY_HEADER,
};
use glide_evade_core::engagement::engage_with;
use glide_evade_core::mission::MissionConfig;
use glide_evade_core::scp::{iterate, NoClock};
use glide_evade_core::conic::InteriorPointSolver;

fn small_mission() -> MissionConfig {
    let mut m = MissionConfig::mission1();
    m.n = 40;
    m.n_i = 10;
    m
}

#[test]
fn reloaded_trajectory_equals_as_written() {
    let m = small_mission();
    let profile = m.initial_guess().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    write_trajectory(&a, &profile).unwrap();
    let loaded = read_trajectory(&a, m.n_i).unwrap();
    assert_eq!(loaded, as_written(&profile));
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x_p,t,h,y_p,v,theta_deg,psi_deg,sigma_deg,alpha_deg,sigma_dot_degps");
    assert_eq!(text.lines().count(), m.n + 2);
}

#[test]
fn reloaded_trajectory_flies_identically() {
    let m = small_mission();
    let profile = m.initial_guess().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trajectory(&path, &profile).unwrap();
    let a = engage_with(&as_written(&profile), &m.interceptors, &m.engagement).unwrap();
    let b = engage_with(&read_trajectory(&path, m.n_i).unwrap(), &m.interceptors, &m.engagement).unwrap();
    assert_eq!(a.miss_distance, b.miss_distance);
}

#[test]
fn wrong_columns_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    std::fs::write(&path, "x_p,t,h\n1,2,3\n").unwrap();
    assert!(matches!(read_trajectory(&path, 1), Err(FormatError::Schema { .. })));
}

#[test]
fn non_uniform_grid_rejected() {
    let m = small_mission();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trajectory(&path, &m.initial_guess().unwrap()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[3] = lines[3].replacen(&lines[3][..lines[3].find(',').unwrap()].to_string(), "123.0", 1);
    std::fs::write(&path, lines.join("\n")).unwrap();
    let err = read_trajectory(&path, m.n_i).unwrap_err();
    assert!(matches!(&err, FormatError::Schema { message, .. } if message.contains("row 3")), "{err}");
}

#[test]
fn unparsable_value_names_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let row = TrajectoryRow {
        x_p: 1.0,
        t: 0.0,
        h: 1.0,
        y_p: 0.0,
        v: 1.0,
        theta_deg: 0.0,
        psi_deg: 180.0,
        sigma_deg: 0.0,
        alpha_deg: 0.0,
        sigma_dot_degps: 0.0,
    };
    write_csv(&path, &TRAJECTORY_HEADER, &[row, row]).unwrap();
    let text = std::fs::read_to_string(&path).unwrap().replacen("180.0", "south", 1);
    std::fs::write(&path, text).unwrap();
    let err = read_trajectory(&path, 1).unwrap_err();
    assert!(matches!(&err, FormatError::Schema { message, .. } if message.contains("row 1")), "{err}");
}

#[test]
fn history_and_engagement_headers() {
    let mut m = small_mission();
    m.stop.max_outer_iter = 2;
    let run = iterate(
        m.initial_guess().unwrap(),
        &m.objective().unwrap(),
        &m.vehicle,
        &m.scp_settings(),
        &mut InteriorPointSolver::new(),
        &NoClock,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.csv");
    write_history(&h, &run.history).unwrap();
    let text = std::fs::read_to_string(&h).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "k,dh,dyp,dv,dtheta_deg,dpsi_deg,dsigma_deg,objective,status,wall_s");
    assert!(lines.next().unwrap().starts_with("1,"));
    assert_eq!(text.lines().count(), 3);

    let e = dir.path().join("e.csv");
    let result = m.engage(&run.profile).unwrap();
    write_engagement(&e, &result).unwrap();
    let text = std::fs::read_to_string(&e).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,hgv_x,hgv_y,hgv_h,int1_x,int1_y,int1_h,int2_x,int2_y,int2_h,r1,r2"
    );
    assert_eq!(text.lines().count(), result.samples.len() + 1);
}

#[test]
fn single_interceptor_leaves_second_columns_empty() {
    let mut m = small_mission();
    m.interceptors.truncate(1);
    let result = m.engage(&m.initial_guess().unwrap()).unwrap();
    let rows = engagement_rows(&result);
    assert!(rows.iter().all(|r| r.int2_x.is_none() && r.r2.is_none()));
    let dir = tempfile::tempdir().unwrap();
    let e = dir.path().join("e.csv");
    write_engagement(&e, &result).unwrap();
    let text = std::fs::read_to_string(&e).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 12);
    assert!(row[7..10].iter().all(|f| f.is_empty()) && !row[10].is_empty() && row[11].is_empty(), "{row:?}");
}

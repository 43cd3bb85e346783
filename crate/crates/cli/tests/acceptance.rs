//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::time::Instant;

use glide_evade::commands::{self, MissionReport};
use glide_evade::config::{FileConfig, TrustModeName};
use glide_evade::{bundled_mission, CliError, LoadedConfig};
use glide_evade_core::conic::random::random_feasible_socp;
use glide_evade_core::conic::{solve, CscMatrix, Cone, ConicProgram, ConicSolution, SolveStatus, SolverSettings};
use glide_evade_core::mission::MissionConfig;
use glide_evade_core::strategy::{
    classify, classify_pair, expected_single, expected_two, LosAngles, PairBranch, SingleBranch, DEFAULT_CHI,
};
use glide_evade_core::transcription::assemble;
use glide_evade_core::vehicle::propagate;

const CHI: f64 = DEFAULT_CHI;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn load(name: &str, edit: impl FnOnce(&mut FileConfig)) -> LoadedConfig {
    let path = bundled_mission(name);
    let mut file = FileConfig::parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    edit(&mut file);
    let mission = file.resolve(name).unwrap();
    LoadedConfig { file, mission }
}

fn run(loaded: &LoadedConfig, dir: &Path) -> (Result<MissionReport, CliError>, f64) {
    let start = Instant::now();
    let r = commands::optimize(loaded, dir);
    (r, start.elapsed().as_secs_f64())
}

fn min_miss(r: &MissionReport) -> f64 {
    r.optimized.miss_distance.iter().copied().fold(f64::INFINITY, f64::min)
}

fn describe(r: &Result<MissionReport, CliError>) -> String {
    match r {
        Ok(r) => format!(
            "{} after {} iterations, miss {:.2?} m",
            if r.run.converged { "converged" } else { "not converged" },
            r.run.iterations(),
            r.optimized.miss_distance
        ),
        Err(e) => format!("error: {e}"),
    }
}

/// Runs shared between criteria.
struct Runs {
    variable: (Result<MissionReport, CliError>, f64),
    small_constant: Result<MissionReport, CliError>,
    large_constant: Result<MissionReport, CliError>,
    line_search: Result<MissionReport, CliError>,
    mission2: Result<MissionReport, CliError>,
    mission3: Result<MissionReport, CliError>,
    repeat_dirs: [tempfile::TempDir; 2],
}

impl Runs {
    fn new() -> Self {
        let dir = |_| tempfile::tempdir().unwrap();
        let dirs: [tempfile::TempDir; 2] = std::array::from_fn(dir);
        let variable = run(&load("mission1", |_| {}), dirs[0].path());
        let _ = run(&load("mission1", |_| {}), dirs[1].path());
        let constant = |radius: [f64; 6]| {
            let cfg = load("mission1", |f| {
                f.trust_region.mode = TrustModeName::Constant;
                f.trust_region.constant = Some(radius);
            });
            run(&cfg, tempfile::tempdir().unwrap().path()).0
        };
        Self {
            variable,
            small_constant: constant([2000.0, 5000.0, 500.0, 20.0, 20.0, 20.0]),
            large_constant: constant([5000.0, 5000.0, 1000.0, 40.0, 40.0, 40.0]),
            line_search: run(
                &load("mission1", |f| f.trust_region.mode = TrustModeName::Linesearch),
                tempfile::tempdir().unwrap().path(),
            )
            .0,
            mission2: run(&load("mission2", |_| {}), tempfile::tempdir().unwrap().path()).0,
            mission3: run(&load("mission3", |_| {}), tempfile::tempdir().unwrap().path()).0,
            repeat_dirs: dirs,
        }
    }

    fn variable(&self) -> &MissionReport {
        self.variable.0.as_ref().expect("mission 1 optimizes")
    }
}

fn jacobians() -> Outcome {
    let start = Instant::now();
    let report = commands::verify_jacobians(&Default::default(), 100, 2026, None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let max = report.max_error();
    outcome(
        report.samples >= 100 && max < 1e-6 && secs < 10.0,
        format!("{} samples, max relative error {max:.2e}, {secs:.3} s", report.samples),
    )
}

fn los(q_ye: f64, q_ze: f64) -> LosAngles {
    LosAngles { q_ye, q_ze, r: 1e5 }
}

fn strategy_branches() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |what: &str, got: f64, want: f64| {
        if (got - want).abs() > 1e-12 {
            failures.push(format!("{what}: {got} vs {want}"));
        }
    };
    // Single interceptor: theta about 0, psi about pi.
    let (t, p) = expected_single(-0.2, PI - 0.1, CHI).unwrap();
    check("single below", t, -0.2 + FRAC_PI_2);
    check("single below psi", p, PI - 0.1 + FRAC_PI_2);
    let (t, p) = expected_single(0.3, PI + 0.2, CHI).unwrap();
    check("single above", t, 0.3 - FRAC_PI_2);
    check("single above psi", p, PI + 0.2 - FRAC_PI_2);
    let (t, p) = expected_single(0.0, PI, CHI).unwrap();
    check("single on axis", t, FRAC_PI_2 - CHI);
    check("single on axis psi", p, PI + FRAC_PI_2 - CHI);
    let singles = [
        classify(-0.2, 0.0),
        classify(0.3, 0.0),
        classify(0.0, 0.0),
        classify(PI - 0.1, PI),
        classify(PI + 0.2, PI),
        classify(PI, PI),
    ];
    let want_singles = [
        SingleBranch::Below,
        SingleBranch::Above,
        SingleBranch::OnAxis,
        SingleBranch::Below,
        SingleBranch::Above,
        SingleBranch::OnAxis,
    ];
    let mut branch_ok = singles == want_singles;

    // Pairs: (q1, q2, branch, expected theta, expected psi at q + pi).
    let cases = [
        (-0.3, -0.1, PairBranch::BothBelow, -0.1 + FRAC_PI_2),
        (0.1, 0.4, PairBranch::BothAbove, 0.1 - FRAC_PI_2),
        (-0.2, 0.3, PairBranch::Straddling, 0.5 * ((-0.2 + FRAC_PI_2) + (0.3 - FRAC_PI_2))),
        (0.0, 0.2, PairBranch::FirstOnAxis, -(FRAC_PI_2 - CHI)),
        (-0.2, 0.0, PairBranch::SecondOnAxis, FRAC_PI_2 - CHI),
        (0.0, 0.0, PairBranch::BothOnAxis, FRAC_PI_2 - CHI),
    ];
    for (q1, q2, branch, want) in cases {
        branch_ok &= classify_pair(q1, q2, 0.0) == branch && classify_pair(PI + q1, PI + q2, PI) == branch;
        let e = expected_two(&los(q1, PI + q1), &los(q2, PI + q2), CHI).unwrap();
        check(&format!("theta {branch:?}"), e.theta_ex, want);
        check(&format!("psi {branch:?}"), e.psi_ex, PI + want);
    }
    let e = MissionConfig::mission1().expected_angles().unwrap();
    let mission_ok = (e.theta_ex - 1.373_826_734_387_238_8).abs() < 1e-9 && (e.psi_ex - 3.124_969_069_641_005).abs() < 1e-9;
    outcome(
        failures.is_empty() && branch_ok && mission_ok,
        format!(
            "3+3 single and 6+6 pair branches {}, mission 1 theta_ex = {:.9}, psi_ex = {:.9}{}",
            if branch_ok { "hit" } else { "MISCLASSIFIED" },
            e.theta_ex,
            e.psi_ex,
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn dense(c: Vec<f64>, a: (usize, Vec<f64>), b: Vec<f64>, g: (usize, Vec<f64>), h: Vec<f64>, cones: Vec<Cone>) -> ConicProgram {
    let n = c.len();
    ConicProgram {
        c,
        a: CscMatrix::from_dense(a.0, n, &a.1),
        b,
        g: CscMatrix::from_dense(g.0, n, &g.1),
        h,
        cones,
    }
}

fn kkt_ok(s: &ConicSolution) -> bool {
    s.status == SolveStatus::Optimal && s.kkt.primal <= 1e-8 && s.kkt.dual <= 1e-8 && s.kkt.gap <= 1e-8
}

fn conic_solver() -> Outcome {
    let settings = SolverSettings::default();
    let pythagorean = dense(
        vec![1.0],
        (0, vec![]),
        vec![],
        (3, vec![-1.0, 0.0, 0.0]),
        vec![0.0, 3.0, 4.0],
        vec![Cone::SecondOrder(3)],
    );
    let lp = dense(
        vec![1.0, 2.0],
        (1, vec![1.0, 1.0]),
        vec![1.0],
        (2, vec![-1.0, 0.0, 0.0, -1.0]),
        vec![0.0, 0.0],
        vec![Cone::NonNegative(2)],
    );
    let m = MissionConfig::mission1();
    let subproblem = assemble(
        &m.initial_guess().unwrap(),
        &m.objective().unwrap(),
        &m.schedule.radius(0),
        &m.vehicle,
    )
    .unwrap();
    let mut worst_kkt = 0.0f64;
    let mut all_kkt = true;
    let mut solve_checked = |p: &ConicProgram| {
        let s = solve(p, &settings).unwrap();
        all_kkt &= kkt_ok(&s);
        worst_kkt = worst_kkt.max(s.kkt.primal).max(s.kkt.dual).max(s.kkt.gap);
        s
    };
    let t = solve_checked(&pythagorean).x[0];
    solve_checked(&lp);
    solve_checked(&subproblem);
    let reference = include_str!("../../core/tests/data/socp_reference.csv");
    let mut worst_rel = 0.0f64;
    let mut seeds = 0;
    for line in reference.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let seed: u64 = f[0].parse().unwrap();
        let cost: f64 = f[4].parse().unwrap();
        let s = solve_checked(&random_feasible_socp(seed));
        worst_rel = worst_rel.max((s.primal_objective - cost).abs() / cost.abs().max(1.0));
        seeds += 1;
    }
    outcome(
        all_kkt && (t - 5.0).abs() <= 1e-8 && seeds == 50 && worst_rel <= 1e-6,
        format!(
            "t* = {t:.12}, worst KKT residual {worst_kkt:.1e}, {seeds} seeded SOCPs worst relative cost error {worst_rel:.1e}"
        ),
    )
}

fn convergence(runs: &Runs) -> Outcome {
    let (r, secs) = &runs.variable;
    match r {
        Ok(r) => {
            let y = r.run.profile.final_state().y_p.abs();
            outcome(
                r.run.converged && r.run.iterations() <= 30 && y <= 1e3 && *secs < 300.0,
                format!(
                    "{}, |y_pf| = {y:.3e} m, {secs:.1} s",
                    describe(&Ok(r.clone())).split(", miss").next().unwrap()
                ),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn effectiveness(runs: &Runs) -> Outcome {
    let r = runs.variable();
    let i = &r.mission.interceptors;
    let setup = r.mission.engagement.dt == 1e-3
        && i.iter().all(|c| c.nav_constant == 5.0 && (c.max_accel - 6.0 * 9.81).abs() < 1e-12);
    let ratios: Vec<f64> = r
        .optimized
        .miss_distance
        .iter()
        .zip(&r.baseline.miss_distance)
        .map(|(o, b)| o / b)
        .collect();
    outcome(
        setup && ratios.iter().all(|&q| q >= 5.0),
        format!(
            "optimized {:.2?} m vs initial guess {:.2?} m, ratios {:.1?} (N = 5, 6 g, dt = 1 ms, speed {} m/s)",
            r.optimized.miss_distance, r.baseline.miss_distance, ratios, i[0].speed
        ),
    )
}

fn trade_off(runs: &Runs) -> Outcome {
    let var = runs.variable();
    let detail = format!(
        "constant small: {}; variable: {}; constant large: {}",
        describe(&runs.small_constant),
        describe(&runs.variable.0),
        describe(&runs.large_constant)
    );
    let (Ok(small), Ok(large)) = (&runs.small_constant, &runs.large_constant) else {
        return outcome(false, detail);
    };
    let ordered = small.run.converged
        && var.run.converged
        && large.run.converged
        && small.run.iterations() < var.run.iterations()
        && var.run.iterations() < large.run.iterations()
        && min_miss(small) < min_miss(var);
    outcome(ordered, detail)
}

fn line_search(runs: &Runs) -> Outcome {
    let var = runs.variable();
    let detail = format!("line search: {}; variable: {}", describe(&runs.line_search), describe(&runs.variable.0));
    let Ok(ls) = &runs.line_search else {
        return outcome(false, detail);
    };
    let ratio = min_miss(ls) / min_miss(var);
    outcome(
        ls.run.converged && ls.run.iterations() > var.run.iterations() && (0.5..=2.0).contains(&ratio),
        format!("{detail}; min-miss ratio {ratio:.2}"),
    )
}

fn mission_trend(runs: &Runs) -> Outcome {
    let m1 = min_miss(runs.variable());
    let detail = format!(
        "mission 1 min miss {m1:.2} m; mission 2: {}; mission 3: {}",
        describe(&runs.mission2),
        describe(&runs.mission3)
    );
    match (&runs.mission2, &runs.mission3) {
        (Ok(m2), Ok(m3)) => outcome(
            m2.run.converged && m3.run.converged && min_miss(m2) > m1 && min_miss(m3) > m1,
            detail,
        ),
        _ => outcome(false, detail),
    }
}

fn eta_growth(runs: &Runs) -> Outcome {
    let r = runs.variable();
    let n_i = r.mission.n_i;
    let pairs: Vec<(f64, f64)> = r
        .optimized
        .eta_history
        .iter()
        .map(|h| (h[0].to_degrees(), h[n_i].to_degrees()))
        .collect();
    outcome(
        pairs.iter().all(|(a, b)| b > a),
        format!("eta(node 0) -> eta(node N_I), deg: {pairs:.2?}"),
    )
}

fn dynamics_fidelity(runs: &Runs) -> Outcome {
    let r = runs.variable();
    let p = &r.run.profile;
    let m = &r.mission;
    match propagate(&m.initial_state, &p.controls, &p.grid, &m.vehicle, 10) {
        Ok(rk4) => {
            let (a, b) = (rk4.final_state(), p.final_state());
            let err = (a.h - b.h).hypot(a.y_p - b.y_p);
            let limit = (0.05 * m.x_p0).min(30e3);
            outcome(
                err <= limit,
                format!(
                    "terminal position error {err:.1} m (dh = {:.1} m, dy = {:.1} m), limit {limit:.0} m",
                    a.h - b.h,
                    a.y_p - b.y_p
                ),
            )
        }
        Err(e) => outcome(false, format!("re-propagation failed: {e}")),
    }
}

fn determinism(runs: &Runs) -> Outcome {
    let [a, b] = &runs.repeat_dirs;
    let mut files = vec![Path::new("trajectory.csv").to_path_buf()];
    let iters = std::fs::read_dir(a.path().join("iterations")).unwrap();
    let mut names: Vec<_> = iters.map(|e| Path::new("iterations").join(e.unwrap().file_name())).collect();
    names.sort();
    files.extend(names);
    let differing: Vec<_> = files
        .iter()
        .filter(|f| std::fs::read(a.path().join(f)).ok() != std::fs::read(b.path().join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    outcome(
        differing.is_empty() && files.len() > 1,
        if differing.is_empty() {
            format!("{} trajectory CSVs byte-identical across two runs", files.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    let runs = Runs::new();
    let results = [
        ("Jacobian correctness", jacobians()),
        ("strategy branch coverage", strategy_branches()),
        ("conic solver soundness", conic_solver()),
        ("mission 1 convergence", convergence(&runs)),
        ("penetration effectiveness ratio", effectiveness(&runs)),
        ("trust-region trade-off ordering", trade_off(&runs)),
        ("line-search comparison", line_search(&runs)),
        ("mission trend", mission_trend(&runs)),
        ("eta diagnostic", eta_growth(&runs)),
        ("dynamics fidelity", dynamics_fidelity(&runs)),
        ("determinism", determinism(&runs)),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {:>2} {} {name}: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

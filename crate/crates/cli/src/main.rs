use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use glide_evade::commands::{self, exit, CliError, JacobianFault};
use glide_evade::{load_config, Overrides, TrustModeName, LOG_ENV};
use glide_evade_core::vehicle::VehicleParams;

#[derive(Parser)]
#[command(name = "glide-evade", version, about = "HGV penetration trajectory optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrustArg {
    Variable,
    Constant,
    Linesearch,
}

impl From<TrustArg> for TrustModeName {
    fn from(t: TrustArg) -> Self {
        match t {
            TrustArg::Variable => TrustModeName::Variable,
            TrustArg::Constant => TrustModeName::Constant,
            TrustArg::Linesearch => TrustModeName::Linesearch,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Engagement integration step, s.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    solver_backend: Option<String>,
    #[arg(long, value_enum)]
    trust_mode: Option<TrustArg>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            dt: self.dt,
            solver_backend: self.solver_backend.clone(),
            trust_mode: self.trust_mode.map(Into::into),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one mission and simulate the engagement.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fly a trajectory CSV against the mission's interceptors.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Trajectory CSV as written by `optimize`.
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Optimize several missions and tabulate miss distances.
    Batch {
        /// Mission configs; repeat the flag or list them after it.
        #[arg(long, num_args = 1.., required = true)]
        config: Vec<PathBuf>,
        /// Missions optimized in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compare the analytic Jacobians with finite differences.
    VerifyJacobians {
        /// Takes the vehicle parameters from this config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Perturb one entry of A, e.g. `A44`, to exercise the failure path.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Optimize { config, run } => {
            let loaded = load_config(&config, &run.overrides())?;
            let report = commands::optimize(&loaded, &run.out_dir)?;
            let s = report.summary();
            println!(
                "{}: {} after {} iterations, |y_pf| = {:.3} m, miss = {:?} m (initial guess {:?} m)",
                s.mission,
                if s.converged { "converged" } else { "not converged" },
                s.iterations,
                s.final_state.y_p.abs(),
                report.optimized.miss_distance,
                report.baseline.miss_distance
            );
            if s.converged {
                Ok(exit::SUCCESS)
            } else {
                Err(CliError::NonConvergence { iterations: s.iterations })
            }
        }
        Command::Simulate {
            config,
            trajectory,
            out_dir,
            dt,
        } => {
            let loaded = load_config(&config, &Overrides { dt, ..Overrides::default() })?;
            let report = commands::simulate(&loaded, &trajectory, &out_dir)?;
            println!(
                "miss = {:?} m (initial guess {:?} m)",
                report.trajectory.miss_distance, report.baseline.miss_distance
            );
            Ok(exit::SUCCESS)
        }
        Command::Batch { config, jobs, run } => {
            let report = commands::batch(&config, &run.overrides(), &run.out_dir, jobs)?;
            for (row, entry) in report.rows.iter().zip(&report.entries) {
                println!(
                    "{:<12} {:<10} {:<10} iterations={:<4} miss1={:<10} miss2={:<10} {}",
                    row.mission,
                    row.pi1,
                    row.pi2,
                    row.iterations.map_or("-".into(), |v| v.to_string()),
                    row.miss1.map_or("-".into(), |v| format!("{v:.3}")),
                    row.miss2.map_or("-".into(), |v| format!("{v:.3}")),
                    entry.error.as_deref().unwrap_or(&entry.status)
                );
            }
            Ok(report.exit_code())
        }
        Command::VerifyJacobians {
            config,
            samples,
            seed,
            inject_fault,
        } => {
            let params = match config {
                Some(path) => load_config(&path, &Overrides::default())?.mission.vehicle,
                None => VehicleParams::default(),
            };
            let fault = inject_fault
                .map(|s| JacobianFault::parse(&s).ok_or_else(|| CliError::Usage(format!("bad fault entry '{s}'"))))
                .transpose()?;
            let report = commands::verify_jacobians(&params, samples, seed, fault)?;
            println!("{} samples, tolerance {:e}", report.samples, commands::JACOBIAN_TOLERANCE);
            for (name, err) in report.entries() {
                let flag = if err < commands::JACOBIAN_TOLERANCE { "ok" } else { "FAIL" };
                println!("{name} {err:.3e} {flag}");
            }
            commands::check_report(&report)?;
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

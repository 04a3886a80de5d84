//! Command-line front end. The binary is a one-line wrapper around [`main_with_args`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::attractor::{
    orbit_trace, principal_spectrum, pullback_boundary, trichotomy_report, AttractorError, PdeModel, PullbackConfig,
};
use crate::cocycle::{lyapunov, tail_integral, CocycleTrace, DEFAULT_STEP};
use crate::hull::{DriverSpec, HullPoint};
use crate::output::write_atomic;
use crate::parabolic::{BoundaryCondition, Grid, LinearCoefficientSpec, NonlinearitySpec};
use crate::scenario::{self, Scenario};

/// Exit code for malformed command lines.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "attractor-lab", version, about = "Pullback attractors of non-autonomous scalar parabolic equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario by name) and write report.json.
    Run {
        config: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List bundled scenarios.
    List,
    /// Principal eigenpair of the discrete Laplacian.
    Eigen {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ln c(t,p) on [-horizon, horizon] and Lyapunov-type exponents.
    Cocycle {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 100.0)]
        horizon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integral of c(t,p)^(theta-1) over (-inf, 0].
    Tail {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 3.0)]
        theta: f64,
        /// Truncation time T.
        #[arg(long, default_value_t = 1e3)]
        horizon: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Upper boundary b(p) by pullback from r·e0.
    Pullback {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// t -> b(p·t) on [t_min, t_max].
    Orbit {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
        t_min: f64,
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        t_max: f64,
        #[arg(long, default_value_t = 1.0)]
        sample: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral case and attractor structure over a few hull points.
    Trichotomy {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![-20.0, 0.0, 20.0], allow_hyphen_values = true)]
        shifts: Vec<f64>,
    },
    /// Residual of the closed-form entire solution of the scalar equation.
    VerifyLemma {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 3.0)]
        theta: f64,
        #[arg(long, default_value_t = -20.0, allow_negative_numbers = true)]
        t_min: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        t_max: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Debug, Args)]
struct PointArgs {
    /// p0, p1, p2, constant:<c>, slowgrowth[:<beta>[:<terms>]], quasiperiodic:<a..>:<w..>[:<phi..>]
    #[arg(long, default_value = "p0")]
    driver: DriverSpec,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    shift: f64,
}

impl PointArgs {
    fn hull_point(&self) -> HullPoint {
        HullPoint::new(self.driver.clone(), self.shift)
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 64)]
    grid_n: usize,
    /// neumann, dirichlet, robin or robin:<alpha>
    #[arg(long, default_value = "neumann")]
    bc: BoundaryCondition,
}

impl GridArgs {
    fn grid(&self) -> Result<Grid, String> {
        Grid::new(1.0, self.grid_n, self.bc).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Args)]
struct ProblemArgs {
    #[command(flatten)]
    point: PointArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 3.0)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Multiplier k in h = gamma0 + k·a.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    scale: f64,
    /// Longest pullback horizon; the ladder doubles up from 25.
    #[arg(long, default_value_t = 400.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

impl ProblemArgs {
    fn model(&self) -> Result<PdeModel, String> {
        let grid = self.grid.grid()?;
        let g = NonlinearitySpec::pure_power(self.rho, self.theta).map_err(|e| e.to_string())?;
        let coeff = LinearCoefficientSpec::new(grid.gamma0(), self.point.hull_point()).with_scale(self.scale);
        Ok(PdeModel::new(grid, coeff, g))
    }

    fn config(&self) -> PullbackConfig {
        PullbackConfig::doubling(25.0_f64.min(self.horizon), self.horizon, self.tol)
    }
}

/// Failure of a subcommand after argument parsing.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Runtime(s)
    }
}

fn print_json(v: &serde_json::Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).expect("json"));
}

fn write_out(dir: &Option<PathBuf>, file: &str, contents: &str) -> Result<(), String> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let path = dir.join(file);
        write_atomic(&path, contents.as_bytes()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn load_scenario(config: &str) -> Result<Scenario, Failure> {
    let path = Path::new(config);
    if !path.exists() {
        if let Some(s) = scenario::bundled(config) {
            return Ok(s);
        }
    }
    Scenario::load(path).map_err(|e| Failure::Usage(e.to_string()))
}

fn execute(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::Run { config, out } => {
            let s = load_scenario(&config)?;
            let report = scenario::run(&s, &out).map_err(|e| e.to_string())?;
            for e in &report.experiments {
                println!("{:<28} {:<12} {:?}", e.name, e.kind, e.status);
            }
            println!("report: {}", out.join("report.json").display());
            Ok(report.exit_code())
        }
        Command::List => {
            for (name, _) in scenario::BUNDLED {
                let s = scenario::bundled(name).expect("bundled");
                println!("{name:<24} {}", s.description);
            }
            Ok(0)
        }
        Command::Eigen { grid, out } => {
            let g = grid.grid()?;
            write_out(&out, "eigen.csv", &g.e0().to_csv(&g))?;
            print_json(&json!({"gamma0": g.gamma0(), "bc": g.bc.to_string(), "n_nodes": g.n_nodes}));
            Ok(0)
        }
        Command::Cocycle { point, horizon, out } => {
            let hp = point.hull_point();
            let tr = CocycleTrace::build(&hp, -horizon, horizon, DEFAULT_STEP);
            write_out(&out, "cocycle.csv", &tr.to_csv())?;
            let est = lyapunov(&hp, horizon).ok();
            print_json(&json!({"hull_point": hp.label(), "points": tr.len(), "lyapunov": est}));
            Ok(0)
        }
        Command::Tail {
            point,
            theta,
            horizon,
            tol,
        } => {
            if !(theta > 1.0) {
                return Err(Failure::Usage(format!("--theta must exceed 1, got {theta}")));
            }
            let r = tail_integral(&point.hull_point(), theta - 1.0, horizon, tol).map_err(|e| e.to_string())?;
            print_json(&r.to_json());
            Ok(0)
        }
        Command::Pullback { problem, out } => {
            let model = problem.model().map_err(Failure::Usage)?;
            let (section, code) = match pullback_boundary(&model, &problem.config()) {
                Ok(s) => (s, 0),
                Err(AttractorError::NotConverged(s)) => (*s, 2),
                Err(e) => return Err(e.to_string().into()),
            };
            write_out(&out, "b.csv", &section.b_field.to_csv(&model.grid))?;
            print_json(&section.to_json());
            Ok(code)
        }
        Command::Orbit {
            problem,
            t_min,
            t_max,
            sample,
            out,
        } => {
            let model = problem.model().map_err(Failure::Usage)?;
            let tr = match orbit_trace(&model, t_min, t_max, sample, &problem.config()) {
                Ok(tr) => tr,
                Err(e @ AttractorError::NotConverged(_)) => {
                    eprintln!("{e}; try a longer --horizon");
                    return Ok(2);
                }
                Err(e) => return Err(e.to_string().into()),
            };
            write_out(&out, "orbit.csv", &tr.to_csv())?;
            print_json(&json!({
                "start": tr.start.to_json(),
                "terminal_sup": tr.samples.last().map(|s| s.1),
                "spot_checks": tr.spot_checks,
            }));
            Ok(0)
        }
        Command::Trichotomy { problem, shifts } => {
            let model = problem.model().map_err(Failure::Usage)?;
            let d = &problem.point.driver;
            let mut points: Vec<HullPoint> = shifts
                .iter()
                .map(|s| HullPoint::new(d.clone(), problem.point.shift + s))
                .collect();
            points.extend(d.limit_points().unwrap_or_default());
            let sp = principal_spectrum(&model).map_err(|e| e.to_string())?;
            let r = trichotomy_report(&model, &points, &sp, &problem.config()).map_err(|e| e.to_string())?;
            print_json(&serde_json::to_value(&r).expect("json"));
            Ok(match r.verdict {
                crate::attractor::Verdict::Consistent => 0,
                crate::attractor::Verdict::Inconclusive { .. } => 2,
                crate::attractor::Verdict::Inconsistent { .. } => 1,
            })
        }
        Command::VerifyLemma {
            point,
            theta,
            t_min,
            t_max,
            samples,
            tol,
        } => {
            let r = scenario::lemma_residual(&point.hull_point(), theta, t_min, t_max, samples)?;
            print_json(&json!({"theta": theta, "max_residual": r, "tol": tol, "pass": r < tol}));
            Ok(if r < tol { 0 } else { 1 })
        }
    }
}

/// Sizes the global rayon pool from `ATTRACTOR_LAB_THREADS` when set.
fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ATTRACTOR_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("ATTRACTOR_LAB_THREADS must be a positive integer, got '{v}'"))?;
    // A pool built earlier in the same process is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    match execute(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

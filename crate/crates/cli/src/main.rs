//! `sweepnet` command-line interface.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sweepnet::analysis::{
    curve_csv, events_csv, fmt_f64, macro_metrics, reference_volume, report_text, StrainMeasure,
};
use sweepnet::config::{solve, RunConfig};
use sweepnet::generators::{
    build_example1, build_periodic_tri_grid, build_tri_grid_with_hole, GridSpec, PeriodicSpec,
};
use sweepnet::io::{load_network, network_to_string, parse_events, parse_trajectory, trajectory_csv};
use sweepnet::lattice::{assemble, validate_assumptions, RigidityReport};
use sweepnet::linalg::Vector;
use sweepnet::sweep::{safe_load_schedule, Space};
use sweepnet::trajectory::SolverKind;
use sweepnet::Error;

const EXIT_INVALID: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "sweepnet", version, about = "Quasistatic evolution of elastic-plastic spring lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the rigidity report and check the modelling assumptions.
    Validate {
        net: PathBuf,
        #[arg(long, default_value_t = sweepnet::linalg::DEFAULT_RANK_TOL)]
        rank_tol: f64,
    },
    /// Integrate one or more networks and write trajectory CSV.
    Solve(SolveArgs),
    /// Compute macroscopic metrics from a saved trajectory.
    Analyze {
        traj: PathBuf,
        /// Network the trajectory was computed on.
        #[arg(long)]
        net: PathBuf,
        /// Event CSV written by `solve --events`.
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long, default_value_t = sweepnet::analysis::DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value = "run")]
        label: String,
        #[arg(long, value_enum, default_value_t = StrainArg::Auto)]
        strain: StrainArg,
        /// Report destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the stress-strain curve.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Write a built-in network file.
    Generate {
        #[arg(value_enum)]
        which: Builtin,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that the applied forces can be carried inside the yield box.
    CheckSafeLoad { net: PathBuf },
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(required = true)]
    nets: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = SolverArg::Leapfrog)]
    solver: SolverArg,
    #[arg(long, value_enum, default_value_t = SpaceArg::Reduced)]
    space: SpaceArg,
    /// Largest catch-up step.
    #[arg(long, default_value_t = 1e-4)]
    mesh: f64,
    /// Fixed number of uniform catch-up steps (overrides --mesh).
    #[arg(long)]
    steps: Option<usize>,
    /// Initial stress, one value per spring separated by commas or whitespace.
    #[arg(long)]
    prestress: Option<PathBuf>,
    /// Trajectory CSV (stdout when absent). Single network only.
    #[arg(long, conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    /// Event CSV. Single network only.
    #[arg(long, conflicts_with = "out_dir")]
    events: Option<PathBuf>,
    /// Directory receiving `<name>.csv` and `<name>.events.csv` per network.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-7)]
    event_tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Catchup,
    Leapfrog,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Full,
    Reduced,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrainArg {
    /// Box strain for periodic loading, prescribed displacement over span otherwise.
    Auto,
    Time,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Example1,
    Grid,
    Periodic,
}

enum Failure {
    Invalid(String),
    Runtime(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Validate { net, rank_tol } => validate(&net, rank_tol),
        Command::Solve(args) => solve_cmd(&args),
        Command::Analyze { traj, net, events, bins, label, strain, out, curve } => {
            analyze(&traj, &net, events.as_deref(), bins, &label, strain, out.as_deref(), curve.as_deref())
        }
        Command::Generate { which, out } => generate(which, out.as_deref()),
        Command::CheckSafeLoad { net } => check_safe_load(&net),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn rigidity_text(r: &RigidityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes={} springs={} dimension={} constraints={}", r.n, r.m, r.d, r.q);
    let _ = writeln!(s, "zero_modes={}", r.zero_modes);
    let _ = writeln!(s, "self_stress_states={}", r.self_stress_states);
    let _ = writeln!(s, "rigid_motion_dim={}", r.rigid_motion_dim);
    let _ = writeln!(s, "index_residual={}", r.index_residual);
    let _ = writeln!(s, "constraint_rank={}", r.constraint_rank);
    let _ = writeln!(s, "kinematically_determinate={}", r.kinematically_determinate);
    let _ = writeln!(s, "statically_determinate={}", r.statically_determinate);
    let _ = writeln!(s, "dim_u={}", r.dim_u());
    let _ = writeln!(s, "dim_v={}", r.dim_v);
    s
}

fn validate(net: &Path, rank_tol: f64) -> Result<(), Failure> {
    let (def, loads) = load_network(net)?;
    loads.validate(&def)?;
    let report = validate_assumptions(&def, rank_tol)?;
    print!("{}", rigidity_text(&report));
    let failures = report.failures();
    if failures.is_empty() {
        println!("assumptions=pass");
        return Ok(());
    }
    for (which, detail) in &failures {
        println!("failed: {which}: {detail}");
    }
    println!("assumptions=fail");
    Err(Failure::Invalid(format!("{}: {} assumption(s) violated", net.display(), failures.len())))
}

fn parse_prestress(path: &Path) -> Result<Vector, Failure> {
    let text = read(path)?;
    let vals = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Failure::Runtime(format!("{}: bad number '{t}'", path.display()))))
        .collect::<Result<Vec<f64>, Failure>>()?;
    Ok(Vector::from_vec(vals))
}

struct SolveOutput {
    trajectory: String,
    events: String,
}

fn solve_one(net: &Path, sigma0: Option<&Vector>, cfg: &RunConfig) -> Result<SolveOutput, Failure> {
    let (def, loads) = load_network(net)?;
    let (_, traj) = solve(&def, &loads, sigma0, cfg)?;
    Ok(SolveOutput { trajectory: trajectory_csv(&traj), events: events_csv(&traj) })
}

fn solve_cmd(args: &SolveArgs) -> Result<(), Failure> {
    let cfg = RunConfig {
        solver: match args.solver {
            SolverArg::Catchup => SolverKind::CatchUp,
            SolverArg::Leapfrog => SolverKind::Leapfrog,
        },
        space: match args.space {
            SpaceArg::Full => Space::Full,
            SpaceArg::Reduced => Space::Reduced,
        },
        mesh: args.mesh,
        steps: args.steps,
        event_tol: args.event_tol,
        ..RunConfig::default()
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let sigma0 = args.prestress.as_deref().map(parse_prestress).transpose()?;

    if args.nets.len() == 1 && args.out_dir.is_none() {
        let res = solve_one(&args.nets[0], sigma0.as_ref(), &cfg)?;
        emit(args.out.as_deref(), &res.trajectory)?;
        if let Some(p) = &args.events {
            emit(Some(p), &res.events)?;
        }
        return Ok(());
    }
    let Some(dir) = &args.out_dir else {
        return Err(Failure::Usage("several networks need --out-dir".into()));
    };
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    let results: Vec<Result<SolveOutput, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = args
            .nets
            .iter()
            .map(|net| s.spawn(|| solve_one(net, sigma0.as_ref(), &cfg)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(Failure::Runtime("worker panicked".into())))).collect()
    });
    let mut failed = 0;
    for (net, res) in args.nets.iter().zip(results) {
        let stem = net.file_stem().and_then(|s| s.to_str()).unwrap_or("network");
        match res {
            Ok(out) => {
                emit(Some(&dir.join(format!("{stem}.csv"))), &out.trajectory)?;
                emit(Some(&dir.join(format!("{stem}.events.csv"))), &out.events)?;
            }
            Err(Failure::Invalid(m) | Failure::Runtime(m) | Failure::Usage(m)) => {
                failed += 1;
                eprintln!("{}: {m}", net.display());
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} of {} runs failed", args.nets.len())));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    traj_path: &Path,
    net: &Path,
    events: Option<&Path>,
    bins: usize,
    label: &str,
    strain: StrainArg,
    out: Option<&Path>,
    curve: Option<&Path>,
) -> Result<(), Failure> {
    let (def, loads) = load_network(net)?;
    let sys = assemble(&def, sweepnet::linalg::DEFAULT_RANK_TOL)?;
    let mut traj = parse_trajectory(&read(traj_path)?, &sys.stiffness, SolverKind::Leapfrog, Space::Reduced)?;
    if let Some(p) = events {
        traj.events = parse_events(&read(p)?)?;
    }
    let measure = match strain {
        StrainArg::Auto => StrainMeasure::default_for(&def, &loads),
        StrainArg::Time => StrainMeasure::Time,
    };
    let report = macro_metrics(&traj, &sys, &loads, reference_volume(&def), measure, bins, label)?;
    emit(out, &report_text(&report))?;
    if let Some(p) = curve {
        emit(Some(p), &curve_csv(&report.curve))?;
    }
    Ok(())
}

fn generate(which: Builtin, out: Option<&Path>) -> Result<(), Failure> {
    let (def, loads) = match which {
        Builtin::Example1 => build_example1()?,
        Builtin::Grid => build_tri_grid_with_hole(&GridSpec::standard())?,
        Builtin::Periodic => build_periodic_tri_grid(&PeriodicSpec::default())?,
    };
    emit(out, &network_to_string(&def, &loads)?)
}

fn check_safe_load(net: &Path) -> Result<(), Failure> {
    let (def, loads) = load_network(net)?;
    let sys = assemble(&def, sweepnet::linalg::DEFAULT_RANK_TOL)?;
    match safe_load_schedule(&sys, &loads)? {
        None => {
            println!("safe_load=pass");
            Ok(())
        }
        Some(t) => {
            println!("safe_load=fail time={}", fmt_f64(t));
            Err(Failure::Invalid(format!("safe load condition violated at t = {}", fmt_f64(t))))
        }
    }
}

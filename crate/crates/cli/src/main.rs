//! `branchpde` command-line driver.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use branchpde::branching::{grow_tree, DEFAULT_NODE_CAP};
use branchpde::estimator::{blowup_horizon, estimate, path_rng, EstimatorOptions, MomentCheckInput};
use branchpde::functional::evaluate_xi;
use branchpde::problems::{by_name, diagonal_point, ProblemSpec, PROBLEM_NAMES};
use branchpde::report::{format_row, Row, CSV_HEADER};
use branchpde::{Complex64, Error};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "branchpde", version, about = "Branching Monte-Carlo solver for semilinear Cauchy problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate u(t, x) on a grid of points and write CSV.
    Solve(SolveArgs),
    /// Evaluate the L^p moment condition and report the blow-up horizon.
    CheckMoment(CheckMomentArgs),
    /// Grow one tree and print its particles and ξ.
    TreeDump(TreeDumpArgs),
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// One of: klein-gordon, yang-mills, beam, gross-pitaevskii, linear-heat, linear-wave, linear-schrodinger.
    #[arg(long)]
    problem: String,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Time horizon t.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Lifetime intensity β.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 0.0)]
    x0_start: f64,
    #[arg(long, default_value_t = 1.5)]
    x0_end: f64,
    #[arg(long, default_value_t = 16)]
    x0_steps: usize,
    /// Coordinates of a single evaluation point (repeat once per coordinate); replaces the grid.
    #[arg(long = "x", allow_negative_numbers = true)]
    x: Vec<f64>,
    #[arg(long, default_value_t = 1 << 16)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "BRANCHPDE_THREADS", default_value_t = 1)]
    threads: usize,
    #[arg(long, env = "BRANCHPDE_NODE_CAP", default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Refuse to run (exit 1) when the horizon exceeds the moment-check bound.
    #[arg(long)]
    strict_moment_check: bool,
}

#[derive(Args, Debug)]
struct CheckMomentArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Moment order p > 1.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Multiplies every nonlinearity bound.
    #[arg(long, default_value_t = 1.0)]
    nonlinearity_scale: f64,
}

#[derive(Args, Debug)]
struct TreeDumpArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    x0: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "BRANCHPDE_NODE_CAP", default_value_t = DEFAULT_NODE_CAP)]
    node_cap: usize,
}

/// A failure that ends the command with a message and an exit status.
struct Failure {
    message: String,
    code: u8,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: 2 }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::UnknownProblem(_) | Error::UnsupportedKernel(_) => 2,
            _ => 1,
        };
        let message = match e {
            Error::UnknownProblem(name) => {
                format!("unknown problem '{name}'; available: {}", PROBLEM_NAMES.join(", "))
            }
            other => other.to_string(),
        };
        Self { message, code }
    }
}

fn load(args: &ProblemArgs) -> Result<ProblemSpec, Failure> {
    if !(args.t > 0.0 && args.t.is_finite()) {
        return Err(Failure::usage(format!("--t must be positive, got {}", args.t)));
    }
    if !(args.beta > 0.0 && args.beta.is_finite()) {
        return Err(Failure::usage(format!("--beta must be positive, got {}", args.beta)));
    }
    Ok(by_name(&args.problem, args.dim)?)
}

fn grid(args: &SolveArgs, dim: usize) -> Result<Vec<(f64, Vec<Complex64>)>, Failure> {
    if !args.x.is_empty() {
        if args.x.len() != dim {
            return Err(Failure::usage(format!(
                "--x given {} times for a problem of dimension {dim}",
                args.x.len()
            )));
        }
        let point = args.x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        return Ok(vec![(args.x[0], point)]);
    }
    if args.x0_steps == 0 {
        return Err(Failure::usage("--x0-steps must be at least 1"));
    }
    if !(args.x0_start.is_finite() && args.x0_end.is_finite()) {
        return Err(Failure::usage("grid end points must be finite"));
    }
    let step = if args.x0_steps > 1 {
        (args.x0_end - args.x0_start) / (args.x0_steps - 1) as f64
    } else {
        0.0
    };
    Ok((0..args.x0_steps)
        .map(|k| {
            let x0 = args.x0_start + k as f64 * step;
            (x0, diagonal_point(dim, x0))
        })
        .collect())
}

fn square_moment_horizon(problem: &ProblemSpec, t: f64, beta: f64) -> Result<f64, Error> {
    blowup_horizon(&MomentCheckInput::for_problem(problem, t, beta, 2.0)?)
}

/// Seed of grid row `row`; distinct rows draw independent streams.
fn row_seed(seed: u64, row: usize) -> u64 {
    seed ^ (row as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn solve(args: SolveArgs) -> Result<ExitCode, Failure> {
    let problem = load(&args.problem)?;
    let t = args.problem.t;
    if args.paths < 2 {
        return Err(Failure::usage(format!("--paths must be at least 2, got {}", args.paths)));
    }
    if args.threads == 0 {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    if args.node_cap == 0 {
        return Err(Failure::usage("--node-cap must be at least 1"));
    }
    let points = grid(&args, problem.dim)?;

    match square_moment_horizon(&problem, t, args.problem.beta) {
        Ok(t_max) if t <= t_max => {}
        Ok(t_max) => {
            let msg = format!("moment check: horizon t={t} exceeds T_max={t_max:.6} for p=2");
            if args.strict_moment_check {
                return Err(Failure { message: msg, code: 1 });
            }
            eprintln!("warning: {msg}; the estimator variance may be infinite");
        }
        Err(e) if args.strict_moment_check => return Err(Failure { message: format!("moment check: {e}"), code: 1 }),
        Err(e) => eprintln!("warning: moment check: {e}"),
    }

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(
            File::create(path).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let io_fail = |e: io::Error| Failure { message: format!("write failed: {e}"), code: 1 };
    writeln!(out, "{CSV_HEADER}").map_err(io_fail)?;

    let mut flagged = 0;
    for (row, (x0, x)) in points.iter().enumerate() {
        let opts = EstimatorOptions {
            n_paths: args.paths,
            seed: row_seed(args.seed, row),
            threads: args.threads,
            beta: args.problem.beta,
            node_cap: args.node_cap,
        };
        let est = estimate(&problem, t, x, &opts)?;
        if est.is_flagged() {
            flagged += 1;
            eprintln!("warning: row {row} (x0={x0}) hit the node cap in {} paths", est.n_blowups);
        }
        let line = format_row(&Row { x0: *x0, t, estimate: est, exact: problem.exact_at(t, x) });
        writeln!(out, "{line}").map_err(io_fail)?;
    }
    out.flush().map_err(io_fail)?;
    Ok(if flagged > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn check_moment(args: CheckMomentArgs) -> Result<ExitCode, Failure> {
    let problem = load(&args.problem)?;
    if !(args.p > 1.0) {
        return Err(Failure::usage(format!("--p must exceed 1, got {}", args.p)));
    }
    if !(args.nonlinearity_scale >= 0.0 && args.nonlinearity_scale.is_finite()) {
        return Err(Failure::usage("--nonlinearity-scale must be finite and nonnegative"));
    }
    let t = args.problem.t;
    println!("problem: {} (d={})", problem.name, problem.dim);
    println!("t: {t}");
    println!("beta: {}", args.problem.beta);
    println!("p: {}", args.p);
    let input = MomentCheckInput::for_problem(&problem, t, args.problem.beta, args.p)?.scaled(args.nonlinearity_scale);
    println!("r_p: {:.9e}", input.r_p);
    println!("alpha_p: {:.9e}", input.alpha_p);
    let terms: Vec<String> = input.terms.iter().map(|(e, c)| format!("{c:.6}*s^{e}")).collect();
    println!("H_p terms (q_j |c_j|): {}", terms.join(" + "));
    match blowup_horizon(&input) {
        Ok(t_max) => {
            println!("T_max: {t_max:.9e}");
            if t <= t_max {
                println!("result: pass");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("result: fail (t exceeds T_max)");
                Ok(ExitCode::from(1))
            }
        }
        Err(e @ Error::Infeasible { .. }) => {
            println!("T_max: none");
            println!("result: fail ({e}; no finite moment bound exists)");
            Ok(ExitCode::from(1))
        }
        Err(e) => Err(e.into()),
    }
}

fn tree_dump(args: TreeDumpArgs) -> Result<ExitCode, Failure> {
    let problem = load(&args.problem)?;
    let law = problem.law(args.problem.beta)?;
    let x = diagonal_point(problem.dim, args.x0);
    let mut rng = path_rng(args.seed, 0);
    let tree = grow_tree(&law, &problem.kernel, args.problem.t, &x, &mut rng, args.node_cap)?;
    let xi = evaluate_xi(&tree, &problem.nl, &problem.bd, &law)?;
    print!("{}", tree.dump());
    println!("xi {:.16e} {:.16e}", xi.re, xi.im);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::CheckMoment(args) => check_moment(args),
        Command::TreeDump(args) => tree_dump(args),
    };
    result.unwrap_or_else(|f| {
        eprintln!("error: {}", f.message);
        ExitCode::from(f.code)
    })
}

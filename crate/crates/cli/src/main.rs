use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use hjj_cli::report::Outputs;
use hjj_cli::{run, CliError, RunOptions, Subcommand};

/// Stationary Hamilton-Jacobi equations on junctions.
#[derive(Parser)]
#[command(name = "hjj", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Solve every edge on its own with its `node_bc`.
    SolveEdge(Common),
    /// Solve the junction problem with the file's junction condition.
    SolveJunction(Common),
    /// Solve a flux-limited junction problem.
    FluxLimited(Common),
    /// Vanishing-viscosity sweep over `viscous.eps_list`.
    ViscousSweep(Common),
    /// Two-dimensional tube solves over `fatten.eps_list`.
    Fatten2d(Common),
    /// Invariant checks on builtin fixtures.
    Verify(Common),
    /// Error table under grid refinement.
    Convergence(Common),
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "hjj-out")]
    out: PathBuf,
    /// Pseudo-time residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Randomized cases per monotonicity check (verify).
    #[arg(long, default_value_t = 1000)]
    trials: usize,
}

impl Command {
    fn split(self) -> (Subcommand, Common) {
        match self {
            Command::SolveEdge(c) => (Subcommand::SolveEdge, c),
            Command::SolveJunction(c) => (Subcommand::SolveJunction, c),
            Command::FluxLimited(c) => (Subcommand::FluxLimited, c),
            Command::ViscousSweep(c) => (Subcommand::ViscousSweep, c),
            Command::Fatten2d(c) => (Subcommand::Fatten2d, c),
            Command::Verify(c) => (Subcommand::Verify, c),
            Command::Convergence(c) => (Subcommand::Convergence, c),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HJJ_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Environment(format!("HJJ_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Environment(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let (cmd, common) = cli.command.split();
    let opts = RunOptions {
        problem: common.problem,
        out: common.out,
        tol: common.tol,
        seed: common.seed,
        trials: common.trials,
    };
    match run(cmd, &opts) {
        Ok(outcome) => {
            if let Outputs::Verify { checks } = &outcome.report.outputs {
                for c in checks {
                    let tag = if c.passed { "PASS" } else { "FAIL" };
                    println!("{tag} {}/{} value={:.3e} tol={:.1e}", c.suite, c.check, c.value, c.tolerance);
                }
            }
            for w in &outcome.report.warnings {
                eprintln!("warning: {w}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

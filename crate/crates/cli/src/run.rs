use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hjj_core::edge::{solve_edge, NodeBc};
use hjj_core::fatten::fattening_study_on;
use hjj_core::hamiltonian::make_builtin;
use hjj_core::junction::{node_diagnostics, solve_junction, solve_junction_constructive};
use hjj_core::viscous::{epsilon_sweep, ViscousParams};
use hjj_core::{EdgeSpec, FarBc, JunctionCondition, JunctionProblem, SolverParams};

use crate::error::{CliError, CliResult};
use crate::plot::{emit_plot_script, PlotKind};
use crate::problem::{load_problem, Problem};
use crate::report::{
    convergence_csv, fatten_csv, fitted_order, observed_orders, profile_csv, sweep_csv, verify_csv,
    write_atomic, ConvergenceRow, CrossCheck, EdgeSolution, ExperimentReport, Outputs, RunMetadata,
    REPORT_FILE,
};
use crate::verify::run_checks;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    SolveEdge,
    SolveJunction,
    FluxLimited,
    ViscousSweep,
    Fatten2d,
    Verify,
    Convergence,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::SolveEdge => "solve-edge",
            Subcommand::SolveJunction => "solve-junction",
            Subcommand::FluxLimited => "flux-limited",
            Subcommand::ViscousSweep => "viscous-sweep",
            Subcommand::Fatten2d => "fatten2d",
            Subcommand::Verify => "verify",
            Subcommand::Convergence => "convergence",
        }
    }

    /// `verify` and `convergence` fall back to builtin cases.
    pub fn needs_problem(self) -> bool {
        !matches!(self, Subcommand::Verify | Subcommand::Convergence)
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub problem: Option<PathBuf>,
    pub out: PathBuf,
    pub tol: Option<f64>,
    pub seed: u64,
    /// Randomized cases per monotonicity check in `verify`.
    pub trials: usize,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        RunOptions {
            problem: None,
            out: out.into(),
            tol: None,
            seed: 0,
            trials: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    NotConverged,
    ChecksFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::NotConverged => 2,
            Status::ChecksFailed => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub status: Status,
    /// Every file written, report last.
    pub files: Vec<PathBuf>,
}

/// Cell counts of the builtin convergence study.
pub const ANALYTIC_CELLS: [usize; 3] = [100, 200, 400];
/// Reference refinement factor for problem-file convergence studies.
pub const REFERENCE_FACTOR: usize = 16;

struct Produced {
    outputs: Outputs,
    csv: Vec<(&'static str, String)>,
    plots: Vec<PlotKind>,
    converged: bool,
    checks_failed: bool,
    warnings: Vec<String>,
}

impl Produced {
    fn new(outputs: Outputs, converged: bool) -> Self {
        Produced {
            outputs,
            csv: Vec::new(),
            plots: Vec::new(),
            converged,
            checks_failed: false,
            warnings: Vec::new(),
        }
    }
}

pub fn run(cmd: Subcommand, opts: &RunOptions) -> CliResult<RunOutcome> {
    let start = Instant::now();
    let mut params = SolverParams::default();
    if let Some(tol) = opts.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::invalid("--tol", "must be positive"));
        }
        params.tol = tol;
    }
    if opts.trials == 0 {
        return Err(CliError::invalid("--trials", "must be positive"));
    }
    let problem = match &opts.problem {
        Some(path) => Some(load_problem(path)?),
        None if cmd.needs_problem() => {
            return Err(CliError::invalid("--problem", format!("required for {}", cmd.name())));
        }
        None => None,
    };
    let mut produced = match (cmd, &problem) {
        (Subcommand::SolveEdge, Some(p)) => solve_edges(p, &params)?,
        (Subcommand::SolveJunction, Some(p)) => junction(&p.junction, &params)?,
        (Subcommand::FluxLimited, Some(p)) => {
            if !matches!(p.junction.condition(), JunctionCondition::FluxLimited { .. }) {
                return Err(CliError::invalid("junction", "flux-limited needs a junction of kind flux_limited"));
            }
            junction(&p.junction, &params)?
        }
        (Subcommand::ViscousSweep, Some(p)) => sweep(p)?,
        (Subcommand::Fatten2d, Some(p)) => fatten(p, &params)?,
        (Subcommand::Verify, _) => verify(opts, &params)?,
        (Subcommand::Convergence, p) => convergence(p.as_ref(), &params)?,
        (_, None) => unreachable!("checked above"),
    };
    let finite = nonfinite_free(&produced.outputs);
    if !finite {
        produced.warnings.push("solver produced non-finite values".into());
    }
    let partial = !produced.converged || !finite;
    if !produced.converged {
        produced.warnings.push("a solver stopped before reaching its tolerance".into());
    }

    fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
    let mut files = Vec::new();
    let mut series = BTreeMap::new();
    for (name, text) in &produced.csv {
        let file = format!("{name}.csv");
        let path = opts.out.join(&file);
        write_atomic(&path, text.as_bytes())?;
        series.insert(name.to_string(), file);
        files.push(path);
    }
    let mut report = ExperimentReport {
        subcommand: cmd.name().into(),
        run: RunMetadata {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: opts.seed,
            tol: params.tol,
            threads: rayon::current_num_threads(),
            wall_time: 0.0,
        },
        problem: problem.map(|p| p.file),
        partial,
        warnings: produced.warnings,
        series,
        outputs: produced.outputs,
    };
    for kind in produced.plots {
        files.push(emit_plot_script(&report, kind, &opts.out)?);
    }
    report.run.wall_time = start.elapsed().as_secs_f64();
    let path = opts.out.join(REPORT_FILE);
    write_atomic(&path, report.to_json().as_bytes())?;
    files.push(path);
    let status = if produced.checks_failed {
        Status::ChecksFailed
    } else if partial {
        Status::NotConverged
    } else {
        Status::Success
    };
    Ok(RunOutcome { report, status, files })
}

fn nonfinite_free(outputs: &Outputs) -> bool {
    let ok = |v: &f64| v.is_finite();
    match outputs {
        Outputs::Edges { edges } => edges.iter().all(|e| e.solution.values.iter().all(ok)),
        Outputs::Junction {
            solution, diagnostics, ..
        } => {
            solution.per_edge().iter().all(|g| g.values.iter().all(ok))
                && diagnostics.slopes.iter().all(ok)
                && ok(&diagnostics.sc_residual)
        }
        Outputs::Sweep { sweep } => {
            ok(&sweep.extrapolated) && sweep.records.iter().all(|r| ok(&r.node_value) && ok(&r.kirchhoff_sum))
        }
        Outputs::Fattening { study } => study
            .records
            .iter()
            .all(|r| ok(&r.node_value) && r.trace_error.iter().all(ok)),
        Outputs::Verify { checks } => checks.iter().all(|c| ok(&c.value)),
        Outputs::Convergence { rows, fitted_order, .. } => ok(fitted_order) && rows.iter().all(|r| ok(&r.error)),
    }
}

fn solve_edges(p: &Problem, params: &SolverParams) -> CliResult<Produced> {
    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    for (i, (spec, h)) in p.junction.edges().iter().zip(p.junction.hamiltonians()).enumerate() {
        let node_bc = p.file.edges[i].node_bc.unwrap_or(NodeBc::StateConstraint);
        let (solution, report) = solve_edge(h, spec, node_bc, params)?;
        if report.dirichlet_not_attained {
            warnings.push(format!(
                "edge {i}: node Dirichlet data lies above the state-constraint value; returned the state-constraint solution"
            ));
        }
        edges.push(EdgeSolution { solution, report });
    }
    let converged = edges.iter().all(|e| e.report.converged);
    let csv = profile_csv(edges.iter().map(|e| &e.solution));
    let mut out = Produced::new(Outputs::Edges { edges }, converged);
    out.csv.push(("profile", csv));
    out.plots.push(PlotKind::Profile);
    out.warnings = warnings;
    Ok(out)
}

fn junction(problem: &JunctionProblem, params: &SolverParams) -> CliResult<Produced> {
    let (solution, report) = solve_junction(problem, params)?;
    let diagnostics = node_diagnostics(&solution, problem)?;
    let mut converged = report.converged;
    let (cross_check, node_bound) = match problem.condition() {
        JunctionCondition::StateConstraint => {
            let (built, rep) = solve_junction_constructive(problem, params)?;
            converged &= rep.converged;
            let check = CrossCheck {
                method: "constructive".into(),
                max_distance: solution.max_distance(&built)?,
                tolerance: 5e-2f64.max(3.0 * problem.max_spacing().sqrt()),
                report: rep,
            };
            (Some(check), None)
        }
        JunctionCondition::FluxLimited { a } => (None, Some(-a)),
    };
    let mut warnings = Vec::new();
    if let Some(c) = &cross_check {
        if c.max_distance > c.tolerance {
            warnings.push(format!(
                "direct and constructive solutions differ by {} (tolerance {})",
                c.max_distance, c.tolerance
            ));
        }
    }
    let csv = profile_csv(solution.per_edge());
    let mut out = Produced::new(
        Outputs::Junction {
            solution,
            report,
            diagnostics,
            cross_check,
            node_bound,
        },
        converged,
    );
    out.csv.push(("profile", csv));
    out.plots.push(PlotKind::Profile);
    out.warnings = warnings;
    Ok(out)
}

fn sweep(p: &Problem) -> CliResult<Produced> {
    let Some(v) = &p.file.viscous else {
        return Err(CliError::invalid("viscous", "viscous-sweep needs a `viscous` section"));
    };
    let sweep = epsilon_sweep(&p.junction, &v.eps_list, &ViscousParams::default())?;
    let converged = sweep.records.iter().all(|r| r.converged);
    let csv = sweep_csv(&sweep);
    let mut out = Produced::new(Outputs::Sweep { sweep }, converged);
    out.csv.push(("sweep", csv));
    out.plots.push(PlotKind::Sweep);
    Ok(out)
}

fn fatten(p: &Problem, params: &SolverParams) -> CliResult<Produced> {
    let (Some(f), Some(h2)) = (&p.file.fatten, &p.fatten) else {
        return Err(CliError::invalid("fatten", "fatten2d needs a `fatten` section"));
    };
    let arms = (p.file.edges[0].length, p.file.edges[1].length);
    let study = fattening_study_on(h2, arms, &f.grids(), params)?;
    let converged = study.records.iter().all(|r| r.converged);
    let csv = fatten_csv(&study);
    let mut out = Produced::new(Outputs::Fattening { study }, converged);
    out.csv.push(("fatten", csv));
    Ok(out)
}

fn verify(opts: &RunOptions, params: &SolverParams) -> CliResult<Produced> {
    let checks = run_checks(opts.seed, opts.trials, params)?;
    let failed = checks.iter().any(|c| !c.passed);
    let csv = verify_csv(&checks);
    let mut out = Produced::new(Outputs::Verify { checks }, true);
    out.csv.push(("verify", csv));
    out.checks_failed = failed;
    Ok(out)
}

/// Max-norm errors of the node Dirichlet problem for `|p| - 1` on
/// `(-1, 0)` with `u(0) = 0`, against `1 - e^x`.
pub fn analytic_dirichlet_errors(cells: &[usize], params: &SolverParams) -> CliResult<(Vec<(f64, f64)>, bool)> {
    let h = make_builtin("abs_shift", &[0.0, 1.0])?;
    let mut rows = Vec::with_capacity(cells.len());
    let mut converged = true;
    for &n in cells {
        let edge = EdgeSpec::new(1.0, n, FarBc::StateConstraint)?;
        let (u, rep) = solve_edge(&h, &edge, NodeBc::Dirichlet { value: 0.0 }, params)?;
        converged &= rep.converged;
        let err = u
            .positions()
            .zip(&u.values)
            .map(|(x, v)| (v - (1.0 - x.exp())).abs())
            .fold(0.0, f64::max);
        rows.push((edge.spacing(), err));
    }
    Ok((rows, converged))
}

/// Errors on `n, 2n, 4n` cells against a solve with `REFERENCE_FACTOR * n`
/// cells, sampled at the coarse nodes; `n` is the smallest cell count of
/// the file.
fn refinement_errors(problem: &JunctionProblem, params: &SolverParams) -> CliResult<(Vec<(f64, f64)>, bool, usize)> {
    let n0 = problem.edges().iter().map(|e| e.n_cells).min().expect("at least one edge");
    let fine_n = REFERENCE_FACTOR * n0;
    let (reference, rep) = solve_junction(&problem.refined(fine_n)?, params)?;
    let mut converged = rep.converged;
    let mut rows = Vec::new();
    for n in [n0, 2 * n0, 4 * n0] {
        let coarse = problem.refined(n)?;
        let (u, rep) = solve_junction(&coarse, params)?;
        converged &= rep.converged;
        let stride = fine_n / n;
        let err = u
            .per_edge()
            .iter()
            .zip(reference.per_edge())
            .flat_map(|(g, r)| g.values.iter().enumerate().map(move |(j, v)| (v - r.values[j * stride]).abs()))
            .fold(0.0, f64::max);
        rows.push((coarse.max_spacing(), err));
    }
    Ok((rows, converged, fine_n))
}

fn convergence(problem: Option<&Problem>, params: &SolverParams) -> CliResult<Produced> {
    let (pairs, converged, reference) = match problem {
        None => {
            let (rows, ok) = analytic_dirichlet_errors(&ANALYTIC_CELLS, params)?;
            (rows, ok, "exact: u(x) = 1 - exp(x) for |p| - 1 with u(0) = 0".to_string())
        }
        Some(p) => {
            let (rows, ok, fine) = refinement_errors(&p.junction, params)?;
            (rows, ok, format!("same problem with {fine} cells per edge"))
        }
    };
    let errors: Vec<f64> = pairs.iter().map(|r| r.1).collect();
    let rows: Vec<ConvergenceRow> = pairs
        .iter()
        .zip(observed_orders(&errors))
        .map(|(&(h, error), observed_order)| ConvergenceRow {
            h,
            error,
            observed_order,
        })
        .collect();
    let fitted = fitted_order(&pairs);
    let csv = convergence_csv(&rows);
    let mut out = Produced::new(
        Outputs::Convergence {
            reference,
            rows,
            fitted_order: fitted,
        },
        converged,
    );
    out.csv.push(("convergence", csv));
    out.plots.push(PlotKind::Convergence);
    Ok(out)
}

/// Reads `report.json` from an output directory.
pub fn read_report(dir: &Path) -> CliResult<ExperimentReport> {
    let path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tpfem::format::sci;
use tpfem::error::Error;
use tpfem::problem::named_problem;
use tpfem::studies::{
    alpha_for, compare_reference, csv_string, emit_csv, emit_reference_curves, mesh_text, run_sweep,
    run_verify, solution_text, solve_case, Case, CaseOverrides, ConvergenceRow, ReferenceTable,
    SweepSpec, Tolerances,
};
use tpfem::{build_mesh, error_norms, MeshParams};

const EXIT_VALIDATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_REGRESSION: u8 = 4;

#[derive(Parser)]
#[command(name = "tpfem", version, about = "Finite elements on graded meshes for interior turning-point problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the mesh nodes, one per line
    Mesh(MeshArgs),
    /// Solve one case and print `x u` at the degrees of freedom
    Solve(CaseArgs),
    /// Run a sweep over k, N and eps and write CSV rows
    Sweep(SweepArgs),
    /// Run the property checks and the reference regression
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Layer exponent of the test problem
    #[arg(long, default_value_t = 0.005)]
    lambda: f64,
    /// Scaling of the grading exponent
    #[arg(long, default_value_t = 1.0)]
    alpha0: f64,
    #[arg(long, default_value = "sun-stynes")]
    problem: String,
    /// Output file (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long = "eps-list", value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    /// Grading exponent; derived from k, lambda and alpha0 when absent
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Discretisation {
    /// Assembly quadrature points per element
    #[arg(long = "quad-points")]
    quad_points: Option<usize>,
    /// Subdivision depth of the error quadrature
    #[arg(long = "err-subdiv")]
    err_subdiv: Option<usize>,
}

impl Discretisation {
    fn overrides(&self) -> CaseOverrides {
        CaseOverrides {
            quad_points: self.quad_points,
            err_subdiv: self.err_subdiv,
            ..CaseOverrides::default()
        }
    }
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long = "eps-list", value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    #[command(flatten)]
    disc: Discretisation,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<usize>,
    #[arg(long = "n-list", value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    #[arg(long = "eps-list", value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    #[command(flatten)]
    disc: Discretisation,
    /// Compare against a published table: `linear-l2` or `energy-by-order`
    #[arg(long = "reference-check")]
    reference_check: Option<String>,
    #[command(flatten)]
    tol: ToleranceArgs,
    /// Also write `k,N,reference` rows of N^-k curves anchored at the coarsest row
    #[arg(long)]
    curves: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ToleranceArgs {
    #[arg(long = "tolerance-factor", default_value_t = 2.0)]
    tolerance_factor: f64,
    #[arg(long = "rate-tolerance", default_value_t = 0.05)]
    rate_tolerance: f64,
}

impl ToleranceArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            factor: self.tolerance_factor,
            rate: self.rate_tolerance,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 20240101)]
    seed: u64,
    /// Skip the reference-table regression
    #[arg(long)]
    no_regression: bool,
    #[command(flatten)]
    tol: ToleranceArgs,
}

/// Exit code for a library error.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SingularPivot { .. } | Error::MeshDegeneracy(_) | Error::MeshMismatch => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn single<T: Copy>(values: &[T], flag: &str) -> Result<T, Error> {
    match values {
        [v] => Ok(*v),
        _ => Err(Error::Parameter(format!("{flag} takes exactly one value here"))),
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_mesh(args: MeshArgs) -> Result<(), Error> {
    let n = single(&args.n_list, "--n-list")?;
    let eps = single(&args.eps_list, "--eps-list")?;
    let alpha = match args.alpha {
        Some(a) => a,
        None => alpha_for(args.k, args.common.lambda, args.common.alpha0)?,
    };
    let mesh = build_mesh(MeshParams::new(n, alpha, eps)?)?;
    write_output(&args.common.out, &mesh_text(&mesh))
}

fn run_solve(args: CaseArgs) -> Result<(), Error> {
    let case = Case {
        problem: args.common.problem.clone(),
        k: args.k,
        n: single(&args.n_list, "--n-list")?,
        eps: single(&args.eps_list, "--eps-list")?,
        lambda: args.common.lambda,
        alpha0: args.common.alpha0,
        overrides: args.disc.overrides(),
    };
    let solved = solve_case(&case)?;
    write_output(&args.common.out, &solution_text(&solved.solution))?;
    let (_, exact) = named_problem(&case.problem, case.eps, case.lambda)?;
    let report = error_norms(&exact, &solved.solution, case.eps, case.overrides.error_quadrature(case.k))?;
    eprintln!(
        "alpha {} energy {} l2 {} supercloseness {} relative residual {}",
        sci(solved.alpha, 6),
        sci(report.energy, 6),
        sci(report.l2, 6),
        sci(report.supercloseness, 6),
        sci(solved.relative_residual, 3)
    );
    Ok(())
}

fn write_curves(path: &PathBuf, k_list: &[usize], n_list: &[usize], rows: &[ConvergenceRow]) -> Result<(), Error> {
    let anchors: Vec<(usize, usize, f64)> = k_list
        .iter()
        .filter_map(|&k| {
            rows.iter()
                .filter(|r| r.k == k && r.failure.is_none())
                .min_by_key(|r| r.n)
                .map(|r| (k, r.n, r.energy_err))
        })
        .collect();
    let mut text = String::from("k,N,reference\n");
    for curve in emit_reference_curves(k_list, n_list, &anchors)? {
        for (n, v) in &curve.points {
            text.push_str(&format!("{},{n},{}\n", curve.k, sci(*v, 6)));
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn run_sweep_command(args: SweepArgs) -> Result<u8, Error> {
    let table = match &args.reference_check {
        Some(id) => Some(
            ReferenceTable::parse(id).ok_or_else(|| Error::Parameter(format!("unknown reference table '{id}'")))?,
        ),
        None => None,
    };
    let spec = SweepSpec {
        problem: args.common.problem.clone(),
        k_list: args.k.clone(),
        n_list: args.n_list.clone(),
        eps_list: args.eps_list.clone(),
        lambda: args.common.lambda,
        alpha0: args.common.alpha0,
        overrides: args.disc.overrides(),
    };
    // fail fast on problem-level errors before spawning the sweep
    spec.check()?;
    named_problem(&spec.problem, spec.eps_list[0], spec.lambda)?;
    for &k in &spec.k_list {
        alpha_for(k, spec.lambda, spec.alpha0)?;
    }
    let rows = run_sweep(&spec)?;
    match &args.common.out {
        Some(path) => emit_csv(&rows, path)?,
        None => write_output(&None, &csv_string(&rows))?,
    }
    if let Some(path) = &args.curves {
        write_curves(path, &args.k, &args.n_list, &rows)?;
    }

    let failed: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.failure.is_some()).collect();
    for r in &failed {
        eprintln!(
            "case k={} N={} eps={:e} failed: {}",
            r.k,
            r.n,
            r.eps,
            r.failure.as_deref().unwrap_or_default()
        );
    }
    if let Some(table) = table {
        let report = compare_reference(&rows, table, args.tol.tolerances());
        for c in &report.cells {
            eprintln!("{c}");
        }
        for m in &report.missing {
            eprintln!("MISSING {m}");
        }
        eprintln!(
            "{} reference {}",
            if report.passed() { "PASS" } else { "FAIL" },
            table.id()
        );
        if !report.passed() {
            return Ok(EXIT_REGRESSION);
        }
    }
    Ok(if failed.is_empty() { 0 } else { EXIT_SOLVER })
}

fn run_verify_command(args: VerifyArgs) -> Result<u8, Error> {
    let report = run_verify(args.seed, args.tol.tolerances(), !args.no_regression)?;
    for line in report.lines() {
        println!("{line}");
    }
    println!("elapsed {:.2?}", report.elapsed);
    Ok(if report.passed() { 0 } else { EXIT_REGRESSION })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Mesh(args) => run_mesh(args).map(|_| 0),
        Command::Solve(args) => run_solve(args).map(|_| 0),
        Command::Sweep(args) => run_sweep_command(args),
        Command::Verify(args) => run_verify_command(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_errors_map_to_three() {
        assert_eq!(exit_code(&Error::SingularPivot { row: 0, pivot: 0.0, scale: 1.0 }), 3);
        assert_eq!(exit_code(&Error::Parameter("x".into())), 2);
        assert_eq!(exit_code(&Error::Coercivity { gamma: -1.0 }), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn single_value_required() {
        assert_eq!(single(&[3], "--n-list").unwrap(), 3);
        assert!(single::<usize>(&[], "--n-list").is_err());
        assert!(single(&[1, 2], "--n-list").is_err());
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hilfer_cli::{
    convergence_study, limit_comparison, parse_problem, run_solve, CliError, Problem, EXIT_PARSE,
};
use hilfer_core::{growth_certificate, make_graded_grid, uniqueness_certificate};

#[derive(Parser)]
#[command(name = "hilfer", version, about = "Hilfer fractional IVP solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write t,x,weighted_x CSV (stdout unless [run] output is set).
    Solve { file: PathBuf },
    /// Weighted max error against the closed form on a list of grids.
    Study {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [256, 512, 1024, 2048])]
        grids: Vec<usize>,
    },
    /// x(T) over a list of β values, with references at β = 0 and β = 1.
    Betasweep {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
        betas: Vec<f64>,
    },
    /// Existence and uniqueness certificates for the declared right-hand side.
    Certify { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.command {
        Command::Solve { file }
        | Command::Study { file, .. }
        | Command::Betasweep { file, .. }
        | Command::Certify { file } => file,
    };
    let problem = match parse_problem(file) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return ExitCode::from(EXIT_PARSE as u8);
        }
    };
    let result = match &cli.command {
        Command::Solve { .. } => solve(&problem),
        Command::Study { grids, .. } => study(&problem, grids),
        Command::Betasweep { betas, .. } => betasweep(&problem, betas),
        Command::Certify { .. } => certify(&problem),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_PARSE as u8)
        }
    }
}

fn solve(problem: &Problem) -> Result<i32, CliError> {
    let out = run_solve(problem)?;
    let csv = out.to_csv();
    match &problem.output {
        Some(path) => std::fs::write(path, csv).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => print!("{csv}"),
    }
    eprintln!("{}", out.status_line());
    Ok(out.exit_code())
}

fn study(problem: &Problem, grids: &[usize]) -> Result<i32, CliError> {
    let rows = convergence_study(problem, grids)?;
    println!("N,weighted_error,observed_order");
    for r in rows {
        let order = r.observed_order.map_or("n/a".to_string(), |p| format!("{p:.4}"));
        println!("{},{:.6e},{order}", r.n, r.weighted_error);
    }
    Ok(0)
}

fn betasweep(problem: &Problem, betas: &[f64]) -> Result<i32, CliError> {
    let rows = limit_comparison(problem, betas)?;
    println!("beta,gamma,x_T,reference,abs_error");
    let mut ok = true;
    for r in &rows {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.16e}"));
        println!("{},{:.16e},{:.16e},{},{}", r.beta, r.gamma, r.x_end, opt(r.reference), opt(r.abs_error));
        ok &= r.verified().unwrap_or(true);
    }
    Ok(if ok { 0 } else { 1 })
}

fn certify(problem: &Problem) -> Result<i32, CliError> {
    let ivp = problem.ivp()?;
    let r = problem.grading.unwrap_or_else(|| ivp.order.default_grading());
    let grid = make_graded_grid(0.0, ivp.horizon, problem.intervals, r)?;
    for (name, c) in [
        ("existence", growth_certificate(&ivp, grid.nodes())),
        ("uniqueness", uniqueness_certificate(&ivp)),
    ] {
        println!("{name}: {:?} ({}), valid horizon {:?}", c.kind, c.basis, c.valid_horizon);
        if let Some(b) = c.bound.as_ref().and_then(|b| b.last()) {
            println!("  weighted bound at T: {b:.6e}");
        }
        if !c.window_contraction.is_empty() {
            let worst = c.window_contraction.iter().copied().fold(0.0, f64::max);
            println!("  {} unit windows, largest contraction {worst:.6e}", c.window_contraction.len());
        }
    }
    Ok(0)
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

use commands::{Context, Failure};

/// Mixed-type Hermite-Pade approximants of Nikishin systems and the discrete
/// cubic string.
///
/// Exit status: 0 when every enabled check passes, 1 when a check fails,
/// 2 for usage or configuration errors.
#[derive(Parser, Debug)]
#[command(name = "nikishin", version, about, long_about)]
struct Cli {
    /// JSON run configuration (system, string, n range, backend, grid, seed).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Arithmetic: rational, f256 or f512 (any fN with 64 <= N <= 4096).
    #[arg(long, global = true, env = "NIKISHIN_BACKEND")]
    backend: Option<String>,
    #[arg(long, global = true)]
    n_min: Option<usize>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true, value_enum)]
    formulation: Option<FormulationArg>,
    /// Seed for random evaluation points and coefficient polynomials.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for JSON, CSV and SVG output.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true, env = "NIKISHIN_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Ml,
    Dr,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for (a_{n,0}, ..., a_{n,m}) and check degrees, zero location,
    /// the leading-coefficient relation and the multipoint structure.
    ///
    /// Writes solutions.json.
    HpSolve,
    /// Run the identity battery at seeded random points.
    ///
    /// Writes verify.json. Residuals are lossless strings; in the rational
    /// backend every passing residual is the literal "0".
    Verify {
        /// Relative perturbation of the generators on one side of each
        /// identity (e.g. 1e-10); the affected checks are expected to fail.
        #[arg(long)]
        perturb: Option<String>,
    },
    /// Grid sup-errors of the approximants for a range of n.
    ///
    /// Writes convergence.csv with columns n,j,con01,con00 where
    /// con01 = max |a_{n,j}/a_{n,m} - s_hat_{m,j+1}| and
    /// con00 = max |A_{n,j}/a_{n,m}| over the grid, plus convergence.svg
    /// (log-error against n) and convergence.json.
    Converge {
        /// Grid margin as a fraction of diam(Delta_m); must be positive.
        #[arg(long)]
        margin: Option<String>,
        /// Grid points per side.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Discrete cubic string: Weyl functions, spectral measures, the
    /// concomitant and Plucker identities and the reduction to a
    /// two-measure Nikishin problem.
    ///
    /// Writes cubic_string.json.
    CubicString {
        /// Sign multiplying z in the mass jump: 1, -1 or both.
        #[arg(long, allow_hyphen_values = true)]
        sign_convention: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match Context::new(
        cli.config.as_deref(),
        cli.backend.as_deref(),
        cli.n_min,
        cli.n_max,
        cli.formulation,
        cli.seed,
        cli.out_dir,
        cli.jobs,
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let jobs = ctx.jobs;
    let outcome = nikishin::par::with_threads(jobs, || match &cli.command {
        Command::HpSolve => commands::hp_solve(&ctx),
        Command::Verify { perturb } => commands::verify(&ctx, perturb.as_deref()),
        Command::Converge { margin, steps } => commands::converge(&ctx, margin.as_deref(), *steps),
        Command::CubicString { sign_convention } => commands::cubic_string(&ctx, sign_convention.as_deref()),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("FAILED: {msg}");
            ExitCode::from(1)
        }
    }
}

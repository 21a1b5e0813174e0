use clap::{Parser, Subcommand};
use eigenframe::cli::{self, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

/// Hyperbolic conservation laws with prescribed eigenvector fields.
#[derive(Parser)]
#[command(name = "eigenframe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for the sample points of every zero test.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance override, e.g. `--tol curl_tol=1e-4`; repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL", global = true)]
    tol: Vec<String>,
    /// Directory for solve output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid resolution per axis, e.g. `--grid 21,21,21`.
    #[arg(long, value_delimiter = ',', global = true)]
    grid: Option<Vec<usize>>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the eigenvalue system of a frame.
    Analyze { config: PathBuf },
    /// Integrate the eigenvalues, reconstruct the flux and write the grid.
    Solve { config: PathBuf },
    /// Recompute the residuals of a grid CSV.
    Verify { csv: PathBuf, config: PathBuf },
    /// Run bundled examples against their expected results.
    Examples {
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        all: bool,
    },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let mut tol = Vec::new();
    for kv in &args.tol {
        match kv.split_once('=') {
            Some((k, v)) => tol.push((k.trim().to_string(), v.trim().to_string())),
            None => {
                eprintln!("error: --tol expects KEY=VAL, got `{kv}`");
                return ExitCode::from(1);
            }
        }
    }
    let overrides = Overrides {
        seed: args.seed,
        tol,
        grid: args.grid,
        out: args.out,
    };
    let mut stdout = std::io::stdout().lock();
    let result = match &args.command {
        Command::Analyze { config } => cli::cmd_analyze(config, &overrides, args.json, &mut stdout),
        Command::Solve { config } => cli::cmd_solve(config, &overrides, args.json, &mut stdout),
        Command::Verify { csv, config } => cli::cmd_verify(csv, config, &overrides, args.json, &mut stdout),
        Command::Examples { name, .. } => cli::cmd_examples(name.as_deref(), &overrides, args.json, &mut stdout),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}

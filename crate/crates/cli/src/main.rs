use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybem_cli::{cmd_info, cmd_leadfield, cmd_solve, cmd_validate_sphere, CliError, Method, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "hybem", version, about = "Hybrid surface/volume/wire EEG forward solver")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Electrode potentials for every configured dipole.
    Solve(Common),
    /// Lead-field matrix for the configured source positions.
    Leadfield(Common),
    /// Error against the layered-sphere series over an eccentricity sweep.
    ValidateSphere(Common),
    /// Mesh and unknown statistics.
    Info(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Worker threads (0 uses all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    solver: Option<Method>,
    #[arg(long, value_name = "K")]
    quadrature_order: Option<usize>,
}

fn run(verb: Verb) -> Result<(), CliError> {
    let (Verb::Solve(c) | Verb::Leadfield(c) | Verb::ValidateSphere(c) | Verb::Info(c)) = &verb;
    let overrides = Overrides {
        threads: c.threads,
        output: c.output.clone(),
        solver: c.solver,
        quadrature_order: c.quadrature_order,
    };
    let config = RunConfig::load(&c.config, &overrides)?;
    if config.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let written = match verb {
        Verb::Solve(_) => cmd_solve(&config)?,
        Verb::Leadfield(_) => cmd_leadfield(&config)?,
        Verb::ValidateSphere(_) => cmd_validate_sphere(&config)?,
        Verb::Info(_) => {
            print!("{}", cmd_info(&config)?);
            Vec::new()
        }
    };
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hybem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

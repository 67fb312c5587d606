use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pdae_lab::commands::{self, Overrides, WetlandCase, EXIT_ERROR};
use pdae_lab::model::parse_model;
use pdae_lab::CliError;

#[derive(Parser)]
#[command(name = "pdae-lab", version, about = "Modal analysis and simulation of linear and semilinear PDAEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Number of retained eigenmodes.
    #[arg(long, global = true)]
    modes: Option<usize>,

    /// Simulation grid, e.g. `64x16`.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<GridArg>,

    #[arg(long, global = true)]
    dt: Option<f64>,

    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum, pencil verdicts, certificates and the decay estimate.
    Analyze { model: PathBuf },
    /// Closed-form modal solution of a linear model.
    SolveLinear { model: PathBuf },
    /// Finite-difference time integration.
    Simulate { model: PathBuf },
    /// Reference wetland runs.
    WetlandDemo {
        #[arg(long, value_enum)]
        case: CaseArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Stable,
    Unstable,
}

#[derive(Clone)]
struct GridArg(Vec<usize>);

fn parse_grid(s: &str) -> Result<GridArg, String> {
    s.split(['x', 'X'])
        .map(|p| match p.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(format!("bad grid '{s}', expected e.g. 64x16")),
        })
        .collect::<Result<_, _>>()
        .map(GridArg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PDAE_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Model(format!("PDAE_LAB_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Model(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<u8, CliError> {
    configure_threads()?;
    let overrides =
        Overrides { modes: cli.modes, grid: cli.grid.map(|g| g.0), dt: cli.dt, t_end: cli.t_end, seed: cli.seed };
    let load = |path: &PathBuf| -> Result<_, CliError> {
        let mut model = parse_model(path)?;
        overrides.apply(&mut model)?;
        Ok(model)
    };
    let result = match &cli.command {
        Command::Analyze { model } => commands::analyze(&load(model)?, &cli.out)?,
        Command::SolveLinear { model } => commands::solve_linear(&load(model)?, &cli.out)?,
        Command::Simulate { model } => commands::simulate_model(&load(model)?, &cli.out)?,
        Command::WetlandDemo { case } => {
            let case = match case {
                CaseArg::Stable => WetlandCase::Stable,
                CaseArg::Unstable => WetlandCase::Unstable,
            };
            commands::wetland_demo(case, &overrides, &cli.out)?
        }
    };
    for line in &result.summary.diagnostics {
        eprintln!("note: {line}");
    }
    for f in &result.files {
        println!("{}", f.display());
    }
    Ok(result.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

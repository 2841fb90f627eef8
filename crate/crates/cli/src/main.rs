use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lindblad_rate::solver::linear_grid;
use lre::config::{parse_config_unchecked, ConfigError, Engine, RunConfig};
use lre::run::{self, RunError, RunResult};
use lre::table::{emit_csv, OutputTable};

/// Lindblad rate equations: deterministic and Monte Carlo evolution.
#[derive(Parser)]
#[command(name = "lre", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check complete positivity of every rate block.
    Validate(Source),
    /// Time series with the engine selected in the configuration.
    Evolve(RunArgs),
    /// Averaged stochastic trajectories.
    Traj(RunArgs),
    /// Memory kernel at the configured Laplace points.
    Kernel(RunArgs),
    /// Long-time state and homogeneity report.
    Stationary(RunArgs),
    /// Closed form against the engines for a named preset.
    Example(ExampleArgs),
}

#[derive(Args)]
struct Source {
    /// JSON run configuration.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in model: fig1-upper, fig1-lower, fig2 or depolarizing.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trajectories.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct ExampleArgs {
    preset: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, requires = "n")]
    seed: Option<u64>,
    #[arg(long, requires = "seed")]
    n: Option<usize>,
    #[arg(long, default_value_t = 30.0)]
    stop: f64,
    #[arg(long, default_value_t = 121)]
    count: usize,
}

fn load(source: &Source) -> RunResult<RunConfig> {
    if let Some(name) = &source.preset {
        return Ok(RunConfig::for_preset(name)?);
    }
    let path = source.config.as_ref().expect("clap enforces a source");
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::field("config", format!("{}: {e}", path.display())))?;
    Ok(parse_config_unchecked(&text)?)
}

fn load_run(args: &RunArgs, engine: Option<Engine>) -> RunResult<RunConfig> {
    let mut cfg = load(&args.source)?;
    if let Some(e) = engine {
        cfg.engine = e;
    }
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    if let Some(n) = args.n {
        cfg.trajectories = n;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    cfg.check()?;
    Ok(cfg)
}

fn warn_if_invalid(cfg: &RunConfig) {
    let report = run::validation(cfg);
    if !report.passed {
        eprintln!("warning: model is not completely positive\n{report}");
    }
}

fn write_table(table: &OutputTable, out: Option<&Path>) -> RunResult<()> {
    emit_csv(table, out)?;
    Ok(())
}

fn write_text(text: &str, out: Option<&Path>) -> RunResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn execute(cli: Cli) -> RunResult<()> {
    match cli.command {
        Command::Validate(source) => {
            let cfg = load(&source)?;
            cfg.check()?;
            let report = run::validation(&cfg);
            println!("{report}");
            if report.passed {
                Ok(())
            } else {
                {
                    let failed: Vec<String> =
                        report.failures().map(|b| b.tag.to_string()).collect();
                    let what = if failed.is_empty() {
                        "weights".to_string()
                    } else {
                        failed.join(", ")
                    };
                    Err(RunError::Validation(what))
                }
            }
        }
        Command::Evolve(args) => {
            let cfg = load_run(&args, None)?;
            warn_if_invalid(&cfg);
            write_table(&run::evolve_table(&cfg)?, cfg.output.as_deref())
        }
        Command::Traj(args) => {
            let cfg = load_run(&args, Some(Engine::Stochastic))?;
            write_table(&run::evolve_table(&cfg)?, cfg.output.as_deref())
        }
        Command::Kernel(args) => {
            let cfg = load_run(&args, None)?;
            write_table(&run::kernel_table(&cfg)?, cfg.output.as_deref())
        }
        Command::Stationary(args) => {
            let cfg = load_run(&args, None)?;
            write_text(&run::stationary_report(&cfg)?, cfg.output.as_deref())
        }
        Command::Example(args) => {
            let mut cfg = RunConfig::for_preset(&args.preset)?;
            if !(args.stop.is_finite() && args.stop > 0.0) {
                return Err(ConfigError::field("stop", "must be positive and finite").into());
            }
            cfg.grid = linear_grid(args.stop, args.count);
            cfg.seed = args.seed;
            let with_mc = args.n.is_some();
            if let Some(n) = args.n {
                cfg.trajectories = n;
                cfg.engine = Engine::Both;
            }
            cfg.check()?;
            let ex = run::example_table(&cfg, with_mc)?;
            write_table(&ex.table, args.out.as_deref())?;
            let tol = cfg.tolerances.residual;
            if ex.max_residual > tol {
                return Err(RunError::Residual {
                    residual: ex.max_residual,
                    tol,
                });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

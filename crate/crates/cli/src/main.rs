use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wmm_cli::{render, run, CliError, EngineChoice, Format, RunConfig, ALL_MODELS};
use wmm_core::litmus::Expectation;

#[derive(Parser)]
#[command(name = "wmm", about = "Check litmus tests against weak memory models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run tests against models and report verdicts.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Axiomatic,
    Operational,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Json,
    Dot,
    Trace,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpectArg {
    Yes,
    No,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Litmus files or directories containing them.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Model name (SC, TSO, x86, ARM, RISCV, PIPELINE) or a model file.
    #[arg(long = "model", short = 'm')]
    models: Vec<String>,
    /// Run SC, TSO, ARM and RISCV.
    #[arg(long)]
    all_models: bool,
    #[arg(long, value_enum, default_value = "both")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
    /// Compare verdicts with each test's expect block.
    #[arg(long)]
    check_expect: bool,
    /// Expected verdict for every test and model.
    #[arg(long, value_enum)]
    expect: Option<ExpectArg>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config(args: &RunArgs) -> RunConfig {
    let mut models = args.models.clone();
    if args.all_models {
        models.extend(ALL_MODELS.iter().map(|m| m.to_string()));
    }
    RunConfig {
        paths: args.paths.clone(),
        models,
        engine: match args.engine {
            EngineArg::Axiomatic => EngineChoice::Axiomatic,
            EngineArg::Operational => EngineChoice::Operational,
            EngineArg::Both => EngineChoice::Both,
        },
        format: match args.format {
            FormatArg::Table => Format::Table,
            FormatArg::Json => Format::Json,
            FormatArg::Dot => Format::Dot,
            FormatArg::Trace => Format::Trace,
        },
        check_expect: args.check_expect,
        expect: args.expect.map(|e| Expectation::from_bool(matches!(e, ExpectArg::Yes))),
    }
}

fn workers() -> Result<Option<usize>, CliError> {
    match std::env::var("WMM_WORKERS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "WMM_WORKERS must be a positive integer, got `{v}`"
            ))),
        },
    }
}

fn execute(args: &RunArgs) -> Result<i32, CliError> {
    let cfg = config(args);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| run(&cfg))?;
    let text = render(&report, cfg.format);
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => print!("{text}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("wmm: {e}");
            ExitCode::from(2)
        }
    }
}

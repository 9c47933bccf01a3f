use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fogplace_cli::{
    emit, load_config, run_compare, run_derive, run_dump_topology, run_export_lp, run_oracle_check, run_solve,
    CliError, Format, RunConfig,
};
use fogplace_core::placement::Mode;

#[derive(Parser)]
#[command(name = "fogplace", version, about = "Fog server placement and energy comparison for GPON ECG monitoring")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format; overrides the config.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-scenario timing and rate table.
    Derive,
    /// Solve one scenario under one approach.
    Solve {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        mode: Mode,
    },
    /// Energy of every scenario under every approach.
    Compare,
    /// Links of the configured network.
    DumpTopology,
    /// Write the placement model in LP format.
    ExportLp {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        mode: Mode,
    },
    /// Check the solver against exhaustive enumeration on random instances.
    OracleCheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FOGPLACE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("FOGPLACE_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(format) = cli.format {
        config.format = format;
    }
    if cli.out.is_some() {
        config.out = cli.out;
    }
    let text = match cli.command {
        Command::Derive => run_derive(&config)?,
        Command::Solve { scenario, mode } => run_solve(&config, &scenario, mode)?,
        Command::Compare => run_compare(&config)?,
        Command::DumpTopology => run_dump_topology(&config)?,
        Command::ExportLp { scenario, mode } => run_export_lp(&config, &scenario, mode)?,
        Command::OracleCheck { seed, instances } => run_oracle_check(&config, seed, instances)?,
    };
    emit(&text, config.out.as_deref())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fogplace: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

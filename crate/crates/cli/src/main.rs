use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ngm_cli::commands::{cmd_ngm, cmd_r0, cmd_sweep, cmd_verify};
use ngm_cli::config::{parse, parse_schedule, read_source, ModelConfig, SweepConfig};
use ngm_cli::verify::Fault;
use ngm_cli::{CliError, Format, Output};

#[derive(Parser)]
#[command(
    name = "ngm",
    version,
    about = "Next-generation matrices and diagonal-limit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format; `sweep` defaults to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    CoupledBuilder,
}

#[derive(Subcommand)]
enum Command {
    /// Run the invariant suite on a seeded corpus.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Closed-form and spectral R0 of a model config.
    R0 {
        /// Config file, or `-` for stdin.
        #[arg(long)]
        config: PathBuf,
    },
    /// Errors along a schedule of growing diagonal entries.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, strictly increasing schedule; overrides the config.
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Dump F, V, F V⁻¹ and its eigenvalues.
    Ngm {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let json_default = cli.format.unwrap_or(Format::Json);
    match &cli.command {
        Command::Verify { seed, inject_fault } => {
            let fault = inject_fault.map(|FaultArg::CoupledBuilder| Fault::CoupledBuilder);
            cmd_verify(*seed, fault, json_default)
        }
        Command::R0 { config } => {
            cmd_r0(&parse::<ModelConfig>(&read_source(config)?)?, json_default)
        }
        Command::Ngm { config } => {
            cmd_ngm(&parse::<ModelConfig>(&read_source(config)?)?, json_default)
        }
        Command::Sweep { config, schedule } => {
            let cfg = parse::<SweepConfig>(&read_source(config)?)?;
            let schedule = schedule.as_deref().map(parse_schedule).transpose()?;
            cmd_sweep(&cfg, schedule.as_deref(), cli.format.unwrap_or(Format::Csv))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|output| {
        match &cli.out {
            Some(path) => std::fs::write(path, &output.text)?,
            None => print!("{}", output.text),
        }
        Ok(output.status)
    });
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(err) => {
            eprintln!("ngm: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

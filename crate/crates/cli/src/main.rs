use std::process::ExitCode;

use clap::Parser;
use otoc_cli::{run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "otoc-criticality",
    version,
    about = "OTOC signatures of superradiant criticality"
)]
struct Cli {
    command: Command,
    /// `--config FILE` and `--key value` pairs; flags override the file.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    args: Vec<String>,
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::from_args(&cli.args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.resolved_threads()?)
        .build()
        .map_err(|e| CliError::config("threads", e.to_string()))?;
    let written = pool.install(|| run(cli.command, &cfg))?;
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

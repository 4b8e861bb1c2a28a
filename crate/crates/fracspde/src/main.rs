use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use fracspde::commands::{load_config, run, Command};

/// Sampling, solving and validation runs driven by a key=value config.
#[derive(Parser)]
#[command(name = "fracspde", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    #[arg(long)]
    config: PathBuf,

    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = fracspde::RunError::Config(e.kind().to_string());
            eprint!("{e}");
            eprintln!("{}", err.record("-"));
            return ExitCode::from(2);
        }
    };
    let name = cli.command.name();
    let result = load_config(&cli.config).and_then(|mut cfg| {
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        if let Some(o) = cli.out {
            cfg.output_dir = o;
        }
        run(cli.command, &cfg)
    });
    match result {
        Ok(dir) => {
            log::info!("{name}: wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record(name));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

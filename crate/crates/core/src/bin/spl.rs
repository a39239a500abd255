use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spl_core::config::{CaseKind, Overrides, RunConfig};
use spl_core::run::{error_exit_code, run};

#[derive(Parser)]
#[command(name = "spl", version, about = "Weighted p-Laplace solver for singular nonlinearities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configured problem and write fields plus report.json.
    Solve {
        #[arg(long, value_parser = parse_case)]
        case: Option<CaseKind>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long = "eps-floor")]
        eps_floor: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
    },
}

fn parse_case(s: &str) -> Result<CaseKind, String> {
    s.parse()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Solve {
        case,
        config,
        out,
        seed,
        lambda,
        q,
        r,
        p,
        eps_floor,
        k,
    } = Cli::parse().command;
    let overrides = Overrides {
        case,
        lambda,
        q,
        r,
        p,
        eps_floor,
        k,
        seed,
        output: out,
    };
    let result = RunConfig::from_file(&config, &overrides).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            for (name, status) in &outcome.certificates {
                eprintln!("{name}: {status:?}");
            }
            println!("status: {:?} ({})", outcome.status, outcome.output.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            match e.stage() {
                Some(stage) => eprintln!("error in stage {stage}: {e}"),
                None => eprintln!("error: {e}"),
            }
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}

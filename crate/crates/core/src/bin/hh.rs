use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use halfplane_hm::cli::{self, Cli, EXIT_ERROR};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match try_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn try_main() -> anyhow::Result<i32> {
    let args = Cli::parse();
    if let Some(k) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let outcome = cli::run(&args).with_context(|| format!("{} failed", args.command.name()))?;
    println!("{outcome}");
    Ok(outcome.exit_code())
}

//! `roughlab` command-line front end.
//!
//! Exit codes: 0 when every in-run assertion holds, 2 when one fails, 1 on
//! usage or validation errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Parser;

use args::Cli;
use commands::Globals;

const DEFAULT_SEED: u64 = 42;

fn setup(cli: &Cli) -> Result<Globals> {
    if cli.ci && cli.seed.is_none() {
        bail!("--ci requires an explicit --seed");
    }
    if let Some(k) = cli.workers {
        if k == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    }
    if let Some(level) = cli.max_level {
        roughlab::variation::set_max_dp_level(level);
    }
    Ok(Globals { seed: cli.seed.unwrap_or(DEFAULT_SEED), force: cli.force })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = setup(&cli).and_then(|g| commands::run(cli.command, &g));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front end: every command writes deterministic CSV or JSON
//! files and prints a one-line `PASS`/`FAIL` summary.
//!
//! Exit codes: 0 when all checks pass, 1 when a computation ran but a check
//! failed (or could not complete), 2 for invalid configuration.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use commands::{Failure, Outcome};
use config::{Cli, Command, FileConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            println!("{} {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.summary);
            if outcome.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Compute(msg)) => {
            println!("FAIL {msg}");
            EXIT_FAIL
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(Failure::Config)?,
        None => FileConfig::default(),
    };
    let env_dir = std::env::var_os(config::OUT_DIR_ENV).map(PathBuf::from);
    let common = config::resolve_common(cli, &file, env_dir).map_err(Failure::Config)?;

    // validate everything before starting any work
    let job: Box<dyn FnOnce() -> Result<Outcome, Failure> + Send + '_> = match &cli.command {
        Command::Reconstruct(a) => {
            let cfg = config::resolve_scheme(a, &file, None).map_err(Failure::Config)?;
            Box::new(move || commands::reconstruct(&common, &cfg))
        }
        Command::Norms(a) => {
            let cfg = config::resolve_scheme(a, &file, None).map_err(Failure::Config)?;
            Box::new(move || commands::norms(&common, &cfg))
        }
        Command::Expand(a) => {
            let cfg = config::resolve_scheme(a, &file, None).map_err(Failure::Config)?;
            Box::new(move || commands::expand(&common, &cfg))
        }
        Command::Weights(a) => {
            let cfg = config::resolve_weights(a, &file).map_err(Failure::Config)?;
            Box::new(move || commands::weights(&common, &cfg))
        }
        Command::Signs(a) => {
            let n = config::resolve_signs(a, &file).map_err(Failure::Config)?;
            Box::new(move || commands::signs(&common, n))
        }
        Command::Probe(a) => {
            let cfg = config::resolve_probe(a, &file).map_err(Failure::Config)?;
            Box::new(move || commands::probe(&common, &cfg))
        }
        Command::Verify(a) => {
            let path = a.certificate.clone();
            Box::new(move || commands::verify(&common, &path))
        }
        Command::Bumpcheck(a) => {
            let cfg = config::resolve_bump(a, &file).map_err(Failure::Config)?;
            Box::new(move || commands::bumpcheck(&common, &cfg))
        }
    };
    let threads = cli.threads.or(file.threads);
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Config(format!("cannot start {n} threads: {e}")))?;
            pool.install(job)
        }
        None => job(),
    }
}

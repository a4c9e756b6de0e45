//! Command-line front end, kept in the library so exit codes can be tested
//! in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use dyadic_core::io::write_atomic;
use dyadic_core::report::CheckStatus;
use dyadic_core::ScalarMode;

use crate::{run_suite, ExperimentConfig, LabError, Suite};

#[derive(Parser)]
#[command(
    name = "dyadic-lab",
    version,
    about = "Verification suites for finite dyadic models"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration; defaults apply to omitted fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured scalar mode.
    #[arg(long, global = true, value_parser = ["rational", "float"])]
    mode: Option<String>,
    /// Directory for reports and tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Allow models with n·D above 24.
    #[arg(long, global = true)]
    force_large: bool,
}

#[derive(Subcommand, Clone, Copy)]
pub enum Command {
    /// Exact identities between paraproducts, sparse operators and products.
    Identities,
    /// Inequalities with explicit constants over a random battery.
    Bounds,
    /// Sparse domination of a restricted paraproduct or bilinear form.
    Dominate,
    /// Power-weight sweep of paraproduct and square function norms.
    Sharpness,
    /// Weighted norm of one configured operator.
    Norm,
}

impl From<Command> for Suite {
    fn from(c: Command) -> Suite {
        match c {
            Command::Identities => Suite::Identities,
            Command::Bounds => Suite::Bounds,
            Command::Dominate => Suite::Dominate,
            Command::Sharpness => Suite::Sharpness,
            Command::Norm => Suite::Norm,
        }
    }
}

/// Runs one suite and reports whether every check passed.
pub fn run(cli: &Cli, log: &mut impl Write) -> Result<bool, LabError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = &cli.mode {
        cfg.mode = m.parse::<ScalarMode>()?;
    }
    cfg.validate(cli.force_large)?;
    let outcome = run_suite(cli.command.into(), &cfg)?;
    let report = &outcome.report;
    for c in report.failures() {
        writeln!(
            log,
            "FAIL {}: measured {} bound {:?}",
            c.name, c.measured, c.bound
        )?;
    }
    writeln!(
        log,
        "{}: {} pass, {} fail, {} info (seed {}, {})",
        report.suite,
        report.count(CheckStatus::Pass),
        report.count(CheckStatus::Fail),
        report.count(CheckStatus::Info),
        cfg.seed,
        report.mode
    )?;
    if let Some(dir) = &cli.out {
        for (name, bytes) in &outcome.files {
            let path = dir.join(name);
            write_atomic(&path, bytes)?;
            writeln!(log, "wrote {}", path.display())?;
        }
    }
    Ok(report.passed())
}

/// Parses `args` and runs, returning the process exit code.
pub fn main_with<I, T>(args: I, log: &mut impl Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli, log) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("dyadic-lab: {e}");
            e.exit_code() as u8
        }
    }
}

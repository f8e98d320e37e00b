//! `hexloop`: verification suites, exact enumeration, sampling runs and
//! scaling scans.
//!
//! Exit codes: 0 success, 1 check or run failure, 2 usage error.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CliError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "hexloop", version, about = "Loop O(2) model on the hexagonal lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Run exhaustive verification suites and write a JSON report.
    Verify,
    /// List every configuration of a small domain with weights and Z.
    Enumerate,
    /// Estimate one quantity over a list of sizes; CSV or JSON table.
    Scan,
    /// Run chains, spool samples to --out and print summary statistics.
    Sample,
}

/// Every flag may also be given as `key=value` in the --config file; flags win.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Flat key=value file with defaults for any flag below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// ball:n | par:m,n | rect:m,n | cyl:m,n | annulus:n,N
    #[arg(long, global = true)]
    domain: Option<String>,
    /// free | pp | mm | pm | mp | blue-pp | ... | dobrushin | dobrushin-cyl | four-arc:a,b,c,d
    #[arg(long, global = true)]
    bc: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    sweeps: Option<String>,
    #[arg(long, global = true)]
    burnin: Option<String>,
    #[arg(long, global = true)]
    thin: Option<String>,
    #[arg(long, global = true)]
    chains: Option<String>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long, global = true)]
    format: Option<String>,
    /// Enumeration cap on free faces.
    #[arg(long, global = true)]
    cap: Option<String>,
    /// height | spin
    #[arg(long, global = true)]
    dynamics: Option<String>,
    /// flat | low | high
    #[arg(long, global = true)]
    start: Option<String>,
    /// all, or a comma list of bijection, fkg, markov, monochrome, domination, fourarc, crossing
    #[arg(long, global = true)]
    suite: Option<String>,
    /// heights | loops | pairs
    #[arg(long, global = true)]
    what: Option<String>,
    /// variance | loopcount | circuit | crossing | alpha
    #[arg(long, global = true)]
    kind: Option<String>,
    /// Comma-separated ascending sizes.
    #[arg(long, global = true, allow_hyphen_values = true)]
    sizes: Option<String>,
    /// Region fraction for circuit scans, domain factor for alpha scans.
    #[arg(long, global = true)]
    rho: Option<String>,
}

impl Flags {
    fn into_map(self) -> BTreeMap<String, String> {
        let path = |p: Option<PathBuf>| p.map(|p| p.to_string_lossy().into_owned());
        [
            ("config", path(self.config)),
            ("domain", self.domain),
            ("bc", self.bc),
            ("seed", self.seed),
            ("sweeps", self.sweeps),
            ("burnin", self.burnin),
            ("thin", self.thin),
            ("chains", self.chains),
            ("workers", self.workers),
            ("out", path(self.out)),
            ("format", self.format),
            ("cap", self.cap),
            ("dynamics", self.dynamics),
            ("start", self.start),
            ("suite", self.suite),
            ("what", self.what),
            ("kind", self.kind),
            ("sizes", self.sizes),
            ("rho", self.rho),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }
}

fn run(command: Command, cfg: &RunConfig) -> Result<bool, CliError> {
    match command {
        Command::Verify => commands::verify(cfg),
        Command::Enumerate => commands::enumerate(cfg).map(|_| true),
        Command::Scan => commands::scan(cfg).map(|_| true),
        Command::Sample => commands::sample(cfg).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config::merge(cli.flags.into_map()).and_then(|map| RunConfig::resolve(&map)).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(config::run_err)?;
        pool.install(|| run(cli.command, &cfg))
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

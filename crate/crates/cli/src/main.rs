//! `qradial`: batch harness over the radial-projection checkers.
//!
//! Subcommands: `verify` (run checkers over a grid), `hunt` (scan for
//! conjecture counterexamples), `stats` (plane incidence statistics CSV),
//! `construct` (emit one family as a point-set file). Exit status is
//! nonzero iff a hypotheses-met check failed or a witness went stale.

mod config;
mod manifest;
mod run;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use config::SweepConfig;

#[derive(Parser)]
#[command(name = "qradial", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the selected theorem checkers over the configured grid.
    Verify(SharedArgs),
    /// Scan for counterexamples to the 10 q^k exceptional-set conjecture.
    Hunt(HuntArgs),
    /// Emit per-instance incidence statistics (prime fields, d = 2).
    Stats(SharedArgs),
    /// Emit one generated family as a point-set file.
    Construct(SharedArgs),
}

#[derive(Args)]
struct SharedArgs {
    /// Field characteristics (comma-separated grid).
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<u64>>,
    /// Field extension degrees.
    #[arg(long, value_delimiter = ',')]
    e: Option<Vec<u32>>,
    /// Dimensions.
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    /// Family: random | subspace | collinear | concurrent | subplane | product.
    #[arg(long)]
    family: Option<String>,
    /// Point counts (meaning varies per family).
    #[arg(long, value_delimiter = ',')]
    size: Option<Vec<u64>>,
    /// Projection-size thresholds.
    #[arg(long = "M", value_delimiter = ',')]
    m: Option<Vec<u64>>,
    /// Rational C thresholds, e.g. 3/2.
    #[arg(long = "C", value_delimiter = ',')]
    c: Option<Vec<String>>,
    /// Subspace dimensions (hunt cells and the subspace family).
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<u32>>,
    /// Checker selection (verify only).
    #[arg(long, value_delimiter = ',')]
    theorems: Option<Vec<String>>,
    /// Instances per cell.
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Never affects report content.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_parser = ["json", "csv"])]
    format: Option<String>,
    /// TOML config file mirroring these flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct HuntArgs {
    #[command(flatten)]
    shared: SharedArgs,
    /// Re-verify a previously written witness file and exit.
    #[arg(long)]
    recheck: Option<PathBuf>,
}

impl SharedArgs {
    fn into_config(self) -> Result<SweepConfig> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::load(path)?,
            None => SweepConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(p, e, d, family, size, m, c, k, theorems, trials, seed, jobs);
        if let Some(out) = self.out {
            cfg.out = Some(out);
        }
        if let Some(format) = self.format {
            cfg.format = format;
        }
        Ok(cfg)
    }
}

fn init_pool(jobs: usize) {
    if jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = (|| -> Result<u64> {
        match cli.cmd {
            Cmd::Verify(args) => {
                let cfg = args.into_config()?;
                init_pool(cfg.jobs);
                run::run_verify(&cfg)
            }
            Cmd::Hunt(args) => {
                if let Some(path) = args.recheck {
                    return run::run_recheck(&path);
                }
                let cfg = args.shared.into_config()?;
                init_pool(cfg.jobs);
                // A confirmed witness is a finding, not a failure.
                run::run_hunt(&cfg).map(|found| {
                    if found > 0 {
                        eprintln!("{found} confirmed witness(es) written");
                    }
                    0
                })
            }
            Cmd::Stats(args) => {
                let cfg = args.into_config()?;
                init_pool(cfg.jobs);
                run::run_stats(&cfg).map(|()| 0)
            }
            Cmd::Construct(args) => {
                let cfg = args.into_config()?;
                run::run_construct(&cfg).map(|()| 0)
            }
        }
    })();
    match outcome {
        Ok(0) => {}
        Ok(n) => {
            eprintln!("{n} failing instance(s)");
            std::process::exit(1);
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

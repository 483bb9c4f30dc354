//! `bobw` — run contextual-bandit experiment batches, verify the library
//! against its brute-force oracles, and emit plot-ready data files.

mod harness;
mod plotdata;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "bobw", version, about = "Linear contextual bandit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all (horizon, seed) cells of an experiment config; write per-trial
    /// CSVs, per-horizon aggregate JSONs, and a manifest.
    Run {
        /// Config file (TOML, or JSON starting with '{').
        config: PathBuf,
        /// Output root; overrides $BOBW_OUT_ROOT (default "runs").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite and print one pass/fail line per check.
    Verify {
        #[arg(long, value_enum, default_value_t = VerifyLevel::Quick)]
        level: VerifyLevel,
    },
    /// Convert an aggregate (or manifest) JSON into plain-text plot data.
    Plotdata {
        /// Aggregate JSON, or a manifest.json referencing several.
        aggregate: PathBuf,
        #[arg(long, value_enum)]
        mode: PlotMode,
        /// Output file (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PlotMode {
    /// Columns: t, mean cumulative regret, stderr (one block per horizon).
    #[value(name = "regret-vs-t")]
    RegretVsT,
    /// Columns: sqrt(T), mean final regret, stderr.
    #[value(name = "regret-vs-sqrtT")]
    RegretVsSqrtT,
    /// Columns: ln(T), ln(mean final regret); footer has the fitted slope.
    #[value(name = "loglog")]
    Loglog,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, out } => harness::run_command(&config, out.as_deref()),
        Command::Verify { level } => {
            let level = match level {
                VerifyLevel::Quick => bobw_core::verify::Level::Quick,
                VerifyLevel::Full => bobw_core::verify::Level::Full,
            };
            let reports = bobw_core::verify::run_suite(level)?;
            let mut all_pass = true;
            for r in &reports {
                println!("{} {:<26} {}", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail);
                all_pass &= r.pass;
            }
            Ok(if all_pass { 0 } else { 1 })
        }
        Command::Plotdata {
            aggregate,
            mode,
            output,
        } => {
            let text = plotdata::render(&aggregate, mode)?;
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
    }
}

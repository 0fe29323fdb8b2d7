use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wsnsim_cli::{cmd_dump_hierarchy, cmd_reproduce_fig3, cmd_run, cmd_sweep, parse_sets};

/// Deterministic hierarchical WSN simulator with adaptive cluster-head
/// duty cycling.
#[derive(Parser)]
#[command(name = "wsnsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config and write trace.csv, summary.json and manifest.json.
    Run {
        /// Config file (TOML, or a manifest.json from a previous run).
        #[arg(long)]
        config: PathBuf,
        /// Point override, repeatable: --set adhs.t_threshold=0
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Shorthand for --set seed=N.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write hierarchy.json.
        #[arg(long)]
        dump_hierarchy: bool,
    },
    /// Reproduce the three-level grid energy example; nonzero exit on
    /// deviation from the expected totals.
    ReproduceFig3 {
        /// Optionally write the run outputs here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a base config once per value of one parameter (T, L, k, alpha, n)
    /// and emit a CSV of headline results.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of: T, L, k, alpha, n.
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. --values 0,15,1e9
        #[arg(long)]
        values: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the hierarchy for a config and dump it as JSON, without
    /// running any rounds.
    DumpHierarchy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> anyhow::Result<bool> {
        match &cli.command {
            Command::Run {
                config,
                set,
                out,
                seed,
                dump_hierarchy,
            } => {
                let sets = parse_sets(set)?;
                cmd_run(config, &sets, out, *seed, *dump_hierarchy)?;
                Ok(true)
            }
            Command::ReproduceFig3 { out } => cmd_reproduce_fig3(out.as_deref()),
            Command::Sweep {
                config,
                param,
                values,
                set,
                out,
                seed,
            } => {
                let sets = parse_sets(set)?;
                cmd_sweep(config, param, values, &sets, out, *seed)?;
                Ok(true)
            }
            Command::DumpHierarchy {
                config,
                set,
                out,
                seed,
            } => {
                let sets = parse_sets(set)?;
                cmd_dump_hierarchy(config, &sets, out.as_ref(), *seed)?;
                Ok(true)
            }
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

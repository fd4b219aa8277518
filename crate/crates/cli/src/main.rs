mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hbm_stencil::model::Variant;

/// Stencil accelerator design flow: parse a kernel, size its parallelism
/// against an HBM platform, simulate it, and emit accelerator sources.
#[derive(Debug, Parser)]
#[command(name = "hbm-stencil", version)]
struct Cli {
    /// Platform TOML. Defaults to the bundled u280-like profile.
    #[arg(long, global = true, value_name = "PATH")]
    platform: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the parsed program and its derived parameters as JSON.
    Parse {
        #[command(flatten)]
        kernel: KernelArgs,
    },
    /// Rank every parallelism design and pick a winner.
    Explore {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
        /// Directory for the JSON report.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run a design on a test grid and compare it with the oracle.
    Simulate {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        design: DesignArgs,
        /// `random:RxC[xD]`, or a grid file (.csv or binary). Repeat once
        /// per input for multi-input kernels.
        #[arg(long, value_name = "SPEC", default_value = "random:64x64")]
        grid: Vec<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Sweep all five variants, best design of each.
        #[arg(long, conflicts_with = "variant")]
        all_variants: bool,
        /// Print per-round cycle accounting.
        #[arg(long)]
        trace: bool,
    },
    /// Write kernel source, host source and report for the chosen design.
    Generate {
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Skip designs whose partitions cannot hold their halo and try the
        /// next-ranked one, lowering the budget when a whole ranking fails.
        #[arg(long)]
        fallback_on_reject: bool,
    },
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// DSL file, or the name of a bundled kernel (e.g. `jacobi2d`).
    dsl: String,
    /// Override the program's iteration count.
    #[arg(long = "iter", value_name = "N")]
    iterations: Option<u32>,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    /// Cap on total PEs, below the platform's own limit.
    #[arg(long, value_name = "N")]
    max_pe: Option<u32>,
    /// Lower the budget by one PE per SLR this many times before exploring.
    #[arg(long, value_name = "N", default_value_t = 0)]
    fallback: u32,
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// Use this variant instead of the model winner.
    #[arg(long)]
    variant: Option<Variant>,
    /// Spatial groups for `--variant`.
    #[arg(long, requires = "variant", default_value_t = 1)]
    k: u32,
    /// Temporal stages for `--variant`.
    #[arg(long, requires = "variant", default_value_t = 1)]
    s: u32,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

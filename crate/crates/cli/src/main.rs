use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod exit;
mod stages;

use exit::exit_code;

#[derive(Parser)]
#[command(
    name = "archclust",
    version,
    about = "Hierarchical cut clustering of software dependency graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge relation kinds, normalize by fan-in and lift to classes.
    Normalize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        norm: NormalizeArgs,
    },
    /// Run (or resume) the alpha search and write the cluster tree.
    Cluster {
        /// Normalized graph; not needed with --resume.
        #[arg(long, required_unless_present = "resume")]
        graph: Option<PathBuf>,
        #[arg(long, required_unless_present = "resume")]
        out: Option<PathBuf>,
        /// Continue the search saved in this directory.
        #[arg(long, conflicts_with_all = ["graph", "out"])]
        resume: Option<PathBuf>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Re-nest nodes with too many children.
    Perfectize {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        perf: PerfectizeArgs,
    },
    /// Write text, XML and viewer renderings of a tree into a directory.
    Export {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        export: ExportArgs,
    },
    /// Per-package ubiquity ranking.
    Stats {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the ranking as XML.
        #[arg(long)]
        xml: Option<PathBuf>,
    },
    /// All stages in sequence into one output directory.
    Pipeline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        norm: NormalizeArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        perf: PerfectizeArgs,
        #[command(flatten)]
        export: ExportArgs,
    },
    /// Solve one file-based probe task (see the worker file layout).
    ProbeWorker { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum LeverageArg {
    None,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum LiftOrderArg {
    /// Lift to classes, then normalize.
    Pre,
    /// Normalize members, then lift.
    Post,
}

#[derive(Clone, Copy, ValueEnum)]
enum RootHeuristicArg {
    Cycles,
    Central,
}

#[derive(Args, Clone)]
struct NormalizeArgs {
    #[arg(long, value_enum, default_value = "none")]
    leverage: LeverageArg,
    #[arg(long, value_enum, default_value = "post")]
    lift_order: LiftOrderArg,
    /// Per-kind weight as KIND=REAL, e.g. CALL=2; repeatable.
    #[arg(long = "kind-weight", value_name = "KIND=REAL")]
    kind_weights: Vec<String>,
    /// Lower bound of the logarithmic multiplier.
    #[arg(long, default_value_t = 1.0)]
    log_clamp: f64,
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Probe budget.
    #[arg(long, default_value_t = 50, allow_negative_numbers = true)]
    budget: i64,
    /// Wall-clock budget in seconds; replaces the probe budget.
    #[arg(long, allow_negative_numbers = true)]
    wall_secs: Option<i64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Sub-intervals per split.
    #[arg(long, default_value_t = 2)]
    alpha_fanout: usize,
    /// Cluster count at which the downward alpha sweep stops.
    #[arg(long, default_value_t = 1)]
    alpha_min_target: usize,
    #[arg(long, default_value_t = 60)]
    snapshot_secs: u64,
    /// Stop gracefully once this file exists [default: <out>/shutdown.sig].
    #[arg(long)]
    stop_file: Option<PathBuf>,
    /// Check the quality bounds on every probe, enumerating clusters up to this size.
    #[arg(long)]
    verify_bounds: Option<usize>,
}

#[derive(Args, Clone)]
struct PerfectizeArgs {
    #[arg(long, default_value_t = 16)]
    child_threshold: usize,
    #[arg(long, value_enum, default_value = "central")]
    root_heuristic: RootHeuristicArg,
}

#[derive(Args, Clone)]
struct ExportArgs {
    /// Label prefix of the project's own code; repeatable.
    #[arg(long = "client-prefix")]
    client_prefixes: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match stages::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

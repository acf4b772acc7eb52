use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "cachesel",
    version,
    about = "Pick the smallest private + shared data cache hierarchy that meets a memory-time deadline"
)]
pub struct Cli {
    /// TOML configuration file. Defaults to $CACHESEL_CONFIG when set.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Select a hierarchy for a trace and deadline.
    Select(SelectArgs),
    /// Select again for a tighter deadline from a cache file.
    Reselect(ReselectArgs),
    /// Simulate every (private, shared) pair and print the feasibility matrix.
    Oracle(OracleArgs),
    /// Miss counts of every private configuration.
    SimulatePrivate(SimulatePrivateArgs),
    /// Miss counts of every shared configuration behind one private configuration.
    SimulateShared(SimulateSharedArgs),
    /// Write a seeded synthetic trace.
    GenTrace(GenTraceArgs),
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    /// Trace file.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Processor count; must cover every processor id in the trace.
    #[arg(long, value_name = "N")]
    pub processors: Option<u32>,
}

#[derive(Args, Debug, Default)]
pub struct SpaceArgs {
    /// Set counts for both levels: `lo..hi` powers of two or a comma list.
    #[arg(long, value_name = "LIST")]
    pub sets: Option<String>,
    /// Associativities for both levels, comma separated.
    #[arg(long, value_name = "LIST")]
    pub assocs: Option<String>,
    /// Block size in bytes (shared by both levels).
    #[arg(long, value_name = "BYTES")]
    pub block: Option<u32>,
    #[arg(long, value_name = "LIST")]
    pub private_sets: Option<String>,
    #[arg(long, value_name = "LIST")]
    pub private_assocs: Option<String>,
    #[arg(long, value_name = "LIST")]
    pub shared_sets: Option<String>,
    #[arg(long, value_name = "LIST")]
    pub shared_assocs: Option<String>,
}

#[derive(Args, Debug, Default)]
pub struct TimingArgs {
    /// Private access time in ns.
    #[arg(long)]
    pub tp: Option<u64>,
    /// Shared access time in ns.
    #[arg(long)]
    pub ts: Option<u64>,
    /// Memory access time in ns.
    #[arg(long)]
    pub tm: Option<u64>,
}

#[derive(Args, Debug)]
pub struct DeadlineArg {
    /// Worst-case data memory operation time, e.g. `1.5ms`. A bare number is ns.
    #[arg(long, value_name = "TIME")]
    pub wcdmot: Option<String>,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    /// Exact minimum over every feasible private configuration.
    CapacitySearch,
    /// Only the private configuration leaving the largest memory budget.
    LargestTamPrime,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub timing: TimingArgs,
    #[command(flatten)]
    pub deadline: DeadlineArg,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Save intermediate results here for `reselect`.
    #[arg(long, value_name = "PATH")]
    pub cache: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Also print the budgets and per-level tallies.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Args, Debug)]
pub struct ReselectArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    pub deadline: DeadlineArg,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Cache file written by `select --cache`.
    #[arg(long, value_name = "PATH")]
    pub cache: Option<PathBuf>,
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub timing: TimingArgs,
    #[command(flatten)]
    pub deadline: DeadlineArg,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Evict private copies when the shared cache evicts a block.
    #[arg(long)]
    pub back_invalidate: bool,
}

#[derive(Args, Debug)]
pub struct SimulatePrivateArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Exclude set counts whose misses exceed this.
    #[arg(long, value_name = "N")]
    pub tas_limit: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SimulateSharedArgs {
    #[command(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Private configuration whose misses feed the shared cache, e.g. `64x2`.
    #[arg(long, value_name = "SxA")]
    pub private: String,
    /// Exclude set counts whose misses exceed this.
    #[arg(long, value_name = "N")]
    pub tam_limit: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GenTraceArgs {
    #[arg(long, default_value_t = 4)]
    pub processors: u32,
    #[arg(long, default_value_t = 10_000)]
    pub records: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bytes of address space touched.
    #[arg(long, default_value_t = 16 * 1024)]
    pub address_space: u64,
    #[arg(long, default_value_t = 0.2)]
    pub shared_fraction: f64,
    #[arg(long, default_value_t = 0.3)]
    pub write_fraction: f64,
    /// Probability that an access falls in its region's hot window.
    #[arg(long, default_value_t = 0.7)]
    pub hot_fraction: f64,
    /// Output file; standard output when omitted.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

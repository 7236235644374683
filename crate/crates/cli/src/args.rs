use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "geneo", version, about = "GENEO spaces on periodic image grids and repulsion-energy selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the selection experiment and write reports.
    Select(SelectArgs),
    /// Check operator and metric properties; exits 1 on any failure.
    Verify(VerifyArgs),
    /// Write pseudo-metric tables over sites and group elements.
    Metrics(MetricsArgs),
    /// Greedy epsilon-net over random family members.
    Net(NetArgs),
    /// Load the dataset and frequency table and print a summary.
    IngestCheck(DataArgs),
}

/// Where the admissible signals and their weights come from.
#[derive(Clone, Debug, Args, Serialize)]
pub struct DataArgs {
    /// Grid size.
    #[arg(long, default_value_t = 28)]
    pub n: usize,
    /// IDX image file (EMNIST letters), optionally gzipped.
    #[arg(long)]
    pub images: Option<PathBuf>,
    /// IDX label file matching --images.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Directory searched for the EMNIST letters files when --images is absent.
    #[arg(long, env = "GENEO_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// JSON manifest `{n, signals, weights}` describing the space directly.
    #[arg(long, conflicts_with_all = ["images", "labels", "synthetic"])]
    pub manifest: Option<PathBuf>,
    /// Use deterministic synthetic glyphs instead of a dataset.
    #[arg(long)]
    pub synthetic: bool,
    /// Use this many random signals with values uniform in [0, 1) (any n).
    #[arg(long, conflicts_with_all = ["images", "labels", "synthetic", "manifest"])]
    pub random_signals: Option<usize>,
    /// Seed for the synthetic glyphs and random signals.
    #[arg(long, default_value_t = 0)]
    pub glyph_seed: u64,
    /// Use synthetic glyphs when no dataset can be found.
    #[arg(long)]
    pub fallback_synthetic: bool,
    /// Sample per letter: `first`, `seed:<u64>` or `indices:<i0,i1,...>`.
    #[arg(long, default_value = "first")]
    pub letter_policy: String,
    /// Letter frequency file (JSON map or `letter=value` lines).
    #[arg(long, conflicts_with = "uniform")]
    pub frequencies: Option<PathBuf>,
    /// Equal weights for all signals.
    #[arg(long)]
    pub uniform: bool,
}

/// Parameters of the shift-mixture family.
#[derive(Clone, Debug, Args, Serialize)]
pub struct FamilyArgs {
    /// Number of shift pairs; defaults to the length of --k.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub m: Option<u32>,
    /// Horizontal shift multipliers, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub k: Vec<u32>,
    /// Vertical shift multipliers, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub h: Vec<u32>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Sizes of the selected sets, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "10,20", value_parser = clap::value_parser!(u64).range(2..))]
    pub r: Vec<u64>,
    /// Seeds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub seeds: Vec<u64>,
    /// Stop when the largest Riemannian gradient norm falls below this.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Cap on energy evaluations per run.
    #[arg(long, default_value_t = 3000)]
    pub max_evals: usize,
    /// Size of the random evaluation set.
    #[arg(long, default_value_t = 100)]
    pub eval_count: usize,
    /// Output directory.
    #[arg(long, default_value = "geneo-out")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Seed for random operators and signals.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random signal pairs per operator.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Random operators drawn from the family.
    #[arg(long, default_value_t = 5)]
    pub operators: usize,
    /// Enumerate the whole group (small n only).
    #[arg(long)]
    pub group_full: bool,
    /// Multiply the checked operators by this factor (fault injection).
    #[arg(long)]
    pub inject_scale: Option<f64>,
    /// Output directory for verify.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Use every group element instead of a random sample.
    #[arg(long)]
    pub group_full: bool,
    /// Group elements sampled when --group-full is absent.
    #[arg(long, default_value_t = 16)]
    pub group_sample: usize,
    /// Upper bound on enumerated group elements.
    #[arg(long, default_value_t = geneo_core::group::DEFAULT_GROUP_BUDGET)]
    pub group_budget: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "geneo-out")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct NetArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Cover radius in the L2 operator distance.
    #[arg(long)]
    pub epsilon: f64,
    /// Random family members to cover.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for net.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

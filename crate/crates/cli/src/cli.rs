use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_TABLE: &str = "data/zeros_100k.txt";

#[derive(Debug, Parser)]
#[command(
    name = "psilab",
    version,
    about = "Numerical experiments on large values of psi(x) - x"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Write formatted output to this file instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every randomized step [default: 24301]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cache directory (psi checkpoints, fetched tables)
    #[arg(
        long,
        env = "PSILAB_CACHE_DIR",
        default_value = ".psilab-cache",
        global = true
    )]
    pub cache_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Zero-table statistics
    #[command(subcommand)]
    Zeros(ZerosCmd),
    /// Chebyshev psi series
    #[command(subcommand)]
    Psi(PsiCmd),
    /// Explicit formula and exponential sums over zeros
    #[command(subcommand)]
    Explicit(ExplicitCmd),
    /// Bohr-set measures and counts
    #[command(subcommand)]
    Bohr(BohrCmd),
    /// Smooth majorants
    #[command(subcommand)]
    Majorant(MajorantCmd),
    /// End-to-end experiment
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Download data files
    #[command(subcommand)]
    Fetch(FetchCmd),
    /// Write the JSON schemas of every output into a directory
    Schemas {
        #[arg(long, default_value = "schemas")]
        dir: PathBuf,
    },
}

#[derive(Debug, Args, Clone)]
pub struct TableArg {
    /// Zero ordinate table
    #[arg(long, default_value = DEFAULT_TABLE)]
    pub table: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct PsiSource {
    /// Checkpoint CSV written by `psi build`
    #[arg(long)]
    pub psi_cache: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ZerosCmd {
    /// Counts N(t) against the Riemann-von Mangoldt formula
    Stats {
        #[command(flatten)]
        table: TableArg,
        /// Heights to evaluate (default: the last ordinate)
        #[arg(long = "t", value_delimiter = ',')]
        t: Vec<f64>,
    },
    /// Pair-correlation counts against the form-factor prediction
    Paircorr {
        #[command(flatten)]
        table: TableArg,
        #[arg(long = "t")]
        t: Option<f64>,
        /// Window a,b; repeatable
        #[arg(long = "window", value_parser = parse_pair)]
        windows: Vec<(f64, f64)>,
    },
    /// Split zeros into sparse and crowded windows
    Partition {
        #[command(flatten)]
        table: TableArg,
        #[arg(long = "t")]
        t: Option<f64>,
        /// K: window length is 1/K and sparse windows hold at most C*K zeros
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum PsiCmd {
    /// Sieve psi up to a limit and write the checkpoint cache to `--out`
    /// (default: <cache-dir>/psi_<limit>.csv)
    Build {
        #[arg(long)]
        limit: u64,
    },
    /// Maximum of the normalized error over jump points, plus an optional
    /// large-value scan
    Scan {
        #[command(flatten)]
        psi: PsiSource,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        /// Large-value threshold: |psi(x) - x| >= eps x^{1/2} (log x)^2
        #[arg(long)]
        eps: Option<f64>,
        /// Separation exponent for the large-value witnesses
        #[arg(long, default_value_t = 0.5)]
        sep: f64,
    },
    /// Second and higher moments of psi(x) - x
    Moment {
        #[command(flatten)]
        psi: PsiSource,
        #[arg(long = "x", value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        k: u32,
    },
    /// Logarithmic measure of {x <= X : |psi(x) - x| > c x^{1/2} (log log x)^2}
    Logmeasure {
        #[command(flatten)]
        psi: PsiSource,
        #[arg(long = "x")]
        x: f64,
        #[arg(long, default_value_t = 0.5)]
        c: f64,
    },
    /// Histogram of (psi(e^u) - e^u) e^{-u/2} on a uniform grid in u
    Dist {
        #[command(flatten)]
        psi: PsiSource,
        #[arg(long)]
        umax: f64,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExplicitCmd {
    /// Exponential sum over ordinates up to t
    Sum {
        #[command(flatten)]
        table: TableArg,
        #[arg(long = "x")]
        x: f64,
        #[arg(long = "t")]
        t: Option<f64>,
    },
    /// Truncated explicit formula against psi(x) - x
    Compare {
        #[command(flatten)]
        table: TableArg,
        #[command(flatten)]
        psi: PsiSource,
        #[arg(long = "x", value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long = "t-cut")]
        t_cut: Option<f64>,
    },
    /// Set of heights where the exponential sum is large
    Tx {
        #[command(flatten)]
        table: TableArg,
        #[arg(long = "x")]
        x: f64,
        #[arg(long = "big-x")]
        big_x: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = psilab_core::explicit_formula::REDUCTION_COEFF)]
        coeff: f64,
    },
    /// Height shared by the most T_x sets
    Pigeonhole {
        #[command(flatten)]
        table: TableArg,
        #[arg(long = "x", value_delimiter = ',', required = true)]
        x: Vec<f64>,
        #[arg(long = "big-x")]
        big_x: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = psilab_core::explicit_formula::REDUCTION_COEFF)]
        coeff: f64,
        #[arg(long, default_value_t = psilab_core::explicit_formula::PIGEONHOLE_GRID)]
        grid: usize,
    },
}

#[derive(Debug, Args, Clone)]
pub struct BohrArgs {
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub freqs: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub phases: Vec<f64>,
    #[arg(long)]
    pub rho: f64,
    #[arg(long = "T")]
    pub t: f64,
}

#[derive(Debug, Subcommand)]
pub enum BohrCmd {
    /// Exact measure of the truncated Bohr set
    Measure {
        #[command(flatten)]
        spec: BohrArgs,
    },
    /// Zero ordinates inside the Bohr set
    Count {
        #[command(flatten)]
        spec: BohrArgs,
        #[command(flatten)]
        table: TableArg,
    },
    /// Count in a short window against the measure of the enlarged set
    Extend {
        #[command(flatten)]
        spec: BohrArgs,
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        eta: f64,
        #[arg(long = "a-const")]
        a_const: f64,
    },
    /// Average over tuples of the phase-maximized measure
    Average {
        /// Frequency pool
        #[arg(long, value_delimiter = ',', required = true)]
        freqs: Vec<f64>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long = "T")]
        t: f64,
        #[arg(long, default_value_t = 16)]
        trials: usize,
        #[arg(long = "beta-grid", default_value_t = 8)]
        beta_grid: usize,
        #[arg(long, default_value_t = 2)]
        r: u32,
        #[arg(long = "max-order", default_value_t = 2000)]
        max_order: u64,
    },
}

#[derive(Debug, Args, Clone)]
pub struct BumpArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 2)]
    pub r: u32,
}

#[derive(Debug, Subcommand)]
pub enum MajorantCmd {
    /// Verify coefficient bounds, dominance and truncation error
    Check {
        #[command(flatten)]
        bump: BumpArgs,
        #[arg(long = "m-max", default_value_t = 10_000)]
        m_max: i64,
        #[arg(long, default_value_t = 10_000)]
        points: usize,
        /// Certified truncation tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Fourier coefficients as m,re,im
    Dump {
        #[command(flatten)]
        bump: BumpArgs,
        #[arg(long)]
        order: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCmd {
    /// Run every stage of the large-values pipeline
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML or JSON pipeline configuration; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub table: TableArg,
    #[command(flatten)]
    pub psi: PsiSource,
    #[arg(long = "x")]
    pub x: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "c-const")]
    pub c_const: Option<f64>,
    #[arg(long = "a-const")]
    pub a_const: Option<f64>,
    #[arg(long = "k-max")]
    pub k_max: Option<u32>,
    #[arg(long = "threshold-coeff")]
    pub threshold_coeff: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum FetchCmd {
    /// Download a zero table, verify its digest and install it in the cache
    Zeros {
        #[arg(long)]
        url: String,
        /// Expected SHA-256 of the file, hex
        #[arg(long, required_unless_present = "no_verify")]
        sha256: Option<String>,
        /// Skip the digest check
        #[arg(long)]
        no_verify: bool,
        /// File name inside <cache-dir>/zeros
        #[arg(long, default_value = "zeros.txt")]
        name: String,
    },
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

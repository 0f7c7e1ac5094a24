//! Command-line argument definitions.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "hitenrich",
    version,
    about = "Estimate hit enrichment curves, test differences between ranking algorithms, \
             build simultaneous confidence bands, and run Monte Carlo studies",
    after_help = "Thread count follows RAYON_NUM_THREADS. All randomness is driven by --seed; \
                  rerunning a command with the same seed reproduces its output byte for byte."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Estimate hit enrichment (and enrichment factor) curves
    Curve(CurveArgs),
    /// Compare two or more algorithms at chosen testing fractions
    Compare(CompareArgs),
    /// Simultaneous confidence bands for curves or curve differences
    Bands(BandsArgs),
    /// Monte Carlo power / type-I / coverage studies
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// CSV file with one row per ligand
    #[arg(short = 'i', long = "in", value_name = "FILE")]
    pub input: String,

    /// Name of the binary activity column
    #[arg(long, default_value = "activity")]
    pub activity_col: String,

    /// Score columns to load (comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    pub algos: Vec<String>,

    /// Score columns whose sign must be flipped (smaller-is-better tools)
    #[arg(long, value_delimiter = ',')]
    pub negate: Vec<String>,

    /// Field delimiter
    #[arg(long, default_value = ",")]
    pub delimiter: char,

    /// Extra labels accepted as active (besides "1")
    #[arg(long, value_delimiter = ',')]
    pub active_label: Vec<String>,

    /// Extra labels accepted as inactive (besides "0")
    #[arg(long, value_delimiter = ',')]
    pub inactive_label: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    /// Testing fractions (comma separated, strictly increasing, in (0,1])
    #[arg(long, value_delimiter = ',', conflicts_with = "grid_counts")]
    pub grid: Option<Vec<f64>>,

    /// Testing set sizes as integer counts (comma separated)
    #[arg(long, value_delimiter = ',')]
    pub grid_counts: Option<Vec<usize>>,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub grid: GridArgs,

    /// Also emit the enrichment factor curve
    #[arg(long)]
    pub ef: bool,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output path (stdout when omitted; required for svg)
    #[arg(short, long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub grid: GridArgs,

    /// Methods to run (emproc, mcnemar, indjz, corrbinom)
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "emproc,mcnemar,indjz,corrbinom"
    )]
    pub methods: Vec<String>,

    /// Pool the recall estimates inside variance formulas (not McNemar)
    #[arg(long)]
    pub pooled: bool,

    /// Apply the plus (cell) adjustment (not McNemar)
    #[arg(long)]
    pub plus: bool,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Family for the false-discovery-rate adjustment
    #[arg(long, value_enum, default_value_t = BhScope::All)]
    pub bh_scope: BhScope,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(short, long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BhScope {
    /// Adjust across every (pair, fraction) test in this invocation
    All,
    /// Adjust separately within each testing fraction
    PerFraction,
}

#[derive(Debug, Args, Serialize)]
pub struct BandsArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub grid: GridArgs,

    /// Build single-curve bands for each loaded algorithm
    #[arg(long)]
    pub single: bool,

    /// Build a difference band for a pair "A,B" (repeatable)
    #[arg(long, value_name = "A,B")]
    pub diff: Vec<String>,

    /// Band construction method
    #[arg(long, default_value = "supt")]
    pub method: String,

    /// Apply the plus adjustment
    #[arg(long)]
    pub plus: bool,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Monte Carlo draws for the sup-t critical value
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(short, long)]
    pub out: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(subcommand)]
    pub study: StudyCommand,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum StudyCommand {
    /// Rejection rates under a two-algorithm model (power, or type-I with --null)
    Power(PowerArgs),
    /// Coverage of pointwise intervals or simultaneous bands
    Coverage(CoverageArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Data-generating family for two-algorithm studies
    #[arg(long, value_enum, default_value_t = Family::Bibeta)]
    pub family: Family,

    /// Copula correlation between the two algorithms' scores
    #[arg(long, default_value_t = 0.9)]
    pub rho: f64,

    /// Ligands per replicate
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,

    /// Activity rate
    #[arg(long, default_value_t = 0.02)]
    pub pi_plus: f64,

    /// Monte Carlo replicates
    #[arg(long, default_value_t = 2_000)]
    pub reps: usize,

    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Binormal,
    Bibeta,
}

#[derive(Debug, Args, Serialize)]
pub struct PowerArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Null mode: both algorithms take the marginals of this algorithm (1 or 2)
    #[arg(long)]
    pub null: Option<usize>,

    /// Methods to run
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "emproc,mcnemar,indjz,corrbinom"
    )]
    pub methods: Vec<String>,

    #[arg(long)]
    pub pooled: bool,

    #[arg(long)]
    pub plus: bool,

    /// Test counts (defaults to 2,5,10,30,50,100,300,500,1000 capped at n/10)
    #[arg(long, value_delimiter = ',')]
    pub grid_counts: Option<Vec<usize>>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(short, long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    PointwiseCi,
    BandSingle,
    BandDiff,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, value_enum)]
    pub target: Target,

    /// Single-algorithm distributional case 1-5 (band-single studies)
    #[arg(long)]
    pub case: Option<u8>,

    /// Methods for pointwise-ci studies
    #[arg(long, value_delimiter = ',', default_value = "emproc")]
    pub methods: Vec<String>,

    /// Band methods for band studies
    #[arg(long, value_delimiter = ',', default_value = "supt,bonferroni")]
    pub band_methods: Vec<String>,

    #[arg(long)]
    pub pooled: bool,

    /// Apply the plus adjustment (cells for pointwise/diff, add-two for single)
    #[arg(long)]
    pub plus: bool,

    /// Monte Carlo draws per sup-t critical value
    #[arg(long, default_value_t = 20_000)]
    pub draws: usize,

    /// Test counts (defaults to the 25-point band grid capped at n/10)
    #[arg(long, value_delimiter = ',')]
    pub grid_counts: Option<Vec<usize>>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[arg(short, long)]
    pub out: Option<String>,
}

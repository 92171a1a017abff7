//! Command-line grammar.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "zeroflat", version, about = "Flatness of polynomial zero sets, measured")]
pub struct Cli {
    /// Seed for every random draw; echoed in all reports.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Absolute sampling resolution. Defaults to a dimension-dependent
    /// fraction of the working radius (1e-3 in the plane).
    #[arg(long, global = true)]
    pub resolution: Option<f64>,

    /// Directory for output files; without it the main output goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Record,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Search {
    Multistart,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Target {
    #[value(name = "delta_prime")]
    DeltaPrime,
    Delta,
    Lipschitz,
}

/// Polynomial given inline or in a file (text or JSON record).
#[derive(Args, Clone, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["poly", "poly_file"])))]
pub struct PolySource {
    /// Polynomial text such as "x0*x1 + 2 x1".
    #[arg(short = 'p', long = "poly", allow_hyphen_values = true)]
    pub poly: Option<String>,
    /// File holding polynomial text or a JSON record.
    #[arg(long = "poly-file")]
    pub poly_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Homogeneous parts of a polynomial about one or more centers.
    Decompose {
        #[command(flatten)]
        source: PolySource,
        /// Center as comma-separated coordinates; repeat for several.
        #[arg(long = "center", allow_hyphen_values = true)]
        centers: Vec<String>,
    },
    /// Relative size of the degree-k part on balls about a center.
    Zeta {
        #[command(flatten)]
        source: PolySource,
        #[arg(short = 'k', long)]
        k: u32,
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        /// Radii, comma-separated.
        #[arg(short = 'r', long = "radii", default_value = "1")]
        radii: String,
    },
    /// Local flatness of a zero set or point cloud across radii.
    #[command(group(ArgGroup::new("input").required(true).args(["poly", "poly_file", "points"])))]
    Flatness {
        #[arg(short = 'p', long = "poly", allow_hyphen_values = true)]
        poly: Option<String>,
        #[arg(long = "poly-file")]
        poly_file: Option<PathBuf>,
        /// Point-cloud CSV as written by the blowup command.
        #[arg(long)]
        points: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        /// Radii, comma-separated.
        #[arg(short = 'r', long = "radii", default_value = "1")]
        radii: String,
        #[arg(long, value_enum, default_value_t = Search::Multistart)]
        search: Search,
    },
    /// Run the built-in property suites; exit 1 if any fails.
    Verify {
        /// Run only these suites (repeatable).
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// List suite ids and exit.
        #[arg(long)]
        list: bool,
        /// Negative control: shrink the flatness-bound constant so that
        /// suite must fail.
        #[arg(long, hide = true)]
        inject_broken_constant: bool,
    },
    /// Estimate a constant by seeded random search.
    Estimate {
        #[arg(value_enum)]
        target: Target,
        /// Ambient dimension.
        #[arg(short = 'n', long, default_value_t = 2)]
        n: usize,
        /// Degree.
        #[arg(short = 'k', long, default_value_t = 2)]
        k: u32,
        /// Random trials; a target-dependent default when omitted.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Rescaled zero sets about a root compared with their limit cone.
    Blowup {
        #[command(flatten)]
        source: PolySource,
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        /// Strictly decreasing scales, comma-separated.
        #[arg(long, default_value = "0.5,0.25,0.125,0.0625,0.03125,0.015625")]
        scales: String,
        /// Radius of the comparison window after rescaling.
        #[arg(long, default_value_t = 1.0)]
        window: f64,
    },
    /// Label sampled zero-set points as flat or singular.
    Partition {
        #[command(flatten)]
        source: PolySource,
        #[arg(long, allow_hyphen_values = true)]
        center: Option<String>,
        #[arg(short = 'r', long, default_value_t = 1.0)]
        radius: f64,
        /// Degree bound of the harmonic class; defaults to the polynomial degree.
        #[arg(short = 'd', long)]
        degree: Option<u32>,
        /// Non-flatness threshold; defaults to a per-dimension estimate.
        #[arg(long)]
        delta: Option<f64>,
        /// Flatness threshold; defaults to 6 delta.
        #[arg(long)]
        eta: Option<f64>,
        /// Largest probe scale; defaults to radius / 4.
        #[arg(long)]
        max_scale: Option<f64>,
    },
    /// Orthonormal basis of homogeneous harmonic polynomials.
    Basis {
        #[arg(short = 'n', long)]
        n: usize,
        #[arg(short = 'k', long)]
        k: u32,
    },
}

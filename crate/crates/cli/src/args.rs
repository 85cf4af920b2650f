use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "roughlab", version, about = "Rough-path norms, domains and functional inequalities on dyadic grids")]
pub struct Cli {
    /// Worker threads for parallel trials (results do not depend on it).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Root seed of every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// CI mode: refuse to run without an explicit --seed.
    #[arg(long, global = true)]
    pub ci: bool,

    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,

    /// Raise the grid-level cap of the partition DP.
    #[arg(long = "max-level", global = true)]
    pub max_level: Option<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct VarArgs {
    #[arg(long, default_value_t = 2.5)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub kappa: f64,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Output prefix: writes PREFIX.csv and PREFIX.json. Without it the JSON
    /// summary goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormComponent {
    Level1,
    Level2,
    Cp,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lift a path CSV; reports its norms and optionally the full (i, j) table.
    Lift {
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        var: VarArgs,
        /// Write the quadratic-size level table as PREFIX.csv.
        #[arg(long)]
        table: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print the p-variation norm of a path CSV.
    Pvar {
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        var: VarArgs,
        #[arg(long, value_enum, default_value_t = NormComponent::Level1)]
        component: NormComponent,
    },
    /// Print the dyadic (p, kappa)-norm of a path CSV.
    DyadicNorm {
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        var: VarArgs,
    },
    /// Print whether a path lies in the domain described by a key-value file.
    Membership {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        path: PathBuf,
    },
    /// Monte Carlo Wiener measure of a domain.
    EstimateMeasure {
        /// Key-value domain file; overrides the inline flags below.
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long, default_value = "U")]
        kind: String,
        #[arg(long, default_value_t = 5.0)]
        a: f64,
        #[arg(long)]
        b: Option<f64>,
        /// Reference path: `zero` or a path CSV.
        #[arg(long, default_value = "zero")]
        z: String,
        /// Section prefix CSV.
        #[arg(long)]
        prefix: Option<String>,
        #[arg(long = "N", default_value_t = 8)]
        level: u32,
        /// Sample dimension for kind U, reference dimension otherwise.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[command(flatten)]
        var: VarArgs,
        /// Fail (exit 2) unless the lower confidence bound is positive.
        #[arg(long)]
        assert_positive: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Decay of the projection errors with the dyadic level.
    Convergence {
        #[arg(long = "N", default_value_t = 12)]
        level: u32,
        /// Levels as `lo..hi` (inclusive) or a comma list.
        #[arg(long = "n", default_value = "2..10")]
        ns: String,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Comma list of rough-distance, second-level, cross.
        #[arg(long, default_value = "rough-distance,second-level,cross")]
        quantities: String,
        /// Means must be non-increasing from this level on.
        #[arg(long, default_value_t = 4)]
        monotone_from: u32,
        /// Fitted log2 slope must not exceed this.
        #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
        max_slope: f64,
        #[command(flatten)]
        var: VarArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Ratio of the mean cross-integral power to the dyadic norm across scalings.
    CrossBound {
        /// `line` or a path CSV.
        #[arg(long, default_value = "line")]
        z: String,
        /// Extra random reference paths drawn from the seed.
        #[arg(long, default_value_t = 0)]
        corpus: u64,
        #[arg(long, default_value = "1,2,4")]
        scales: String,
        #[arg(long = "N", default_value_t = 8)]
        level: u32,
        #[arg(long, default_value_t = 500)]
        trials: u64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Largest accepted relative spread of the ratio across scalings.
        #[arg(long, default_value_t = 1e-2)]
        max_spread: f64,
        #[command(flatten)]
        var: VarArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Conditional overlap structure of domain sections.
    Overlap {
        /// `zero` or a path CSV.
        #[arg(long, default_value = "zero")]
        z: String,
        #[arg(long, default_value_t = 1)]
        z_dim: usize,
        #[arg(long = "N", default_value_t = 6)]
        level: u32,
        #[arg(long, default_value_t = 1)]
        prefix_dim: usize,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 4.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.2)]
        r: f64,
        #[arg(long, default_value_t = 2000)]
        conditional_trials: u64,
        #[arg(long, default_value_t = 500)]
        prefix_trials: u64,
        #[arg(long, default_value_t = 500)]
        tail_trials: u64,
        #[arg(long, default_value_t = 16)]
        candidates: usize,
        #[arg(long, default_value_t = 2000)]
        overlap_samples: u64,
        #[arg(long, default_value_t = 1e-4)]
        acceptance_floor: f64,
        #[command(flatten)]
        var: VarArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Product-space inequality on a finite toy space.
    WpiToy {
        /// JSON space; defaults to [0,5]^2 ∪ [3,9]^2 on a uniform 10x10 grid.
        #[arg(long)]
        space: Option<PathBuf>,
        /// Semicolon-separated `eps,eps_prime,delta` triples.
        #[arg(long, default_value = "0.05,0.05,0.01;0.1,0.1,0.05;0.2,0.2,0.1")]
        triples: String,
        #[arg(long, default_value_t = 1000)]
        functions: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Spectral gap and log-Sobolev check of a restricted Gaussian.
    GaussianGap {
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        lower: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        upper: f64,
        #[arg(long, default_value_t = 2000)]
        cells: usize,
        #[arg(long, default_value_t = 500)]
        functions: usize,
        #[arg(long, default_value_t = 0.98)]
        min_gap: f64,
        /// Also require |lambda1 - EXPECT| <= --gap-tol.
        #[arg(long)]
        expect_gap: Option<f64>,
        #[arg(long, default_value_t = 0.02)]
        gap_tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Seeded random checks of the structural identities and inequalities.
    PropertySuite {
        #[arg(long, default_value_t = 100)]
        cases: u64,
        #[arg(long = "N", default_value_t = 6)]
        level: u32,
        #[command(flatten)]
        var: VarArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

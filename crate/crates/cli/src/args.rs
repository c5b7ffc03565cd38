use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "symcap", version, about = "Symplectic capacity of randomly rotated convex bodies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Master seed; defaults to $SYMCAP_SEED, then 0
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat key=value file with defaults
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Accept lower bounds from alternating maximisation
    #[arg(long, global = true)]
    pub allow_heuristic: bool,
    /// Add bootstrap standard errors to moment estimates
    #[arg(long, global = true)]
    pub bootstrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// α(K) or α(OK) with its certificate and the capacity interval
    Alpha {
        #[arg(long)]
        body: Option<String>,
        /// Draw O from this seed; without it K is left unrotated
        #[arg(long)]
        rotation_seed: Option<u64>,
    },
    /// Ensemble moments of α(OK) and capacity brackets
    Expect {
        #[arg(long)]
        body: Option<String>,
        /// Moment order, nonzero
        #[arg(long, allow_hyphen_values = true)]
        p: Option<f64>,
    },
    /// The three table quantities across dimensions
    Table1 {
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        families: Option<Vec<String>>,
    },
    /// Run a named acceptance suite with its registered budgets
    Verify {
        suite: String,
    },
    /// Capacity lower bounds along the K_λ family
    Sweep {
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Tail profiles of α(OK) as the dimension grows
    Concentration {
        #[arg(long)]
        body: Option<String>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Profile α⁻¹ instead of α
        #[arg(long)]
        inverse: bool,
    },
    /// Gaussian operator norm against its mean-width bound (diagnostic)
    Chevet {
        #[arg(long)]
        body: Option<String>,
    },
}

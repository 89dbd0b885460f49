//! Command-line surface. Every subcommand accepts the shared flags; values given on
//! the command line override the same keys from `--config`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "annuli",
    version,
    about = "Extremal radial maps between annuli under radial conformal metrics",
    after_help = "Exit codes: 0 success, 1 usage or configuration error, \
                  2 precondition/geometry/regime error, 3 accuracy not reached.\n\
                  Logging: ANNULI_LOG=error|warn|info|debug (stderr)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run file; flags override its keys
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Builtin metric: euclidean, inverse_radius, hyperbolic_disk, punctured_disk,
    /// spherical, cigar, hyperbolic_annulus
    #[arg(long)]
    pub metric: Option<String>,
    /// Metric parameters, comma separated (hyperbolic_annulus takes R)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub params: Vec<f64>,
    /// Inner radius of the target annulus
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// Outer radius of the target annulus
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    /// Inner radius of the source annulus A(r, 1)
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Relative quadrature tolerance
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Absolute quadrature tolerance
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Nitsche bound r* of the target annulus
    Bound(Common),
    /// Solve for the profile parameter c with R(c) = r.
    /// CSV columns: s, phi, q, s_phi_prime, K
    SolveC(Common),
    /// Evaluate f^c (or h^c with --inverse) at a point
    MapEval(MapEvalArgs),
    /// Mean distortion of a forward map
    Distortion(MapArgs),
    /// Energy of an inverse map
    Energy(MapArgs),
    /// Functionals against the sharp bound.
    /// CSV columns (sweep): r, regime, c, K_rho, lower_bound, gap, err
    Report(ReportArgs),
    /// Minimizing sequence in the fat regime.
    /// CSV columns: n, s_n, n_offset, half_n_sq, K_rho_n, err, gap
    Minseq(MinseqArgs),
    /// Independent checks
    Verify(VerifyArgs),
    /// Gauss curvature of the metric. CSV columns: s, K
    Curvature(CurvatureArgs),
    /// Regularity of the metric on (tau, sigma)
    Regularity(Common),
}

#[derive(Debug, Args)]
pub struct MapEvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output of `solve-c` in JSON; otherwise the profile is solved from the flags
    #[arg(long, value_name = "FILE")]
    pub profile: Option<PathBuf>,
    /// Evaluation point in polar form `s,t`
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub at: Vec<f64>,
    /// Evaluate h^c: A(r, 1) -> A'(tau, sigma) instead of f^c
    #[arg(long)]
    pub inverse: bool,
    /// Write the profile nodes as CSV (s, phi, q, sPhiPrime, K)
    #[arg(long, value_name = "FILE")]
    pub dump_profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub common: Common,
    /// nitsche, critical or power:ALPHA
    #[arg(long)]
    pub map: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Sweep over r, e.g. `r=0.05:0.95:0.05`
    #[arg(long)]
    pub sweep: Option<String>,
    /// Minimizing-sequence index used as the competitor in the fat regime
    #[arg(long)]
    pub n: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MinseqArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// Pointwise distortion inequalities on seeded test maps
    Pointwise,
    /// Discrete radial minimisation against the extremal value.
    /// CSV columns: n, value, rel_err, slope_err
    RadialMin,
    /// Log-polar mesh energy minimisation. CSV columns: iteration, energy
    MeshMin,
    /// Rotation invariance of the functionals
    Rotation,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub check: Check,
    #[command(flatten)]
    pub common: Common,
    /// Mesh resolution `N_rxN_t`
    #[arg(long)]
    pub mesh: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random test maps (pointwise)
    #[arg(long)]
    pub n_maps: Option<usize>,
    /// Cells of the finest radial discretisation (radial-min)
    #[arg(long)]
    pub n_nodes: Option<usize>,
    /// Iteration cap (mesh-min)
    #[arg(long)]
    pub iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub common: Common,
    /// Radii, comma separated
    #[arg(long, value_delimiter = ',')]
    pub at: Vec<f64>,
    /// Uniform grid `lo:hi:n`
    #[arg(long)]
    pub grid: Option<String>,
}

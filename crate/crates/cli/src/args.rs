use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hiersel::bench::{Covariance, Marginal, NoiseKind, ScalarDistribution};
use hiersel::PenaltySpec;

#[derive(Debug, Parser)]
#[command(name = "hiersel", version, about = "Hierarchical interaction selection: fitting and Monte Carlo checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand a main-effects CSV into the interaction design and write its
    /// column map (column, label, j, k, mean). Expanded matrices are never
    /// written; they are recomputed from the main effects.
    Expand(ExpandArgs),
    /// Fit penalized least squares with a hierarchy-respecting penalty.
    /// With `--lambda theory` the level is the noise-correlation threshold
    /// that makes the l1 error of order s sqrt(log p1 / n).
    Fit(FitArgs),
    /// Fit a decreasing, log-spaced lambda path with warm starts.
    Path(PathArgs),
    /// Draw a synthetic data set from a hierarchical sparse interaction model.
    Simulate(SimulateArgs),
    /// Rate experiment: checks that the mean l1 estimation error scales like
    /// s sqrt(log p1 / n) (log-log slope near 1) and that Pe(v) <= 3 ||v||_1
    /// for the composite absolute penalty.
    RateBench(RateBenchArgs),
    /// Restricted eigenvalue check: estimates M(k0, s) of a random
    /// interaction design (an upper bound from cone descent) and verifies it
    /// stays bounded away from zero once n is large enough; also evaluates
    /// the sufficient sample size formula.
    ReCheck(ReCheckArgs),
    /// Noise-event check: frequency with which ||Z^T eps / n||_inf stays
    /// below C_{e,delta} sqrt(log p1 / n), compared with its lower bound.
    A0Check(A0CheckArgs),
    /// Covariance check: the population covariance of the interaction design
    /// rows has eigenvalues bounded away from zero and infinity when the
    /// main effects are Gaussian with a nonsingular covariance.
    EigsCheck(EigsCheckArgs),
    /// Orlicz-norm check: the product of two independent sub-Gaussian
    /// variables is subexponential with psi_1 norm at most 2 K^2.
    PsiCheck(PsiCheckArgs),
    /// Concentration check: tail frequencies of |mean(Z_i^2) - var Z| > delta
    /// for subexponential Z decay like exp(-C (n delta)^(1/3)).
    ConcCheck(ConcCheckArgs),
    /// Penalty check: random trials of the sandwich inequalities
    /// Pe(theta) >= Pe(theta_S) + L1 ||theta_Sc||_1 and
    /// Pe(theta_S) <= L2 ||theta_S||_1, plus subadditivity and Pe(0) = 0.
    PenaltyCheck(PenaltyCheckArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    /// Marginal of the standardized main effects.
    #[arg(long, value_enum, default_value_t = MarginalArg::Gaussian)]
    pub dist: MarginalArg,
    /// Main-effect covariance: identity, ar1:RHO or toeplitz:c0,c1,...
    #[arg(long, default_value = "identity")]
    pub cov: Covariance,
}

impl DesignArgs {
    pub fn distribution(&self) -> hiersel::bench::DesignDistribution {
        hiersel::bench::DesignDistribution { kind: self.dist.into(), covariance: self.cov.clone() }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MarginalArg {
    Gaussian,
    Rademacher,
    UniformScaled,
}

impl From<MarginalArg> for Marginal {
    fn from(m: MarginalArg) -> Self {
        match m {
            MarginalArg::Gaussian => Marginal::Gaussian,
            MarginalArg::Rademacher => Marginal::Rademacher,
            MarginalArg::UniformScaled => Marginal::UniformScaled,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum NoiseArg {
    Gaussian,
    Rademacher,
}

impl From<NoiseArg> for NoiseKind {
    fn from(m: NoiseArg) -> Self {
        match m {
            NoiseArg::Gaussian => NoiseKind::Gaussian,
            NoiseArg::Rademacher => NoiseKind::Rademacher,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ScalarArg {
    CenteredExponential,
    Gaussian,
    Laplace,
}

impl From<ScalarArg> for ScalarDistribution {
    fn from(m: ScalarArg) -> Self {
        match m {
            ScalarArg::CenteredExponential => ScalarDistribution::CenteredExponential,
            ScalarArg::Gaussian => ScalarDistribution::Gaussian,
            ScalarArg::Laplace => ScalarDistribution::Laplace,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ReMethodArg {
    Random,
    Exhaustive,
}

/// A fixed positive level or `theory`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LambdaArg {
    Fixed(f64),
    Theory,
}

impl FromStr for LambdaArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "theory" {
            return Ok(LambdaArg::Theory);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(LambdaArg::Fixed(v)),
            _ => Err(format!("lambda must be a positive number or `theory`, got {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column; all other columns are main effects.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Penalty, e.g. cap:q=2, bien, pairwise:q=inf, block:q=2,d0=3, nested, lasso.
    #[arg(long, default_value = "cap:q=2")]
    pub penalty: PenaltySpec,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
    /// Relative primal and dual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Initial splitting step.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Keep rho fixed.
    #[arg(long)]
    pub fixed_rho: bool,
    /// Support threshold; default 1e-6 * max |theta|.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Exit with code 4 when the solver does not converge.
    #[arg(long)]
    pub strict: bool,
}

impl SolverArgs {
    pub fn config(&self) -> hiersel::SolverConfig {
        hiersel::SolverConfig {
            max_iterations: self.max_iter,
            primal_tol: self.tol,
            dual_tol: self.tol,
            rho: self.rho,
            adaptive_rho: !self.fixed_rho,
            support_threshold: self.threshold,
            ..hiersel::SolverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    /// Multiplier on the theoretical threshold.
    #[arg(long, default_value_t = 2.0)]
    pub multiplier: f64,
    /// psi_2 norm of the noise.
    #[arg(long, default_value_t = 1.0)]
    pub ke: f64,
    /// Bound on column standard deviations; default the largest sample
    /// standard deviation of the expanded columns.
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta0: f64,
    /// Unspecified absolute constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: PathBuf,
    /// Column to leave out of the main effects.
    #[arg(long)]
    pub response: Option<String>,
    /// Subtract empirical column means.
    #[arg(long)]
    pub center: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Positive level or `theory`.
    #[arg(long, default_value = "theory")]
    pub lambda: LambdaArg,
    #[command(flatten)]
    pub theory: TheoryArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of grid points.
    #[arg(long, default_value_t = 20)]
    pub n_lambda: usize,
    /// Smallest lambda as a fraction of the zero-solution level.
    #[arg(long, default_value_t = 0.01)]
    pub ratio: f64,
    /// Cold start at every grid point.
    #[arg(long)]
    pub restart: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 3)]
    pub s_main: usize,
    #[arg(long, default_value_t = 2)]
    pub s_int: usize,
    #[arg(long, default_value_t = 2.0)]
    pub magnitude: f64,
    /// psi_2 norm of the noise.
    #[arg(long, default_value_t = 0.5)]
    pub ke: f64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub noise: NoiseArg,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Also write the true coefficients and support as JSON.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateBenchArgs {
    /// Experiment config (TOML, or JSON by extension); built-in defaults
    /// when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-replication CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON with per-cell means, slopes and standard errors.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Overrides the config replication count.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Exit with code 4 if any fit did not converge.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct ReCheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 8)]
    pub p: usize,
    #[arg(long, default_value_t = 2)]
    pub s: usize,
    #[arg(long, default_value_t = 7.0)]
    pub k0: f64,
    #[arg(long, value_enum, default_value_t = ReMethodArg::Random)]
    pub method: ReMethodArg,
    /// Descent runs (random supports, or starts per support when exhaustive).
    #[arg(long, default_value_t = 20)]
    pub budget: usize,
    /// Independent designs.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Positivity margin counted in the summary.
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Accuracy parameter of the sample-size formula.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub big_c1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub ck_tilde: f64,
}

#[derive(Debug, Args)]
pub struct A0CheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Multiplier on C_{e,delta}.
    #[arg(long, default_value_t = 1.0)]
    pub multiplier: f64,
    /// psi_2 norm of the generated noise.
    #[arg(long, default_value_t = 1.0)]
    pub ke_noise: f64,
    #[arg(long, value_enum, default_value_t = NoiseArg::Gaussian)]
    pub noise: NoiseArg,
    /// psi_2 norm used in the threshold; defaults to the noise's.
    #[arg(long)]
    pub ke: Option<f64>,
    /// Column standard deviation bound; defaults to the design's exact value.
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[command(flatten)]
    pub design: DesignArgs,
}

#[derive(Debug, Args)]
pub struct EigsCheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 4)]
    pub p: usize,
    #[arg(long, default_value_t = 100_000)]
    pub n_mc: usize,
    #[command(flatten)]
    pub design: DesignArgs,
}

#[derive(Debug, Args)]
pub struct PsiCheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 10)]
    pub qmax: u32,
}

#[derive(Debug, Args)]
pub struct ConcCheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = ScalarArg::CenteredExponential)]
    pub dist: ScalarArg,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub delta: f64,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct PenaltyCheckArgs {
    #[command(flatten)]
    pub common: Common,
    /// lasso, cap, bien, pairwise, block or nested.
    #[arg(long)]
    pub family: String,
    /// Group exponent (> 1, or inf).
    #[arg(long)]
    pub q: Option<String>,
    /// Block width for the block family.
    #[arg(long)]
    pub d0: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub p: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

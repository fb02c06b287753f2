//! Monte Carlo bench for the probabilistic statements behind the
//! estimator: design generators, restricted eigenvalues, the noise event,
//! covariance spectra, Orlicz norms, concentration of squares, the
//! sample-size formula and the convergence-rate experiment.
//!
//! Unnamed absolute constants default to 1; any number derived from them
//! holds only up to those constants.

pub mod a0;
pub mod concentration;
pub mod distribution;
pub mod probe;
pub mod psi;
pub mod rate;
pub mod re;
pub mod sample_size;
pub mod sigma_z;
pub mod truth;

pub use a0::{a0_event_rate, a0_statistics, NoiseKind, NoiseSpec};
pub use concentration::{concentration_squares_check, ConcentrationReport, ScalarDistribution};
pub use distribution::{gen_design, Covariance, DesignDistribution, Marginal};
pub use probe::{re_probe, ReProbe};
pub use psi::{psi_norm_estimate, PsiKind};
pub use rate::{rate_experiment, ExperimentConfig, RateReport};
pub use re::{re_constant, ReEstimate, ReMethod};
pub use sample_size::{re_sample_size, SampleSizeConstants};
pub use sigma_z::{sigma_z_eigs, SigmaZEigs};
pub use truth::gen_truth;

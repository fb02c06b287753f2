//! Penalized least squares for two-way interaction models under strong
//! hierarchy, together with a Monte Carlo bench for the probabilistic
//! statements that back the estimator's `s * sqrt(log p1 / n)` rate.
//!
//! The crate is organised bottom-up:
//!
//! * [`design`] expands a main-effects matrix into the interaction design and
//!   owns the column bookkeeping ([`InteractionIndex`], [`SupportSet`]).
//! * [`penalty`] defines the six penalty families, their additive atom
//!   decomposition and proximal operators.
//! * [`solver`] minimizes `(1/2n)||Y - Z theta||^2 + lambda * Pe(theta)` by
//!   consensus splitting over penalty atoms.
//! * [`bench`] holds the design generators and estimators used to check
//!   restricted eigenvalues, noise events, covariance bounds, Orlicz norms and
//!   the convergence rate.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod design;
pub mod error;
pub mod io;
pub mod linalg;
pub mod penalty;
pub mod rng;
pub mod solver;
pub mod support;

pub use design::{expand_design, Column, DesignMatrix, Expansion, InteractionIndex};
pub use error::{Error, Result};
pub use penalty::{Exponent, PenaltySpec};
pub use solver::{fit, FitResult, SolverConfig};
pub use support::SupportSet;

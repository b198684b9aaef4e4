//! Online stochastic vector balancing with potential-function greedy rules.
//!
//! Vectors arrive one at a time from a fixed distribution and each must be
//! given a sign (or a color) immediately. The algorithms here keep an
//! exponential-moment potential over a mixture of the input distribution and
//! a test distribution small, which keeps the discrepancy polylogarithmic in
//! the chosen norm.
//!
//! * [`covariance`]: covariance models and the dyadic reduction `M`, `Pi_k`.
//! * [`potential`]: the cosh/exp potential and the greedy sign rule.
//! * [`testsets`]: test distributions, convex bodies, chaining nets.
//! * [`tusnady`]: online coloring of points against axis-parallel boxes.
//! * [`multicolor`]: weighted multi-color balancing via a tree embedding.
//! * [`harness`]: input generators, baselines, oracles, metrics and runs.

pub mod covariance;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod multicolor;
pub mod potential;
pub mod rng;
pub mod testsets;
pub mod tusnady;

pub use covariance::{
    default_kappa, dyadic_reduce, estimate_covariance, CovarianceModel, ScaleDecomposition,
    ScaleIndex,
};
pub use error::{Error, Result};
pub use potential::{
    default_lambda, AtomSet, AtomTag, DenseAtoms, PotentialState, Sign, SparseAtoms,
    SparseVector, TestAtom, TestDistribution, Variant,
};

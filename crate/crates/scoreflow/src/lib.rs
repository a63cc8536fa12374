//! Score matching, Stein discrepancy, and their flow-preconditioned
//! (diffusion) variants for one-dimensional densities.
//!
//! The crate provides:
//!
//! * exact Student-t / Gaussian / pushforward densities ([`densities`]),
//! * invertible increasing maps and the diffusion coefficients they induce
//!   ([`flows`]),
//! * the divergence zoo built on interchangeable quadrature / Monte Carlo
//!   expectation backends ([`divergences`], [`expectation`]),
//! * the instantaneous change of Fisher divergence under an ODE drift and
//!   its Euler-step verification ([`ode`]),
//! * loss-landscape sweeps, gradient-region widths, DoF robustness tables
//!   and location estimation ([`experiments`]),
//! * a numeric self-check suite ([`verify`]) that the CLI exposes as
//!   `scoreflow verify`.
//!
//! Everything is deterministic: sampling draws from a pinned uniform stream
//! ([`rng`]) through inverse CDFs, and quadrature grids are fixed by their
//! specification.

pub mod cli;
pub mod densities;
pub mod divergences;
pub mod error;
pub mod expectation;
pub mod experiments;
pub mod flows;
pub mod numeric;
pub mod ode;
pub mod rng;
pub mod special;
pub mod verify;

pub use densities::{golden_dataset, Density, GaussianParams, SampleSet, StudentTParams};
pub use divergences::{
    diffusion_fisher, dsd_value, dsm_loss, fisher_divergence, optimal_test_function,
    riemannian_fisher, score_matching_loss, stein_operator_pointwise,
    stein_operator_pointwise_transformed, stein_value, DivergenceResult, RiemannianMetric,
    TestFunction,
};
pub use error::{Error, Result};
pub use expectation::{ExpectationBackend, QuadratureRule};
pub use flows::{ArctanPrefactor, Flow};
pub use ode::{euler_pushforward_check, instantaneous_change, OdeDrift};

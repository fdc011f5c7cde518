//! Weighted Hermite functionals of long-range dependent Gaussian random fields.
//!
//! The crate covers the full numerical pipeline:
//!
//! - [`covmodels`]: isotropic correlation families with a long-range exponent,
//!   slowly varying factors and the matching power-law spectral densities.
//! - [`hermite`]: probabilists' Hermite polynomials, expansion coefficients,
//!   Hermite rank and Parseval checks.
//! - [`fieldsim`]: exact (factorization) and spectral simulation of fields on
//!   rectangular lattices.
//! - [`functionals`]: weighted lattice sums and integrals of `H_m(xi)` and their
//!   normalizations.
//! - [`msd`]: deterministic evaluation of the mean-square gap between the
//!   integral and sum functionals.
//! - [`limitdist`]: rectangle kernels, limit variances and samplers for the
//!   Gaussian and Rosenblatt-type limit laws, plus the two-sample KS distance.
//! - [`cli`]: configuration-driven experiment runner.

pub mod cli;
pub mod covmodels;
pub mod error;
pub mod fieldsim;
pub mod functionals;
pub mod hermite;
pub mod limitdist;
pub mod msd;
pub mod quad;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};

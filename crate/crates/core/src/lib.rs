//! Regenerative tools for Markov chains under a minorization condition.
//!
//! The crate simulates the split chain (Nummelin splitting), cuts trajectories
//! into regeneration blocks and excursions, estimates the two asymptotic
//! variances, evaluates Bernstein-type tail bounds for additive functionals and
//! checks those bounds against Monte Carlo and exact tail probabilities.
//!
//! Module map:
//!
//! - [`chain_models`]: finite and generic kernels, minorization data, built-in chains.
//! - [`split_regen`]: split-chain simulation, regeneration times, blocks, excursions.
//! - [`orlicz`]: exponential Orlicz quasi-norms and their tail/constant lemmas.
//! - [`bounds`]: closed-form tail bound evaluators.
//! - [`variance`]: asymptotic variance, exact and estimated.
//! - [`verify`]: tail estimation, domination checks and structural tests.
//!
//! Monte Carlo work is spread over replicas with [`replicas::run_replicas`]. With
//! the `parallel` feature (default) replicas run on rayon; without it they run
//! sequentially. Both paths give bit-identical results because every replica
//! owns a ChaCha substream derived from `(seed, replica index)`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod chain_models;
pub mod error;
pub mod orlicz;
pub mod replicas;
pub mod split_regen;
pub mod stats;
pub mod variance;
pub mod verify;

pub use error::{Error, Result};
pub use replicas::{Execution, SimRng};

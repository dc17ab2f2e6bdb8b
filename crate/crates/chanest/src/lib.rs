//! Channel estimation for FDD massive MIMO downlinks with a uniform
//! rectangular transmit array and a uniform linear receive array.
//!
//! The training columns are built from one shared symbol pool by sliding,
//! truncating, and conjugate-flipping a base sequence. That structure makes
//! the noiseless receive snapshot a Vandermonde-constrained low-rank tensor,
//! which the estimators exploit:
//!
//! * [`rice`]: algebraic factorization of the snapshot (spatial smoothing,
//!   shift invariance, rank-K SVD) followed by closed-form phase and
//!   path-loss recovery.
//! * [`ricer`]: refines the phases by rooting projector polynomials seeded
//!   with the algebraic estimates, then refits path losses by least squares.
//! * [`baselines`]: greedy sparse recovery over a quantized angle dictionary
//!   and the orthogonal-training least-squares reference.
//! * [`harness`]: seeded Monte-Carlo sweeps (NMSE, BER) with CSV export.
//!
//! Entry points: [`training::build_training`], [`rice::rice_estimate`],
//! [`ricer::ricer_estimate`], [`harness::run_sweep`].

pub mod baselines;
pub mod channel;
pub mod error;
pub mod harness;
pub mod mdalg;
pub mod rice;
pub mod ricer;
pub mod training;

pub use channel::{ArrayGeometry, MultipathParams, Scenario};
pub use error::{Error, Result};
pub use mdalg::{CMat, CVec};
pub use rice::{FactorEstimate, SmoothingPlan};
pub use training::TrainingSequence;

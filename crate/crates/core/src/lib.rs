//! Kingman's coalescent built one individual at a time, and the record
//! process hidden inside it.
//!
//! Adding individuals sequentially to a Kingman coalescent produces a
//! sequence of lineage lengths `L_2, L_3, ...` that is not Markov. The pairs
//! `(R_i, A_i)` recording *where* each successive running maximum arrives and
//! *which rank* it holds among all lengths do form a Markov chain, with
//! closed-form transition laws. After the rescaling
//! `(R_i^2 / A_i, ln(A_{i+1} / A_i))` the chain converges to a stationary
//! limit `xi_i = (xi_{i-1} + X_i) e^{-eta_i}` with `Exp(1)` inputs.
//!
//! Modules:
//!
//! * [`kingman`] simulates the coalescent, extends it individual by
//!   individual, and rebuilds it from a lineage-length sequence.
//! * [`aldous`] implements the stick construction and identifies lineage
//!   ranks and record pairs from it.
//! * [`ra_chain`] holds the exact transition laws, samplers and the urn
//!   oracles that reproduce them by enumeration.
//! * [`limit`] holds the limiting chain and the `W_n` law behind it.
//! * [`stats`] holds the goodness-of-fit machinery and record extraction.
//! * [`verify`] runs the acceptance suite.
//!
//! Probability formulas are generic over [`Scalar`], so the same code
//! evaluates in `f32`, `f64` or exact rationals.

pub mod aldous;
pub mod error;
pub mod export;
pub mod kingman;
pub mod limit;
pub mod numeric;
pub mod ra_chain;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use aldous::{RankAssignment, StickField};
pub use kingman::{MergeEvent, Partition, PeblsSequence, Trajectory};
pub use limit::{LimitStart, LimitState, WnLaw};
pub use ra_chain::{ChainState, RaPath, RaState};
pub use stats::TestReport;

/// Floating-point probability used throughout the simulation code.
pub type Probability = f64;

/// Exact rational probability used by the oracles.
pub type ExactProbability = num_rational::BigRational;

/// Single-precision probability, for callers that only need rough values.
pub type Probability32 = f32;

/// Limiting-chain state in double precision.
pub type LimitStateF64 = LimitState<f64>;

/// Limiting-chain state in single precision.
pub type LimitStateF32 = LimitState<f32>;

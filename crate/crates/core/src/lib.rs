//! Discrete-time quantum walks on a 1D lattice with classical randomness in
//! the coin angle or the translation direction, and the tools to locate the
//! localization transition they undergo.
//!
//! - [`walk`]: walker state, coin and translation operators
//! - [`randomness`]: disorder models and seeded evolution
//! - [`observables`]: probability distribution, MoI, IPR, peak structure
//! - [`detect`]: critical values from sweeps, power-law fits
//! - [`ml`]: linear modified-Huber classifier and multi-layer perceptron
//! - [`scaling`]: critical value versus system size for every method

pub mod detect;
pub mod error;
pub mod ml;
pub mod observables;
pub mod randomness;
pub mod scaling;
pub mod walk;

pub use error::{Error, Result};
pub use observables::{PeakLabel, ProbabilityDistribution};
pub use randomness::{ModelKind, RandomnessModel};
pub use walk::{CoinParams, Direction, WalkConfig, WalkerState};

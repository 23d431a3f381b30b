//! Training degraded-observation estimators by imitating a reference
//! estimator that sees better observations.
//!
//! - [`prob`]: distributions, divergence, entropy, LLRs, soft mutual information
//! - [`chain`]: exact enumeration over small `X - Y - Z` chains
//! - [`train`]: per-bin posterior averaging and parametric correction training
//! - [`minsum`]: the binary check-node testbed (tanh rule vs min-sum)
//! - [`permanent`]: exact and structured matrix permanents, head/tail split
//! - [`sudoku`]: soft-SUDOKU belief propagation, EXIT charts, weight training
//! - [`cli`]: the `rolemodel` command-line front end

#![allow(clippy::needless_range_loop)]

pub mod chain;
pub mod cli;
pub mod error;
pub mod minsum;
pub mod permanent;
pub mod prob;
pub mod rng;
pub mod sudoku;
pub mod train;

pub use error::{Error, Result};
pub use prob::{Distribution, Llr};
pub use rng::CounterRng;

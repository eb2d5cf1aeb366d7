//! Numerical laboratory for long-horizon portfolio robustness in a
//! complete Black-Scholes market: certainty-equivalent convergence of
//! isoelastic strategies, horizon decay of option-grant incentives, power
//! incentives via static option replication, and the two-piece power
//! utility for which the convergence fails.
//!
//! Everything is organized around terminal payoffs: the market module
//! describes lognormal terminal laws, the utility module the preference
//! family and its duals, and the solver finds optimal payoffs through the
//! dual first-order condition. The incentives and counterexample modules
//! build the contract analytics and the collapse diagnostics on top.

pub mod counterexample;
pub mod error;
pub mod incentives;
pub mod market;
pub mod numerics;
pub mod solver;
pub mod utility;

pub use error::{Error, Result};

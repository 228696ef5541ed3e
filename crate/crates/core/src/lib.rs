//! Defaultable bond term structures driven by general semimartingales.
//!
//! The crate simulates forward-rate random fields with scheduled jumps,
//! risky dates carried by a random measure, default and recovery machinery,
//! and audits the no-arbitrage drift conditions by exact pathwise identities
//! and Monte Carlo martingale tests.

// indexed loops over parallel per-cell arrays read better than zipped
// iterator chains in the numeric kernels
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod rng;
pub mod time_paths;

pub mod stoch_calc;

pub mod risky_measure;
pub mod sim_lab;

pub mod bond_engine;
pub mod credit_events;
pub mod drift_engine;
pub mod forward_fields;
pub mod model;

pub use error::{Result, TsError};

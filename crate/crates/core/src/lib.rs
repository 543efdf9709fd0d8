//! Cell-level analytical model of multi-cell 802.11 WLANs.
//!
//! Cells (an AP with its nodes) are vertices of a contention graph. The
//! activity of the network is a product-form chain over independent sets;
//! a per-cell fixed point couples it with the single-cell DCF backoff
//! model to give collision probabilities and throughputs. On top of the
//! model sit channel assignment algorithms and a Monte Carlo check of the
//! chain.

pub mod assign;
pub mod cellset;
pub mod config;
pub mod ctmc_sim;
pub mod dcf;
pub mod error;
pub mod fixtures;
pub mod multicell;
pub mod report;
pub mod topology;

pub use cellset::CellSet;
pub use error::{ModelError, Result};

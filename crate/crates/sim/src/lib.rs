//! File formats and the command-line driver for the `dkucb` simulator.

pub mod config;
pub mod error;
pub mod geometry;
pub mod output;
pub mod sweep;

pub use config::FileConfig;
pub use error::SimError;

//! Age-of-information analysis for status updates that cross a wireless
//! uplink and a permissioned-ledger consensus pipeline.

pub mod aoi;
pub mod error;
pub mod latency;
pub mod quad;
mod rng;
pub mod specfun;
pub mod uplink;

pub use error::{Error, Result};

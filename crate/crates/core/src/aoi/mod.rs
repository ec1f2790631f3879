//! AoI violation probability P[AoI ≥ v] = E[T^v]/E[T] for the renewal
//! structure of effective updates.
//!
//! A cycle T = X + T_int runs between consecutive ledger updates: T_int is
//! the exponential wait for the next successfully received packet and X its
//! consensus latency. T^v is the part of the cycle during which the age is at
//! least v. Three independent evaluators are provided: a closed-form series,
//! a one-dimensional quadrature of the conditional excess, and Monte Carlo
//! (both the reduced renewal chain and a first-principles packet path).

mod evaluate;
mod montecarlo;
mod quadrature;
mod series;
mod sweep;

pub use evaluate::{violation_probability, Evaluation, Method, FALLBACK_TOLERANCE};
pub use montecarlo::{
    physical_path_mc, physical_sample_path_mc, renewal_mc, violation_probability_mc, ConsensusLaw,
    PathOptions, PathSetup, RenewalOptions, SamplePathSummary, MIN_CYCLES,
};
pub use quadrature::{excess_given_budget, expected_excess, violation_probability_quadrature};
pub use series::{
    violation_probability_series, violation_probability_series_form, SeriesForm,
    CANCELLATION_BUDGET,
};
pub use sweep::{sweep_target_stp, SweepPoint, SweepResult};

use crate::error::{Error, Result};
use crate::latency::GammaParams;
use serde::Serialize;

/// The four quantities the violation probability depends on, besides v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoiModel {
    pub consensus: GammaParams,
    /// Effective packet rate ρ = ρ_s·p_c, per second.
    pub rate: f64,
    /// Transmission latency Y, seconds. May be +∞ (no usable uplink rate).
    pub tx_latency: f64,
}

impl AoiModel {
    pub fn new(consensus: GammaParams, rate: f64, tx_latency: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::domain(
                "AoiModel",
                format!("rate must be positive, got {rate}"),
            ));
        }
        if !(tx_latency >= 0.0) {
            return Err(Error::domain(
                "AoiModel",
                format!("transmission latency must be nonnegative, got {tx_latency}"),
            ));
        }
        Ok(Self {
            consensus,
            rate,
            tx_latency,
        })
    }

    /// E[T] = α/β + 1/ρ.
    pub fn mean_cycle(&self) -> f64 {
        self.consensus.mean() + 1.0 / self.rate
    }
}

/// Target age v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AoiQuery {
    pub target_aoi: f64,
}

impl AoiQuery {
    pub fn new(target_aoi: f64) -> Result<Self> {
        if !(target_aoi > 0.0 && target_aoi.is_finite()) {
            return Err(Error::domain(
                "AoiQuery",
                format!("target AoI must be positive, got {target_aoi}"),
            ));
        }
        Ok(Self { target_aoi })
    }

    /// T_c = v − Y; nonpositive budgets mean the age never drops below v.
    pub fn consensus_budget(&self, model: &AoiModel) -> f64 {
        self.target_aoi - model.tx_latency
    }
}

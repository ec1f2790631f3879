//! Consensus latency: Gamma modeling, maximum-likelihood fitting, and a
//! discrete-event simulator of the endorse / order / validate pipeline that
//! produces latency samples.

mod fit;
pub mod io;
mod pipeline;

pub use fit::{
    fit_gamma_mle, ks_critical_1pct, ks_distance, sample_gamma, thom_estimate, GammaFit,
};
pub use pipeline::{
    consensus_latency_samples, run_pipeline, run_pipeline_scripted, BlockRecord, CutReason,
    LatencyDist, PipelineConfig, PipelineRun, TxRecord, Verdict,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Gamma distribution with shape α and rate β (mean α/β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct GammaParams {
    shape: f64,
    rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) || !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::domain(
                "GammaParams",
                format!("shape and rate must be positive and finite, got ({shape}, {rate})"),
            ));
        }
        Ok(Self { shape, rate })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }
}

impl TryFrom<(f64, f64)> for GammaParams {
    type Error = Error;

    fn try_from((shape, rate): (f64, f64)) -> Result<Self> {
        Self::new(shape, rate)
    }
}

impl From<GammaParams> for (f64, f64) {
    fn from(p: GammaParams) -> Self {
        (p.shape, p.rate)
    }
}

/// Fitted (α, β) per target STP as reported for the measured testbed.
pub const TESTBED_FITS: [(f64, f64, f64); 8] = [
    (0.3, 5.64, 3.01),
    (0.4, 5.94, 2.45),
    (0.5, 5.39, 2.85),
    (0.6, 5.42, 2.84),
    (0.7, 7.18, 3.73),
    (0.8, 7.71, 4.12),
    (0.9, 7.50, 4.35),
    (1.0, 6.57, 3.82),
];

/// Testbed fits as (ζ, GammaParams) pairs.
pub fn testbed_fits() -> Vec<(f64, GammaParams)> {
    TESTBED_FITS
        .iter()
        .map(|&(z, a, b)| (z, GammaParams::new(a, b).expect("table entries are valid")))
        .collect()
}

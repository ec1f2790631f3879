//! Violation probability across target STP values.
//!
//! Raising ζ lowers the packet loss (ρ grows) but forces a lower target
//! rate, so Y grows; the sweep exposes the resulting trade-off curve.

use super::{violation_probability, AoiModel, AoiQuery, Method};
use crate::error::{Error, Result};
use crate::latency::GammaParams;
use crate::specfun::EvalPolicy;
use crate::uplink::{success_probability, transmission_latency, NetworkConfig, OperatingPoint};
use serde::Serialize;

/// Probability spread below which the curve is flagged as low contrast.
pub const LOW_CONTRAST: f64 = 1e-3;

const ZETA_MATCH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub zeta: f64,
    pub tx_latency: f64,
    pub rate: f64,
    pub shape: f64,
    pub rate_param: f64,
    pub probability: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub target_aoi: f64,
    pub points: Vec<SweepPoint>,
    /// Index of the smallest probability (first on ties).
    pub argmin: usize,
    /// Every probability is identical, so the minimizer carries no information.
    pub degenerate: bool,
    /// max − min probability is below [`LOW_CONTRAST`].
    pub low_contrast: bool,
}

impl SweepResult {
    pub fn argmin_zeta(&self) -> f64 {
        self.points[self.argmin].zeta
    }

    /// The minimizer is strictly inside the grid.
    pub fn interior_minimum(&self) -> bool {
        !self.degenerate && self.argmin > 0 && self.argmin + 1 < self.points.len()
    }

    /// Probabilities are monotone (weakly) along the grid.
    pub fn is_monotone(&self) -> bool {
        let p: Vec<f64> = self.points.iter().map(|p| p.probability).collect();
        p.windows(2).all(|w| w[1] >= w[0]) || p.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Evaluates P[AoI ≥ v] at each ζ of `grid` using the consensus fit for that ζ.
pub fn sweep_target_stp(
    netcfg: &NetworkConfig,
    fits: &[(f64, GammaParams)],
    v: f64,
    grid: &[f64],
    point: OperatingPoint,
    policy: &EvalPolicy,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::domain("sweep_target_stp", "empty ζ grid"));
    }
    let query = AoiQuery::new(v)?;
    let mut points = Vec::with_capacity(grid.len());
    for &zeta in grid {
        if !(zeta > 0.0 && zeta < 1.0) {
            return Err(Error::domain(
                "sweep_target_stp",
                format!("grid values must lie in (0, 1), got {zeta}"),
            ));
        }
        let fit = fits
            .iter()
            .find(|(z, _)| (z - zeta).abs() <= ZETA_MATCH)
            .map(|(_, p)| *p)
            .ok_or_else(|| Error::Config(format!("no consensus fit for ζ = {zeta}")))?;
        let cfg = netcfg.with_target_stp(zeta);
        let y = transmission_latency(&cfg)?;
        let rate = cfg.gen_rate * success_probability(&cfg, point)?;
        let model = AoiModel::new(fit, rate, y)?;
        let eval = violation_probability(&model, &query, policy)?;
        points.push(SweepPoint {
            zeta,
            tx_latency: y,
            rate,
            shape: fit.shape(),
            rate_param: fit.rate(),
            probability: eval.probability,
            method: eval.method,
        });
    }
    let mut argmin = 0;
    for (i, p) in points.iter().enumerate() {
        if p.probability < points[argmin].probability {
            argmin = i;
        }
    }
    let max = points
        .iter()
        .map(|p| p.probability)
        .fold(f64::MIN, f64::max);
    let min = points[argmin].probability;
    Ok(SweepResult {
        target_aoi: v,
        argmin,
        degenerate: max == min && (points.len() > 1 || min == 1.0),
        low_contrast: max - min < LOW_CONTRAST,
        points,
    })
}

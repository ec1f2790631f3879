//! Series evaluation guarded by the quadrature.

use super::{violation_probability_quadrature, violation_probability_series, AoiModel, AoiQuery};
use crate::error::Result;
use crate::specfun::EvalPolicy;
use serde::Serialize;

/// Series and quadrature values further apart than this trigger fallback.
pub const FALLBACK_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub probability: f64,
    pub method: Method,
    /// None when the series failed.
    pub series: Option<f64>,
    pub quadrature: f64,
    /// Why the series value was not used.
    pub fallback: Option<String>,
}

/// Series value when it evaluates cleanly and agrees with quadrature to
/// [`FALLBACK_TOLERANCE`]; the quadrature value otherwise.
pub fn violation_probability(
    model: &AoiModel,
    query: &AoiQuery,
    policy: &EvalPolicy,
) -> Result<Evaluation> {
    let quadrature = violation_probability_quadrature(model, query)?;
    let (series, fallback) = match violation_probability_series(model, query, policy) {
        Ok(s) if (s - quadrature).abs() <= FALLBACK_TOLERANCE => (Some(s), None),
        Ok(s) => (
            Some(s),
            Some(format!("series {s} disagrees with quadrature {quadrature}")),
        ),
        Err(e) => (None, Some(e.to_string())),
    };
    if let Some(reason) = &fallback {
        log::debug!(
            "v = {}, T_c = {}: falling back to quadrature ({reason})",
            query.target_aoi,
            query.consensus_budget(model)
        );
    }
    Ok(Evaluation {
        probability: if fallback.is_none() {
            series.expect("accepted series value")
        } else {
            quadrature
        },
        method: if fallback.is_none() {
            Method::Series
        } else {
            Method::Quadrature
        },
        series,
        quadrature,
        fallback,
    })
}

//! P[AoI ≥ v] by one-dimensional quadrature.
//!
//! Conditioning on the previous consensus latency X_{k−1} = x gives
//! T^v = (X + T_int − (T_c − x))⁺ when x < T_c and T^v = X + T_int otherwise,
//! so E[T^v] = ∫₀^{T_c} g(T_c − x) f_X(x) dx + E[T]·Q(α, βT_c) with
//! g(c) = E[(X + T_int − c)⁺] available in closed form.

use super::{AoiModel, AoiQuery};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::specfun::{
    ln_gamma, ln_kummer_1f1, regularized_lower_gamma, regularized_upper_gamma, EvalPolicy,
};

const QUAD_REL_TOL: f64 = 1e-10;
const QUAD_ABS_TOL: f64 = 1e-14;

/// g(c) = E[(X + T_int − c)⁺] for c ≥ 0.
///
/// Split as f₁ + f₂ + f₃ where f₂ + f₃ = (α/β)Q(α+1, βc) − c·Q(α, βc) is the
/// consensus-only part and f₁ = P[X + T_int > c]/ρ is the exponential tail.
pub fn excess_given_budget(c: f64, model: &AoiModel) -> Result<f64> {
    let policy = EvalPolicy::default();
    let a = model.consensus.shape();
    let b = model.consensus.rate();
    let r = model.rate;
    if c <= 0.0 {
        return Ok(model.mean_cycle() - c);
    }
    let q_a = regularized_upper_gamma(a, b * c, &policy)?;
    let q_a1 = regularized_upper_gamma(a + 1.0, b * c, &policy)?;
    let f23 = a / b * q_a1 - c * q_a;
    // P[X ≤ c, X + T_int > c] = (βc)^α e^{−βc}/Γ(α+1) · ₁F₁(1; α+1; (β−ρ)c),
    // rewritten so nothing over- or underflows at large c
    let mixed = if b > r {
        (a * (b / (b - r)).ln() - r * c).exp() * regularized_lower_gamma(a, (b - r) * c, &policy)?
    } else {
        let w = (r - b) * c;
        let ln_hyper = ln_kummer_1f1(a, a + 1.0, w, &policy)?;
        (a * (b * c).ln() - r * c - ln_gamma(a + 1.0) + ln_hyper).exp()
    };
    let f1 = (q_a + mixed) / r;
    Ok(f1 + f23)
}

/// E[T^v] by adaptive quadrature.
pub fn expected_excess(model: &AoiModel, query: &AoiQuery) -> Result<f64> {
    let t = query.consensus_budget(model);
    let mean = model.mean_cycle();
    if t <= 0.0 {
        return Ok(mean);
    }
    let a = model.consensus.shape();
    let b = model.consensus.rate();
    let policy = EvalPolicy::default();
    let ln_norm = a * b.ln() - ln_gamma(a);
    let opts = QuadOptions::relative(QUAD_REL_TOL).with_abs(QUAD_ABS_TOL);

    // The first failure inside the integrand is kept and reported.
    let failure = std::cell::RefCell::new(None::<Error>);
    let g = |c: f64| match excess_given_budget(c, model) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let integral = if a >= 1.0 {
        integrate(
            |x: f64| {
                if x <= 0.0 {
                    return 0.0;
                }
                g(t - x) * (ln_norm + (a - 1.0) * x.ln() - b * x).exp()
            },
            0.0,
            t,
            opts,
        )?
    } else {
        // y = x^α removes the x^{α−1} endpoint singularity:
        // f_X(x)dx = β^α e^{−βx}/Γ(α+1) dy
        let ln_norm1 = a * b.ln() - ln_gamma(a + 1.0);
        integrate(
            |y: f64| {
                let x = y.powf(1.0 / a);
                g(t - x) * (ln_norm1 - b * x).exp()
            },
            0.0,
            t.powf(a),
            opts,
        )?
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(integral.value + mean * regularized_upper_gamma(a, b * t, &policy)?)
}

/// P[AoI ≥ v] = E[T^v]/E[T] by quadrature.
pub fn violation_probability_quadrature(model: &AoiModel, query: &AoiQuery) -> Result<f64> {
    if query.consensus_budget(model) <= 0.0 {
        return Ok(1.0);
    }
    let p = expected_excess(model, query)? / model.mean_cycle();
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::OutOfRange {
            op: "aoi quadrature",
            value: p,
        });
    }
    Ok(p.clamp(0.0, 1.0))
}

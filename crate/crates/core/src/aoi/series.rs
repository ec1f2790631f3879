//! Closed-form series for P[AoI ≥ v].
//!
//! With a = α, b = β, r = ρ, t = T_c the probability is
//!
//!   A + r/((b + ra)Γ(a)) · M + Γ(a, bt)/Γ(a)
//!
//! where A is a double series over (n, k) in powers of (r − b) and rt, and
//! M = aγ(a, bt) + Σ_n (bt)^{2a+n+1}(...)·₁F₁(a; 2a+n+2; ·) − (bt)^{a+1}B(a,2)·₁F₁(a; a+2; −bt).
//!
//! Every term is formed in log space and summed with Neumaier compensation.
//! A running bound on the absolute rounding error is kept alongside each sum;
//! when heavy cancellation pushes it past [`CANCELLATION_BUDGET`] the
//! evaluation is abandoned instead of returning noise.

use super::{AoiModel, AoiQuery};
use crate::error::{Error, Result};
use crate::specfun::{
    kummer_1f1, ln_beta, ln_gamma, lower_incomplete_gamma, regularized_upper_gamma, CompensatedSum,
    EvalPolicy,
};
use serde::Serialize;

/// Largest tolerated absolute rounding error on the probability scale.
pub const CANCELLATION_BUDGET: f64 = 1e-7;

/// Relative error assumed for every individual term (special functions,
/// exp/ln round trips).
const TERM_REL_ERROR: f64 = 1e-14;

/// Terms allowed to grow in a row before a series is declared divergent.
const GROWTH_LIMIT: usize = 20;

/// Consecutive negligible terms that end a series.
const SMALL_RUN: usize = 3;

/// Which reading of the printed expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesForm {
    /// Signs and arguments consistent with the term-by-term derivation:
    /// (−bt)^{2a+n+1} is read as (−1)^n (bt)^{2a+n+1}, both ₁F₁ in M take −bt,
    /// and the B(a, 2) term carries no extra t^a.
    #[default]
    Corrected,
    /// (−1)^{n+1} for the odd power, +bt in the last ₁F₁ series, and the
    /// extra t^a factor on the B(a, 2) term, as typeset.
    AsPrinted,
}

/// Value with a bound on its absolute rounding error.
#[derive(Debug, Clone, Copy)]
struct Tracked {
    value: f64,
    error: f64,
}

/// Sums terms until three in a row are negligible.
struct Series {
    op: &'static str,
    sum: CompensatedSum,
    error: f64,
    small: usize,
    growth: usize,
    last: f64,
    terms: usize,
}

impl Series {
    fn new(op: &'static str) -> Self {
        Self {
            op,
            sum: CompensatedSum::new(),
            error: 0.0,
            small: 0,
            growth: 0,
            last: f64::INFINITY,
            terms: 0,
        }
    }

    /// Adds a term; returns Ok(true) once the series has converged.
    fn push(&mut self, term: Tracked, rel_tol: f64) -> Result<bool> {
        if !term.value.is_finite() {
            return Err(Error::Convergence {
                op: self.op,
                terms: self.terms,
            });
        }
        self.sum.add(term.value);
        self.error += term.error;
        self.terms += 1;
        let mag = term.value.abs();
        if mag > self.last {
            self.growth += 1;
            if self.growth >= GROWTH_LIMIT {
                return Err(Error::Divergence {
                    op: self.op,
                    run: self.growth,
                });
            }
        } else {
            self.growth = 0;
        }
        self.last = mag;
        if mag <= rel_tol * self.sum.value().abs() {
            self.small += 1;
        } else {
            self.small = 0;
        }
        Ok(self.small >= SMALL_RUN)
    }

    fn finish(self) -> Tracked {
        Tracked {
            value: self.sum.value(),
            error: self.error + self.sum.abs_mass() * f64::EPSILON,
        }
    }
}

fn run_series<F>(op: &'static str, policy: &EvalPolicy, mut term: F) -> Result<Tracked>
where
    F: FnMut(usize) -> Result<Tracked>,
{
    let mut s = Series::new(op);
    for i in 0..policy.max_terms {
        if s.push(term(i)?, policy.rel_tol)? {
            return Ok(s.finish());
        }
    }
    Err(Error::Convergence {
        op,
        terms: policy.max_terms,
    })
}

/// sign · exp(ln_mag), tagged with the per-term error.
fn signed_exp(sign: f64, ln_mag: f64) -> Tracked {
    let value = sign * ln_mag.exp();
    Tracked {
        value,
        error: value.abs() * TERM_REL_ERROR,
    }
}

fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Sign of (−1)^n.
fn parity(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Series evaluation in the corrected form.
pub fn violation_probability_series(
    model: &AoiModel,
    query: &AoiQuery,
    policy: &EvalPolicy,
) -> Result<f64> {
    violation_probability_series_form(model, query, policy, SeriesForm::Corrected)
}

pub fn violation_probability_series_form(
    model: &AoiModel,
    query: &AoiQuery,
    policy: &EvalPolicy,
    form: SeriesForm,
) -> Result<f64> {
    policy.validate()?;
    let t = query.consensus_budget(model);
    if t <= 0.0 {
        return Ok(1.0);
    }
    let a = model.consensus.shape();
    let b = model.consensus.rate();
    let r = model.rate;
    let bt = b * t;
    let lower = lower_incomplete_gamma(a, bt, policy)?;
    let upper_reg = regularized_upper_gamma(a, bt, policy)?;
    let ln_gamma_a = ln_gamma(a);

    // A = r b^{2a+1} / ((b + ra)Γ(a)²) · Σ_n (r − b)^n / (n!(a+n) r^{a+n+1}) · [Γ(a+n+1)γ(a,bt)/b^a − I_n]
    let ln_pref_a = r.ln() + (2.0 * a + 1.0) * b.ln() - (b + r * a).ln() - 2.0 * ln_gamma_a;
    let diff = r - b;
    let outer = run_series("aoi series (outer)", policy, |n| {
        let nf = n as f64;
        let (sign, ln_pow) = if diff == 0.0 {
            if n == 0 {
                (1.0, 0.0)
            } else {
                return Ok(Tracked {
                    value: 0.0,
                    error: 0.0,
                });
            }
        } else {
            (diff.signum().powi(n as i32), nf * diff.abs().ln())
        };
        let ln_w = ln_pref_a + ln_pow - ln_factorial(n) - (a + nf).ln() - (a + nf + 1.0) * r.ln();
        let lead = signed_exp(sign, ln_w + ln_gamma(a + nf + 1.0) - a * b.ln());
        let lead = Tracked {
            value: lead.value * lower,
            error: lead.error * lower,
        };
        let inner = run_series("aoi series (inner)", policy, |k| {
            let kf = k as f64;
            let p = a + nf + kf + 1.0;
            let f = kummer_1f1(a, 2.0 * a + nf + kf + 2.0, -bt, policy)?;
            let ln_mag = ln_w + p * (r * t).ln() - ln_factorial(k) - p.ln()
                + ln_beta(p + 1.0, a)?
                + a * t.ln()
                + f.ln();
            Ok(signed_exp(sign * parity(k), ln_mag))
        })?;
        Ok(Tracked {
            value: lead.value - inner.value,
            error: lead.error + inner.error,
        })
    })?;

    // M, with the two n-series merged term by term.
    let (odd_sign, last_arg, extra_t) = match form {
        SeriesForm::Corrected => (1.0, -bt, 0.0),
        SeriesForm::AsPrinted => (-1.0, bt, a * t.ln()),
    };
    let ln_bt = bt.ln();
    let merged = run_series("aoi series (middle)", policy, |n| {
        let nf = n as f64;
        let ln_common =
            (2.0 * a + nf + 1.0) * ln_bt - ln_factorial(n) - ln_gamma_a + ln_beta(a + nf + 2.0, a)?;
        let sign = odd_sign * parity(n);
        let c = 2.0 * a + nf + 2.0;
        let f_minus = kummer_1f1(a, c, -bt, policy)?;
        let f_last = if last_arg == -bt {
            f_minus
        } else {
            kummer_1f1(a, c, last_arg, policy)?
        };
        let first = signed_exp(-sign, ln_common - (a + nf + 1.0).ln() + f_minus.ln());
        let second = signed_exp(sign, ln_common - (a + nf).ln() + f_last.ln());
        Ok(Tracked {
            value: first.value + second.value,
            error: first.error + second.error,
        })
    })?;
    let b_term = signed_exp(
        1.0,
        (a + 1.0) * ln_bt + ln_beta(a, 2.0)? + extra_t + kummer_1f1(a, a + 2.0, -bt, policy)?.ln(),
    );
    let mid_value = a * lower + merged.value - b_term.value;
    let mid_error = a * lower * TERM_REL_ERROR
        + merged.error
        + b_term.error
        + (a * lower + merged.value.abs() + b_term.value.abs()) * f64::EPSILON;
    let pref_b = r / ((b + r * a) * ln_gamma_a.exp());

    let value = outer.value + pref_b * mid_value + upper_reg;
    let error = outer.error + pref_b * mid_error + upper_reg * TERM_REL_ERROR;
    if !value.is_finite() {
        return Err(Error::Convergence {
            op: "aoi series",
            terms: policy.max_terms,
        });
    }
    if error > CANCELLATION_BUDGET {
        return Err(Error::Cancellation {
            op: "aoi series",
            estimate: error,
        });
    }
    let slack = 1e-9 + error;
    if value < -slack || value > 1.0 + slack {
        return Err(Error::OutOfRange {
            op: "aoi series",
            value,
        });
    }
    Ok(value.clamp(0.0, 1.0))
}

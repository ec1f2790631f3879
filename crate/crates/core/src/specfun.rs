//! Scalar special functions used by the uplink and AoI closed forms.
//!
//! Everything here is a pure function of its arguments. Series and continued
//! fractions terminate according to an [`EvalPolicy`] and report failure
//! instead of returning non-finite values.

use crate::error::{Error, Result};
use crate::latency::GammaParams;
use std::f64::consts::{FRAC_PI_2, PI};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Termination policy for series and continued-fraction evaluators.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalPolicy {
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_terms: 500,
        }
    }
}

impl EvalPolicy {
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        let policy = Self { rel_tol, max_terms };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-3) {
            return Err(Error::Config(format!(
                "rel_tol must lie in (0, 1e-3), got {}",
                self.rel_tol
            )));
        }
        if self.max_terms < 50 {
            return Err(Error::Config(format!(
                "max_terms must be at least 50, got {}",
                self.max_terms
            )));
        }
        Ok(())
    }
}

/// Neumaier-compensated accumulator that also tracks the absolute mass of
/// everything added, which bounds the rounding error of the final sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs_mass: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs_mass += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Sum of the magnitudes of every term added so far.
    pub fn abs_mass(&self) -> f64 {
        self.abs_mass
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the Gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma function for positive arguments.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

fn check_incgamma_args(op: &'static str, a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(
            op,
            format!("shape must be positive, got {a}"),
        ));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(
            op,
            format!("argument must be nonnegative, got {x}"),
        ));
    }
    Ok(())
}

/// Sum of x^n / (a (a+1) ... (a+n)); γ(a,x) = x^a e^{-x} times this.
fn incgamma_series(a: f64, x: f64, policy: &EvalPolicy) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = CompensatedSum::new();
    sum.add(term);
    for n in 1..=policy.max_terms {
        term *= x / (a + n as f64);
        sum.add(term);
        if term.abs() <= policy.rel_tol * 1e-3 * sum.value().abs() {
            return Ok(sum.value());
        }
    }
    Err(Error::Convergence {
        op: "incomplete gamma series",
        terms: policy.max_terms,
    })
}

/// Continued fraction for Γ(a,x) / (x^a e^{-x}), modified Lentz.
fn incgamma_cf(a: f64, x: f64, policy: &EvalPolicy) -> Result<f64> {
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=policy.max_terms {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= policy.rel_tol * 1e-3 {
            return Ok(h);
        }
    }
    Err(Error::Convergence {
        op: "incomplete gamma continued fraction",
        terms: policy.max_terms,
    })
}

/// Both regularized incomplete gammas (P, Q) with the series / continued
/// fraction split at x = a + 1.
fn regularized_pair(a: f64, x: f64, policy: &EvalPolicy) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let p = log_prefix.exp() * incgamma_series(a, x, policy)?;
        Ok((p, 1.0 - p))
    } else {
        let q = log_prefix.exp() * incgamma_cf(a, x, policy)?;
        Ok((1.0 - q, q))
    }
}

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a).
pub fn regularized_lower_gamma(a: f64, x: f64, policy: &EvalPolicy) -> Result<f64> {
    check_incgamma_args("regularized_lower_gamma", a, x)?;
    Ok(regularized_pair(a, x, policy)?.0)
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
pub fn regularized_upper_gamma(a: f64, x: f64, policy: &EvalPolicy) -> Result<f64> {
    check_incgamma_args("regularized_upper_gamma", a, x)?;
    Ok(regularized_pair(a, x, policy)?.1)
}

/// Lower incomplete gamma γ(a, x) = ∫₀ˣ t^{a−1} e^{−t} dt.
pub fn lower_incomplete_gamma(a: f64, x: f64, policy: &EvalPolicy) -> Result<f64> {
    check_incgamma_args("lower_incomplete_gamma", a, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(gamma(a));
    }
    if x < a + 1.0 {
        Ok((a * x.ln() - x).exp() * incgamma_series(a, x, policy)?)
    } else {
        let upper = (a * x.ln() - x).exp() * incgamma_cf(a, x, policy)?;
        Ok(gamma(a) - upper)
    }
}

/// Upper incomplete gamma Γ(a, x) = ∫ₓ^∞ t^{a−1} e^{−t} dt.
pub fn upper_incomplete_gamma(a: f64, x: f64, policy: &EvalPolicy) -> Result<f64> {
    check_incgamma_args("upper_incomplete_gamma", a, x)?;
    if x == 0.0 {
        return Ok(gamma(a));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        let lower = (a * x.ln() - x).exp() * incgamma_series(a, x, policy)?;
        Ok(gamma(a) - lower)
    } else {
        Ok((a * x.ln() - x).exp() * incgamma_cf(a, x, policy)?)
    }
}

fn is_nonpositive_integer(b: f64) -> bool {
    b <= 0.0 && b == b.round()
}

/// Direct Maclaurin series of ₁F₁(a; b; z). Only called with z ≥ 0 by the
/// public entry point.
fn kummer_series(a: f64, b: f64, z: f64, policy: &EvalPolicy) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = CompensatedSum::new();
    sum.add(term);
    let mut small_run = 0;
    for n in 0..policy.max_terms {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * z / (nf + 1.0);
        if term == 0.0 {
            // a is a nonpositive integer: the series is a polynomial
            return finite("kummer_1f1", sum.value(), n + 1);
        }
        sum.add(term);
        let ratio = ((a + nf + 1.0) / (b + nf + 1.0) * z / (nf + 2.0)).abs();
        if term.abs() <= policy.rel_tol * sum.value().abs() && ratio < 1.0 {
            small_run += 1;
            if small_run >= 2 {
                return finite("kummer_1f1", sum.value(), n + 1);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::Convergence {
        op: "kummer_1f1",
        terms: policy.max_terms,
    })
}

fn finite(op: &'static str, value: f64, terms: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Convergence { op, terms })
    }
}

/// Confluent hypergeometric function ₁F₁(a; b; z).
///
/// Negative arguments are mapped through the Kummer transformation
/// ₁F₁(a; b; z) = e^z ₁F₁(b − a; b; −z) before summing, so the series that is
/// actually evaluated never alternates because of z.
pub fn kummer_1f1(a: f64, b: f64, z: f64, policy: &EvalPolicy) -> Result<f64> {
    if is_nonpositive_integer(b) {
        return Err(Error::domain(
            "kummer_1f1",
            format!("b must not be a nonpositive integer, got {b}"),
        ));
    }
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(Error::domain("kummer_1f1", "arguments must be finite"));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z < 0.0 {
        let s = kummer_series(b - a, b, -z, policy)?;
        finite("kummer_1f1", z.exp() * s, 0)
    } else {
        kummer_series(a, b, z, policy)
    }
}

/// ln ₁F₁(a; b; z) for a, b > 0 and z ≥ 0, where every series term is
/// positive. The sum is rescaled as it grows, so arguments far beyond the
/// overflow point of e^z are fine. The term budget is raised to cover the
/// peak of the terms near n ≈ z.
pub fn ln_kummer_1f1(a: f64, b: f64, z: f64, policy: &EvalPolicy) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && z >= 0.0 && a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(Error::domain(
            "ln_kummer_1f1",
            format!("need a, b > 0 and finite z ≥ 0, got ({a}, {b}, {z})"),
        ));
    }
    const RESCALE: f64 = 1e200;
    let max_terms = policy.max_terms.max((z + 40.0 * z.sqrt() + 100.0) as usize);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut offset = 0.0;
    for n in 0..max_terms {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * z / (nf + 1.0);
        sum += term;
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            offset += RESCALE.ln();
        }
        let ratio = (a + nf + 1.0) / (b + nf + 1.0) * z / (nf + 2.0);
        if term <= policy.rel_tol * 1e-3 * sum && ratio < 1.0 || term == 0.0 {
            return Ok(offset + sum.ln());
        }
    }
    Err(Error::Convergence {
        op: "ln_kummer_1f1",
        terms: max_terms,
    })
}

/// Beta function B(a, b) = Γ(a)Γ(b)/Γ(a+b).
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    Ok(ln_beta(a, b)?.exp())
}

pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(
            "beta_fn",
            format!("arguments must be positive, got ({a}, {b})"),
        ));
    }
    Ok(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

/// Digamma ψ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "digamma",
            format!("x must be positive, got {x}"),
        ));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let tail = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - tail)
}

/// Trigamma ψ'(x) for x > 0; used by the Newton step of the Gamma MLE.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "trigamma",
            format!("x must be positive, got {x}"),
        ));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let tail = 1.0 / x
        + r / 2.0
        + r / x
            * (1.0 / 6.0
                - r * (1.0 / 30.0
                    - r * (1.0 / 42.0
                        - r * (1.0 / 30.0
                            - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0))))));
    Ok(acc + tail)
}

const SICI_SERIES_MAX: f64 = 2.0;

/// Sine and cosine integrals (Si(x), Ci(x)) for x > 0.
fn sici_positive(x: f64) -> Result<(f64, f64)> {
    if x <= SICI_SERIES_MAX {
        let x2 = x * x;
        // Si: Σ (−1)^k x^{2k+1} / ((2k+1)(2k+1)!)
        let mut si = CompensatedSum::new();
        let mut ci = CompensatedSum::new();
        let mut fact_term = x; // x^{2k+1}/(2k+1)!
        si.add(fact_term);
        let mut even_term = 1.0; // x^{2k}/(2k)!
        for k in 1..60 {
            let kf = k as f64;
            even_term *= -x2 / ((2.0 * kf - 1.0) * (2.0 * kf));
            ci.add(even_term / (2.0 * kf));
            fact_term *= -x2 / ((2.0 * kf) * (2.0 * kf + 1.0));
            si.add(fact_term / (2.0 * kf + 1.0));
            if fact_term.abs() < 1e-18 && even_term.abs() < 1e-18 {
                break;
            }
        }
        return Ok((si.value(), EULER_GAMMA + x.ln() + ci.value()));
    }
    // Continued fraction for E1(ix), modified Lentz in complex arithmetic.
    let tiny = 1e-300;
    let mut b = (1.0, x);
    let mut c = (1.0 / tiny, 0.0);
    let mut d = cdiv((1.0, 0.0), b);
    let mut h = d;
    let mut converged = false;
    for i in 2..=100_000 {
        let a = -((i - 1) as f64).powi(2);
        b = (b.0 + 2.0, b.1);
        d = cdiv((1.0, 0.0), (a * d.0 + b.0, a * d.1 + b.1));
        let ac = cdiv((a, 0.0), c);
        c = (b.0 + ac.0, b.1 + ac.1);
        let del = cmul(c, d);
        h = cmul(h, del);
        if (del.0 - 1.0).abs() + del.1.abs() < 1e-16 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            op: "sine/cosine integral continued fraction",
            terms: 100_000,
        });
    }
    let h = cmul((x.cos(), -x.sin()), h);
    Ok((FRAC_PI_2 + h.1, -h.0))
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let den = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / den, (a.1 * b.0 - a.0 * b.1) / den)
}

/// Sine integral Si(x) = ∫₀ˣ sin t / t dt, odd in x.
pub fn sine_integral(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("sine_integral", "NaN argument"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(FRAC_PI_2.copysign(x));
    }
    let (si, _) = sici_positive(x.abs())?;
    Ok(si.copysign(x))
}

/// Cosine integral Ci(x) = C + ln x + ∫₀ˣ (cos t − 1)/t dt for x > 0.
pub fn cosine_integral(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(
            "cosine_integral",
            format!("x must be positive, got {x}"),
        ));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(sici_positive(x)?.1)
}

/// Gamma density with shape α and rate β.
pub fn gamma_pdf(x: f64, p: &GammaParams) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(
            "gamma_pdf",
            format!("x must be nonnegative, got {x}"),
        ));
    }
    let (a, b) = (p.shape(), p.rate());
    if x == 0.0 {
        return Ok(if a == 1.0 {
            b
        } else if a > 1.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    Ok((a * b.ln() - ln_gamma(a) + (a - 1.0) * x.ln() - b * x).exp())
}

/// Gamma cumulative distribution function.
pub fn gamma_cdf(x: f64, p: &GammaParams) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    regularized_lower_gamma(p.shape(), p.rate() * x, &EvalPolicy::default())
}

//! Stochastic-geometry uplink model.
//!
//! Base stations and co-channel interferers are homogeneous Poisson point
//! processes of density λ, links see unit-mean Rayleigh fading, and the
//! source attaches to its nearest base station. For pathloss exponent 4 the
//! target rate that meets a success probability ζ at distance r has a closed
//! form through the composite constant m, and its average over the Rayleigh
//! distance law gives the mean rate R̄ and the transmission latency Y = D/R̄.

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_infinity, QuadOptions};
use crate::rng::substream;
use crate::specfun::{cosine_integral, sine_integral, EULER_GAMMA};
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

/// Uplink physical parameters, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Transmit power P, watts.
    pub tx_power: f64,
    /// Noise power spectral density N0, W/Hz; noise power is N0·W.
    pub noise_psd: f64,
    /// Channel bandwidth W, Hz.
    pub bandwidth: f64,
    /// Packet size D, bits.
    pub packet_bits: f64,
    /// Base-station (and interferer) density λ, per m².
    pub bs_density: f64,
    /// Source density λ_s, per m².
    pub source_density: f64,
    pub pathloss_exponent: f64,
    /// Target successful transmission probability ζ.
    pub target_stp: f64,
    /// Packet generation rate ρ_s at the monitored source, per second.
    pub gen_rate: f64,
}

impl Default for NetworkConfig {
    /// P = 1 W, N0 = −100 dBm/Hz, W = 1 MHz, D = 500 kb, λ = 10⁻⁴ m⁻²,
    /// ρ_s = 15 /s, n = 4, ζ = 0.6.
    fn default() -> Self {
        Self {
            tx_power: 1.0,
            noise_psd: 1e-13,
            bandwidth: 1e6,
            packet_bits: 5e5,
            bs_density: 1e-4,
            source_density: 1e-4,
            pathloss_exponent: 4.0,
            target_stp: 0.6,
            gen_rate: 15.0,
        }
    }
}

impl NetworkConfig {
    pub fn with_target_stp(mut self, zeta: f64) -> Self {
        self.target_stp = zeta;
        self
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }

    /// Checks the positivity invariants shared by every operation.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power", self.tx_power),
            ("noise_psd", self.noise_psd),
            ("bandwidth", self.bandwidth),
            ("packet_bits", self.packet_bits),
            ("bs_density", self.bs_density),
            ("source_density", self.source_density),
            ("gen_rate", self.gen_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.pathloss_exponent > 2.0) {
            return Err(Error::Config(format!(
                "pathloss exponent must exceed 2, got {}",
                self.pathloss_exponent
            )));
        }
        Ok(())
    }

    fn check_closed_form(&self, op: &'static str) -> Result<()> {
        self.validate()?;
        if self.pathloss_exponent != 4.0 {
            return Err(Error::domain(
                op,
                format!(
                    "closed forms need pathloss exponent 4, got {}",
                    self.pathloss_exponent
                ),
            ));
        }
        if !(self.target_stp > 0.0 && self.target_stp < 1.0) {
            return Err(Error::domain(
                op,
                format!("target STP must lie in (0, 1), got {}", self.target_stp),
            ));
        }
        Ok(())
    }
}

/// SINR threshold θ = 2^{rate/W} − 1.
pub fn sinr_threshold(rate: f64, bandwidth: f64) -> f64 {
    (rate / bandwidth * LN_2).exp_m1()
}

/// Success probability of a link of length r at the given rate.
///
/// Uses the general Laplace-functional form, which for n = 4 reduces to
/// exp(−r⁴N0Wθ/P) · exp(−λπ²r²√θ/2).
pub fn stp_at_distance(r: f64, rate: f64, cfg: &NetworkConfig) -> Result<f64> {
    cfg.validate()?;
    if !(r > 0.0) {
        return Err(Error::domain(
            "stp_at_distance",
            format!("r must be positive, got {r}"),
        ));
    }
    if !(rate >= 0.0) {
        return Err(Error::domain(
            "stp_at_distance",
            format!("rate must be nonnegative, got {rate}"),
        ));
    }
    let n = cfg.pathloss_exponent;
    let theta = sinr_threshold(rate, cfg.bandwidth);
    let noise = r.powf(n) / cfg.tx_power * cfg.noise_power() * theta;
    let shape = 2.0 / (n * (2.0 * PI / n).sin());
    let interference = cfg.bs_density * PI * PI * shape * r * r * theta.powf(2.0 / n);
    Ok((-noise - interference).exp())
}

/// Composite constant m (m²) such that θ(r) = (m/r²)² meets ζ exactly.
///
/// m is the positive root of (N0W/P)m² + (λπ²/2)m + ln ζ = 0, evaluated in
/// rationalized form so the interference-limited regime keeps full precision.
pub fn composite_m(cfg: &NetworkConfig) -> Result<f64> {
    cfg.check_closed_form("composite_m")?;
    let lam_pi2 = cfg.bs_density * PI * PI;
    let ln_zeta = cfg.target_stp.ln();
    let disc = lam_pi2 * lam_pi2 - 16.0 * cfg.noise_power() * ln_zeta / cfg.tx_power;
    Ok(-4.0 * ln_zeta / (lam_pi2 + disc.sqrt()))
}

/// Largest rate whose success probability at distance r equals ζ.
pub fn target_rate_at_distance(r: f64, cfg: &NetworkConfig) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(
            "target_rate_at_distance",
            format!("r must be positive, got {r}"),
        ));
    }
    let m = composite_m(cfg)?;
    let q = m / (r * r);
    Ok(cfg.bandwidth * log2_one_plus_sq(q))
}

/// log₂(1 + q²) without overflow for huge q.
fn log2_one_plus_sq(q: f64) -> f64 {
    if q > 1.0 {
        2.0 * q.log2() + (1.0 / (q * q)).ln_1p() / LN_2
    } else {
        (q * q).ln_1p() / LN_2
    }
}

const RATE_QUAD_TOL: f64 = 1e-9;

/// Mean target rate R̄ = E[R̄(r)] over the Rayleigh nearest-BS distance, by
/// adaptive quadrature in s = λπr² split at s = λπm.
pub fn mean_target_rate(cfg: &NetworkConfig) -> Result<f64> {
    let m = composite_m(cfg)?;
    let x = m * cfg.bs_density * PI;
    let integrand = |s: f64| log2_one_plus_sq(x / s) * (-s).exp();
    let opts = QuadOptions::relative(RATE_QUAD_TOL * 0.1);
    let head = integrate(integrand, 0.0, x, opts)?;
    let tail = integrate_to_infinity(integrand, x, opts)?;
    let value = cfg.bandwidth * (head.value + tail.value);
    let err = cfg.bandwidth * (head.abs_error + tail.abs_error);
    if err > RATE_QUAD_TOL * value.abs() {
        return Err(Error::Convergence {
            op: "mean_target_rate",
            terms: head.evaluations + tail.evaluations,
        });
    }
    Ok(value)
}

/// Candidate readings of the Ci/Si closed form for R̄.
///
/// The printed expression is W/ln2 · {ln m − Ci(x)cos x − Si(x)sin x + C + ln λπ}
/// with x = mλπ. Table integrals for ∫ln(t² + m²)e^{−μt}dt carry an overall
/// factor 2 and use si(x) = Si(x) − π/2; each combination is a variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ClosedFormVariant {
    pub doubled: bool,
    pub shifted_si: bool,
}

impl ClosedFormVariant {
    pub const VERBATIM: Self = Self {
        doubled: false,
        shifted_si: false,
    };

    pub const ALL: [Self; 4] = [
        Self::VERBATIM,
        Self {
            doubled: false,
            shifted_si: true,
        },
        Self {
            doubled: true,
            shifted_si: false,
        },
        Self {
            doubled: true,
            shifted_si: true,
        },
    ];

    pub fn label(&self) -> &'static str {
        match (self.doubled, self.shifted_si) {
            (false, false) => "verbatim",
            (false, true) => "si-shifted",
            (true, false) => "doubled",
            (true, true) => "doubled+si-shifted",
        }
    }
}

pub fn mean_rate_closed_form(cfg: &NetworkConfig, variant: ClosedFormVariant) -> Result<f64> {
    let m = composite_m(cfg)?;
    let lam_pi = cfg.bs_density * PI;
    let x = m * lam_pi;
    let si = sine_integral(x)? - if variant.shifted_si { FRAC_PI_2 } else { 0.0 };
    let ci = cosine_integral(x)?;
    let braces = m.ln() - ci * x.cos() - si * x.sin() + EULER_GAMMA + lam_pi.ln();
    let scale = if variant.doubled { 2.0 } else { 1.0 };
    Ok(scale * cfg.bandwidth / LN_2 * braces)
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantDeviation {
    pub variant: ClosedFormVariant,
    pub label: &'static str,
    /// max over ζ of |closed − quadrature| / quadrature
    pub max_rel_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Adjudication {
    pub zetas: Vec<f64>,
    pub deviations: Vec<VariantDeviation>,
    /// The unique variant within tolerance, if exactly one is.
    pub selected: Option<ClosedFormVariant>,
    pub tolerance: f64,
}

impl Adjudication {
    pub fn deviation_of(&self, v: ClosedFormVariant) -> f64 {
        self.deviations
            .iter()
            .find(|d| d.variant == v)
            .map(|d| d.max_rel_deviation)
            .unwrap_or(f64::NAN)
    }

    pub fn matching(&self) -> Vec<ClosedFormVariant> {
        self.deviations
            .iter()
            .filter(|d| d.max_rel_deviation <= self.tolerance)
            .map(|d| d.variant)
            .collect()
    }
}

/// Compares every closed-form variant with the quadrature R̄ over `zetas`.
pub fn adjudicate_closed_form(
    cfg: &NetworkConfig,
    zetas: &[f64],
    tolerance: f64,
) -> Result<Adjudication> {
    let mut worst = [0.0_f64; 4];
    for &z in zetas {
        let c = cfg.with_target_stp(z);
        let reference = mean_target_rate(&c)?;
        for (i, v) in ClosedFormVariant::ALL.iter().enumerate() {
            let closed = mean_rate_closed_form(&c, *v)?;
            let dev = ((closed - reference) / reference).abs();
            worst[i] = worst[i].max(if dev.is_nan() { f64::INFINITY } else { dev });
        }
    }
    let deviations: Vec<_> = ClosedFormVariant::ALL
        .iter()
        .zip(worst)
        .map(|(v, d)| VariantDeviation {
            variant: *v,
            label: v.label(),
            max_rel_deviation: d,
        })
        .collect();
    let ok: Vec<_> = deviations
        .iter()
        .filter(|d| d.max_rel_deviation <= tolerance)
        .collect();
    let selected = if ok.len() == 1 {
        Some(ok[0].variant)
    } else {
        None
    };
    Ok(Adjudication {
        zetas: zetas.to_vec(),
        deviations,
        selected,
        tolerance,
    })
}

/// Transmission latency Y = D / R̄ (quadrature R̄).
pub fn transmission_latency(cfg: &NetworkConfig) -> Result<f64> {
    Ok(cfg.packet_bits / mean_target_rate(cfg)?)
}

/// Uplink quantities derived from one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UplinkDerived {
    pub m: f64,
    pub mean_rate: f64,
    pub tx_latency: f64,
}

impl UplinkDerived {
    pub fn from_config(cfg: &NetworkConfig) -> Result<Self> {
        let m = composite_m(cfg)?;
        let mean_rate = mean_target_rate(cfg)?;
        Ok(Self {
            m,
            mean_rate,
            tx_latency: cfg.packet_bits / mean_rate,
        })
    }
}

/// How the per-packet success probability p_c behind ρ = ρ_s·p_c is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatingPoint {
    /// p_c := ζ
    #[default]
    TargetStp,
    /// p_c := success probability at the averaged rate R̄, averaged over distance.
    DistanceAveraged,
}

/// E_r[stp(r, rate)] over the Rayleigh nearest-BS distance.
pub fn averaged_stp_at_rate(cfg: &NetworkConfig, rate: f64) -> Result<f64> {
    cfg.validate()?;
    let lam_pi = cfg.bs_density * PI;
    // s = λπr², r = sqrt(s/λπ), density e^{-s}
    let f = |s: f64| {
        if s == 0.0 {
            return 1.0;
        }
        let r = (s / lam_pi).sqrt();
        stp_at_distance(r, rate, cfg).unwrap_or(f64::NAN) * (-s).exp()
    };
    Ok(integrate_to_infinity(f, 0.0, QuadOptions::relative(1e-10))?.value)
}

/// p_c for the chosen operating point.
pub fn success_probability(cfg: &NetworkConfig, point: OperatingPoint) -> Result<f64> {
    match point {
        OperatingPoint::TargetStp => {
            cfg.check_closed_form("success_probability")?;
            Ok(cfg.target_stp)
        }
        OperatingPoint::DistanceAveraged => {
            let rate = mean_target_rate(cfg)?;
            averaged_stp_at_rate(cfg, rate)
        }
    }
}

/// Monte Carlo estimate of a success probability with its 99% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StpEstimate {
    pub estimate: f64,
    pub half_width: f64,
    pub successes: u64,
    pub trials: u64,
    /// Radius of the simulated interferer disk, meters.
    pub disk_radius: f64,
}

impl StpEstimate {
    pub fn covers(&self, p: f64) -> bool {
        (self.estimate - p).abs() <= self.half_width
    }
}

const Z_99: f64 = 2.575_829_303_548_900_4;
const ORACLE_CHUNK: u64 = 10_000;
pub const MIN_ORACLE_TRIALS: u64 = 10_000;

/// Share of the noise power that the interference from outside the
/// simulated disk may contribute on average. At 0.1% the missing interference
/// shifts the estimate by under a third of the 99% half-width at 10⁶ trials.
pub const TRUNCATION_BUDGET: f64 = 1e-3;

/// Interferer-disk radius beyond which the mean interference is below
/// [`TRUNCATION_BUDGET`] of the noise power.
pub fn interference_radius(cfg: &NetworkConfig) -> f64 {
    let n = cfg.pathloss_exponent;
    let budget = cfg.noise_power() * TRUNCATION_BUDGET;
    (2.0 * PI * cfg.bs_density * cfg.tx_power / ((n - 2.0) * budget)).powf(1.0 / (n - 2.0))
}

/// Spatial simulation of the link at distance r: Rayleigh fading on every
/// link and an HPPP of interferers in a disk around the receiving base station.
pub fn spatial_stp_oracle(
    r: f64,
    rate: f64,
    cfg: &NetworkConfig,
    trials: u64,
    seed: u64,
) -> Result<StpEstimate> {
    cfg.validate()?;
    if !(r > 0.0) || !(rate >= 0.0) {
        return Err(Error::domain(
            "spatial_stp_oracle",
            format!("need r > 0 and rate ≥ 0, got r = {r}, rate = {rate}"),
        ));
    }
    if trials < MIN_ORACLE_TRIALS {
        return Err(Error::domain(
            "spatial_stp_oracle",
            format!("need at least {MIN_ORACLE_TRIALS} trials, got {trials}"),
        ));
    }
    let n = cfg.pathloss_exponent;
    let theta = sinr_threshold(rate, cfg.bandwidth);
    let radius = interference_radius(cfg);
    let r2_max = radius * radius;
    let lam_pi = cfg.bs_density * PI;
    let signal_scale = r.powf(-n);
    let noise = cfg.noise_power() / cfg.tx_power;
    // d^{-n} from d²; integer exponents avoid powf in the hot loop
    let half_n = n / 2.0;
    let int_exp = (half_n == half_n.round() && half_n <= 8.0).then_some(half_n as i32);
    let gain = |d2: f64| match int_exp {
        Some(k) => d2.powi(-k),
        None => d2.powf(-half_n),
    };

    let chunks = trials.div_ceil(ORACLE_CHUNK);
    let successes: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let count = ORACLE_CHUNK.min(trials - c * ORACLE_CHUNK);
            let mut ok = 0u64;
            for _ in 0..count {
                let h: f64 = Exp1.sample(&mut rng);
                if theta == 0.0 {
                    ok += 1;
                    continue;
                }
                // SINR ≥ θ iff the normalized interference stays below this
                let allowance = signal_scale * h / theta - noise;
                if allowance < 0.0 {
                    continue;
                }
                // Interferers nearest first: λπd_k² is a unit-rate Poisson
                // process, so a losing trial usually stops after a few points.
                let mut area = 0.0;
                let mut interference = 0.0;
                let mut lost = false;
                loop {
                    let e: f64 = Exp1.sample(&mut rng);
                    area += e;
                    let d2 = area / lam_pi;
                    if d2 > r2_max {
                        break;
                    }
                    let g: f64 = Exp1.sample(&mut rng);
                    interference += g * gain(d2);
                    if interference > allowance {
                        lost = true;
                        break;
                    }
                }
                if !lost {
                    ok += 1;
                }
            }
            ok
        })
        .sum();
    let p = successes as f64 / trials as f64;
    Ok(StpEstimate {
        estimate: p,
        half_width: Z_99 * (p * (1.0 - p) / trials as f64).sqrt(),
        successes,
        trials,
        disk_radius: radius,
    })
}

/// Monte Carlo mean of R̄(r) over Rayleigh-distributed r, with its standard error.
pub fn rayleigh_mean_rate_mc(cfg: &NetworkConfig, draws: u64, seed: u64) -> Result<(f64, f64)> {
    let m = composite_m(cfg)?;
    let lam_pi = cfg.bs_density * PI;
    let chunks = draws.div_ceil(ORACLE_CHUNK);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let count = ORACLE_CHUNK.min(draws - c * ORACLE_CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let e: f64 = Exp1.sample(&mut rng);
                // r² = E/(λπ) for E ~ Exp(1)
                let r2 = e / lam_pi;
                let v = cfg.bandwidth * log2_one_plus_sq(m / r2);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = draws as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

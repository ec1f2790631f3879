//! Monte Carlo estimates of P[AoI ≥ v].
//!
//! The renewal estimator draws the reduced chain (X_k, T_int,k) directly. The
//! physical estimator builds the packet path from scratch: Poisson
//! generations, independent transmission failures, MVCC rejection of packets
//! that arrive while an earlier update is still in consensus, and the exact
//! time-average of the age sawtooth. Agreement of the two checks that the
//! wait for the next effective packet really is exponential.

use super::{AoiModel, AoiQuery};
use crate::error::{Error, Result};
use crate::latency::GammaParams;
use crate::rng::{purpose, substream, StreamRng};
use crate::uplink::NetworkConfig;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use rayon::prelude::*;
use serde::Serialize;

pub const MIN_CYCLES: usize = 10_000;

/// Distribution of the consensus latency X. `Constant` exists so tests can
/// switch the consensus stage off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConsensusLaw {
    Gamma(GammaParams),
    Constant(f64),
}

impl From<GammaParams> for ConsensusLaw {
    fn from(p: GammaParams) -> Self {
        ConsensusLaw::Gamma(p)
    }
}

enum ConsensusSampler {
    Gamma(Gamma<f64>),
    Constant(f64),
}

impl ConsensusLaw {
    fn sampler(&self) -> Result<ConsensusSampler> {
        match *self {
            ConsensusLaw::Gamma(p) => Gamma::new(p.shape(), 1.0 / p.rate())
                .map(ConsensusSampler::Gamma)
                .map_err(|e| Error::domain("ConsensusLaw", e.to_string())),
            ConsensusLaw::Constant(x) if x >= 0.0 && x.is_finite() => {
                Ok(ConsensusSampler::Constant(x))
            }
            ConsensusLaw::Constant(x) => Err(Error::domain(
                "ConsensusLaw",
                format!("constant latency must be nonnegative, got {x}"),
            )),
        }
    }
}

impl ConsensusSampler {
    fn draw(&self, rng: &mut StreamRng) -> f64 {
        match self {
            ConsensusSampler::Gamma(g) => g.sample(rng),
            ConsensusSampler::Constant(x) => *x,
        }
    }
}

/// Time-integrated statistics of a simulated age path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePathSummary {
    pub violation_fraction: f64,
    /// Standard error of `violation_fraction` (batch means, delta method).
    pub std_error: f64,
    /// E[T_k], seconds.
    pub mean_cycle: f64,
    pub mean_cycle_se: f64,
    /// E[T_k^v], seconds.
    pub mean_excess: f64,
    /// Peak ages U_k − G_{k−1}, in path order.
    #[serde(skip)]
    pub paoi_samples: Vec<f64>,
    /// Effective packets (ledger updates) in the measured window.
    pub effective_count: u64,
    /// Received packets rejected because they arrived during consensus.
    /// The renewal chain does not model them and reports 0.
    pub invalid_count: u64,
}

/// Per-batch sums of excess, cycle time and cycle count.
#[derive(Debug, Clone, Copy, Default)]
struct Batch {
    excess: f64,
    time: f64,
    cycles: u64,
}

/// Ratio estimator Σnum/Σden with a batch-means delta-method standard error.
fn ratio_with_se(num: &[f64], den: &[f64]) -> (f64, f64) {
    let total_num: f64 = num.iter().sum();
    let total_den: f64 = den.iter().sum();
    let ratio = total_num / total_den;
    let b = num.len();
    if b < 2 {
        return (ratio, f64::NAN);
    }
    let mean_den = total_den / b as f64;
    let ss: f64 = num
        .iter()
        .zip(den)
        .map(|(n, d)| (n - ratio * d).powi(2))
        .sum();
    let se = (ss / (b as f64 * (b as f64 - 1.0))).sqrt() / mean_den;
    (ratio, se)
}

fn summarize(
    batches: &[Batch],
    totals: Batch,
    paoi_samples: Vec<f64>,
    invalid_count: u64,
) -> SamplePathSummary {
    let excess: Vec<f64> = batches.iter().map(|b| b.excess).collect();
    let time: Vec<f64> = batches.iter().map(|b| b.time).collect();
    let count: Vec<f64> = batches.iter().map(|b| b.cycles as f64).collect();
    let (_, std_error) = ratio_with_se(&excess, &time);
    let (_, mean_cycle_se) = ratio_with_se(&time, &count);
    let cycles = totals.cycles.max(1) as f64;
    SamplePathSummary {
        violation_fraction: (totals.excess / totals.time).clamp(0.0, 1.0),
        std_error,
        mean_cycle: totals.time / cycles,
        mean_cycle_se,
        mean_excess: totals.excess / cycles,
        paoi_samples,
        effective_count: totals.cycles,
        invalid_count,
    }
}

/// Work partition of the renewal estimator. Results depend on these and
/// the seed only, never on the thread count.
#[derive(Debug, Clone, Copy)]
pub struct RenewalOptions {
    pub streams: u64,
    pub warmup: usize,
    pub batches_per_stream: usize,
}

impl Default for RenewalOptions {
    fn default() -> Self {
        Self {
            streams: 16,
            warmup: 100,
            batches_per_stream: 32,
        }
    }
}

/// Renewal-chain Monte Carlo for a Gamma consensus model.
pub fn violation_probability_mc(
    model: &AoiModel,
    query: &AoiQuery,
    cycles: usize,
    seed: u64,
) -> Result<SamplePathSummary> {
    renewal_mc(
        model.consensus.into(),
        model.rate,
        model.tx_latency,
        query.target_aoi,
        cycles,
        seed,
        RenewalOptions::default(),
    )
}

/// Renewal-chain Monte Carlo:
/// T_k^v = min{(X_{k−1} + X_k + T_int,k + Y − v)⁺, X_k + T_int,k}.
pub fn renewal_mc(
    law: ConsensusLaw,
    rate: f64,
    tx_latency: f64,
    v: f64,
    cycles: usize,
    seed: u64,
    opts: RenewalOptions,
) -> Result<SamplePathSummary> {
    if cycles < MIN_CYCLES {
        return Err(Error::domain(
            "renewal_mc",
            format!("need at least {MIN_CYCLES} cycles, got {cycles}"),
        ));
    }
    if !(rate > 0.0) || !(tx_latency >= 0.0) || !(v > 0.0) {
        return Err(Error::domain(
            "renewal_mc",
            format!("need rate > 0, Y ≥ 0, v > 0; got {rate}, {tx_latency}, {v}"),
        ));
    }
    if opts.streams == 0 || opts.batches_per_stream == 0 {
        return Err(Error::domain(
            "renewal_mc",
            "streams and batches must be positive",
        ));
    }
    let sampler = law.sampler()?;
    let wait = Exp::new(rate).map_err(|e| Error::domain("renewal_mc", e.to_string()))?;
    let streams = opts.streams as usize;
    let base = cycles / streams;
    let extra = cycles % streams;

    let per_stream: Vec<(Vec<Batch>, Vec<f64>)> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let n = base + usize::from(s < extra);
            let mut rng = substream(seed, s as u64);
            let mut prev = sampler.draw(&mut rng);
            for _ in 0..opts.warmup {
                prev = sampler.draw(&mut rng);
                let _: f64 = wait.sample(&mut rng);
            }
            let batch_len = n.div_ceil(opts.batches_per_stream).max(1);
            let mut batches = Vec::with_capacity(opts.batches_per_stream);
            let mut cur = Batch::default();
            let mut paoi = Vec::with_capacity(n);
            for _ in 0..n {
                let x = sampler.draw(&mut rng);
                let t_int: f64 = wait.sample(&mut rng);
                let cycle = x + t_int;
                let excess = (prev + cycle + tx_latency - v).max(0.0).min(cycle);
                paoi.push(prev + tx_latency + cycle);
                cur.excess += excess;
                cur.time += cycle;
                cur.cycles += 1;
                if cur.cycles as usize == batch_len {
                    batches.push(cur);
                    cur = Batch::default();
                }
                prev = x;
            }
            if cur.cycles > 0 {
                batches.push(cur);
            }
            (batches, paoi)
        })
        .collect();

    let mut batches = Vec::new();
    let mut paoi = Vec::with_capacity(cycles);
    for (b, p) in per_stream {
        batches.extend(b);
        paoi.extend(p);
    }
    let totals = batches.iter().fold(Batch::default(), |acc, b| Batch {
        excess: acc.excess + b.excess,
        time: acc.time + b.time,
        cycles: acc.cycles + b.cycles,
    });
    Ok(summarize(&batches, totals, paoi, 0))
}

/// Inputs of the first-principles packet path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSetup {
    pub law: ConsensusLaw,
    /// Source generation rate ρ_s, per second.
    pub gen_rate: f64,
    /// Per-packet transmission success probability p_c.
    pub success_prob: f64,
    pub tx_latency: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PathOptions {
    /// Independent replicate paths, each over the full horizon.
    pub replicates: u64,
    /// Effective updates discarded at the start of each path.
    pub warmup_updates: usize,
    /// Minimum measured updates per path; fewer is a horizon-too-short error.
    pub min_updates: usize,
    /// Cycles per batch for the standard error.
    pub batch_len: usize,
}

impl Default for PathOptions {
    fn default() -> Self {
        Self {
            replicates: 1,
            warmup_updates: 100,
            min_updates: 1000,
            batch_len: 500,
        }
    }
}

/// Physical packet path for `model`, with p_c = ρ/ρ_s from the network's
/// generation rate.
pub fn physical_sample_path_mc(
    netcfg: &NetworkConfig,
    model: &AoiModel,
    query: &AoiQuery,
    horizon: f64,
    seed: u64,
) -> Result<SamplePathSummary> {
    let setup = PathSetup {
        law: model.consensus.into(),
        gen_rate: netcfg.gen_rate,
        success_prob: model.rate / netcfg.gen_rate,
        tx_latency: model.tx_latency,
    };
    physical_path_mc(
        setup,
        query.target_aoi,
        horizon,
        seed,
        PathOptions::default(),
    )
}

struct PathResult {
    batches: Vec<Batch>,
    totals: Batch,
    paoi: Vec<f64>,
    invalid: u64,
    updates: usize,
}

fn simulate_path(
    setup: &PathSetup,
    sampler: &ConsensusSampler,
    gen: &Exp<f64>,
    v: f64,
    horizon: f64,
    seed: u64,
    replicate: u64,
    opts: &PathOptions,
) -> PathResult {
    let stream = |p: u64| substream(seed, (replicate << 8) | p);
    let mut arrivals_rng = stream(purpose::ARRIVALS);
    let mut thinning_rng = stream(purpose::THINNING);
    let mut consensus_rng = stream(purpose::CONSENSUS);

    // The path starts with a virtual update generated and committed at 0.
    let mut last_gen = 0.0;
    let mut last_update = 0.0;
    let mut updates = 0usize;
    let mut window_start = 0.0;
    let mut measuring = opts.warmup_updates == 0;

    let mut batches = Vec::new();
    let mut cur = Batch::default();
    let mut totals = Batch::default();
    let mut paoi = Vec::new();
    let mut invalid = 0u64;

    // Violation time of the age t − g over [from, to).
    let excess = |g: f64, from: f64, to: f64| (to - (g + v).max(from)).max(0.0);

    let mut t = 0.0;
    loop {
        t += gen.sample(&mut arrivals_rng);
        let arrival = t + setup.tx_latency;
        if arrival >= horizon {
            break;
        }
        if thinning_rng.random::<f64>() >= setup.success_prob {
            continue;
        }
        if arrival < last_update {
            if measuring {
                invalid += 1;
            }
            continue;
        }
        let commit = arrival + sampler.draw(&mut consensus_rng);
        if commit > horizon {
            break;
        }
        if measuring {
            let e = excess(last_gen, last_update, commit);
            let len = commit - last_update;
            paoi.push(commit - last_gen);
            cur.excess += e;
            cur.time += len;
            cur.cycles += 1;
            totals.excess += e;
            totals.time += len;
            totals.cycles += 1;
            if cur.cycles as usize == opts.batch_len {
                batches.push(cur);
                cur = Batch::default();
            }
        }
        updates += 1;
        last_gen = t;
        last_update = commit;
        if !measuring && updates >= opts.warmup_updates {
            measuring = true;
            window_start = commit;
        }
    }
    // Trailing partial cycle; without any update this is the whole horizon.
    if !measuring {
        window_start = last_update;
    }
    if horizon > last_update {
        totals.excess += excess(last_gen, last_update, horizon);
        totals.time += horizon - last_update;
    }
    debug_assert!((totals.time - (horizon - window_start)).abs() <= 1e-6 * horizon);
    PathResult {
        batches,
        totals,
        paoi,
        invalid,
        updates: totals.cycles as usize,
    }
}

/// First-principles packet path, replicated `opts.replicates` times.
pub fn physical_path_mc(
    setup: PathSetup,
    v: f64,
    horizon: f64,
    seed: u64,
    opts: PathOptions,
) -> Result<SamplePathSummary> {
    if !(setup.gen_rate > 0.0) || !(setup.success_prob > 0.0 && setup.success_prob <= 1.0) {
        return Err(Error::domain(
            "physical_path_mc",
            format!(
                "need ρ_s > 0 and p_c in (0, 1], got {} and {}",
                setup.gen_rate, setup.success_prob
            ),
        ));
    }
    if !(setup.tx_latency >= 0.0) || !(v > 0.0) || !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(
            "physical_path_mc",
            format!(
                "need Y ≥ 0, v > 0 and a finite positive horizon, got {}, {v}, {horizon}",
                setup.tx_latency
            ),
        ));
    }
    if opts.replicates == 0 || opts.batch_len == 0 {
        return Err(Error::domain(
            "physical_path_mc",
            "replicates and batch_len must be positive",
        ));
    }
    let sampler = setup.law.sampler()?;
    let gen =
        Exp::new(setup.gen_rate).map_err(|e| Error::domain("physical_path_mc", e.to_string()))?;
    let results: Vec<PathResult> = (0..opts.replicates)
        .into_par_iter()
        .map(|r| simulate_path(&setup, &sampler, &gen, v, horizon, seed, r, &opts))
        .collect();

    if let Some(short) = results.iter().find(|r| r.updates < opts.min_updates) {
        return Err(Error::HorizonTooShort {
            updates: short.updates,
            needed: opts.min_updates,
        });
    }
    let mut batches = Vec::new();
    let mut totals = Batch::default();
    let mut paoi = Vec::new();
    let mut invalid = 0;
    for r in results {
        batches.extend(r.batches);
        totals.excess += r.totals.excess;
        totals.time += r.totals.time;
        totals.cycles += r.totals.cycles;
        paoi.extend(r.paoi);
        invalid += r.invalid;
    }
    Ok(summarize(&batches, totals, paoi, invalid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_at_latency_is_certain() {
        let p = GammaParams::new(5.94, 2.45).unwrap();
        let s = renewal_mc(
            p.into(),
            6.0,
            0.4,
            0.4,
            20_000,
            1,
            RenewalOptions::default(),
        )
        .unwrap();
        assert_eq!(s.violation_fraction, 1.0);
    }

    #[test]
    fn renewal_is_deterministic() {
        let p = GammaParams::new(5.94, 2.45).unwrap();
        let a = renewal_mc(
            p.into(),
            6.0,
            0.3,
            4.0,
            20_000,
            9,
            RenewalOptions::default(),
        )
        .unwrap();
        let b = renewal_mc(
            p.into(),
            6.0,
            0.3,
            4.0,
            20_000,
            9,
            RenewalOptions::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_updates_means_permanent_violation() {
        let setup = PathSetup {
            law: ConsensusLaw::Constant(0.0),
            gen_rate: 1e-9,
            success_prob: 1.0,
            tx_latency: 0.0,
        };
        let opts = PathOptions {
            min_updates: 0,
            ..PathOptions::default()
        };
        let s = physical_path_mc(setup, 1.0, 1e4, 3, opts).unwrap();
        assert!((s.violation_fraction - (1.0 - 1e-4)).abs() < 1e-12);
        assert!(physical_path_mc(setup, 1.0, 1e4, 3, PathOptions::default()).is_err());
    }
}

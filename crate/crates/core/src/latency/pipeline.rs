//! Event-driven model of the three-phase transaction flow.
//!
//! Transactions arrive as a Poisson stream, snapshot the committed version of
//! their key at submission, finish endorsing after a random delay, are cut
//! into blocks by size or timeout, pass a fixed ordering overhead, and are
//! validated block by block on a single FIFO validator. Validation applies the
//! MVCC rule sequentially inside each block.

use crate::error::{Error, Result};
use crate::rng::{purpose, substream, StreamRng};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};
use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

/// Latency law for one pipeline phase, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatencyDist {
    Constant { value: f64 },
    Exponential { mean: f64 },
    Gamma { shape: f64, rate: f64 },
}

impl LatencyDist {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match *self {
            LatencyDist::Constant { value } => value >= 0.0 && value.is_finite(),
            LatencyDist::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            LatencyDist::Gamma { shape, rate } => {
                shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{name}: invalid latency distribution {self:?}"
            )))
        }
    }

    fn sample(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            LatencyDist::Constant { value } => value,
            LatencyDist::Exponential { mean } => {
                let e: f64 = Exp1.sample(rng);
                e * mean
            }
            LatencyDist::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated parameters")
                .sample(rng),
        }
    }

    /// Essential infimum of the law.
    pub fn min(&self) -> f64 {
        match *self {
            LatencyDist::Constant { value } => value,
            _ => 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            LatencyDist::Constant { value } => value,
            LatencyDist::Exponential { mean } => mean,
            LatencyDist::Gamma { shape, rate } => shape / rate,
        }
    }
}

/// Parameters of the simulated consensus pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub endorse_latency: LatencyDist,
    /// Fixed per-block ordering time, seconds.
    pub order_overhead: f64,
    pub validate_latency: LatencyDist,
    /// Maximum transactions per block.
    pub block_size: usize,
    /// Seconds between the first transaction entering an empty block and the forced cut.
    pub block_timeout: f64,
    pub key_count: usize,
    /// Probability that a transaction addresses key 0, the monitored key.
    pub target_key_fraction: f64,
    /// Aggregate transaction arrival rate, per second.
    pub tx_rate: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            endorse_latency: LatencyDist::Gamma {
                shape: 1.5,
                rate: 1.5,
            },
            order_overhead: 0.2,
            validate_latency: LatencyDist::Gamma {
                shape: 1.5,
                rate: 3.0,
            },
            block_size: 10,
            block_timeout: 1.0,
            key_count: 10,
            target_key_fraction: 0.3,
            tx_rate: 2.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.endorse_latency.validate("endorse_latency")?;
        self.validate_latency.validate("validate_latency")?;
        if !(self.order_overhead >= 0.0 && self.order_overhead.is_finite()) {
            return Err(Error::Config(format!(
                "order_overhead must be nonnegative, got {}",
                self.order_overhead
            )));
        }
        if self.block_size == 0 {
            return Err(Error::Config("block_size must be at least 1".into()));
        }
        if !(self.block_timeout > 0.0 && self.block_timeout.is_finite()) {
            return Err(Error::Config(format!(
                "block_timeout must be positive, got {}",
                self.block_timeout
            )));
        }
        if self.key_count == 0 {
            return Err(Error::Config("key_count must be at least 1".into()));
        }
        if !(self.target_key_fraction > 0.0 && self.target_key_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "target_key_fraction must lie in (0, 1], got {}",
                self.target_key_fraction
            )));
        }
        if !(self.tx_rate > 0.0 && self.tx_rate.is_finite()) {
            return Err(Error::Config(format!(
                "tx_rate must be positive, got {}",
                self.tx_rate
            )));
        }
        Ok(())
    }

    /// Smallest consensus latency any transaction can experience.
    pub fn latency_floor(&self) -> f64 {
        self.endorse_latency.min() + self.order_overhead + self.validate_latency.min()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    MvccInvalid,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Valid => "valid",
            Verdict::MvccInvalid => "mvcc_invalid",
        })
    }
}

impl std::str::FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valid" => Ok(Verdict::Valid),
            "mvcc_invalid" => Ok(Verdict::MvccInvalid),
            other => Err(Error::Parse(format!("unknown verdict {other:?}"))),
        }
    }
}

/// Life cycle of one transaction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TxRecord {
    pub tx_id: u64,
    pub key: u32,
    pub submit_time: f64,
    pub endorse_done: f64,
    pub block_id: u64,
    pub commit_time: f64,
    pub read_version: u64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutReason {
    Size,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRecord {
    pub id: u64,
    pub opened_at: f64,
    pub cut_at: f64,
    pub reason: CutReason,
    pub validated_at: f64,
    pub tx_ids: Vec<u64>,
}

/// Output of [`run_pipeline`]. `records` are in commit order.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub records: Vec<TxRecord>,
    pub blocks: Vec<BlockRecord>,
    /// Committed version of each key when the run drained.
    pub versions: Vec<u64>,
    pub arrivals: usize,
}

impl PipelineRun {
    pub fn invalid_fraction(&self, key: u32) -> f64 {
        let (mut total, mut bad) = (0usize, 0usize);
        for r in self.records.iter().filter(|r| r.key == key) {
            total += 1;
            if r.verdict == Verdict::MvccInvalid {
                bad += 1;
            }
        }
        if total == 0 {
            0.0
        } else {
            bad as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    /// Poisson arrival, or a scripted one with a fixed key.
    Arrival(Option<u32>),
    Endorsed(usize),
    Timeout(u64),
    Ordered(u64),
    Validated(u64),
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    time: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

struct PendingTx {
    key: u32,
    submit: f64,
    endorse_done: f64,
    read_version: u64,
}

struct OpenBlock {
    id: u64,
    opened_at: f64,
    txs: Vec<usize>,
}

struct Sim<'a> {
    cfg: &'a PipelineConfig,
    duration: f64,
    queue: BinaryHeap<Reverse<Scheduled>>,
    seq: u64,
    arrivals_rng: StreamRng,
    keys_rng: StreamRng,
    endorse_rng: StreamRng,
    validate_rng: StreamRng,
    txs: Vec<PendingTx>,
    open: Option<OpenBlock>,
    blocks: Vec<BlockRecord>,
    block_txs: Vec<Vec<usize>>,
    to_validate: VecDeque<u64>,
    validator_busy: bool,
    versions: Vec<u64>,
    records: Vec<TxRecord>,
}

impl Sim<'_> {
    fn schedule(&mut self, time: f64, event: Event) {
        self.seq += 1;
        self.queue.push(Reverse(Scheduled {
            time,
            seq: self.seq,
            event,
        }));
    }

    fn next_arrival(&mut self, now: f64) {
        let e: f64 = Exp1.sample(&mut self.arrivals_rng);
        let t = now + e / self.cfg.tx_rate;
        if t <= self.duration {
            self.schedule(t, Event::Arrival(None));
        }
    }

    fn draw_key(&mut self) -> u32 {
        let u: f64 = self.keys_rng.random();
        if self.cfg.key_count == 1 || u < self.cfg.target_key_fraction {
            0
        } else {
            self.keys_rng.random_range(1..self.cfg.key_count) as u32
        }
    }

    fn arrive(&mut self, now: f64, scripted: Option<u32>) {
        let key = match scripted {
            Some(k) => k,
            None => self.draw_key(),
        };
        let endorse = self.cfg.endorse_latency.sample(&mut self.endorse_rng);
        let idx = self.txs.len();
        self.txs.push(PendingTx {
            key,
            submit: now,
            endorse_done: now + endorse,
            read_version: self.versions[key as usize],
        });
        self.schedule(now + endorse, Event::Endorsed(idx));
        if scripted.is_none() {
            self.next_arrival(now);
        }
    }

    fn endorsed(&mut self, now: f64, idx: usize) {
        if self.open.is_none() {
            let id = self.blocks.len() as u64;
            self.open = Some(OpenBlock {
                id,
                opened_at: now,
                txs: Vec::with_capacity(self.cfg.block_size),
            });
            self.schedule(now + self.cfg.block_timeout, Event::Timeout(id));
        }
        let block = self.open.as_mut().expect("block opened above");
        block.txs.push(idx);
        if block.txs.len() >= self.cfg.block_size {
            self.cut(now, CutReason::Size);
        }
    }

    fn cut(&mut self, now: f64, reason: CutReason) {
        let block = self.open.take().expect("cut requires an open block");
        debug_assert_eq!(block.id as usize, self.blocks.len());
        self.blocks.push(BlockRecord {
            id: block.id,
            opened_at: block.opened_at,
            cut_at: now,
            reason,
            validated_at: f64::NAN,
            tx_ids: block.txs.iter().map(|&i| i as u64).collect(),
        });
        self.block_txs.push(block.txs);
        self.schedule(now + self.cfg.order_overhead, Event::Ordered(block.id));
    }

    fn timeout(&mut self, now: f64, id: u64) {
        if self.open.as_ref().is_some_and(|b| b.id == id) {
            self.cut(now, CutReason::Timeout);
        }
    }

    fn ordered(&mut self, now: f64, id: u64) {
        self.to_validate.push_back(id);
        if !self.validator_busy {
            self.start_validation(now);
        }
    }

    fn start_validation(&mut self, now: f64) {
        if let Some(id) = self.to_validate.pop_front() {
            let w = self.cfg.validate_latency.sample(&mut self.validate_rng);
            self.validator_busy = true;
            self.schedule(now + w, Event::Validated(id));
        }
    }

    fn validated(&mut self, now: f64, id: u64) {
        let members = std::mem::take(&mut self.block_txs[id as usize]);
        for idx in members {
            let tx = &self.txs[idx];
            let current = &mut self.versions[tx.key as usize];
            let verdict = if tx.read_version == *current {
                *current += 1;
                Verdict::Valid
            } else {
                Verdict::MvccInvalid
            };
            self.records.push(TxRecord {
                tx_id: idx as u64,
                key: tx.key,
                submit_time: tx.submit,
                endorse_done: tx.endorse_done,
                block_id: id,
                commit_time: now,
                read_version: tx.read_version,
                verdict,
            });
        }
        self.blocks[id as usize].validated_at = now;
        self.validator_busy = false;
        self.start_validation(now);
    }
}

fn new_sim(cfg: &PipelineConfig, duration: f64, seed: u64) -> Sim<'_> {
    Sim {
        cfg,
        duration,
        queue: BinaryHeap::new(),
        seq: 0,
        arrivals_rng: substream(seed, purpose::ARRIVALS),
        keys_rng: substream(seed, purpose::KEYS),
        endorse_rng: substream(seed, purpose::ENDORSE),
        validate_rng: substream(seed, purpose::VALIDATE),
        txs: Vec::new(),
        open: None,
        blocks: Vec::new(),
        block_txs: Vec::new(),
        to_validate: VecDeque::new(),
        validator_busy: false,
        versions: vec![0; cfg.key_count],
        records: Vec::new(),
    }
}

fn drain(mut sim: Sim<'_>) -> PipelineRun {
    while let Some(Reverse(ev)) = sim.queue.pop() {
        match ev.event {
            Event::Arrival(key) => sim.arrive(ev.time, key),
            Event::Endorsed(i) => sim.endorsed(ev.time, i),
            Event::Timeout(id) => sim.timeout(ev.time, id),
            Event::Ordered(id) => sim.ordered(ev.time, id),
            Event::Validated(id) => sim.validated(ev.time, id),
        }
    }
    PipelineRun {
        arrivals: sim.txs.len(),
        records: sim.records,
        blocks: sim.blocks,
        versions: sim.versions,
    }
}

/// Simulates transactions arriving during [0, duration] and drains the
/// pipeline until every one of them has been validated.
pub fn run_pipeline(cfg: &PipelineConfig, duration: f64, seed: u64) -> Result<PipelineRun> {
    cfg.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Config(format!(
            "duration must be positive, got {duration}"
        )));
    }
    let mut sim = new_sim(cfg, duration, seed);
    sim.next_arrival(0.0);
    Ok(drain(sim))
}

/// Like [`run_pipeline`] but with a fixed list of (submit time, key)
/// arrivals instead of the Poisson stream; `tx_rate` and the key mix are
/// ignored. Phase latencies are still drawn from `seed`.
pub fn run_pipeline_scripted(
    cfg: &PipelineConfig,
    arrivals: &[(f64, u32)],
    seed: u64,
) -> Result<PipelineRun> {
    cfg.validate()?;
    let mut sim = new_sim(cfg, f64::INFINITY, seed);
    for &(t, key) in arrivals {
        if !(t >= 0.0 && t.is_finite()) || key as usize >= cfg.key_count {
            return Err(Error::Config(format!(
                "scripted arrival ({t}, key {key}) is out of range"
            )));
        }
        sim.schedule(t, Event::Arrival(Some(key)));
    }
    Ok(drain(sim))
}

/// Commit − submit for every valid transaction on `key`, in commit order.
pub fn consensus_latency_samples(records: &[TxRecord], key: u32) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.key == key && r.verdict == Verdict::Valid)
        .map(|r| r.commit_time - r.submit_time)
        .collect()
}

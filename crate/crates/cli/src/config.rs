//! Run configuration: a TOML file with unit-suffixed fields, converted to SI
//! on load.

use crate::error::CliError;
use crate::units::{parse_quantity, Dimension};
use hemn::latency::{GammaParams, LatencyDist, PipelineConfig};
use hemn::specfun::EvalPolicy;
use hemn::uplink::{NetworkConfig, OperatingPoint};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// The shipped default configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Grids and sample sizes for `analyze` and `sweep`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSpec {
    pub zeta_grid: Vec<f64>,
    pub v_grid: Vec<f64>,
    /// Target AoI of the sweep, seconds.
    pub target_aoi: f64,
    pub mc_cycles: usize,
    pub operating_point: OperatingPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Where the configuration came from, for error messages.
    pub source: String,
    pub network: NetworkConfig,
    pub pipeline: Option<PipelineConfig>,
    /// ζ → consensus latency law.
    pub fits: Option<Vec<(f64, GammaParams)>>,
    /// Master seed; per-point seeds are derived from it.
    pub seed: u64,
    pub output: OutputSpec,
    pub eval: EvalPolicy,
    pub analysis: AnalysisSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    network: RawNetwork,
    pipeline: Option<RawPipeline>,
    fits: Option<BTreeMap<String, [f64; 2]>>,
    #[serde(default)]
    output: RawOutput,
    eval: Option<RawEval>,
    analysis: RawAnalysis,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    tx_power: String,
    noise_psd: String,
    bandwidth: String,
    packet_size: String,
    bs_density: String,
    source_density: String,
    pathloss_exponent: f64,
    target_stp: f64,
    gen_rate: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPipeline {
    endorse_latency: LatencyDist,
    order_overhead: String,
    validate_latency: LatencyDist,
    block_size: usize,
    block_timeout: String,
    key_count: usize,
    target_key_fraction: f64,
    tx_rate: String,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
    #[serde(default)]
    format: Format,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEval {
    rel_tol: Option<f64>,
    max_terms: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    zeta_grid: Vec<f64>,
    v_grid: String,
    target_aoi: String,
    mc_cycles: usize,
    #[serde(default)]
    operating_point: OperatingPoint,
}

/// Error context: the config source and the dotted key.
struct Ctx<'a>(&'a str);

impl Ctx<'_> {
    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::config(format!("{}: {key}: {msg}", self.0))
    }

    fn quantity(&self, key: &str, text: &str, dim: Dimension) -> Result<f64, CliError> {
        parse_quantity(text, dim).map_err(|m| self.err(key, m))
    }
}

/// Parses `start:stop:step` (stop inclusive), a comma list, or an empty string.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let t = text.trim();
    if t.is_empty() {
        return Ok(Vec::new());
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("{s:?} is not a number"))
            .and_then(|x| {
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(format!("{s:?} is not finite"))
                }
            })
    };
    if t.contains(':') {
        let parts: Vec<&str> = t.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid {t:?} must be start:stop:step"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) {
            return Err(format!("grid step must be positive, got {step}"));
        }
        if stop < start {
            return Ok(Vec::new());
        }
        // a hair of slack so that 0.1-style steps still reach `stop`
        let count = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
        Ok((0..count).map(|i| start + i as f64 * step).collect())
    } else {
        t.split(',').map(num).collect()
    }
}

impl RunConfig {
    /// The built-in default configuration.
    pub fn default_config() -> Self {
        Self::from_toml(DEFAULT_CONFIG, "<default config>").expect("shipped config is valid")
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn from_toml(text: &str, source: &str) -> Result<Self, CliError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CliError::config(format!("{source}: {e}")))?;
        let ctx = Ctx(source);

        let n = &raw.network;
        let network = NetworkConfig {
            tx_power: ctx.quantity("network.tx_power", &n.tx_power, Dimension::Power)?,
            noise_psd: ctx.quantity(
                "network.noise_psd",
                &n.noise_psd,
                Dimension::SpectralDensity,
            )?,
            bandwidth: ctx.quantity("network.bandwidth", &n.bandwidth, Dimension::Frequency)?,
            packet_bits: ctx.quantity("network.packet_size", &n.packet_size, Dimension::Data)?,
            bs_density: ctx.quantity(
                "network.bs_density",
                &n.bs_density,
                Dimension::AreaDensity,
            )?,
            source_density: ctx.quantity(
                "network.source_density",
                &n.source_density,
                Dimension::AreaDensity,
            )?,
            pathloss_exponent: n.pathloss_exponent,
            target_stp: n.target_stp,
            gen_rate: ctx.quantity("network.gen_rate", &n.gen_rate, Dimension::Rate)?,
        };
        network.validate().map_err(|e| ctx.err("network", e))?;
        if !(network.target_stp > 0.0 && network.target_stp < 1.0) {
            return Err(ctx.err("network.target_stp", "must lie in (0, 1)"));
        }

        let pipeline = match &raw.pipeline {
            None => None,
            Some(p) => {
                let cfg = PipelineConfig {
                    endorse_latency: p.endorse_latency,
                    order_overhead: ctx.quantity(
                        "pipeline.order_overhead",
                        &p.order_overhead,
                        Dimension::Time,
                    )?,
                    validate_latency: p.validate_latency,
                    block_size: p.block_size,
                    block_timeout: ctx.quantity(
                        "pipeline.block_timeout",
                        &p.block_timeout,
                        Dimension::Time,
                    )?,
                    key_count: p.key_count,
                    target_key_fraction: p.target_key_fraction,
                    tx_rate: ctx.quantity("pipeline.tx_rate", &p.tx_rate, Dimension::Rate)?,
                };
                cfg.validate().map_err(|e| ctx.err("pipeline", e))?;
                Some(cfg)
            }
        };

        let fits = match &raw.fits {
            None => None,
            Some(table) => {
                let mut fits = Vec::with_capacity(table.len());
                for (key, [shape, rate]) in table {
                    let path = format!("fits.{key:?}");
                    let zeta: f64 = key
                        .parse()
                        .map_err(|_| ctx.err(&path, "key must be a ζ value"))?;
                    let p = GammaParams::new(*shape, *rate).map_err(|e| ctx.err(&path, e))?;
                    fits.push((zeta, p));
                }
                fits.sort_by(|a, b| a.0.total_cmp(&b.0));
                Some(fits)
            }
        };

        let defaults = EvalPolicy::default();
        let eval = match &raw.eval {
            None => defaults,
            Some(e) => EvalPolicy::new(
                e.rel_tol.unwrap_or(defaults.rel_tol),
                e.max_terms.unwrap_or(defaults.max_terms),
            )
            .map_err(|e| ctx.err("eval", e))?,
        };

        let a = &raw.analysis;
        let v_grid = parse_grid(&a.v_grid).map_err(|m| ctx.err("analysis.v_grid", m))?;
        if v_grid.iter().any(|&v| !(v > 0.0)) {
            return Err(ctx.err("analysis.v_grid", "target AoI values must be positive"));
        }
        let target_aoi = ctx.quantity("analysis.target_aoi", &a.target_aoi, Dimension::Time)?;
        if !(target_aoi > 0.0) {
            return Err(ctx.err("analysis.target_aoi", "must be positive"));
        }
        let analysis = AnalysisSpec {
            zeta_grid: a.zeta_grid.clone(),
            v_grid,
            target_aoi,
            mc_cycles: a.mc_cycles,
            operating_point: a.operating_point,
        };

        Ok(RunConfig {
            source: source.to_string(),
            network,
            pipeline,
            fits,
            seed: raw.seed,
            output: OutputSpec {
                path: raw.output.path,
                format: raw.output.format,
            },
            eval,
            analysis,
        })
    }
}

//! The four workflows. Each returns a plot-ready table; `main` handles I/O.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Table};
use hemn::aoi::{
    sweep_target_stp, violation_probability, violation_probability_mc, AoiModel, AoiQuery,
    SweepResult, MIN_CYCLES,
};
use hemn::latency::{
    consensus_latency_samples, fit_gamma_mle, io, ks_critical_1pct, ks_distance, run_pipeline,
    GammaFit, GammaParams,
};
use hemn::uplink::{success_probability, transmission_latency};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Where the consensus latency law comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum FitSource {
    /// The `[fits]` table of the config.
    Config,
    /// One Gamma fitted to a latency file, used for every ζ.
    Samples(PathBuf),
    /// One Gamma fitted to a fresh pipeline run of this many seconds.
    Pipeline(f64),
}

/// Per-point seed derived from the master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    master.wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

const ZETA_MATCH: f64 = 1e-9;

fn core(ctx: &str) -> impl Fn(hemn::Error) -> CliError + '_ {
    move |e| CliError::from_core(ctx, e)
}

/// Consensus fits for `grid` from exactly one source.
pub fn resolve_fits(
    cfg: &RunConfig,
    source: &FitSource,
    grid: &[f64],
    seed: u64,
) -> Result<Vec<(f64, GammaParams)>, CliError> {
    let single = match source {
        FitSource::Config => {
            return cfg.fits.clone().ok_or_else(|| {
                CliError::config(format!(
                    "{}: fits: no [fits] table; pass --samples or --simulate-for",
                    cfg.source
                ))
            })
        }
        FitSource::Samples(path) => fit_file(path, 0)?.0.params,
        FitSource::Pipeline(duration) => {
            let pipe = pipeline(cfg)?;
            let run = run_pipeline(pipe, *duration, seed).map_err(core("pipeline"))?;
            fit_gamma_mle(&consensus_latency_samples(&run.records, 0))
                .map_err(core("pipeline fit"))?
                .params
        }
    };
    Ok(grid.iter().map(|&z| (z, single)).collect())
}

fn pipeline(cfg: &RunConfig) -> Result<&hemn::latency::PipelineConfig, CliError> {
    cfg.pipeline
        .as_ref()
        .ok_or_else(|| CliError::config(format!("{}: pipeline: no [pipeline] section", cfg.source)))
}

fn fit_for(fits: &[(f64, GammaParams)], zeta: f64, source: &str) -> Result<GammaParams, CliError> {
    fits.iter()
        .find(|(z, _)| (z - zeta).abs() <= ZETA_MATCH)
        .map(|(_, p)| *p)
        .ok_or_else(|| CliError::config(format!("{source}: fits: no consensus fit for ζ = {zeta}")))
}

pub const ANALYZE_COLUMNS: [&str; 16] = [
    "zeta",
    "v",
    "tx_latency",
    "consensus_budget",
    "arrival_rate",
    "shape",
    "rate_param",
    "series",
    "quadrature",
    "probability",
    "method",
    "fallback",
    "mc",
    "mc_se",
    "mc_seed",
    "v_at_or_below_tx",
];

/// P[AoI ≥ v] on the ζ × v grid by series, quadrature and renewal Monte Carlo.
pub fn analyze(
    cfg: &RunConfig,
    fits: &[(f64, GammaParams)],
    zeta_grid: &[f64],
    v_grid: &[f64],
    seed: u64,
) -> Result<Table, CliError> {
    let mut table = Table::new(ANALYZE_COLUMNS.to_vec());
    let cycles = cfg.analysis.mc_cycles;
    if cycles != 0 && cycles < MIN_CYCLES {
        return Err(CliError::config(format!(
            "{}: analysis.mc_cycles: need 0 or at least {MIN_CYCLES}",
            cfg.source
        )));
    }
    let mut index = 0u64;
    for &zeta in zeta_grid {
        let fit = fit_for(fits, zeta, &cfg.source)?;
        let net = cfg.network.with_target_stp(zeta);
        let ctx = format!("ζ = {zeta}");
        let y = transmission_latency(&net).map_err(core(&ctx))?;
        let rate = net.gen_rate
            * success_probability(&net, cfg.analysis.operating_point).map_err(core(&ctx))?;
        let model = AoiModel::new(fit, rate, y).map_err(core(&ctx))?;
        for &v in v_grid {
            let ctx = format!("ζ = {zeta}, v = {v}");
            let query = AoiQuery::new(v).map_err(core(&ctx))?;
            let eval = violation_probability(&model, &query, &cfg.eval).map_err(core(&ctx))?;
            let point_seed = derive_seed(seed, index);
            index += 1;
            let (mc, se) = if cycles == 0 {
                (None, None)
            } else {
                let s = violation_probability_mc(&model, &query, cycles, point_seed)
                    .map_err(core(&ctx))?;
                (Some(s.violation_fraction), Some(s.std_error))
            };
            table.push(vec![
                zeta.into(),
                v.into(),
                y.into(),
                query.consensus_budget(&model).into(),
                rate.into(),
                fit.shape().into(),
                fit.rate().into(),
                eval.series.into(),
                eval.quadrature.into(),
                eval.probability.into(),
                method_name(eval.method).into(),
                eval.fallback.as_deref().map_or(Cell::Empty, Cell::from),
                mc.into(),
                se.into(),
                point_seed.into(),
                (v <= y).into(),
            ]);
        }
    }
    Ok(table)
}

fn method_name(m: hemn::aoi::Method) -> &'static str {
    match m {
        hemn::aoi::Method::Series => "series",
        hemn::aoi::Method::Quadrature => "quadrature",
    }
}

pub const FIT_COLUMNS: [&str; 8] = [
    "samples",
    "shape",
    "rate_param",
    "mean",
    "thom_shape",
    "iterations",
    "ks_distance",
    "ks_critical_1pct",
];

fn fit_row(fit: &GammaFit, ks: f64) -> Vec<Cell> {
    vec![
        fit.samples.into(),
        fit.params.shape().into(),
        fit.params.rate().into(),
        fit.params.mean().into(),
        fit.thom_shape.into(),
        fit.iterations.into(),
        ks.into(),
        ks_critical_1pct(fit.samples).into(),
    ]
}

fn fit_samples(xs: &[f64], ctx: &str) -> Result<(GammaFit, f64), CliError> {
    let fit = fit_gamma_mle(xs).map_err(core(ctx))?;
    let ks = ks_distance(xs, &fit.params).map_err(core(ctx))?;
    Ok((fit, ks))
}

fn fit_file(path: &Path, key: u32) -> Result<(GammaFit, f64), CliError> {
    let file =
        std::fs::File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let ctx = path.display().to_string();
    let parsed = io::read_latency_file(std::io::BufReader::new(file)).map_err(core(&ctx))?;
    fit_samples(&parsed.latencies(key), &ctx)
}

/// Gamma MLE of a latency file.
pub fn fit(path: &Path, key: u32) -> Result<Table, CliError> {
    let (fit, ks) = fit_file(path, key)?;
    let mut table = Table::new(FIT_COLUMNS.to_vec());
    table.push(fit_row(&fit, ks));
    Ok(table)
}

/// Runs the pipeline, writes its transaction log to `records`, and fits the
/// valid latencies of key 0.
pub fn simulate<W: Write>(
    cfg: &RunConfig,
    duration: f64,
    seed: u64,
    records: W,
) -> Result<Table, CliError> {
    let pipe = pipeline(cfg)?;
    let run = run_pipeline(pipe, duration, seed).map_err(core("pipeline"))?;
    io::write_records(&run.records, records).map_err(|e| CliError::io(e.to_string()))?;
    let xs = consensus_latency_samples(&run.records, 0);
    let (fit, ks) = fit_samples(&xs, "pipeline fit")?;
    let mut columns = vec!["duration", "seed", "arrivals", "invalid_fraction"];
    columns.extend(FIT_COLUMNS);
    let mut table = Table::new(columns);
    let mut row: Vec<Cell> = vec![
        duration.into(),
        seed.into(),
        run.arrivals.into(),
        run.invalid_fraction(0).into(),
    ];
    row.extend(fit_row(&fit, ks));
    table.push(row);
    Ok(table)
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "zeta",
    "tx_latency",
    "arrival_rate",
    "shape",
    "rate_param",
    "probability",
    "method",
    "is_argmin",
];

/// Violation probability across ζ at a fixed target AoI.
pub fn sweep(
    cfg: &RunConfig,
    fits: &[(f64, GammaParams)],
    zeta_grid: &[f64],
    v: f64,
) -> Result<(Table, SweepResult), CliError> {
    let result = sweep_target_stp(
        &cfg.network,
        fits,
        v,
        zeta_grid,
        cfg.analysis.operating_point,
        &cfg.eval,
    )
    .map_err(|e| CliError::from_core(&format!("{}: sweep", cfg.source), e))?;
    let mut table = Table::new(SWEEP_COLUMNS.to_vec());
    for (i, p) in result.points.iter().enumerate() {
        table.push(vec![
            p.zeta.into(),
            p.tx_latency.into(),
            p.rate.into(),
            p.shape.into(),
            p.rate_param.into(),
            p.probability.into(),
            method_name(p.method).into(),
            (i == result.argmin).into(),
        ]);
    }
    Ok((table, result))
}

/// One-line summary of a sweep for stderr.
pub fn sweep_summary(r: &SweepResult) -> String {
    let shape = if r.is_monotone() {
        "monotone"
    } else {
        "non-monotone"
    };
    let place = if r.interior_minimum() {
        "interior"
    } else {
        "boundary"
    };
    let mut s = format!(
        "v = {}: zeta_star = {} ({place} minimum, {shape} curve)",
        r.target_aoi,
        r.argmin_zeta()
    );
    if r.degenerate {
        s.push_str("; warning: all probabilities equal");
    } else if r.low_contrast {
        s.push_str("; warning: low contrast, probability spread below 1e-3");
    }
    s
}

use clap::{Args, Parser, Subcommand};
use hemn_cli::commands::{self, FitSource};
use hemn_cli::config::{parse_grid, Format, RunConfig};
use hemn_cli::output::Table;
use hemn_cli::CliError;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hemn",
    version,
    about = "AoI violation analysis for blockchain-backed monitoring networks"
)]
struct Cli {
    /// TOML configuration; the shipped default is used when absent
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Result table destination; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FitArgs {
    /// Fit one Gamma to this latency file and use it for every ζ
    #[arg(long, conflicts_with = "simulate_for")]
    samples: Option<PathBuf>,
    /// Fit one Gamma to a pipeline run of this many seconds
    #[arg(long)]
    simulate_for: Option<f64>,
}

impl FitArgs {
    fn source(&self) -> FitSource {
        match (&self.samples, self.simulate_for) {
            (Some(p), _) => FitSource::Samples(p.clone()),
            (None, Some(d)) => FitSource::Pipeline(d),
            (None, None) => FitSource::Config,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Violation probability over a ζ × v grid by series, quadrature and Monte Carlo
    Analyze {
        #[arg(long)]
        seed: Option<u64>,
        /// start:stop:step or a comma list, seconds
        #[arg(long)]
        v_grid: Option<String>,
        #[arg(long)]
        zeta_grid: Option<String>,
        #[command(flatten)]
        fits: FitArgs,
    },
    /// Run the consensus pipeline, write its transaction log and fit the latencies
    Simulate {
        /// Simulated seconds
        #[arg(long)]
        duration: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Transaction log CSV
        #[arg(long)]
        records: PathBuf,
    },
    /// Gamma maximum-likelihood fit of a latency file
    Fit {
        samples: PathBuf,
        /// Key whose valid transactions are used (four-column files)
        #[arg(long, default_value_t = 0)]
        key: u32,
    },
    /// Violation probability across ζ at one target AoI
    Sweep {
        /// Target AoI, seconds
        #[arg(long)]
        v: Option<f64>,
        #[arg(long)]
        zeta_grid: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        fits: FitArgs,
    },
}

fn grid_arg(flag: &str, text: Option<&String>, default: &[f64]) -> Result<Vec<f64>, CliError> {
    match text {
        None => Ok(default.to_vec()),
        Some(t) => parse_grid(t).map_err(|m| CliError::config(format!("--{flag}: {m}"))),
    }
}

fn master_seed(cfg: &RunConfig, flag: Option<u64>) -> u64 {
    let seed = flag.unwrap_or(cfg.seed);
    eprintln!("master seed = {seed}");
    seed
}

fn emit(table: &Table, cfg: &RunConfig, cli: &Cli) -> Result<(), CliError> {
    let format = cli.format.unwrap_or(cfg.output.format);
    match cli.out.as_ref().or(cfg.output.path.as_ref()) {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            table.write(format, &mut w)?;
            w.flush()
                .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
        }
        None => table.write(format, std::io::stdout().lock()),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_config(),
    };
    match &cli.command {
        Command::Analyze {
            seed,
            v_grid,
            zeta_grid,
            fits,
        } => {
            let seed = master_seed(&cfg, *seed);
            let zetas = grid_arg("zeta-grid", zeta_grid.as_ref(), &cfg.analysis.zeta_grid)?;
            let vs = grid_arg("v-grid", v_grid.as_ref(), &cfg.analysis.v_grid)?;
            let fits = commands::resolve_fits(&cfg, &fits.source(), &zetas, seed)?;
            emit(
                &commands::analyze(&cfg, &fits, &zetas, &vs, seed)?,
                &cfg,
                cli,
            )
        }
        Command::Simulate {
            duration,
            seed,
            records,
        } => {
            let seed = master_seed(&cfg, *seed);
            let file = File::create(records)
                .map_err(|e| CliError::io(format!("{}: {e}", records.display())))?;
            let table = commands::simulate(&cfg, *duration, seed, BufWriter::new(file))?;
            emit(&table, &cfg, cli)
        }
        Command::Fit { samples, key } => emit(&commands::fit(samples, *key)?, &cfg, cli),
        Command::Sweep {
            v,
            zeta_grid,
            seed,
            fits,
        } => {
            let zetas = grid_arg("zeta-grid", zeta_grid.as_ref(), &cfg.analysis.zeta_grid)?;
            let source = fits.source();
            let seed = if source == FitSource::Config {
                seed.unwrap_or(cfg.seed)
            } else {
                master_seed(&cfg, *seed)
            };
            let fits = commands::resolve_fits(&cfg, &source, &zetas, seed)?;
            let (table, result) =
                commands::sweep(&cfg, &fits, &zetas, v.unwrap_or(cfg.analysis.target_aoi))?;
            emit(&table, &cfg, cli)?;
            eprintln!("{}", commands::sweep_summary(&result));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

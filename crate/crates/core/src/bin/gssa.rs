use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gssa::experiment::{self, ExperimentConfig, Method, SeriesConfig};
use gssa::par::Execution;

/// Rolling-origin SSA, bootstrap SSA and GSSA forecast comparison.
#[derive(Debug, Parser)]
#[command(name = "gssa", version)]
struct Cli {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra CSV series (name taken from the file stem).
    #[arg(long, num_args = 1..)]
    series: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    smoothing_factor: Option<f64>,
    /// Comma-separated horizons, e.g. 1,3,6,12.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    /// Comma-separated methods: ssa, boot, gssa.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Skip break detection and split by the configured in-sample fraction.
    #[arg(long)]
    no_breaks: bool,
    /// Bootstrap replications per origin.
    #[arg(long)]
    replications: Option<usize>,
    /// Run without the thread pool.
    #[arg(long)]
    sequential: bool,
}

fn build_config(cli: &Cli) -> gssa::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    for path in &cli.series {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        cfg.series.push(SeriesConfig {
            path: Some(path.clone()),
            ..SeriesConfig::named(&name)
        });
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(sf) = cli.smoothing_factor {
        cfg.smoothing_factor = sf;
    }
    if let Some(h) = &cli.horizons {
        cfg.horizons = h.clone();
    }
    if let Some(ms) = &cli.methods {
        cfg.methods = ms.iter().map(|m| m.parse::<Method>()).collect::<gssa::Result<_>>()?;
    }
    if cli.no_breaks {
        cfg.detect_breaks = false;
    }
    if let Some(b) = cli.replications {
        cfg.bootstrap_replications = b;
    }
    if cli.sequential {
        cfg.execution = Execution::Sequential;
    }
    cfg.validate_files()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (report, manifest) = match experiment::run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = experiment::emit_report(&report, &manifest, &cli.out) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    for f in &report.failures {
        eprintln!("series {} failed: {}", f.series, f.error);
    }
    log::info!("wrote results to {}", cli.out.display());
    ExitCode::from(manifest.exit_code() as u8)
}

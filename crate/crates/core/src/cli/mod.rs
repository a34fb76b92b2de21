//! Command-line front end: reads a JSON config, runs it, writes CSV, JSON and SVG.

pub mod config;
pub mod plot;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{Axis, AxisName, Mode, Output, ResonanceRange, RunConfig, Tolerances};
pub use run::{run, EnhancedRow, Failure, Outcome, Summary, TunnelingRow};

#[derive(Debug, Parser)]
#[command(name = "tunnel-lab", version, about = "Tunneling exponents under nonstationary fields")]
pub struct Args {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads for sweep points.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory; TUNNEL_LAB_OUT takes precedence.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub verbose: bool,
}

/// Output directory: the environment, then the flag, then the config, then `out`.
pub fn output_dir(args: &Args, cfg: &RunConfig) -> PathBuf {
    std::env::var_os("TUNNEL_LAB_OUT")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| args.out.clone())
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs the command line and returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let level = if args.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    let cfg = match std::fs::read_to_string(&args.config) {
        Ok(text) => RunConfig::from_json(&text),
        Err(e) => Err(crate::Error::Invalid(format!("cannot read {}: {e}", args.config.display()))),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return 1;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return 1;
        }
    };
    let out = output_dir(&args, &cfg);
    match pool.install(|| run(&cfg, &out)) {
        Ok(outcome) => {
            if let Some(f) = &outcome.summary.failure {
                eprintln!("{}: {}", f.error, f.message);
            }
            for f in &outcome.files {
                log::info!("wrote {}", f.display());
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("config error: {e}");
            1
        }
    }
}

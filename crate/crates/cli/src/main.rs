use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lossy_tr::config::ExperimentConfig;
use lossy_tr::{
    filter_traces, generate_data, init_threads, metrics_text, reconstruct_all, run_experiment,
    save_data, save_images, CliError, StageExt, TraceOp, THREADS_ENV,
};
use lossy_tr_core::forward::{attenuate_data, BoundaryData};
use lossy_tr_core::reconstruct::{image_metrics, Algorithm, ImageField};

#[derive(Parser)]
#[command(
    name = "lossy-tr",
    version,
    about = "Time-reversal source reconstruction in loss-less and Debye-lossy media",
    after_help = format!("Set {THREADS_ENV} to fix the number of worker threads.\nExit codes: 0 ok, 1 domain error, 2 configuration error.")
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate, attenuate, reconstruct and score as the config describes
    Run {
        config: PathBuf,
        /// override output.dir
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// use n = 512 and m = 8192
        #[arg(long)]
        paper_scale: bool,
    },
    /// Write the ground truth and the boundary data (clean and, for lossy media, attenuated)
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        paper_scale: bool,
    },
    /// Attenuate loss-less boundary data with loss parameter `a`
    Attenuate {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        a: f64,
    },
    /// Apply a trace operator to every sensor trace
    Filter {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, value_enum)]
        op: TraceOp,
        /// loss parameter; defaults to the one recorded in the data
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long)]
        rho: Option<f64>,
    },
    /// Reconstruct from stored boundary data using the config's grid and parameters
    Reconstruct {
        config: PathBuf,
        /// data file; defaults to the measured data in the output directory
        #[arg(long)]
        data: Option<PathBuf>,
        /// ideal, adjoint or preprocess; defaults to the config's algorithm
        #[arg(long)]
        alg: Option<String>,
        /// adjoint cutoffs; default to the config's
        #[arg(long)]
        rho: Vec<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        paper_scale: bool,
    },
    /// Score a reconstruction against a ground truth (both image files)
    Metrics {
        truth: PathBuf,
        image: PathBuf,
        /// also write the key = value lines to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Path, paper_scale: bool) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if paper_scale {
        cfg.paper_scale();
        cfg.validate()?;
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig, over: Option<PathBuf>) -> PathBuf {
    over.unwrap_or_else(|| cfg.output.dir.clone())
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, out_dir: over, paper_scale } => {
            let cfg = load_config(&config, paper_scale)?;
            let dir = out_dir(&cfg, over);
            let report = run_experiment(&cfg, &dir)?;
            print!("{}", metrics_text(&report.metrics));
            eprintln!("artifacts written to {}", report.dir.display());
        }
        Command::Simulate { config, out_dir: over, paper_scale } => {
            let cfg = load_config(&config, paper_scale)?;
            let dir = out_dir(&cfg, over);
            let gen = generate_data(&cfg)?;
            save_data(&cfg, &gen, &dir)?;
            eprintln!("data written to {}", dir.display());
        }
        Command::Attenuate { input, output, a } => {
            let data = BoundaryData::load(&input).stage("input")?;
            let m = data.medium.with_loss(a);
            attenuate_data(&data, &m).stage("attenuate")?.save(&output).stage("output")?;
        }
        Command::Filter { input, output, op, a, k, rho } => {
            let data = BoundaryData::load(&input).stage("input")?;
            let m = data.medium.with_loss(a.unwrap_or(data.loss));
            filter_traces(&data, op, &m, k, rho)?.save(&output).stage("output")?;
        }
        Command::Reconstruct { config, data, alg, rho, out_dir: over, paper_scale } => {
            let cfg = load_config(&config, paper_scale)?;
            let dir = out_dir(&cfg, over);
            let algorithm = match alg {
                Some(name) => name.parse::<Algorithm>().map_err(CliError::Config)?,
                None => cfg.algorithm(),
            };
            let rhos = if rho.is_empty() { cfg.params.rho.clone() } else { rho };
            let path = data.unwrap_or_else(|| {
                let lossy = dir.join("data_lossy.bin");
                if lossy.exists() { lossy } else { dir.join("data.bin") }
            });
            let data = BoundaryData::load(&path).stage("input")?;
            let images = reconstruct_all(&cfg, algorithm, &rhos, &data)?;
            save_images(&cfg, &images, &dir)?;
            for (label, _) in &images {
                println!("{}", dir.join(format!("image_{label}.bin")).display());
            }
        }
        Command::Metrics { truth, image, out } => {
            let truth = ImageField::load(&truth).stage("input")?;
            let image = ImageField::load(&image).stage("input")?;
            let text = image_metrics(&image, &truth.field).stage("metrics")?.to_text();
            print!("{text}");
            if let Some(out) = out {
                std::fs::write(out, text).stage("output")?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| execute(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

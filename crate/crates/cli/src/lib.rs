//! Experiment runner behind the `lossy-tr` binary.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lossy_tr_core::attenuation::{apply_l_star_rho, apply_p_rho, check_growth_guard, Trace};
use lossy_tr_core::forward::{attenuate_data, simulate, BoundaryData, VectorField2};
use lossy_tr_core::medium::MediumParams;
use lossy_tr_core::reconstruct::{
    backpropagate_adjoint, backpropagate_ideal, backpropagate_uncorrected, filter_data,
    image_metrics, preprocess_time_reversal, Algorithm, ImageField, MetricsRecord,
};
use lossy_tr_core::source::render;
use lossy_tr_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

pub use config::ExperimentConfig;

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "LOSSY_TR_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage { .. } => 1,
        }
    }
}

pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for lossy_tr_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|source| {
            if source.is_config() {
                CliError::Config(source)
            } else {
                CliError::Stage { stage, source }
            }
        })
    }
}

impl<T> StageExt<T> for std::io::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Stage {
            stage,
            source: Error::Io(e),
        })
    }
}

/// Ground truth plus the clean recording and, for lossy media, the attenuated one.
pub struct GeneratedData {
    pub truth: VectorField2,
    pub ideal: BoundaryData,
    pub lossy: Option<BoundaryData>,
}

impl GeneratedData {
    /// The data the reconstruction sees.
    pub fn measured(&self) -> &BoundaryData {
        self.lossy.as_ref().unwrap_or(&self.ideal)
    }
}

fn needs_lossy(cfg: &ExperimentConfig) -> bool {
    cfg.medium.a > 0.0 || cfg.algorithm() != Algorithm::Ideal
}

fn add_noise(data: &mut BoundaryData, level: f64, seed: u64) {
    if level == 0.0 {
        return;
    }
    let peak = data.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let normal = Normal::new(0.0, level * peak).expect("finite positive deviation");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in data.samples.iter_mut() {
        *v += normal.sample(&mut rng);
    }
}

pub fn generate_data(cfg: &ExperimentConfig) -> Result<GeneratedData, CliError> {
    let grid = cfg.grid();
    let truth = render(&cfg.source, &grid).stage("source")?;
    let mut ideal = simulate(
        &truth,
        &grid,
        &cfg.time(),
        &cfg.sensors(),
        &cfg.lossless_medium(),
        &cfg.pml,
    )
    .stage("simulate")?;
    let lossy = if needs_lossy(cfg) {
        let mut lossy = attenuate_data(&ideal, &cfg.medium).stage("attenuate")?;
        add_noise(&mut lossy, cfg.params.noise_level, cfg.seeds.noise);
        Some(lossy)
    } else {
        add_noise(&mut ideal, cfg.params.noise_level, cfg.seeds.noise);
        None
    };
    Ok(GeneratedData { truth, ideal, lossy })
}

pub fn save_data(cfg: &ExperimentConfig, gen: &GeneratedData, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).stage("output")?;
    let truth = ImageField::from_truth(cfg.grid(), gen.truth.clone());
    truth.save(&dir.join("truth.bin")).stage("output")?;
    if cfg.output.png {
        truth.save_heatmaps(dir, "truth").stage("output")?;
    }
    gen.ideal.save(&dir.join("data.bin")).stage("output")?;
    if let Some(lossy) = &gen.lossy {
        lossy.save(&dir.join("data_lossy.bin")).stage("output")?;
    }
    Ok(())
}

fn label_rho(prefix: &str, rho: f64) -> String {
    format!("{prefix}_rho{rho}")
}

/// All reconstructions the algorithm calls for, labelled for file names.
pub fn reconstruct_all(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    rhos: &[f64],
    data: &BoundaryData,
) -> Result<Vec<(String, ImageField)>, CliError> {
    let grid = cfg.grid();
    let m = if data.attenuated { data.medium } else { cfg.lossless_medium() };
    let p = &cfg.params;
    let mut out = Vec::new();
    match algorithm {
        Algorithm::Ideal => {
            if data.attenuated {
                let img = backpropagate_uncorrected(data, &grid, &m, p.omega_max).stage("reconstruct")?;
                out.push(("uncorrected".to_string(), img));
            } else {
                let img = backpropagate_ideal(data, &grid, &m, p.omega_max).stage("reconstruct")?;
                out.push(("ideal".to_string(), img));
            }
        }
        Algorithm::Adjoint => {
            for &rho in rhos {
                let img = backpropagate_adjoint(data, &grid, &m, rho).stage("reconstruct")?;
                out.push((label_rho("adjoint", rho), img));
                if p.baseline {
                    let base = backpropagate_uncorrected(data, &grid, &m, rho).stage("reconstruct")?;
                    out.push((label_rho("uncorrected", rho), base));
                }
            }
        }
        Algorithm::Preprocess => {
            let img = preprocess_time_reversal(data, &grid, &m, p.k, p.omega_max).stage("reconstruct")?;
            out.push(("preprocess".to_string(), img));
            if p.baseline {
                let base = backpropagate_uncorrected(data, &grid, &m, p.omega_max).stage("reconstruct")?;
                out.push(("uncorrected".to_string(), base));
            }
        }
    }
    Ok(out)
}

pub fn save_images(
    cfg: &ExperimentConfig,
    images: &[(String, ImageField)],
    dir: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).stage("output")?;
    for (label, img) in images {
        let stem = format!("image_{label}");
        img.save(&dir.join(format!("{stem}.bin"))).stage("output")?;
        if cfg.output.png {
            img.save_heatmaps(dir, &stem).stage("output")?;
        }
    }
    Ok(())
}

/// `label.key = value` lines for every reconstruction.
pub fn metrics_text(records: &[(String, MetricsRecord)]) -> String {
    let mut s = String::new();
    for (label, rec) in records {
        for line in rec.to_text().lines() {
            let _ = writeln!(s, "{label}.{line}");
        }
    }
    s
}

pub struct RunReport {
    pub dir: PathBuf,
    pub metrics: Vec<(String, MetricsRecord)>,
}

/// Full pipeline: simulate, attenuate, reconstruct, score; artifacts go to `dir`.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport, CliError> {
    let gen = generate_data(cfg)?;
    save_data(cfg, &gen, dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml()).stage("output")?;
    let images = reconstruct_all(cfg, cfg.algorithm(), &cfg.params.rho, gen.measured())?;
    save_images(cfg, &images, dir)?;
    let metrics = images
        .iter()
        .map(|(label, img)| Ok((label.clone(), image_metrics(img, &gen.truth).stage("metrics")?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    std::fs::write(dir.join("metrics.txt"), metrics_text(&metrics)).stage("output")?;
    Ok(RunReport {
        dir: dir.to_path_buf(),
        metrics,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum TraceOp {
    /// first-order inverse of the attenuation map
    Inverse,
    /// exact attenuation map
    Forward,
    /// truncated adjoint map
    Adjoint,
    /// ideal low-pass
    Lowpass,
}

fn per_trace(
    data: &BoundaryData,
    f: impl Fn(&Trace) -> lossy_tr_core::Result<Trace> + Sync,
) -> lossy_tr_core::Result<BoundaryData> {
    let traces = data
        .samples
        .par_chunks(data.steps)
        .map(|tr| {
            let mut out = f(&Trace::new(data.tau, tr.to_vec())?)?.samples;
            out.truncate(data.steps);
            Ok(out)
        })
        .collect::<lossy_tr_core::Result<Vec<_>>>()?;
    let mut out = data.clone();
    out.samples = traces.concat();
    Ok(out)
}

/// Applies a trace operator to every sensor trace of a data set.
pub fn filter_traces(
    data: &BoundaryData,
    op: TraceOp,
    m: &MediumParams,
    k: u32,
    rho: Option<f64>,
) -> Result<BoundaryData, CliError> {
    let need_rho = || {
        rho.ok_or_else(|| {
            CliError::Config(Error::Config {
                field: "--rho".into(),
                message: "this operator needs a cutoff".into(),
            })
        })
    };
    match op {
        TraceOp::Inverse => filter_data(data, m, k).stage("filter"),
        TraceOp::Forward => attenuate_data(data, m).stage("filter"),
        TraceOp::Adjoint => {
            let rho = need_rho()?;
            if !data.attenuated {
                return Err(CliError::Stage {
                    stage: "filter",
                    source: Error::DataState("the adjoint map expects attenuated data".into()),
                });
            }
            check_growth_guard(m, rho, data.duration()).stage("filter")?;
            let mut out = per_trace(data, |t| apply_l_star_rho(t, m, rho)).stage("filter")?;
            out.attenuated = false;
            Ok(out)
        }
        TraceOp::Lowpass => {
            let rho = need_rho()?;
            per_trace(data, |t| apply_p_rho(t, rho)).stage("filter")
        }
    }
}

/// Installs the global thread pool from [`THREADS_ENV`] if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Config(Error::Config {
            field: THREADS_ENV.into(),
            message: format!("expected a positive integer, got `{value}`"),
        })
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(Error::Config {
            field: THREADS_ENV.into(),
            message: e.to_string(),
        }))
}

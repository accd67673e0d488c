//! Experiment configuration: a sectioned TOML file.

use std::path::{Path, PathBuf};

use lossy_tr_core::forward::{Grid2D, PmlProfile, SensorArray, TimeAxis};
use lossy_tr_core::medium::MediumParams;
use lossy_tr_core::reconstruct::Algorithm;
use lossy_tr_core::source::{Blob, BlobKind};
use lossy_tr_core::util::is_power_of_two;
use lossy_tr_core::Error;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub l: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    #[serde(rename = "M")]
    pub count: usize,
    #[serde(rename = "R")]
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSection {
    /// adjoint cutoffs; one reconstruction per entry
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default = "default_order")]
    pub k: u32,
    pub omega_max: f64,
    /// also write the uncorrected reconstruction of the lossy data
    #[serde(default = "default_true")]
    pub baseline: bool,
    /// white noise added to the recorded data, relative to the data's peak
    #[serde(default)]
    pub noise_level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSection {
    #[serde(default)]
    pub noise: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    #[serde(default = "default_true")]
    pub png: bool,
}

fn default_order() -> u32 {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: String,
    pub grid: GridSection,
    pub time: TimeSection,
    pub medium: MediumParams,
    pub sensors: SensorSection,
    pub params: ParamSection,
    #[serde(default = "default_seeds")]
    pub seeds: SeedSection,
    #[serde(default)]
    pub pml: PmlProfile,
    pub output: OutputSection,
    pub source: Vec<Blob>,
}

fn default_seeds() -> SeedSection {
    SeedSection { noise: 0 }
}

fn config_error(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config(Error::Config {
        field: field.into(),
        message: message.into(),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| config_error("<file>", e.to_string().trim().to_string()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut path = e.path().to_string();
            let message = e.inner().message().trim().to_string();
            // serde reports a missing key against its parent table
            if let Some(name) = message
                .strip_prefix("missing field `")
                .and_then(|r| r.strip_suffix('`'))
            {
                path = if path == "." { name.to_string() } else { format!("{path}.{name}") };
            }
            config_error(path, message)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm.parse().expect("validated at load")
    }

    pub fn grid(&self) -> Grid2D {
        Grid2D {
            l: self.grid.l,
            n: self.grid.n,
        }
    }

    pub fn time(&self) -> TimeAxis {
        TimeAxis {
            t_final: self.time.t_final,
            steps: self.time.m,
        }
    }

    pub fn sensors(&self) -> SensorArray {
        SensorArray {
            count: self.sensors.count,
            radius: self.sensors.radius,
        }
    }

    /// The loss-free medium the waves are simulated in.
    pub fn lossless_medium(&self) -> MediumParams {
        self.medium.with_loss(0.0)
    }

    /// Switches to the large discretization (n = 512, m = 8192).
    pub fn paper_scale(&mut self) {
        self.grid.n = 512;
        self.time.m = 8192;
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let alg: Algorithm = self
            .algorithm
            .parse()
            .map_err(|_| config_error("algorithm", format!("unknown algorithm `{}` (expected ideal, adjoint or preprocess)", self.algorithm)))?;
        if !(self.grid.l > 0.0 && self.grid.l.is_finite()) {
            return Err(config_error("grid.l", "must be positive"));
        }
        if self.grid.n < 16 || !is_power_of_two(self.grid.n) {
            return Err(config_error("grid.n", "must be a power of two, at least 16"));
        }
        if !(self.time.t_final > 0.0 && self.time.t_final.is_finite()) {
            return Err(config_error("time.T", "must be positive"));
        }
        if !is_power_of_two(self.time.m) {
            return Err(config_error("time.m", "must be a power of two"));
        }
        self.medium
            .validate()
            .map_err(|e| config_error("medium", e.to_string()))?;
        let grid = self.grid();
        self.time()
            .validate(&grid, &self.lossless_medium(), 1.0)
            .map_err(|e| config_error("time.m", e.to_string()))?;
        self.pml.validate().map_err(|e| config_error("pml", e.to_string()))?;
        if self.sensors.count == 0 {
            return Err(config_error("sensors.M", "must be positive"));
        }
        if !(self.sensors.radius > 0.0) {
            return Err(config_error("sensors.R", "must be positive"));
        }
        self.sensors()
            .validate(&grid, &self.pml)
            .map_err(|e| config_error("sensors", e.to_string()))?;
        if self.source.is_empty() {
            return Err(config_error("source", "at least one blob is required"));
        }
        let reach = self.sensors.radius - 2.0 * grid.h();
        for (i, b) in self.source.iter().enumerate() {
            b.validate().map_err(|e| config_error(format!("source[{i}]"), e.to_string()))?;
            // Gaussian tails must be negligible at the sensors; disks must end inside
            let extent = match b.kind {
                BlobKind::Disk => b.width,
                BlobKind::Gaussian | BlobKind::Curl => 7.0 * b.width,
            };
            if b.center[0].hypot(b.center[1]) + extent > reach {
                return Err(config_error(
                    format!("source[{i}].center"),
                    format!("blob must lie strictly inside the sensor circle (needs |center| + {extent:.3} < {reach:.3})"),
                ));
            }
        }
        let nyquist = std::f64::consts::PI / self.time().tau();
        if !(self.params.omega_max > 0.0 && self.params.omega_max <= nyquist) {
            return Err(config_error(
                "params.omega_max",
                format!("must lie in (0, pi/tau = {nyquist:.3}]"),
            ));
        }
        if alg == Algorithm::Adjoint && self.params.rho.is_empty() {
            return Err(config_error("params.rho", "the adjoint algorithm needs at least one cutoff"));
        }
        for (i, &r) in self.params.rho.iter().enumerate() {
            if !(r > 0.0 && r <= nyquist) {
                return Err(config_error(format!("params.rho[{i}]"), format!("must lie in (0, {nyquist:.3}]")));
            }
        }
        if alg == Algorithm::Preprocess && self.params.k != 1 {
            return Err(config_error("params.k", "only order 1 is implemented"));
        }
        if !(self.params.noise_level >= 0.0 && self.params.noise_level.is_finite()) {
            return Err(config_error("params.noise_level", "must be non-negative"));
        }
        if self.output.dir.as_os_str().is_empty() {
            return Err(config_error("output.dir", "must not be empty"));
        }
        Ok(())
    }
}

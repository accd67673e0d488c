//! Boundary sensor traces and their on-disk container.
//!
//! Binary layout, little-endian throughout:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `LTRBDATA` |
//! | 4     | format version (u32, currently 1) |
//! | 8     | sensor count `M` (u64) |
//! | 8     | samples per trace `m` (u64) |
//! | 8     | time step `τ` (f64) |
//! | 8     | circle radius `R` (f64) |
//! | 1     | attenuated flag (0/1) |
//! | 8     | loss constant `a` (f64) |
//! | 48    | medium `ε0, εs, ε∞, μ0, σ, a` (6 × f64) |
//! | 16·M·m | samples, sensor-major: for each sensor the `E1` trace then the `E2` trace |

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::forward::SensorArray;
use crate::medium::MediumParams;

const MAGIC: &[u8; 8] = b"LTRBDATA";
const VERSION: u32 = 1;

/// Electric-field traces at `M` sensors: `samples[(s * 2 + c) * steps + j]`
/// is component `c` at sensor `s` and time `jτ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    pub sensors: SensorArray,
    pub tau: f64,
    pub steps: usize,
    pub samples: Vec<f64>,
    pub attenuated: bool,
    /// loss constant the traces were attenuated with (0 for ideal data)
    pub loss: f64,
    pub medium: MediumParams,
}

impl BoundaryData {
    pub fn zeros(sensors: SensorArray, tau: f64, steps: usize, medium: MediumParams) -> Self {
        Self {
            sensors,
            tau,
            steps,
            samples: vec![0.0; sensors.count * 2 * steps],
            attenuated: false,
            loss: 0.0,
            medium,
        }
    }

    pub fn duration(&self) -> f64 {
        self.tau * self.steps as f64
    }

    pub fn trace(&self, sensor: usize, comp: usize) -> &[f64] {
        let start = (sensor * 2 + comp) * self.steps;
        &self.samples[start..start + self.steps]
    }

    pub fn trace_mut(&mut self, sensor: usize, comp: usize) -> &mut [f64] {
        let start = (sensor * 2 + comp) * self.steps;
        &mut self.samples[start..start + self.steps]
    }

    pub fn set(&mut self, sensor: usize, comp: usize, j: usize, v: f64) {
        self.samples[(sensor * 2 + comp) * self.steps + j] = v;
    }

    /// Largest final-sample magnitude relative to the global peak.
    pub fn tail_ratio(&self) -> f64 {
        let peak = crate::util::max_abs(&self.samples);
        if peak == 0.0 {
            return 0.0;
        }
        let tail = self
            .samples
            .chunks(self.steps)
            .map(|t| t[t.len() - 1].abs())
            .fold(0.0f64, f64::max);
        tail / peak
    }

    /// Same layout, every sample replaced by `f(sample)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for v in out.samples.iter_mut() {
            *v = f(*v);
        }
        out
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.sensors != other.sensors || self.steps != other.steps || self.tau != other.tau {
            return Err(Error::Shape("boundary data sets have different layouts".into()));
        }
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.sensors.count as u64).to_le_bytes())?;
        w.write_all(&(self.steps as u64).to_le_bytes())?;
        w.write_all(&self.tau.to_le_bytes())?;
        w.write_all(&self.sensors.radius.to_le_bytes())?;
        w.write_all(&[self.attenuated as u8])?;
        w.write_all(&self.loss.to_le_bytes())?;
        let md = &self.medium;
        for v in [md.eps0, md.eps_s, md.eps_inf, md.mu0, md.sigma, md.a] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.samples.len() * 8);
        for v in &self.samples {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a boundary-data file (bad magic)".into()));
        }
        let version = read_u32(r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported boundary-data version {version}")));
        }
        let count = read_u64(r)? as usize;
        let steps = read_u64(r)? as usize;
        let tau = read_f64(r)?;
        let radius = read_f64(r)?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let loss = read_f64(r)?;
        let mut md = [0.0; 6];
        for v in md.iter_mut() {
            *v = read_f64(r)?;
        }
        let len = count
            .checked_mul(2 * steps)
            .ok_or_else(|| Error::Format("sample count overflows".into()))?;
        let mut bytes = vec![0u8; len * 8];
        r.read_exact(&mut bytes)?;
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            sensors: SensorArray { count, radius },
            tau,
            steps,
            samples,
            attenuated: flag[0] != 0,
            loss,
            medium: MediumParams {
                eps0: md[0],
                eps_s: md[1],
                eps_inf: md[2],
                mu0: md[3],
                sigma: md[4],
                a: md[5],
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }

    /// One row per sample: `sensor,component,t,value`.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "sensor,component,t,value")?;
        for s in 0..self.sensors.count {
            for c in 0..2 {
                for (j, v) in self.trace(s, c).iter().enumerate() {
                    writeln!(w, "{s},{},{:.17e},{v:.17e}", c + 1, j as f64 * self.tau)?;
                }
            }
        }
        Ok(())
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

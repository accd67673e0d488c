//! Current-density blobs used to build synthetic sources.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{Grid2D, VectorField2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlobKind {
    /// Gaussian bump on one component.
    Gaussian,
    /// Uniform disk on one component (hard edge).
    Disk,
    /// Divergence-free swirl, the curl of a Gaussian stream function; drives both components.
    Curl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blob {
    pub kind: BlobKind,
    pub center: [f64; 2],
    /// standard deviation for Gaussian and curl blobs, radius for disks
    pub width: f64,
    pub amplitude: f64,
    /// 1 or 2; ignored by curl blobs
    #[serde(default = "default_component")]
    pub component: usize,
}

fn default_component() -> usize {
    1
}

impl Blob {
    pub fn curl(center: [f64; 2], width: f64, amplitude: f64) -> Self {
        Self {
            kind: BlobKind::Curl,
            center,
            width,
            amplitude,
            component: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::Domain(format!("blob width must be positive, got {}", self.width)));
        }
        if !self.amplitude.is_finite() || !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::Domain("blob center and amplitude must be finite".into()));
        }
        if self.kind != BlobKind::Curl && !(self.component == 1 || self.component == 2) {
            return Err(Error::Domain(format!(
                "blob component must be 1 or 2, got {}",
                self.component
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let r2 = dx * dx + dy * dy;
        let s2 = self.width * self.width;
        let single = |v: f64| {
            if self.component == 1 {
                [v, 0.0]
            } else {
                [0.0, v]
            }
        };
        match self.kind {
            BlobKind::Gaussian => single(self.amplitude * (-r2 / (2.0 * s2)).exp()),
            BlobKind::Disk => single(if r2 <= s2 { self.amplitude } else { 0.0 }),
            BlobKind::Curl => {
                let psi = self.amplitude * (-r2 / (2.0 * s2)).exp();
                [-dy / s2 * psi, dx / s2 * psi]
            }
        }
    }
}

/// Sum of blobs sampled at cell centres.
pub fn render(blobs: &[Blob], grid: &Grid2D) -> Result<VectorField2> {
    for b in blobs {
        b.validate()?;
    }
    Ok(VectorField2::from_fn(grid, |x, y| {
        blobs.iter().fold([0.0, 0.0], |acc, b| {
            let v = b.eval(x, y);
            [acc[0] + v[0], acc[1] + v[1]]
        })
    }))
}

//! Time-domain 2D TE simulation producing boundary sensor traces.
//!
//! Fields live on a periodic square `[-l/2, l/2)²` with cell-centred samples,
//! stored row-major as `data[j * n + i]` with `i` along `x1` and `j` along `x2`.

mod data;
mod solver;

use std::f64::consts::PI;

pub use data::BoundaryData;
pub use solver::{step_te, TeSolver, TeState};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attenuation::AttenuationPlan;
use crate::error::{Error, Result};
use crate::medium::MediumParams;
use crate::util::is_power_of_two;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    /// side length
    pub l: f64,
    /// points per axis, a power of two
    pub n: usize,
}

impl Grid2D {
    pub fn new(l: f64, n: usize) -> Result<Self> {
        let g = Self { l, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(Error::config("grid.l", format!("must be > 0, got {}", self.l)));
        }
        if !is_power_of_two(self.n) || self.n < 8 {
            return Err(Error::config(
                "grid.n",
                format!("must be a power of two >= 8, got {}", self.n),
            ));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Cell-centre coordinate of index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.l + (i as f64 + 0.5) * self.h()
    }

    /// Signed FFT wavenumbers `2π p / l`, with the Nyquist entry zeroed so odd
    /// derivatives stay real.
    pub fn derivative_wavenumbers(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|p| {
                if p == n / 2 {
                    0.0
                } else if p < n / 2 {
                    2.0 * PI * p as f64 / self.l
                } else {
                    2.0 * PI * (p as f64 - n as f64) / self.l
                }
            })
            .collect()
    }

    /// Largest resolved wavenumber `π/h`.
    pub fn max_wavenumber(&self) -> f64 {
        PI / self.h()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    /// final time
    pub t_final: f64,
    /// number of recorded samples; the step is `t_final / steps`
    pub steps: usize,
}

impl TimeAxis {
    pub fn tau(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    /// Checks `τ ≤ cfl·h/c0` with `0 < cfl ≤ 1`.
    pub fn validate(&self, grid: &Grid2D, m: &MediumParams, cfl: f64) -> Result<()> {
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::config("time.T", "must be > 0"));
        }
        if self.steps < 2 {
            return Err(Error::config("time.m", "needs at least two steps"));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::config("time.cfl", format!("must lie in (0, 1], got {cfl}")));
        }
        let limit = cfl * grid.h() / m.c0();
        if self.tau() > limit {
            return Err(Error::config(
                "time.m",
                format!(
                    "step {} exceeds cfl * h / c0 = {limit}; increase m to at least {}",
                    self.tau(),
                    (self.t_final / limit).ceil()
                ),
            ));
        }
        Ok(())
    }
}

/// Two real components on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2 {
    pub n: usize,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl VectorField2 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            c1: vec![0.0; n * n],
            c2: vec![0.0; n * n],
        }
    }

    /// Samples `f(x1, x2)` at the cell centres.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let n = grid.n;
        let mut out = Self::zeros(n);
        for j in 0..n {
            for i in 0..n {
                let v = f(grid.coord(i), grid.coord(j));
                out.c1[j * n + i] = v[0];
                out.c2[j * n + i] = v[1];
            }
        }
        out
    }

    pub fn component(&self, c: usize) -> &[f64] {
        match c {
            0 => &self.c1,
            _ => &self.c2,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.c1.iter().chain(&self.c2).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            c1: self.c1.iter().map(|v| v * s).collect(),
            c2: self.c2.iter().map(|v| v * s).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c1.iter().chain(&self.c2).all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub n: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }
}

/// Absorbing layer along all four sides of the periodic square.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmlProfile {
    /// layer width in cells
    pub width: usize,
    /// peak damping rate (1/time) at the outer edge
    pub strength: f64,
    /// polynomial grading order
    pub order: u32,
}

impl Default for PmlProfile {
    fn default() -> Self {
        Self {
            width: 16,
            strength: 60.0,
            order: 3,
        }
    }
}

impl PmlProfile {
    pub fn validate(&self) -> Result<()> {
        if self.width < 8 {
            return Err(Error::config("pml.width", format!("must be >= 8 cells, got {}", self.width)));
        }
        if !(self.strength.is_finite() && self.strength > 0.0) {
            return Err(Error::config("pml.strength", "must be > 0"));
        }
        Ok(())
    }

    /// Damping rate at cell `i` of either axis: `s·(d/w)^order` where `d` is the
    /// depth of the cell centre into the layer.
    pub fn rate(&self, grid: &Grid2D, i: usize) -> f64 {
        let w = self.width as f64;
        let from_edge = (i as f64 + 0.5).min(grid.n as f64 - i as f64 - 0.5);
        let depth = w - from_edge;
        if depth <= 0.0 {
            0.0
        } else {
            self.strength * (depth / w).powi(self.order as i32)
        }
    }

    /// Half-width of the square free of damping.
    pub fn inner_half_width(&self, grid: &Grid2D) -> f64 {
        0.5 * grid.l - self.width as f64 * grid.h()
    }
}

/// `M` equispaced sensors on the circle of radius `R` about the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorArray {
    pub count: usize,
    pub radius: f64,
}

impl SensorArray {
    pub fn position(&self, i: usize) -> [f64; 2] {
        let th = 2.0 * PI * i as f64 / self.count as f64;
        [self.radius * th.cos(), self.radius * th.sin()]
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        (0..self.count).map(|i| self.position(i)).collect()
    }

    /// Arc length per sensor `2πR/M`.
    pub fn arc_weight(&self) -> f64 {
        2.0 * PI * self.radius / self.count as f64
    }

    pub fn validate(&self, grid: &Grid2D, pml: &PmlProfile) -> Result<()> {
        if self.count == 0 {
            return Err(Error::config("sensors.M", "must be > 0"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::config("sensors.R", "must be > 0"));
        }
        // the cubic interpolation stencil reaches two cells out
        if self.radius + 2.0 * grid.h() > pml.inner_half_width(grid) {
            return Err(Error::config(
                "sensors.R",
                format!(
                    "circle of radius {} reaches the absorbing layer (free half-width {})",
                    self.radius,
                    pml.inner_half_width(grid)
                ),
            ));
        }
        let needed = 2.0 * grid.max_wavenumber() * self.radius;
        if (self.count as f64) < needed {
            return Err(Error::config(
                "sensors.M",
                format!("{} sensors under-sample the circle; need at least {}", self.count, needed.ceil()),
            ));
        }
        Ok(())
    }
}

/// Relative magnitude below which a source sample counts as zero.
pub const SUPPORT_TOLERANCE: f64 = 1e-8;

/// Post-impulse state of the source `δ(t) J(x)`: `E(0+) = −J/ε0`, `H3(0+) = 0`.
///
/// The source must vanish (relative to its peak, at [`SUPPORT_TOLERANCE`]) on and outside
/// the circle shrunk by two cells, and hence inside the layer.
pub fn init_fields(
    source: &VectorField2,
    grid: &Grid2D,
    sensors: &SensorArray,
    m: &MediumParams,
) -> Result<(VectorField2, ScalarField)> {
    if source.n != grid.n {
        return Err(Error::Shape(format!("source is {}², grid is {}²", source.n, grid.n)));
    }
    if !source.is_finite() {
        return Err(Error::Domain("source has non-finite entries".into()));
    }
    check_support(source, grid, sensors.radius - 2.0 * grid.h())?;
    Ok((source.scaled(-1.0 / m.eps0), ScalarField::zeros(grid.n)))
}

fn check_support(source: &VectorField2, grid: &Grid2D, radius: f64) -> Result<()> {
    let peak = source.max_abs();
    if peak == 0.0 {
        return Ok(());
    }
    let n = grid.n;
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (grid.coord(i), grid.coord(j));
            if x.hypot(y) < radius {
                continue;
            }
            let k = j * n + i;
            let v = source.c1[k].abs().max(source.c2[k].abs());
            if v > SUPPORT_TOLERANCE * peak {
                return Err(Error::Support(format!(
                    "source is {:.3e} of its peak at ({x:.4}, {y:.4}), outside radius {radius:.4}",
                    v / peak
                )));
            }
        }
    }
    Ok(())
}

/// Four-point Lagrange weights for fractional offset `t ∈ [0, 1)` on nodes −1, 0, 1, 2.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Precomputed 4×4 interpolation stencils at the sensor positions.
pub(crate) struct SensorStencils {
    idx: Vec<[usize; 16]>,
    w: Vec<[f64; 16]>,
}

impl SensorStencils {
    pub(crate) fn new(grid: &Grid2D, sensors: &SensorArray) -> Self {
        let n = grid.n as i64;
        let h = grid.h();
        let mut idx = Vec::with_capacity(sensors.count);
        let mut w = Vec::with_capacity(sensors.count);
        for p in sensors.positions() {
            let u = (p[0] + 0.5 * grid.l) / h - 0.5;
            let v = (p[1] + 0.5 * grid.l) / h - 0.5;
            let (iu, iv) = (u.floor(), v.floor());
            let (wu, wv) = (cubic_weights(u - iu), cubic_weights(v - iv));
            let mut ii = [0usize; 16];
            let mut ww = [0.0; 16];
            for b in 0..4 {
                for a in 0..4 {
                    let i = (iu as i64 + a as i64 - 1).rem_euclid(n) as usize;
                    let j = (iv as i64 + b as i64 - 1).rem_euclid(n) as usize;
                    ii[b * 4 + a] = j * grid.n + i;
                    ww[b * 4 + a] = wu[a] * wv[b];
                }
            }
            idx.push(ii);
            w.push(ww);
        }
        Self { idx, w }
    }

    pub(crate) fn sample(&self, field: &[f64], sensor: usize) -> f64 {
        self.idx[sensor]
            .iter()
            .zip(&self.w[sensor])
            .map(|(&k, &w)| field[k] * w)
            .sum()
    }
}

/// Runs the loss-less simulation and records `E` at every sensor and step.
///
/// Sample `j` is taken at `t_j = jτ`, `j = 0..steps`, so the first sample is
/// the post-impulse state.
pub fn simulate(
    source: &VectorField2,
    grid: &Grid2D,
    time: &TimeAxis,
    sensors: &SensorArray,
    m: &MediumParams,
    pml: &PmlProfile,
) -> Result<BoundaryData> {
    sensors.validate(grid, pml)?;
    let (e, h3) = init_fields(source, grid, sensors, m)?;
    let tau = time.tau();
    let mut solver = TeSolver::new(grid, m, Some(pml), tau)?;
    let mut state = TeState::new(e, &h3);
    let stencils = SensorStencils::new(grid, sensors);
    let steps = time.steps;
    let mut data = BoundaryData::zeros(*sensors, tau, steps, *m);
    for j in 0..steps {
        if j > 0 {
            solver.step(&mut state, j)?;
        }
        for s in 0..sensors.count {
            data.set(s, 0, j, stencils.sample(&state.e.c1, s));
            data.set(s, 1, j, stencils.sample(&state.e.c2, s));
        }
    }
    let decay = data.tail_ratio();
    if decay > 1e-3 {
        log::warn!(
            "traces have not decayed by t = T: last/peak = {decay:.2e}; consider a longer record"
        );
    }
    Ok(data)
}

/// Applies the exact attenuation operator to every trace.
pub fn attenuate_data(ideal: &BoundaryData, m: &MediumParams) -> Result<BoundaryData> {
    if ideal.attenuated {
        return Err(Error::DataState("data are already attenuated".into()));
    }
    m.validate()?;
    let plan = AttenuationPlan::new(ideal.steps, ideal.tau, m)?;
    let traces: Vec<Vec<f64>> = ideal
        .samples
        .par_chunks(ideal.steps)
        .map(|tr| plan.apply(tr))
        .collect::<Result<_>>()?;
    let mut out = ideal.clone();
    out.samples = traces.concat();
    out.attenuated = true;
    out.loss = m.a;
    out.medium = *m;
    Ok(out)
}

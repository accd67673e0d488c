//! Exact spectral propagation of the loss-less TE system with a split-field
//! absorbing layer, combined by Strang splitting.
//!
//! In Fourier space the TE system decouples into a static longitudinal part
//! of `E` and a transverse pair `(u, Ĥ3)` with `u = (k2 Ê1 − k1 Ê2)/|k|`,
//! which rotates at `c0|k|`. One propagation step is that rotation, so it is
//! exact in time for any `τ`. `H3` is carried as `H3x + H3y`; the part
//! driven by `∂E2/∂x1` goes to `H3x`, the part driven by `∂E1/∂x2` to `H3y`,
//! and each half is damped by the layer profile of its own axis.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Grid2D, PmlProfile, ScalarField, VectorField2};
use crate::error::{Error, Result};
use crate::medium::MediumParams;

/// Square 2D FFT on row-major data. The forward transform leaves the spectrum
/// transposed (`[k1][k2]`) and the inverse expects that layout, which saves
/// two transposes per round trip.
pub(crate) struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            scratch: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    fn transpose(&mut self, data: &mut [Complex64]) {
        let n = self.n;
        const B: usize = 32;
        for jb in (0..n).step_by(B) {
            for ib in (0..n).step_by(B) {
                for j in jb..(jb + B).min(n) {
                    for i in ib..(ib + B).min(n) {
                        self.scratch[i * n + j] = data[j * n + i];
                    }
                }
            }
        }
        data.copy_from_slice(&self.scratch);
    }

    /// Physical `[x2][x1]` to spectral `[k1][k2]`.
    pub(crate) fn forward(&mut self, data: &mut [Complex64]) {
        self.fwd.process(data);
        self.transpose(data);
        self.fwd.process(data);
    }

    /// Spectral `[k1][k2]` back to physical `[x2][x1]`, normalized.
    pub(crate) fn inverse(&mut self, data: &mut [Complex64]) {
        self.inv.process(data);
        self.transpose(data);
        self.inv.process(data);
        let s = 1.0 / (self.n * self.n) as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Fields of the TE system with the magnetic component split for the layer.
#[derive(Clone, Debug, PartialEq)]
pub struct TeState {
    pub e: VectorField2,
    pub h3x: Vec<f64>,
    pub h3y: Vec<f64>,
}

impl TeState {
    pub fn new(e: VectorField2, h3: &ScalarField) -> Self {
        Self {
            h3x: h3.data.iter().map(|v| 0.5 * v).collect(),
            h3y: h3.data.iter().map(|v| 0.5 * v).collect(),
            e,
        }
    }

    pub fn h3(&self) -> ScalarField {
        ScalarField {
            n: self.e.n,
            data: self.h3x.iter().zip(&self.h3y).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.e
            .c1
            .iter()
            .chain(&self.e.c2)
            .chain(&self.h3x)
            .chain(&self.h3y)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `ε0|E|² + μ0|H3|²` summed over cells whose centre satisfies `inside`.
    pub fn energy(&self, grid: &Grid2D, m: &MediumParams, inside: impl Fn(f64, f64) -> bool) -> f64 {
        let n = grid.n;
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                if !inside(grid.coord(i), grid.coord(j)) {
                    continue;
                }
                let k = j * n + i;
                let h = self.h3x[k] + self.h3y[k];
                acc += m.eps0 * (self.e.c1[k].powi(2) + self.e.c2[k].powi(2)) + m.mu0 * h * h;
            }
        }
        acc * grid.h() * grid.h()
    }
}

/// Reusable stepping context: FFT plans, wavenumbers, damping factors and buffers.
pub struct TeSolver {
    n: usize,
    k: Vec<f64>,
    c0: f64,
    impedance: f64,
    /// half-step damping along x1 and x2 (index = cell), `None` without a layer
    damp_x: Option<Vec<f64>>,
    damp_y: Option<Vec<f64>>,
    fft: Fft2,
    buf_e: Vec<Complex64>,
    buf_h: Vec<Complex64>,
    tau: f64,
}

impl TeSolver {
    pub fn new(grid: &Grid2D, m: &MediumParams, pml: Option<&PmlProfile>, tau: f64) -> Result<Self> {
        grid.validate()?;
        if !(tau.is_finite() && tau != 0.0) {
            return Err(Error::Domain(format!("time step must be finite and non-zero, got {tau}")));
        }
        let n = grid.n;
        let (damp_x, damp_y) = match pml {
            Some(p) => {
                p.validate()?;
                let d: Vec<f64> = (0..n)
                    .map(|i| (-p.rate(grid, i) * tau.abs() * 0.5).exp())
                    .collect();
                (Some(d.clone()), Some(d))
            }
            None => (None, None),
        };
        Ok(Self {
            n,
            k: grid.derivative_wavenumbers(),
            c0: m.c0(),
            impedance: (m.mu0 / m.eps0).sqrt(),
            damp_x,
            damp_y,
            fft: Fft2::new(n),
            buf_e: vec![Complex64::new(0.0, 0.0); n * n],
            buf_h: vec![Complex64::new(0.0, 0.0); n * n],
            tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn absorb(&self, s: &mut TeState) {
        let (Some(dx), Some(dy)) = (&self.damp_x, &self.damp_y) else {
            return;
        };
        let n = self.n;
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                // E1 and H3y are driven by ∂/∂x2, E2 and H3x by ∂/∂x1
                s.e.c1[k] *= dy[j];
                s.h3y[k] *= dy[j];
                s.e.c2[k] *= dx[i];
                s.h3x[k] *= dx[i];
            }
        }
    }

    fn propagate(&mut self, s: &mut TeState) {
        let n = self.n;
        for k in 0..n * n {
            self.buf_e[k] = Complex64::new(s.e.c1[k], s.e.c2[k]);
            self.buf_h[k] = Complex64::new(s.h3x[k], s.h3y[k]);
        }
        self.fft.forward(&mut self.buf_e);
        self.fft.forward(&mut self.buf_h);
        let z = self.impedance;
        // Each mode p and its mirror -p are updated together so the packed
        // real fields can be separated and re-packed.
        for p1 in 0..n {
            let q1 = (n - p1) % n;
            for p2 in 0..n {
                let q2 = (n - p2) % n;
                let a = p1 * n + p2;
                let b = q1 * n + q2;
                if b < a {
                    continue;
                }
                let (za, zb) = (self.buf_e[a], self.buf_e[b].conj());
                let (ha, hb) = (self.buf_h[a], self.buf_h[b].conj());
                // unpack at p (the values at -p are conjugates)
                let e1 = (za + zb) * 0.5;
                let e2 = (za - zb) * Complex64::new(0.0, -0.5);
                let hx = (ha + hb) * 0.5;
                let hy = (ha - hb) * Complex64::new(0.0, -0.5);
                let (k1, k2) = (self.k[p1], self.k[p2]);
                let kk = k1.hypot(k2);
                let (e1n, e2n, hxn, hyn) = if kk == 0.0 {
                    (e1, e2, hx, hy)
                } else {
                    let w = self.c0 * kk * self.tau;
                    let (sn, cs) = w.sin_cos();
                    let isn = Complex64::new(0.0, sn);
                    let u = (k2 * e1 - k1 * e2) / kk;
                    let q = (k1 * e1 + k2 * e2) / kk;
                    let h = hx + hy;
                    let un = u * cs + isn * z * h;
                    let e1n = (k2 * un + k1 * q) / kk;
                    let e2n = (-k1 * un + k2 * q) / kk;
                    let hxn = hx * cs + isn / z * (-k1 * e2) / kk;
                    let hyn = hy * cs + isn / z * (k2 * e1) / kk;
                    (e1n, e2n, hxn, hyn)
                };
                let i = Complex64::new(0.0, 1.0);
                self.buf_e[a] = e1n + i * e2n;
                self.buf_h[a] = hxn + i * hyn;
                if b != a {
                    self.buf_e[b] = e1n.conj() + i * e2n.conj();
                    self.buf_h[b] = hxn.conj() + i * hyn.conj();
                }
            }
        }
        self.fft.inverse(&mut self.buf_e);
        self.fft.inverse(&mut self.buf_h);
        for k in 0..n * n {
            s.e.c1[k] = self.buf_e[k].re;
            s.e.c2[k] = self.buf_e[k].im;
            s.h3x[k] = self.buf_h[k].re;
            s.h3y[k] = self.buf_h[k].im;
        }
    }

    /// One Strang step: half absorption, full propagation, half absorption.
    pub fn step(&mut self, s: &mut TeState, step_index: usize) -> Result<()> {
        let before = s.max_abs();
        self.absorb(s);
        self.propagate(s);
        self.absorb(s);
        let after = s.max_abs();
        if !after.is_finite() || (before > 0.0 && after > 10.0 * before) {
            return Err(Error::Instability {
                step: step_index,
                before,
                after,
            });
        }
        Ok(())
    }
}

/// Advances `(E, H3)` by one step of length `tau` (negative `tau` runs backward).
///
/// Convenience wrapper that builds a fresh [`TeSolver`]; loops should hold a
/// solver instead. `H3` is split evenly between its two layer components.
pub fn step_te(
    e: &VectorField2,
    h3: &ScalarField,
    grid: &Grid2D,
    m: &MediumParams,
    pml: Option<&PmlProfile>,
    tau: f64,
) -> Result<(VectorField2, ScalarField)> {
    let mut solver = TeSolver::new(grid, m, pml, tau)?;
    let mut state = TeState::new(e.clone(), h3);
    solver.step(&mut state, 0)?;
    let h = state.h3();
    Ok((state.e, h))
}

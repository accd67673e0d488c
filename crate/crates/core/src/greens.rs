//! Two-dimensional scalar and dyadic electric-electric Green functions.
//!
//! Two sign conventions live side by side:
//! * [`scalar_green_2d`] and [`dyadic_green_ee`] use the Hankel kernel
//!   `(i/4) H0⁽¹⁾(κr)`, outgoing for an `e^{-iωt}` time factor.
//! * [`outgoing_dyadic_green`] is the kernel that is outgoing under the
//!   crate-wide analysis convention `v̂(ω) = ∫ v e^{-iωt} dt`, namely
//!   `-(i/4) H0⁽²⁾(κr)`. Boundary data spectra pair with this one, and the
//!   back-propagation in [`crate::reconstruct`] is written in terms of it.
//!
//! For real `κ` the two dyads are related by `G_out = -conj(G_H1)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::medium::MediumParams;
use crate::special::{hankel1_01, hankel2_01};

/// Symmetric 2×2 complex dyad acting on in-plane vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicGreen2x2 {
    pub g11: Complex64,
    pub g12: Complex64,
    pub g21: Complex64,
    pub g22: Complex64,
}

impl DyadicGreen2x2 {
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            g11: z,
            g12: z,
            g21: z,
            g22: z,
        }
    }

    /// `iωμ0 (A·I + B·x̂x̂ᵀ)` for the unit direction `dir`.
    pub fn from_radial(prefactor: Complex64, a: Complex64, b: Complex64, dir: [f64; 2]) -> Self {
        let off = prefactor * b * (dir[0] * dir[1]);
        Self {
            g11: prefactor * (a + b * (dir[0] * dir[0])),
            g12: off,
            g21: off,
            g22: prefactor * (a + b * (dir[1] * dir[1])),
        }
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.g11 * v[0] + self.g12 * v[1],
            self.g21 * v[0] + self.g22 * v[1],
        ]
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.g11, self.g12, self.g21, self.g22]
    }

    /// Matrix product `self · conj(other)`.
    pub fn mul_conj(&self, other: &Self) -> Self {
        let o = [
            other.g11.conj(),
            other.g12.conj(),
            other.g21.conj(),
            other.g22.conj(),
        ];
        Self {
            g11: self.g11 * o[0] + self.g12 * o[2],
            g12: self.g11 * o[1] + self.g12 * o[3],
            g21: self.g21 * o[0] + self.g22 * o[2],
            g22: self.g21 * o[1] + self.g22 * o[3],
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        self.g11 += other.g11 * s;
        self.g12 += other.g12 * s;
        self.g21 += other.g21 * s;
        self.g22 += other.g22 * s;
    }

    pub fn conj(&self) -> Self {
        Self {
            g11: self.g11.conj(),
            g12: self.g12.conj(),
            g21: self.g21.conj(),
            g22: self.g22.conj(),
        }
    }

    pub fn re(&self) -> [[f64; 2]; 2] {
        [[self.g11.re, self.g12.re], [self.g21.re, self.g22.re]]
    }

    pub fn frobenius(&self) -> f64 {
        self.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `(i/4) H0⁽¹⁾(κ r)`.
pub fn scalar_green_2d(r: f64, kappa: Complex64) -> Result<Complex64> {
    if !(r > 0.0) {
        return Err(Error::Singular(format!(
            "Green kernel evaluated at distance {r}"
        )));
    }
    if kappa.norm() == 0.0 {
        return Err(Error::Domain(
            "zero wavenumber: the 2D kernel has no finite static limit".into(),
        ));
    }
    let (h0, _) = hankel1_01(kappa * r);
    Ok(Complex64::new(0.0, 0.25) * h0)
}

/// Radial coefficients `(A, B)` of `(I + ∇∇/κ²) ĝ = A·I + B·x̂x̂ᵀ` for
/// `ĝ = (i/4) H0⁽¹⁾(κr)`.
pub fn radial_coefficients_h1(r: f64, kappa: Complex64) -> (Complex64, Complex64) {
    let z = kappa * r;
    let (h0, h1) = hankel1_01(z);
    radial_from_hankel(Complex64::new(0.0, 0.25), h0, h1, z)
}

/// Same as [`radial_coefficients_h1`] for the analysis-convention kernel `-(i/4) H0⁽²⁾(κr)`.
pub fn radial_coefficients_outgoing(r: f64, kappa: Complex64) -> (Complex64, Complex64) {
    let z = kappa * r;
    let (h0, h1) = hankel2_01(z);
    radial_from_hankel(Complex64::new(0.0, -0.25), h0, h1, z)
}

fn radial_from_hankel(
    scale: Complex64,
    h0: Complex64,
    h1: Complex64,
    z: Complex64,
) -> (Complex64, Complex64) {
    let h1z = h1 / z;
    (scale * (h0 - h1z), scale * (2.0 * h1z - h0))
}

fn check_offset(dx: [f64; 2], kappa: Complex64) -> Result<(f64, [f64; 2])> {
    let r = dx[0].hypot(dx[1]);
    if !(r > 0.0) {
        return Err(Error::Singular("dyadic Green function at zero offset".into()));
    }
    if kappa.norm() == 0.0 {
        return Err(Error::Domain("dyadic Green function needs kappa != 0".into()));
    }
    Ok((r, [dx[0] / r, dx[1] / r]))
}

/// `Ĝ^ee = iωμ0 (I + ∇∇/κ²) (i/4) H0⁽¹⁾(κ|dx|)`.
pub fn dyadic_green_ee(
    dx: [f64; 2],
    omega: f64,
    kappa: Complex64,
    m: &MediumParams,
) -> Result<DyadicGreen2x2> {
    let (r, dir) = check_offset(dx, kappa)?;
    let (a, b) = radial_coefficients_h1(r, kappa);
    Ok(DyadicGreen2x2::from_radial(
        Complex64::new(0.0, omega * m.mu0),
        a,
        b,
        dir,
    ))
}

/// `iωμ0 (I + ∇∇/κ²) (-(i/4)) H0⁽²⁾(κ|dx|)`: outgoing under the `e^{-iωt}` analysis convention.
pub fn outgoing_dyadic_green(
    dx: [f64; 2],
    omega: f64,
    kappa: Complex64,
    m: &MediumParams,
) -> Result<DyadicGreen2x2> {
    let (r, dir) = check_offset(dx, kappa)?;
    let (a, b) = radial_coefficients_outgoing(r, kappa);
    Ok(DyadicGreen2x2::from_radial(
        Complex64::new(0.0, omega * m.mu0),
        a,
        b,
        dir,
    ))
}

/// Result of a Helmholtz–Kirchhoff quadrature check.
#[derive(Clone, Copy, Debug)]
pub struct HkCheck {
    /// Least-squares constant `C` in `∮ Ĝ(x−ξ) conj Ĝ(ξ−y) dσ ≈ C·Re Ĝ(x−y)`.
    pub constant: f64,
    /// `‖S − C·Re Ĝ‖ / ‖S‖` over the four entries.
    pub residual: f64,
}

/// Evaluates the boundary integral of the Helmholtz–Kirchhoff identity on a
/// circle of radius `radius` with `sensors` midpoint nodes and fits its
/// constant against `Re Ĝ(x−y)`.
pub fn hk_residual(
    x: [f64; 2],
    y: [f64; 2],
    omega: f64,
    radius: f64,
    sensors: usize,
    m: &MediumParams,
) -> Result<HkCheck> {
    if x == y {
        return Err(Error::Singular("x and y coincide".into()));
    }
    if !(omega > 0.0) {
        return Err(Error::Domain("omega must be positive".into()));
    }
    let wavelength = 2.0 * PI * m.c0() / omega;
    for (name, p) in [("x", x), ("y", y)] {
        if p[0].hypot(p[1]) > radius / 4.0 {
            return Err(Error::Geometry(format!(
                "{name} lies outside the inner quarter of the circle"
            )));
        }
    }
    if radius < 10.0 * wavelength * (1.0 - 1e-12) {
        return Err(Error::Geometry(format!(
            "radius {radius} is below ten wavelengths ({wavelength})"
        )));
    }
    let arc = 2.0 * PI * radius / sensors as f64;
    if arc > wavelength / 8.0 {
        return Err(Error::Geometry(format!(
            "arc spacing {arc} exceeds an eighth of the wavelength"
        )));
    }
    let kappa = Complex64::new(omega / m.c0(), 0.0);
    let mut acc = DyadicGreen2x2::zero();
    for i in 0..sensors {
        let theta = 2.0 * PI * (i as f64 + 0.5) / sensors as f64;
        let xi = [radius * theta.cos(), radius * theta.sin()];
        let gx = outgoing_dyadic_green([x[0] - xi[0], x[1] - xi[1]], omega, kappa, m)?;
        let gy = outgoing_dyadic_green([xi[0] - y[0], xi[1] - y[1]], omega, kappa, m)?;
        acc.add_scaled(&gx.mul_conj(&gy), arc);
    }
    let target = outgoing_dyadic_green([x[0] - y[0], x[1] - y[1]], omega, kappa, m)?.re();
    let s = acc.entries();
    let t = [target[0][0], target[0][1], target[1][0], target[1][1]];
    let tt: f64 = t.iter().map(|v| v * v).sum();
    let st: f64 = s.iter().zip(&t).map(|(a, b)| a.re * b).sum();
    let constant = st / tt;
    let res: f64 = s
        .iter()
        .zip(&t)
        .map(|(a, b)| (a - constant * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(HkCheck {
        constant,
        residual: res / acc.frobenius(),
    })
}

/// Band-limited point-spread tensor `(ε0/2π) ∫_{|ω|≤Ω} Re Ĝ(dx, ω) dω`.
///
/// `Re Ĝ` is regular at the origin, so `dx = 0` is allowed. The integral is
/// evaluated with a `nodes`-point composite midpoint rule on `(0, Ω]`
/// and doubled by evenness in `ω`.
pub fn point_spread(dx: [f64; 2], omega_max: f64, nodes: usize, m: &MediumParams) -> [[f64; 2]; 2] {
    let r = dx[0].hypot(dx[1]);
    let dir = if r > 0.0 { [dx[0] / r, dx[1] / r] } else { [1.0, 0.0] };
    let dw = omega_max / nodes as f64;
    let mut p = [[0.0; 2]; 2];
    for k in 0..nodes {
        let w = (k as f64 + 0.5) * dw;
        let z = w * r / m.c0();
        // Re of iωμ0·(-(i/4))·(A, B) for the H⁽²⁾ kernel only involves J0 and J1.
        let (j0, j1_over_z) = bessel_j01_over_z(z);
        let a = 0.25 * w * m.mu0 * (j0 - j1_over_z);
        let b = 0.25 * w * m.mu0 * (2.0 * j1_over_z - j0);
        for (i, row) in p.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                *v += (a * delta + b * dir[i] * dir[j]) * dw;
            }
        }
    }
    let scale = 2.0 * m.eps0 / (2.0 * PI);
    for row in p.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    p
}

/// `(J0(z), J1(z)/z)` for real `z ≥ 0`, with the limit `1/2` at zero.
fn bessel_j01_over_z(z: f64) -> (f64, f64) {
    if z < 1e-8 {
        return (1.0, 0.5);
    }
    let (h0, h1) = hankel1_01(Complex64::new(z, 0.0));
    (h0.re, h1.re / z)
}

/// Full width at half maximum of the radial profile of the trace of the
/// point-spread tensor, located by bisection on the first half-maximum crossing.
pub fn psf_fwhm(omega_max: f64, nodes: usize, m: &MediumParams) -> f64 {
    let trace = |r: f64| {
        let p = point_spread([r, 0.0], omega_max, nodes, m);
        p[0][0] + p[1][1]
    };
    let peak = trace(0.0);
    let half = 0.5 * peak;
    // first zero of J1 bounds the main lobe: Ω r / c0 < 3.83
    let mut lo = 0.0;
    let mut hi = 3.8317 * m.c0() / omega_max;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if trace(mid) > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    2.0 * 0.5 * (lo + hi)
}

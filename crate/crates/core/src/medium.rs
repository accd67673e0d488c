//! Dielectric parameters and the Debye dispersion relation.
//!
//! Frequencies follow the analysis convention `v̂(ω) = ∫ v(t) e^{-iωt} dt`.
//! Under that convention the attenuating branch has `Im κ_a(ω) < 0` for
//! `ω > 0`, so that `exp(-i c0 κ_a t)` decays, and the adjoint branch
//! `κ_{-a} = conj(κ_a)` grows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which Debye branch to evaluate: `(a, σ)` or the sign-flipped `(-a, -σ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `κ_a^σ`, the dissipative medium the data propagated through.
    Attenuating,
    /// `κ_{-a}^{-σ}`, the anti-dissipative medium used for back-propagation.
    Adjoint,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Attenuating => 1.0,
            Branch::Adjoint => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    pub eps0: f64,
    pub eps_s: f64,
    pub eps_inf: f64,
    pub mu0: f64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub a: f64,
}

impl Default for MediumParams {
    fn default() -> Self {
        Self::unit()
    }
}

impl MediumParams {
    /// Vacuum-like loss-less medium with every constant equal to one.
    pub fn unit() -> Self {
        Self {
            eps0: 1.0,
            eps_s: 1.0,
            eps_inf: 1.0,
            mu0: 1.0,
            sigma: 0.0,
            a: 0.0,
        }
    }

    /// `ε0 = εs = μ0 = 1`, `ε∞ = 0.5` (so `β = 0.5`, `γ = 1`) with loss constant `a`.
    pub fn debye_half(a: f64) -> Self {
        Self {
            eps0: 1.0,
            eps_s: 1.0,
            eps_inf: 0.5,
            mu0: 1.0,
            sigma: 0.0,
            a,
        }
    }

    pub fn with_loss(mut self, a: f64) -> Self {
        self.a = a;
        self
    }

    pub fn c0(&self) -> f64 {
        1.0 / (self.eps0 * self.mu0).sqrt()
    }

    pub fn gamma(&self) -> f64 {
        (self.eps_s / self.eps0).sqrt()
    }

    pub fn beta(&self) -> f64 {
        1.0 - self.eps_inf / self.eps_s
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    format!("medium.{name}"),
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        positive("eps0", self.eps0)?;
        positive("eps_s", self.eps_s)?;
        positive("eps_inf", self.eps_inf)?;
        positive("mu0", self.mu0)?;
        if self.eps_inf > self.eps_s {
            return Err(Error::config(
                "medium.eps_inf",
                format!("eps_inf = {} exceeds eps_s = {}", self.eps_inf, self.eps_s),
            ));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::config("medium.sigma", "must be finite and >= 0"));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::config("medium.a", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Debye permittivity `ε∞ + (εs − ε∞)/(1 + i a ω) − iσ/(ω ε0)` on the attenuating branch.
pub fn debye_permittivity(omega: f64, m: &MediumParams) -> Result<Complex64> {
    permittivity_on_branch(omega, m, Branch::Attenuating)
}

/// Permittivity with `(a, σ)` replaced by `(sign·a, sign·σ)`.
pub fn permittivity_on_branch(omega: f64, m: &MediumParams, branch: Branch) -> Result<Complex64> {
    let s = branch.sign();
    let a = s * m.a;
    let sigma = s * m.sigma;
    let relax = Complex64::new(m.eps_s - m.eps_inf, 0.0) / Complex64::new(1.0, a * omega);
    let mut eps = Complex64::new(m.eps_inf, 0.0) + relax;
    if sigma != 0.0 {
        if omega == 0.0 {
            return Err(Error::Domain(
                "permittivity of a conducting medium is singular at omega = 0".into(),
            ));
        }
        eps -= Complex64::new(0.0, sigma / (omega * m.eps0));
    }
    Ok(eps)
}

/// Complex wavenumber `κ(ω) = ω·sqrt(μ0 ε(ω))` on the chosen branch (principal square root).
///
/// `ω = 0` in a non-conducting medium returns zero by continuity.
pub fn lossy_wavenumber(omega: f64, m: &MediumParams, branch: Branch) -> Result<Complex64> {
    if omega == 0.0 && m.sigma == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let eps = permittivity_on_branch(omega, m, branch)?;
    Ok(omega * (m.mu0 * eps).sqrt())
}

/// First-order small-loss expansion `γω(1 ∓ i(β/2)ωa)/c0`.
pub fn asymptotic_wavenumber(omega: f64, m: &MediumParams, branch: Branch) -> Result<Complex64> {
    if m.sigma != 0.0 {
        return Err(Error::Domain(
            "asymptotic wavenumber assumes a non-conducting medium (sigma = 0)".into(),
        ));
    }
    let half_loss = -branch.sign() * 0.5 * m.beta() * omega * m.a;
    Ok(m.gamma() * omega * Complex64::new(1.0, half_loss) / m.c0())
}

/// Ratio `ω / (c0 κ(ω))`, with its continuity value `1/γ` at `ω = 0`.
pub(crate) fn admittance_ratio(omega: f64, c0_kappa: Complex64, m: &MediumParams) -> Complex64 {
    if omega == 0.0 {
        Complex64::new(1.0 / m.gamma(), 0.0)
    } else {
        Complex64::new(omega, 0.0) / c0_kappa
    }
}

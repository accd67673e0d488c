//! Attenuation operators on single time traces.
//!
//! Every operator works on the circular DFT axis of the trace itself:
//! `ω_f = 2π f / (N τ)` for the signed bin index `f`, with `N` the sample
//! count (zero-padded to a power of two when needed). Spectra follow the
//! analysis convention `v̂(ω) = ∫ v(t) e^{-iωt} dt ≈ τ·DFT`, synthesis is
//! `(1/2π) ∫ v̂ e^{iωt} dω`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::medium::{admittance_ratio, lossy_wavenumber, Branch, MediumParams};
use crate::util::{is_power_of_two, norm2};

/// Amplification the adjoint branch may apply before it is refused.
pub const GROWTH_LIMIT: f64 = 1e6;

/// Uniformly sampled real signal on `t_j = j τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub tau: f64,
    pub samples: Vec<f64>,
}

impl Trace {
    pub fn new(tau: f64, samples: Vec<f64>) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {tau}")));
        }
        if samples.is_empty() {
            return Err(Error::Domain("empty trace".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("trace contains non-finite samples".into()));
        }
        Ok(Self { tau, samples })
    }

    /// Samples `f(t_j)` of a function.
    pub fn from_fn(tau: f64, len: usize, f: impl Fn(f64) -> f64) -> Self {
        Self {
            tau,
            samples: (0..len).map(|j| f(j as f64 * tau)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.tau * self.samples.len() as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |j| j as f64 * self.tau)
    }

    /// Both endpoints at most `1e-3` of the peak.
    pub fn is_causal(&self) -> bool {
        let peak = crate::util::max_abs(&self.samples);
        let first = self.samples[0].abs();
        let last = self.samples[self.samples.len() - 1].abs();
        peak == 0.0 || (first <= 1e-3 * peak && last <= 1e-3 * peak)
    }

    fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            tau: self.tau,
            samples,
        }
    }
}

/// Complex spectrum on the DFT axis in FFT order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub tau: f64,
    /// Length of the trace this came from (before padding).
    pub source_len: usize,
    pub values: Vec<Complex64>,
    pub hermitian: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn d_omega(&self) -> f64 {
        2.0 * PI / (self.tau * self.values.len() as f64)
    }

    pub fn omega(&self, bin: usize) -> f64 {
        bin_omega(bin, self.values.len(), self.tau)
    }
}

/// Angular frequency of FFT bin `bin` on an axis of `n` samples.
/// The Nyquist bin is reported as positive.
pub fn bin_omega(bin: usize, n: usize, tau: f64) -> f64 {
    let signed = if bin <= n / 2 {
        bin as f64
    } else {
        bin as f64 - n as f64
    };
    2.0 * PI * signed / (n as f64 * tau)
}

fn fft_len(len: usize) -> usize {
    if is_power_of_two(len) {
        len
    } else {
        len.next_power_of_two()
    }
}

/// `τ·DFT` of the (zero-padded) trace.
pub fn to_spectrum(tr: &Trace) -> Spectrum {
    let n = fft_len(tr.len());
    let mut buf: Vec<Complex64> = tr
        .samples
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    for v in buf.iter_mut() {
        *v *= tr.tau;
    }
    Spectrum {
        tau: tr.tau,
        source_len: tr.len(),
        values: buf,
        hermitian: true,
    }
}

/// Inverse of [`to_spectrum`]; the real part is kept and padding dropped.
pub fn from_spectrum(sp: &Spectrum) -> Trace {
    let n = sp.len();
    let mut buf = sp.values.clone();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * sp.tau);
    Trace {
        tau: sp.tau,
        samples: buf[..sp.source_len].iter().map(|v| v.re * scale).collect(),
    }
}

/// Multiplies the spectrum of `tr` by `h(ω)` and returns the real trace.
fn spectral_filter(tr: &Trace, h: impl Fn(usize, f64) -> Complex64) -> Trace {
    let mut sp = to_spectrum(tr);
    let n = sp.len();
    for (f, v) in sp.values.iter_mut().enumerate() {
        *v *= h(f, bin_omega(f, n, tr.tau));
    }
    from_spectrum(&sp)
}

/// `d^order/dt^order` by multiplication with `(iω)^order`; the Nyquist bin is
/// dropped for odd orders.
pub fn spectral_derivative(tr: &Trace, order: u32) -> Trace {
    let n = fft_len(tr.len());
    spectral_filter(tr, |f, w| {
        if order % 2 == 1 && n % 2 == 0 && f == n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, w).powu(order)
        }
    })
}

/// `φ′ + (tφ)″`, the first-order loss correction shared by the asymptotic operators.
fn loss_correction(tr: &Trace) -> Trace {
    let t_phi = tr.with_samples(tr.times().zip(&tr.samples).map(|(t, v)| t * v).collect());
    let d1 = spectral_derivative(tr, 1);
    let d2 = spectral_derivative(&t_phi, 2);
    tr.with_samples(d1.samples.iter().zip(&d2.samples).map(|(a, b)| a + b).collect())
}

/// Evaluates the band-limited interpolant of `tr` at `t_j·scale`. Arguments
/// beyond the record are treated as zero, since traces are causal and decayed.
fn dilate(tr: &Trace, scale: f64) -> Trace {
    if scale == 1.0 {
        return tr.clone();
    }
    let sp = to_spectrum(tr);
    let n = sp.len();
    let dw = sp.d_omega();
    let end = n as f64 * tr.tau;
    let samples = tr
        .times()
        .map(|t| {
            let s = t * scale;
            if s >= end {
                return 0.0;
            }
            // Hermitian sum: DC + 2 Re over positive bins + Nyquist
            let step = Complex64::from_polar(1.0, dw * s);
            let mut phase = step;
            let mut acc = sp.values[0].re;
            for f in 1..n / 2 {
                acc += 2.0 * (sp.values[f] * phase).re;
                phase *= step;
            }
            if n % 2 == 0 {
                acc += (sp.values[n / 2] * Complex64::from_polar(1.0, PI / tr.tau * s)).re;
            }
            acc * dw / (2.0 * PI)
        })
        .collect();
    tr.with_samples(samples)
}

fn spectral_tail_warning(tr: &Trace, what: &str) {
    let sp = to_spectrum(tr);
    let nyq = PI / tr.tau;
    let (mut tail, mut total) = (0.0, 0.0);
    for (f, v) in sp.values.iter().enumerate() {
        let e = v.norm_sqr();
        total += e;
        if bin_omega(f, sp.len(), tr.tau).abs() > 0.9 * nyq {
            tail += e;
        }
    }
    if total > 0.0 && tail > 1e-6 * total {
        log::warn!(
            "{what}: {:.2e} of the spectral energy lies above 0.9 x Nyquist; derivatives may alias",
            tail / total
        );
    }
}

/// Precomputed exact attenuation operator for traces of one length and step.
///
/// Holds `z_f = exp(-i c0 κ_a(ω_f) τ)` and `ω_f / (c0 κ_a(ω_f))` for the
/// non-negative bins. The inner transform `Σ_j φ_j z_f^j τ` is a Laplace-type
/// sum with complex frequency, evaluated by Horner's rule. On the circular
/// axis the trapezoid rule has equal weights, so for `κ_a = ω` this is the DFT.
#[derive(Clone, Debug)]
pub struct AttenuationPlan {
    len: usize,
    n: usize,
    tau: f64,
    z: Vec<Complex64>,
    ratio: Vec<Complex64>,
}

impl AttenuationPlan {
    pub fn new(len: usize, tau: f64, m: &MediumParams) -> Result<Self> {
        let n = fft_len(len);
        let c0 = m.c0();
        let mut z = Vec::with_capacity(n / 2 + 1);
        let mut ratio = Vec::with_capacity(n / 2 + 1);
        for f in 0..=n / 2 {
            let w = bin_omega(f, n, tau);
            // σ > 0 has no finite static limit; the static bin carries no
            // propagating content, so it is dropped in that case.
            if w == 0.0 && m.sigma > 0.0 {
                z.push(Complex64::new(1.0, 0.0));
                ratio.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let k = c0 * lossy_wavenumber(w, m, Branch::Attenuating)?;
            z.push((Complex64::new(0.0, -tau) * k).exp());
            ratio.push(admittance_ratio(w, k, m));
        }
        Ok(Self {
            len,
            n,
            tau,
            z,
            ratio,
        })
    }

    pub fn apply(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.len {
            return Err(Error::Shape(format!(
                "plan built for {} samples, trace has {}",
                self.len,
                samples.len()
            )));
        }
        let n = self.n;
        let mut spec = vec![Complex64::new(0.0, 0.0); n];
        for f in 0..=n / 2 {
            let z = self.z[f];
            let mut acc = Complex64::new(0.0, 0.0);
            for &v in samples.iter().rev() {
                acc = acc * z + v;
            }
            spec[f] = self.ratio[f] * acc * self.tau;
        }
        // The Nyquist bin is its own mirror; its imaginary part cannot survive
        // in a real output.
        let dropped = spec[n / 2].im.abs();
        spec[n / 2].im = 0.0;
        for f in 1..n / 2 {
            spec[n - f] = spec[f].conj();
        }
        let sp = Spectrum {
            tau: self.tau,
            source_len: self.len,
            values: spec,
            hermitian: true,
        };
        let out = from_spectrum(&sp).samples;
        let out_norm = norm2(&out);
        let dropped_mass = dropped / (n as f64 * self.tau) * (self.len as f64).sqrt();
        if out_norm > 0.0 && dropped_mass > 1e-6 * out_norm {
            log::warn!(
                "attenuation: symmetrization discarded {:.2e} of the output norm",
                dropped_mass / out_norm
            );
        }
        Ok(out)
    }
}

/// Exact attenuation operator `L_a`:
/// `L_a[φ](t) = (1/2π) ∫ ω/(c0 κ_a) (∫ φ(s) e^{-i c0 κ_a s} ds) e^{iωt} dω`.
pub fn apply_l_a_exact(tr: &Trace, m: &MediumParams) -> Result<Trace> {
    let plan = AttenuationPlan::new(tr.len(), tr.tau, m)?;
    Ok(tr.with_samples(plan.apply(&tr.samples)?))
}

/// Small-loss expansion of `L_a`:
/// `(1/γ²) φ(t/γ) + (βa/2γ³) [φ′ + (tφ)″](t/γ)`.
pub fn apply_l_a_asymptotic(tr: &Trace, m: &MediumParams) -> Result<Trace> {
    require_lossless_conduction(m)?;
    spectral_tail_warning(tr, "asymptotic attenuation");
    let g = m.gamma();
    let corr = loss_correction(tr);
    let c = m.beta() * m.a / (2.0 * g.powi(3));
    let sum = tr.with_samples(
        tr.samples
            .iter()
            .zip(&corr.samples)
            .map(|(p, d)| p / (g * g) + c * d)
            .collect(),
    );
    Ok(dilate(&sum, 1.0 / g))
}

/// Ideal low-pass `P_ρ`: keeps `|ω| ≤ ρ`.
pub fn apply_p_rho(tr: &Trace, rho: f64) -> Result<Trace> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("cutoff must be positive, got {rho}")));
    }
    Ok(spectral_filter(tr, |_, w| {
        if w.abs() <= rho {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Largest cutoff for which the adjoint branch amplifies a record of length
/// `duration` by at most [`GROWTH_LIMIT`]: `exp(γ (β/2) ρ² a T) ≤ 1e6`.
pub fn max_admissible_rho(m: &MediumParams, duration: f64) -> f64 {
    let rate = m.gamma() * 0.5 * m.beta() * m.a * duration;
    if rate <= 0.0 {
        f64::INFINITY
    } else {
        (GROWTH_LIMIT.ln() / rate).sqrt()
    }
}

/// Fails with the admissible bound when `rho` exceeds it.
pub fn check_growth_guard(m: &MediumParams, rho: f64, duration: f64) -> Result<()> {
    let rho_max = max_admissible_rho(m, duration);
    if rho > rho_max {
        Err(Error::GrowthGuard { rho, rho_max })
    } else {
        Ok(())
    }
}

/// Truncated adjoint operator
/// `L*_{-a,ρ}[ψ](t) = (1/2π) ∫_{|ω|≤ρ} ω/(c0 κ_{-a}) (∫ ψ(s) e^{iωs} ds) e^{-i c0 κ_{-a} t} dω`,
/// by direct double quadrature on the DFT frequency grid.
pub fn apply_l_star_rho(tr: &Trace, m: &MediumParams, rho: f64) -> Result<Trace> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("cutoff must be positive, got {rho}")));
    }
    check_growth_guard(m, rho, tr.duration())?;
    let n = fft_len(tr.len());
    let tau = tr.tau;
    let dw = 2.0 * PI / (n as f64 * tau);
    let c0 = m.c0();
    let mut out = vec![0.0; tr.len()];
    for f in 0..=n / 2 {
        let w = bin_omega(f, n, tau);
        if w > rho {
            break;
        }
        let k = if w == 0.0 && m.sigma > 0.0 {
            continue;
        } else {
            c0 * lossy_wavenumber(w, m, Branch::Adjoint)?
        };
        let ratio = admittance_ratio(w, k, m);
        // inner ∫ ψ(s) e^{iωs} ds by the periodic trapezoid rule
        let step = Complex64::from_polar(1.0, w * tau);
        let mut acc = Complex64::new(0.0, 0.0);
        for &v in tr.samples.iter().rev() {
            acc = acc * step + v;
        }
        let coef = ratio * acc * tau * dw / (2.0 * PI);
        // ±ω pair folds into 2 Re; the Nyquist bin and DC appear once
        let weight = if f == 0 || (n % 2 == 0 && f == n / 2) { 1.0 } else { 2.0 };
        let zt = (Complex64::new(0.0, -tau) * k).exp();
        let mut phase = Complex64::new(1.0, 0.0);
        for o in out.iter_mut() {
            *o += weight * (coef * phase).re;
            phase *= zt;
        }
    }
    Ok(tr.with_samples(out))
}

/// First-order approximate inverse of `L_a`:
/// `γ² φ(γt) − (β a γ²/2) [φ′ + (tφ)″](γt)`. Only `order = 1` exists.
pub fn inverse_filter(tr: &Trace, m: &MediumParams, order: u32) -> Result<Trace> {
    if order != 1 {
        return Err(Error::NotImplemented(format!(
            "approximate inverse of order {order}; only order 1 is available"
        )));
    }
    inverse_filter_k1(tr, m)
}

pub fn inverse_filter_k1(tr: &Trace, m: &MediumParams) -> Result<Trace> {
    require_lossless_conduction(m)?;
    spectral_tail_warning(tr, "inverse filter");
    let g = m.gamma();
    let corr = loss_correction(tr);
    let c = m.beta() * m.a / 2.0;
    let sum = tr.with_samples(
        tr.samples
            .iter()
            .zip(&corr.samples)
            .map(|(p, d)| g * g * (p - c * d))
            .collect(),
    );
    Ok(dilate(&sum, g))
}

fn require_lossless_conduction(m: &MediumParams) -> Result<()> {
    if m.sigma != 0.0 {
        Err(Error::Domain(
            "the small-loss expansions assume sigma = 0".into(),
        ))
    } else {
        Ok(())
    }
}

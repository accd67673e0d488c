//! Time-reversal imaging functionals and image-quality metrics.
//!
//! All three functionals are evaluated in the frequency domain as Green-kernel
//! sums over sensors and frequencies,
//!
//! `J(x) = −(ε0 γ^p / (2π μ0 c0)) Re Σ_ω Σ_ξ Ĝ(x−ξ, ω) · conj(d̂(ξ, ω)) Δσ Δω`,
//!
//! with `Ĝ` the outgoing dyad of [`crate::greens`] on either the loss-less
//! (`p = 0`) or adjoint (`p = 3`) wavenumber. Negative frequencies are folded
//! into the positive ones by Hermitian symmetry and `ω = 0` is skipped.
//! Pixels outside the sensor circle shrunk by two cells are left at zero,
//! which also masks the near-field singularity at the sensors.

use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::attenuation::{bin_omega, check_growth_guard, inverse_filter, to_spectrum, Trace};
use crate::error::{Error, Result};
use crate::forward::{BoundaryData, Grid2D, VectorField2};
use crate::greens::radial_coefficients_outgoing;
use crate::medium::{lossy_wavenumber, Branch, MediumParams};
use crate::util::is_power_of_two;

/// Overall sign relating the reconstruction to the source, fixed by the
/// point-source calibration in the acceptance suite.
pub const PIPELINE_SIGN: f64 = 1.0;

/// Mask radius around each sensor, in cells.
pub const SENSOR_MASK_CELLS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Ideal,
    Adjoint,
    Preprocess,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ideal => "ideal",
            Algorithm::Adjoint => "adjoint",
            Algorithm::Preprocess => "preprocess",
        }
    }

    fn code(self) -> u8 {
        match self {
            Algorithm::Ideal => 0,
            Algorithm::Adjoint => 1,
            Algorithm::Preprocess => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Algorithm::Ideal),
            1 => Ok(Algorithm::Adjoint),
            2 => Ok(Algorithm::Preprocess),
            _ => Err(Error::Format(format!("unknown algorithm code {c}"))),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Algorithm::Ideal),
            "adjoint" => Ok(Algorithm::Adjoint),
            "preprocess" => Ok(Algorithm::Preprocess),
            other => Err(Error::config(
                "algorithm",
                format!("unknown algorithm `{other}` (expected ideal, adjoint or preprocess)"),
            )),
        }
    }
}

/// Reconstructed source with the parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageField {
    pub grid: Grid2D,
    pub field: VectorField2,
    pub algorithm: Algorithm,
    /// frequency cutoff actually used (ω_max or ρ)
    pub cutoff: f64,
    pub loss: f64,
    pub order: u32,
    pub runtime_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRecord {
    /// normalized cross-correlation per component after mean removal
    pub correlation: [f64; 2],
    /// distance between support centroids, in cells
    pub centroid_error: f64,
    /// peak magnitude over the RMS magnitude where the truth vanishes
    pub peak_to_background: f64,
    pub runtime_s: f64,
}

impl MetricsRecord {
    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        format!(
            "correlation_1 = {:.12}\ncorrelation_2 = {:.12}\ncentroid_error_cells = {:.12}\npeak_to_background = {:.12}\nruntime_s = {:.6}\n",
            self.correlation[0],
            self.correlation[1],
            self.centroid_error,
            self.peak_to_background,
            self.runtime_s
        )
    }
}

/// Options shared by the back-projection functionals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackprojectionOptions {
    /// zero-padding factor of the traces before the DFT (power of two); refines Δω
    pub pad: usize,
}

impl Default for BackprojectionOptions {
    fn default() -> Self {
        Self { pad: 1 }
    }
}

/// Radial table of the dyad coefficients `(A, B)` at one frequency, read with
/// four-point Lagrange interpolation.
struct RadialTable {
    dr: f64,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl RadialTable {
    fn new(kappa: Complex64, r_min: f64, r_max: f64, h: f64) -> Self {
        let dr = (h / 16.0).min(0.1 / kappa.norm()).min(r_min / 4.0);
        let count = (r_max / dr).ceil() as usize + 3;
        let mut a = Vec::with_capacity(count);
        let mut b = Vec::with_capacity(count);
        // node 0 sits at the origin where the kernel is singular; it is never
        // used since r ≥ r_min ≥ 4·dr
        a.push(Complex64::new(0.0, 0.0));
        b.push(Complex64::new(0.0, 0.0));
        for i in 1..count {
            let (ai, bi) = radial_coefficients_outgoing(i as f64 * dr, kappa);
            a.push(ai);
            b.push(bi);
        }
        Self { dr, a, b }
    }

    #[inline]
    fn eval(&self, r: f64) -> (Complex64, Complex64) {
        let u = r / self.dr;
        let i = u.floor() as usize;
        let t = u - i as f64;
        let w = [
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ];
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        for (k, wk) in w.iter().enumerate() {
            a += self.a[i + k - 1] * wk;
            b += self.b[i + k - 1] * wk;
        }
        (a, b)
    }
}

/// One frequency of the back-projection sum.
struct FrequencyTerm {
    omega: f64,
    kappa: Complex64,
    /// Hermitian fold weight (2 for ω>0 off Nyquist, 1 otherwise)
    weight: f64,
    bin: usize,
}

/// Per-sensor spectra `d̂(ξ, ω)` of both components on a padded DFT axis.
struct DataSpectra {
    n: usize,
    tau: f64,
    /// `[sensor][comp]` spectra in FFT order
    values: Vec<[Vec<Complex64>; 2]>,
}

impl DataSpectra {
    fn new(data: &BoundaryData, pad: usize) -> Result<Self> {
        if pad == 0 || !is_power_of_two(pad) {
            return Err(Error::Domain(format!("padding factor must be a power of two, got {pad}")));
        }
        let len = data.steps * pad;
        let values = (0..data.sensors.count)
            .into_par_iter()
            .map(|s| {
                let spec = |c: usize| {
                    let mut samples = data.trace(s, c).to_vec();
                    samples.resize(len, 0.0);
                    to_spectrum(&Trace { tau: data.tau, samples }).values
                };
                [spec(0), spec(1)]
            })
            .collect::<Vec<_>>();
        let n = values.first().map(|v| v[0].len()).unwrap_or(len.next_power_of_two());
        Ok(Self {
            n,
            tau: data.tau,
            values,
        })
    }

    fn positive_bins(&self, cutoff: f64) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let n = self.n;
        (1..=n / 2).filter_map(move |f| {
            let w = bin_omega(f, n, self.tau);
            if w > cutoff {
                None
            } else {
                let weight = if f == n / 2 { 1.0 } else { 2.0 };
                Some((f, w, weight))
            }
        })
    }
}

fn interior_pixels(grid: &Grid2D, radius: f64) -> Vec<usize> {
    let n = grid.n;
    let limit = radius - SENSOR_MASK_CELLS * grid.h();
    (0..n * n)
        .filter(|&k| grid.coord(k % n).hypot(grid.coord(k / n)) <= limit)
        .collect()
}

/// Core kernel sum; `scale` multiplies the real part.
fn backproject(
    spectra: &DataSpectra,
    data: &BoundaryData,
    grid: &Grid2D,
    m: &MediumParams,
    terms: &[FrequencyTerm],
    scale: f64,
) -> VectorField2 {
    let n = grid.n;
    let h = grid.h();
    let sensors = data.sensors.positions();
    let arc = data.sensors.arc_weight();
    let dw = 2.0 * std::f64::consts::PI / (spectra.n as f64 * spectra.tau);
    let pixels = interior_pixels(grid, data.sensors.radius);
    let r_min = SENSOR_MASK_CELLS * h;
    let r_max = 2.0 * data.sensors.radius;

    let mut acc = vec![[0.0f64; 2]; pixels.len()];
    for term in terms {
        let table = RadialTable::new(term.kappa, r_min, r_max, h);
        let conj_d: Vec<[Complex64; 2]> = spectra
            .values
            .iter()
            .map(|v| [v[0][term.bin].conj(), v[1][term.bin].conj()])
            .collect();
        let pref = Complex64::new(0.0, term.omega * m.mu0) * (term.weight * arc * dw * scale);
        let contrib: Vec<[f64; 2]> = pixels
            .par_iter()
            .map(|&k| {
                let x = [grid.coord(k % n), grid.coord(k / n)];
                let mut s = [Complex64::new(0.0, 0.0); 2];
                for (xi, d) in sensors.iter().zip(&conj_d) {
                    let dx = [x[0] - xi[0], x[1] - xi[1]];
                    let r = dx[0].hypot(dx[1]);
                    let dir = [dx[0] / r, dx[1] / r];
                    let (a, b) = table.eval(r);
                    let proj = (d[0] * dir[0] + d[1] * dir[1]) * b;
                    s[0] += a * d[0] + proj * dir[0];
                    s[1] += a * d[1] + proj * dir[1];
                }
                [(pref * s[0]).re, (pref * s[1]).re]
            })
            .collect();
        for (a, c) in acc.iter_mut().zip(&contrib) {
            a[0] += c[0];
            a[1] += c[1];
        }
    }
    let mut out = VectorField2::zeros(n);
    for (&k, v) in pixels.iter().zip(&acc) {
        out.c1[k] = v[0];
        out.c2[k] = v[1];
    }
    out
}

fn check_grid(data: &BoundaryData, grid: &Grid2D) -> Result<()> {
    grid.validate()?;
    if data.sensors.radius >= 0.5 * grid.l {
        return Err(Error::Shape(format!(
            "sensor circle radius {} does not fit the imaging grid of side {}",
            data.sensors.radius, grid.l
        )));
    }
    Ok(())
}

/// Classical time reversal `J₀` on loss-less data, frequencies `0 < ω ≤ omega_max`.
pub fn backpropagate_ideal(
    data: &BoundaryData,
    grid: &Grid2D,
    m: &MediumParams,
    omega_max: f64,
) -> Result<ImageField> {
    backpropagate_ideal_with(data, grid, m, omega_max, BackprojectionOptions::default())
}

pub fn backpropagate_ideal_with(
    data: &BoundaryData,
    grid: &Grid2D,
    m: &MediumParams,
    omega_max: f64,
    opts: BackprojectionOptions,
) -> Result<ImageField> {
    if data.attenuated {
        return Err(Error::DataState(
            "classical time reversal expects loss-less data; use the adjoint or pre-processing functional".into(),
        ));
    }
    ideal_unchecked(data, grid, m, omega_max, opts, Algorithm::Ideal, 0)
}

/// The loss-less functional applied to attenuated data as if it were loss-less,
/// band-limited to `omega_max`. This is the uncorrected baseline the
/// attenuation-aware functionals are compared against.
pub fn backpropagate_uncorrected(
    data: &BoundaryData,
    grid: &Grid2D,
    m: &MediumParams,
    omega_max: f64,
) -> Result<ImageField> {
    let mut img = ideal_unchecked(
        data,
        grid,
        m,
        omega_max,
        BackprojectionOptions::default(),
        Algorithm::Ideal,
        0,
    )?;
    img.loss = data.loss;
    Ok(img)
}

fn ideal_unchecked(
    data: &BoundaryData,
    grid: &Grid2D,
    m: &MediumParams,
    omega_max: f64,
    opts: BackprojectionOptions,
    algorithm: Algorithm,
    order: u32,
) -> Result<ImageField> {
    let start = Instant::now();
    check_grid(data, grid)?;
    let nyquist = std::f64::consts::PI / data.tau;
    if !(omega_max > 0.0 && omega_max <= nyquist * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "omega_max = {omega_max} must lie in (0, pi/tau = {nyquist}]"
        )));
    }
    let spectra = DataSpectra::new(data, opts.pad)?;
    let terms: Vec<FrequencyTerm> = spectra
        .positive_bins(omega_max)
        .map(|(bin, omega, weight)| FrequencyTerm {
            omega,
            kappa: Complex64::new(omega / m.c0(), 0.0),
            weight,
            bin,
        })
        .collect();
    let scale = -PIPELINE_SIGN * m.eps0 / (2.0 * std::f64::consts::PI * m.mu0 * m.c0());
    let field = backproject(&spectra, data, grid, m, &terms, scale);
    Ok(ImageField {
        grid: *grid,
        field,
        algorithm,
        cutoff: omega_max,
        loss: data.loss,
        order,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Truncated adjoint functional `J_{a,ρ}` on attenuated data.
pub fn backpropagate_adjoint(
    data: &BoundaryData,
    grid: &Grid2D,
    m: &MediumParams,
    rho: f64,
) -> Result<ImageField> {
    backpropagate_adjoint_with(data, grid, m, rho, BackprojectionOptions::default())
}

pub fn backpropagate_adjoint_with(
    data: &BoundaryData,
    grid: &Grid2D,
    m: &MediumParams,
    rho: f64,
    opts: BackprojectionOptions,
) -> Result<ImageField> {
    let start = Instant::now();
    if !data.attenuated {
        return Err(Error::DataState(
            "the adjoint functional expects attenuated data".into(),
        ));
    }
    check_grid(data, grid)?;
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("cutoff must be positive, got {rho}")));
    }
    // the adjoint kernel grows like exp(Im κ r); the record length usually dominates
    let reach = data.duration().max(2.0 * data.sensors.radius / m.c0());
    check_growth_guard(m, rho, reach)?;
    let spectra = DataSpectra::new(data, opts.pad)?;
    let terms: Vec<FrequencyTerm> = spectra
        .positive_bins(rho)
        .map(|(bin, omega, weight)| {
            Ok(FrequencyTerm {
                omega,
                kappa: lossy_wavenumber(omega, m, Branch::Adjoint)?,
                weight,
                bin,
            })
        })
        .collect::<Result<_>>()?;
    let scale =
        -PIPELINE_SIGN * m.eps0 * m.gamma().powi(3) / (2.0 * std::f64::consts::PI * m.mu0 * m.c0());
    let field = backproject(&spectra, data, grid, m, &terms, scale);
    Ok(ImageField {
        grid: *grid,
        field,
        algorithm: Algorithm::Adjoint,
        cutoff: rho,
        loss: m.a,
        order: 0,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Applies the approximate inverse filter of the given order to every trace.
pub fn filter_data(data: &BoundaryData, m: &MediumParams, order: u32) -> Result<BoundaryData> {
    if !data.attenuated {
        return Err(Error::DataState("the inverse filter expects attenuated data".into()));
    }
    let traces: Vec<Vec<f64>> = data
        .samples
        .par_chunks(data.steps)
        .map(|tr| {
            let t = Trace::new(data.tau, tr.to_vec())?;
            Ok(inverse_filter(&t, m, order)?.samples)
        })
        .collect::<Result<_>>()?;
    let mut out = data.clone();
    out.samples = traces.concat();
    out.attenuated = false;
    Ok(out)
}

/// Pre-processed time reversal: inverse-filter every trace, then classical
/// time reversal with frequencies up to `omega_max`.
pub fn preprocess_time_reversal(
    data: &BoundaryData,
    grid: &Grid2D,
    m: &MediumParams,
    order: u32,
    omega_max: f64,
) -> Result<ImageField> {
    preprocess_time_reversal_with(data, grid, m, order, omega_max, BackprojectionOptions::default())
}

pub fn preprocess_time_reversal_with(
    data: &BoundaryData,
    grid: &Grid2D,
    m: &MediumParams,
    order: u32,
    omega_max: f64,
    opts: BackprojectionOptions,
) -> Result<ImageField> {
    let start = Instant::now();
    if order != 1 {
        return Err(Error::NotImplemented(format!(
            "pre-processing of order {order}; only order 1 is available"
        )));
    }
    let filtered = filter_data(data, m, order)?;
    let mut img = ideal_unchecked(&filtered, grid, m, omega_max, opts, Algorithm::Preprocess, order)?;
    img.loss = m.a;
    img.runtime_s = start.elapsed().as_secs_f64();
    Ok(img)
}

fn centered(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

/// Normalized cross-correlation after mean removal; 0 when either side is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (centered(a), centered(b));
    let ab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        (ab / (aa * bb).sqrt()).clamp(-1.0, 1.0)
    }
}

fn magnitude(f: &VectorField2) -> Vec<f64> {
    f.c1.iter().zip(&f.c2).map(|(a, b)| a.hypot(*b)).collect()
}

/// Magnitude-weighted centroid of the pixels at or above half the peak magnitude.
pub fn support_centroid(f: &VectorField2, grid: &Grid2D) -> Option<[f64; 2]> {
    let mag = magnitude(f);
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return None;
    }
    let n = grid.n;
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for (k, &v) in mag.iter().enumerate() {
        if v >= 0.5 * peak {
            sx += v * grid.coord(k % n);
            sy += v * grid.coord(k / n);
            sw += v;
        }
    }
    Some([sx / sw, sy / sw])
}

pub fn image_metrics(img: &ImageField, truth: &VectorField2) -> Result<MetricsRecord> {
    let f = &img.field;
    if f.n != truth.n || img.grid.n != truth.n {
        return Err(Error::Shape(format!(
            "image is {}², truth is {}²",
            f.n, truth.n
        )));
    }
    let tmag = magnitude(truth);
    let tpeak = tmag.iter().cloned().fold(0.0, f64::max);
    if tpeak == 0.0 {
        return Err(Error::DegenerateTruth("truth field is identically zero".into()));
    }
    let correlation = [correlation(&f.c1, &truth.c1), correlation(&f.c2, &truth.c2)];
    let centroid_error = match (support_centroid(f, &img.grid), support_centroid(truth, &img.grid)) {
        (Some(a), Some(b)) => (a[0] - b[0]).hypot(a[1] - b[1]) / img.grid.h(),
        _ => f64::INFINITY,
    };
    let imag = magnitude(f);
    let ipeak = imag.iter().cloned().fold(0.0, f64::max);
    let (mut bg, mut count) = (0.0, 0usize);
    for (i, t) in imag.iter().zip(&tmag) {
        if *t <= 0.01 * tpeak {
            bg += i * i;
            count += 1;
        }
    }
    let bg_rms = if count > 0 { (bg / count as f64).sqrt() } else { 0.0 };
    let peak_to_background = if bg_rms > 0.0 { ipeak / bg_rms } else { f64::INFINITY };
    Ok(MetricsRecord {
        correlation,
        centroid_error,
        peak_to_background,
        runtime_s: img.runtime_s,
    })
}

const IMAGE_MAGIC: &[u8; 8] = b"LTRIMAGE";
const IMAGE_VERSION: u32 = 1;

impl ImageField {
    /// Wraps a ground-truth field so it can be stored in the image container.
    pub fn from_truth(grid: Grid2D, field: VectorField2) -> Self {
        Self {
            grid,
            field,
            algorithm: Algorithm::Ideal,
            cutoff: 0.0,
            loss: 0.0,
            order: 0,
            runtime_s: 0.0,
        }
    }

    /// Header: magic `LTRIMAGE`, version u32, n u64, l f64, algorithm u8,
    /// cutoff f64, loss f64, order u32; then the `c1` and `c2` planes as
    /// little-endian f64 in row-major order. The runtime is not stored so
    /// that repeated runs give byte-identical files; it reads back as 0.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(IMAGE_MAGIC)?;
        w.write_all(&IMAGE_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        w.write_all(&self.grid.l.to_le_bytes())?;
        w.write_all(&[self.algorithm.code()])?;
        w.write_all(&self.cutoff.to_le_bytes())?;
        w.write_all(&self.loss.to_le_bytes())?;
        w.write_all(&self.order.to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.field.c1.len());
        for v in self.field.c1.iter().chain(&self.field.c2) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != IMAGE_MAGIC {
            return Err(Error::Format("not an image file (bad magic)".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != IMAGE_VERSION {
            return Err(Error::Format(format!("unsupported image version {version}")));
        }
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let l = f64::from_le_bytes(b8);
        r.read_exact(&mut b1)?;
        let algorithm = Algorithm::from_code(b1[0])?;
        r.read_exact(&mut b8)?;
        let cutoff = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let loss = f64::from_le_bytes(b8);
        r.read_exact(&mut b4)?;
        let order = u32::from_le_bytes(b4);
        let grid = Grid2D { l, n };
        grid.validate().map_err(|e| Error::Format(format!("bad image header: {e}")))?;
        let mut bytes = vec![0u8; 16 * n * n];
        r.read_exact(&mut bytes)?;
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (c1, c2) = vals.split_at(n * n);
        Ok(Self {
            grid,
            field: VectorField2 {
                n,
                c1: c1.to_vec(),
                c2: c2.to_vec(),
            },
            algorithm,
            cutoff,
            loss,
            order,
            runtime_s: 0.0,
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

    /// Writes `<stem>_c1.png`, `<stem>_c2.png` and `<stem>_range.txt` into `dir`.
    pub fn save_heatmaps(&self, dir: &Path, stem: &str) -> Result<()> {
        let mut range = String::new();
        for (c, plane) in [&self.field.c1, &self.field.c2].iter().enumerate() {
            let (lo, hi) = write_png(&dir.join(format!("{stem}_c{}.png", c + 1)), plane, self.grid.n)?;
            range.push_str(&format!("c{}_min = {lo:.12e}\nc{}_max = {hi:.12e}\n", c + 1, c + 1));
        }
        std::fs::write(dir.join(format!("{stem}_range.txt")), range)?;
        Ok(())
    }
}

/// 8-bit grayscale, black at the minimum and white at the maximum, with the
/// `x2` axis pointing up. Returns the mapped range.
fn write_png(path: &Path, plane: &[f64], n: usize) -> Result<(f64, f64)> {
    let lo = plane.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = plane.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut pixels = Vec::with_capacity(n * n);
    for j in (0..n).rev() {
        for i in 0..n {
            let v = (plane[j * n + i] - lo) / span;
            pixels.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut enc = png::Encoder::new(file, n as u32, n as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc
        .write_header()
        .map_err(|e| Error::Format(format!("png header: {e}")))?;
    writer
        .write_image_data(&pixels)
        .map_err(|e| Error::Format(format!("png data: {e}")))?;
    Ok((lo, hi))
}

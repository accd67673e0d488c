//! Hankel functions of the first kind, orders 0 and 1, for complex argument.
//!
//! Ascending series below `|z| = 12`, Hankel's asymptotic expansion above.
//! Both sides stay within about 1e-11 relative error for arguments near the
//! positive real axis, which is the regime the Green kernels use.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Below this modulus the ascending series is used.
pub const SERIES_LIMIT: f64 = 12.0;

/// `(H0⁽¹⁾(z), H1⁽¹⁾(z))` on the principal branch. Panics on `z = 0`.
///
/// The negative real axis is taken as approached from above, so that
/// `H⁽¹⁾(−x)` continues `H⁽¹⁾(x)` through the upper half plane.
pub fn hankel1_01(z: Complex64) -> (Complex64, Complex64) {
    assert!(z.norm() > 0.0, "Hankel functions are singular at z = 0");
    if z.re < 0.0 && z.im >= 0.0 {
        // H0⁽¹⁾(w e^{iπ}) = −H0⁽²⁾(w), H1⁽¹⁾(w e^{iπ}) = H1⁽²⁾(w)
        let (h0, h1) = hankel2_01(-z);
        return (-h0, h1);
    }
    if z.norm() < SERIES_LIMIT {
        hankel1_series(z)
    } else {
        hankel1_asymptotic(z)
    }
}

/// `(H0⁽²⁾(z), H1⁽²⁾(z))` through `H⁽²⁾(z) = conj(H⁽¹⁾(conj z))`.
pub fn hankel2_01(z: Complex64) -> (Complex64, Complex64) {
    let (h0, h1) = hankel1_01(z.conj());
    (h0.conj(), h1.conj())
}

/// Ascending-series branch of [`hankel1_01`], valid for any `z` but accurate only below [`SERIES_LIMIT`].
pub fn hankel1_series(z: Complex64) -> (Complex64, Complex64) {
    let q = -(z * z) / 4.0;
    let half = z / 2.0;

    // J0 terms t_k = q^k/(k!)^2, J1 terms u_k = q^k/(k!(k+1)!)
    let mut t = Complex64::new(1.0, 0.0);
    let mut u = Complex64::new(1.0, 0.0);
    let mut j0 = t;
    let mut j1s = u;
    let mut s0 = Complex64::new(0.0, 0.0);
    // H_0 + H_1 = 1 for the k = 0 term of the Y1 sum
    let mut s1 = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        t *= q / (kf * kf);
        u *= q / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        let next_harmonic = harmonic + 1.0 / (kf + 1.0);
        j0 += t;
        j1s += u;
        s0 += t * harmonic;
        s1 += u * (harmonic + next_harmonic);
        if t.norm() < 1e-18 * j0.norm().max(1e-300) && u.norm() < 1e-18 * j1s.norm().max(1e-300)
        {
            break;
        }
    }
    let j1 = half * j1s;
    let log_term = half.ln() + EULER_GAMMA;
    let y0 = (2.0 / PI) * (log_term * j0 - s0);
    let y1 = (2.0 / PI) * log_term * j1 - 2.0 / (PI * z) - half * s1 / PI;
    let i = Complex64::i();
    (j0 + i * y0, j1 + i * y1)
}

/// Large-argument branch of [`hankel1_01`].
pub fn hankel1_asymptotic(z: Complex64) -> (Complex64, Complex64) {
    let i = Complex64::i();
    let prefactor = (2.0 / (PI * z)).sqrt();
    let series = |nu: f64| {
        let mu = 4.0 * nu * nu;
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        let mut last = f64::INFINITY;
        for k in 1..60 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            term *= i * (mu - odd * odd) / (kf * 8.0 * z);
            let size = term.norm();
            if size > last {
                break;
            }
            sum += term;
            last = size;
            if size < 1e-17 {
                break;
            }
        }
        sum
    };
    let h0 = prefactor * (i * (z - FRAC_PI_4)).exp() * series(0.0);
    let h1 = prefactor * (i * (z - 3.0 * FRAC_PI_4)).exp() * series(1.0);
    (h0, h1)
}

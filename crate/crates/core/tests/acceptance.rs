//! Acceptance suite: eleven end-to-end criteria, one status line each.
//! Runs without the libtest harness so the lines are always printed.

use std::f64::consts::PI;
use std::time::Instant;

use lossy_tr_core::attenuation::*;
use lossy_tr_core::forward::*;
use lossy_tr_core::greens::{hk_residual, outgoing_dyadic_green, psf_fwhm};
use lossy_tr_core::medium::MediumParams;
use lossy_tr_core::reconstruct::*;
use lossy_tr_core::source::{render, Blob};
use lossy_tr_core::util::{loglog_slope, norm2, rel_l2};
use lossy_tr_core::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn flat(f: &VectorField2) -> Vec<f64> {
    f.c1.iter().chain(&f.c2).cloned().collect()
}

fn desk_grid() -> Grid2D {
    Grid2D::new(4.0, 256).unwrap()
}

fn desk_time() -> TimeAxis {
    TimeAxis { t_final: 2.0, steps: 1024 }
}

fn two_swirls() -> Vec<Blob> {
    vec![Blob::curl([0.3, -0.2], 0.08, 1.0), Blob::curl([-0.35, 0.3], 0.06, 0.7)]
}

fn pulse() -> Trace {
    Trace::from_fn(2.0 / 1024.0, 1024, |t| (-(t - 1.0).powi(2) / 0.01).exp())
}

// Band-limited trace: a sum of DFT-grid harmonics with |ω| ≤ 40.
fn band_limited() -> Trace {
    let tau = 2.0 / 1024.0;
    Trace::from_fn(tau, 1024, |t| {
        (1..=12)
            .map(|k| {
                let w = k as f64 * PI;
                (w * t + 0.3 * k as f64).cos() / k as f64
            })
            .sum()
    })
}

fn c1_identity() -> Outcome {
    let tr = band_limited();
    let out = apply_l_a_exact(&tr, &MediumParams::debye_half(0.0)).unwrap();
    let err = rel_l2(&out.samples, &tr.samples);
    outcome(err <= 1e-10, format!("relative L2 error {err:.2e} (limit 1e-10)"))
}

fn c2_asymptotic() -> Outcome {
    let phi = pulse();
    let a_values = [5e-4, 1e-3, 2e-3];
    let errs: Vec<f64> = a_values
        .iter()
        .map(|&a| {
            let m = MediumParams::debye_half(a);
            let ex = apply_l_a_exact(&phi, &m).unwrap();
            let asy = apply_l_a_asymptotic(&phi, &m).unwrap();
            rel_l2(&asy.samples, &ex.samples)
        })
        .collect();
    let slope = loglog_slope(&a_values, &errs);
    outcome(
        errs[1] <= 5e-3 && (1.8..=2.2).contains(&slope),
        format!("error at a=1e-3 {:.2e} (limit 5e-3), slope {slope:.3} (in [1.8, 2.2])", errs[1]),
    )
}

fn c3_composition() -> Outcome {
    let phi = pulse();
    let rho = 15.0;
    let target = apply_p_rho(&phi, rho).unwrap();
    let a_values = [1e-4, 2e-4, 5e-4, 1e-3];
    let res: Vec<f64> = a_values
        .iter()
        .map(|&a| {
            let m = MediumParams::debye_half(a);
            let back = apply_l_star_rho(&apply_l_a_exact(&phi, &m).unwrap(), &m, rho).unwrap();
            let g3 = m.gamma().powi(3);
            let diff: Vec<f64> =
                back.samples.iter().zip(&target.samples).map(|(b, p)| b - p / g3).collect();
            norm2(&diff) / norm2(&phi.samples)
        })
        .collect();
    let slope = loglog_slope(&a_values, &res);
    outcome(
        (0.8..=1.5).contains(&slope),
        format!("residual slope {slope:.3} (in [0.8, 1.5]), residuals {}", sci(&res)),
    )
}

fn c4_helmholtz_kirchhoff() -> Outcome {
    let m = MediumParams::unit();
    let omega = 20.0;
    let radius = 10.0 * 2.0 * PI / omega;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut constants = Vec::new();
    for _ in 0..20 {
        let mut point = || {
            let r = radius / 4.0 * rng.random::<f64>().sqrt();
            let th = 2.0 * PI * rng.random::<f64>();
            [r * th.cos(), r * th.sin()]
        };
        let (x, y) = (point(), point());
        let chk = hk_residual(x, y, omega, radius, 1024, &m).unwrap();
        worst = worst.max(chk.residual);
        constants.push(chk.constant);
    }
    let mean = constants.iter().sum::<f64>() / constants.len() as f64;
    outcome(
        worst <= 0.05,
        format!("worst residual {:.2}% over 20 pairs (limit 5%), mean constant {mean:.4}", 100.0 * worst),
    )
}

fn c5_point_spread() -> Outcome {
    let m = MediumParams::unit();
    let (w1, w2) = (psf_fwhm(20.0, 2000, &m), psf_fwhm(40.0, 4000, &m));
    let ratio = w2 / w1;
    outcome(
        (ratio - 0.5).abs() <= 0.15 * 0.5,
        format!("FWHM {w1:.4} -> {w2:.4}, ratio {ratio:.4} (0.5 within 15%)"),
    )
}

fn green_oracle(grid: &Grid2D, j: &VectorField2, xi: [f64; 2], times: &[f64], m: &MediumParams) -> Vec<f64> {
    let window = 16.0;
    let dw = 2.0 * PI / window;
    let h2 = grid.h() * grid.h();
    let peak = j.max_abs();
    let pts: Vec<([f64; 2], [f64; 2])> = (0..grid.n * grid.n)
        .filter(|&k| j.c1[k].abs().max(j.c2[k].abs()) > 1e-14 * peak)
        .map(|k| ([grid.coord(k % grid.n), grid.coord(k / grid.n)], [j.c1[k], j.c2[k]]))
        .collect();
    let mut out = [vec![0.0; times.len()], vec![0.0; times.len()]];
    let mut f = 1;
    while f as f64 * dw <= 120.0 {
        let w = f as f64 * dw;
        let kappa = Complex64::new(w / m.c0(), 0.0);
        let mut e = [Complex64::new(0.0, 0.0); 2];
        for (y, jv) in &pts {
            let g = outgoing_dyadic_green([xi[0] - y[0], xi[1] - y[1]], w, kappa, m).unwrap();
            let v = g.apply([Complex64::new(jv[0], 0.0), Complex64::new(jv[1], 0.0)]);
            e[0] -= v[0] * h2;
            e[1] -= v[1] * h2;
        }
        for (c, ec) in e.iter().enumerate() {
            for (o, t) in out[c].iter_mut().zip(times) {
                *o += 2.0 * (ec * Complex64::from_polar(1.0, w * t)).re * dw / (2.0 * PI);
            }
        }
        f += 1;
    }
    out.concat()
}

fn c6_forward_oracle() -> Outcome {
    let grid = desk_grid();
    let m = MediumParams::unit();
    let sensors = SensorArray { count: 1024, radius: 1.0 };
    let time = desk_time();
    let src = render(&[Blob::curl([0.3, -0.2], 0.09, 1.0)], &grid).unwrap();
    let data = simulate(&src, &grid, &time, &sensors, &m, &PmlProfile::default()).unwrap();
    let times: Vec<f64> = (0..time.steps).map(|j| j as f64 * time.tau()).collect();
    let mut worst = 0.0f64;
    for s in [0usize, 300] {
        let want = green_oracle(&grid, &src, sensors.position(s), &times, &m);
        let sim: Vec<f64> = data.trace(s, 0).iter().chain(data.trace(s, 1)).copied().collect();
        worst = worst.max(rel_l2(&sim, &want));
    }
    outcome(worst <= 0.03, format!("worst sensor error {:.3}% (limit 3%)", 100.0 * worst))
}

fn c7_example1() -> Outcome {
    let grid = desk_grid();
    let m = MediumParams::debye_half(0.0);
    let truth = render(&two_swirls(), &grid).unwrap();
    let sensors = SensorArray { count: 1024, radius: 1.0 };
    let data = simulate(&truth, &grid, &desk_time(), &sensors, &m, &PmlProfile::default()).unwrap();
    let img = backpropagate_ideal(&data, &grid, &m, 60.0).unwrap();
    let met = image_metrics(&img, &truth).unwrap();
    // the fixed sign is what makes the correlation positive
    let pass = PIPELINE_SIGN == 1.0
        && met.correlation.iter().all(|&c| c >= 0.9)
        && met.centroid_error <= 2.0;
    outcome(
        pass,
        format!(
            "correlation ({:.4}, {:.4}) (>= 0.9), centroid error {:.3} cells (<= 2), sign {PIPELINE_SIGN:+}",
            met.correlation[0], met.correlation[1], met.centroid_error
        ),
    )
}

/// Shared loss-free data for the lossy-medium criteria (512 sensors).
struct LossyCase {
    grid: Grid2D,
    truth: VectorField2,
    ideal: BoundaryData,
}

impl LossyCase {
    fn new() -> Self {
        let grid = desk_grid();
        let truth = render(&two_swirls(), &grid).unwrap();
        let sensors = SensorArray { count: 512, radius: 1.0 };
        let ideal = simulate(
            &truth,
            &grid,
            &desk_time(),
            &sensors,
            &MediumParams::debye_half(0.0),
            &PmlProfile::default(),
        )
        .unwrap();
        Self { grid, truth, ideal }
    }

    fn lossy(&self, a: f64) -> (MediumParams, BoundaryData) {
        let m = MediumParams::debye_half(a);
        (m, attenuate_data(&self.ideal, &m).unwrap())
    }

    fn corr(&self, img: &ImageField) -> [f64; 2] {
        image_metrics(img, &self.truth).unwrap().correlation
    }

    /// Adjoint and same-band uncorrected correlations at each cutoff.
    fn improvement(&self, a: f64, rhos: &[f64]) -> (bool, String) {
        let (m, lossy) = self.lossy(a);
        let mut pass = true;
        let mut detail = Vec::new();
        for &rho in rhos {
            let adj = self.corr(&backpropagate_adjoint(&lossy, &self.grid, &m, rho).unwrap());
            let base = self.corr(&backpropagate_uncorrected(&lossy, &self.grid, &m, rho).unwrap());
            pass &= adj[0] > base[0] && adj[1] > base[1];
            detail.push(format!(
                "rho={rho}: ({:.6}, {:.6}) vs ({:.6}, {:.6})",
                adj[0], adj[1], base[0], base[1]
            ));
        }
        (pass, detail.join("; "))
    }
}

fn c8_example2(case: &LossyCase) -> Outcome {
    let (improved, detail) = case.improvement(2e-4, &[15.0, 35.0]);
    let m0 = MediumParams::debye_half(0.0);
    let j0 = flat(&backpropagate_ideal(&case.ideal, &case.grid, &m0, 15.0).unwrap().field);
    let a_values = [1e-4, 2e-4, 4e-4];
    let diffs: Vec<f64> = a_values
        .iter()
        .map(|&a| {
            let (m, lossy) = case.lossy(a);
            let ja = backpropagate_adjoint(&lossy, &case.grid, &m, 15.0).unwrap();
            rel_l2(&flat(&ja.field), &j0)
        })
        .collect();
    let slope = loglog_slope(&a_values, &diffs);
    let pass = improved && diffs[1] <= 0.1 && (0.8..=1.5).contains(&slope);
    outcome(
        pass,
        format!(
            "adjoint vs uncorrected {detail}; |J_a - J_0|/|J_0| at 2e-4 {:.2e} (<= 0.1), slope {slope:.3} (in [0.8, 1.5])",
            diffs[1]
        ),
    )
}

fn c9_example3(case: &LossyCase) -> Outcome {
    let a = 4e-4;
    let (improved, detail) = case.improvement(a, &[15.0, 25.0]);
    let (m, lossy) = case.lossy(a);
    let reach = lossy.duration().max(2.0 * lossy.sensors.radius / m.c0());
    let bound = max_admissible_rho(&m, reach);
    let guarded = match backpropagate_adjoint(&lossy, &case.grid, &m, 1.05 * bound) {
        Err(Error::GrowthGuard { rho_max, .. }) => (rho_max - bound).abs() <= 1e-9 * bound,
        _ => false,
    };
    outcome(
        improved && guarded,
        format!("adjoint vs uncorrected {detail}; cutoff above rho_max = {bound:.1} rejected: {guarded}"),
    )
}

fn c10_preprocessing(case: &LossyCase) -> Outcome {
    let m0 = MediumParams::debye_half(0.0);
    let omega_max = 60.0;
    let ideal = backpropagate_ideal(&case.ideal, &case.grid, &m0, omega_max).unwrap();
    let ideal_flat = flat(&ideal.field);
    let ideal_max = ideal.field.max_abs();
    let mut dist = Vec::new();
    let mut worst_growth = 0.0f64;
    for a in [2.5e-4, 5e-4, 1e-3, 2e-3] {
        let (m, lossy) = case.lossy(a);
        let img = preprocess_time_reversal(&lossy, &case.grid, &m, 1, omega_max).unwrap();
        dist.push(rel_l2(&flat(&img.field), &ideal_flat));
        if a <= 1e-3 {
            worst_growth = worst_growth.max(img.field.max_abs() / ideal_max);
        }
    }
    let ratio = dist[3] / dist[2];
    outcome(
        ratio >= 3.0 && worst_growth <= 10.0,
        format!(
            "distance ratio a=2e-3 / a=1e-3 {ratio:.3} (>= 3), distances {}, max-norm ratio {worst_growth:.3} (<= 10)",
            sci(&dist)
        ),
    )
}

fn c11_reversibility() -> Outcome {
    let grid = Grid2D::new(4.0, 128).unwrap();
    let m = MediumParams::unit();
    let e0 = render(&[Blob::curl([0.2, -0.1], 0.1, 1.0)], &grid).unwrap().scaled(-1.0);
    let mut st = TeState::new(e0.clone(), &ScalarField::zeros(grid.n));
    let tau = grid.h() / 4.0;
    let mut fwd = TeSolver::new(&grid, &m, None, tau).unwrap();
    let mut bwd = TeSolver::new(&grid, &m, None, -tau).unwrap();
    let steps = 400;
    for i in 0..steps {
        fwd.step(&mut st, i).unwrap();
    }
    for i in 0..steps {
        bwd.step(&mut st, i).unwrap();
    }
    let err = rel_l2(&flat(&st.e), &flat(&e0));
    let h = norm2(&st.h3().data) / norm2(&flat(&e0));
    outcome(
        err <= 1e-8 && h <= 1e-8,
        format!("field error {err:.2e}, residual H {h:.2e} (limit 1e-8)"),
    )
}

fn main() {
    // cargo passes libtest flags; a name filter other than ours skips the suite
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }

    let mut failures = 0;
    let mut report = |id: usize, name: &str, budget_s: f64, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = out.pass && secs <= budget_s;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {id:>2} [{}] {name}: {} | {secs:.1} s (budget {budget_s} s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
    };

    report(1, "loss-free attenuation map is the identity", 1.0, &mut c1_identity);
    report(2, "exact vs asymptotic attenuation", 10.0, &mut c2_asymptotic);
    report(3, "adjoint composition", 30.0, &mut c3_composition);
    report(4, "Helmholtz-Kirchhoff identity", 30.0, &mut c4_helmholtz_kirchhoff);
    report(5, "point-spread width vs band", 60.0, &mut c5_point_spread);
    report(6, "forward solver vs Green oracle", 120.0, &mut c6_forward_oracle);
    report(7, "loss-less two-blob reconstruction", 300.0, &mut c7_example1);
    let mut case = None;
    report(8, "adjoint reconstruction at a=2e-4", 600.0, &mut || {
        let c = case.get_or_insert_with(LossyCase::new);
        c8_example2(c)
    });
    report(9, "adjoint reconstruction at a=4e-4", 600.0, &mut || {
        let c = case.get_or_insert_with(LossyCase::new);
        c9_example3(c)
    });
    report(10, "pre-processed reconstruction", 600.0, &mut || {
        let c = case.get_or_insert_with(LossyCase::new);
        c10_preprocessing(c)
    });
    report(11, "time reversibility of the solver", 120.0, &mut c11_reversibility);

    if failures > 0 {
        println!("acceptance: {failures} of 11 criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 11 criteria passed");
}

//! The acceptance criteria as library checks, shared by the `acceptance`
//! test target and `jweyl verify-all`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::debranges::{db_inner_product, embedding_check, CPoly, DeBrangesDescriptor};
use crate::error::Result;
use crate::inverse::{
    borg_marchenko_rate, hochstadt_liebermann_probe, reconstruct_from_measure, EntirePart,
};
use crate::krein::{construct_phi_from_spectra, krein_fit, InterlacedSpectra};
use crate::lattice::{
    phi_fundamental, solve_recurrence, theta_fundamental, wronskian, CoefficientModel,
    LatticeWindow, Sequence,
};
use crate::spectra::{linear_fit, restriction_spectra, spectral_measure};
use crate::transform::{apply_window_operator, SpectralTransform};
use crate::weyl::{
    asymptotic_remainder, gauge_apply, green_function, m_half_line, pole_residue_form,
    stieltjes_inversion, GaugeTransform, HalfLine, WeylFunction, DEFAULT_EPSILONS,
};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    /// Measured quantities against their thresholds.
    pub detail: String,
    /// Set when the only failing check is a documented convention conflict.
    pub known_deviation: Option<&'static str>,
    pub elapsed: Duration,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "criterion {:>2} {status} {} ({:.2}s): {}",
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.detail
        );
        if let Some(d) = self.known_deviation {
            s.push_str(&format!(" [documented deviation: {d}]"));
        }
        s
    }
}

/// Random windows `[0, N+1]` with `N ≤ max_sites` interior sites,
/// `a ∈ [0.5, 2]` on `[0, N]`, `b ∈ [−1, 1]` on the interior.
pub fn random_corpus(seed: u64, count: usize, max_sites: usize) -> Vec<(CoefficientModel, LatticeWindow)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(2..=max_sites);
            let a = (0..=n).map(|_| rng.random_range(0.5..=2.0)).collect();
            let b = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let model = CoefficientModel::table(0, a, 1, b).expect("valid table");
            (model, LatticeWindow::new(0, n as i64 + 1).expect("valid window"))
        })
        .collect()
}

/// `(−√2, ¼), (0, ½), (√2, ¼)` on the free window `[0, 4]`.
pub fn free_three_site() -> (CoefficientModel, LatticeWindow) {
    (CoefficientModel::free(), LatticeWindow::new(0, 4).expect("valid window"))
}

fn random_z(rng: &mut impl Rng) -> Complex64 {
    let im = rng.random_range(0.3..=3.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    Complex64::new(rng.random_range(-3.0..=3.0), im)
}

fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn run(id: u8, title: &'static str, f: impl FnOnce() -> Result<(bool, String, Option<&'static str>)>) -> CriterionReport {
    let start = Instant::now();
    let (passed, detail, known_deviation) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}"), None),
    };
    CriterionReport {
        id,
        title,
        passed,
        detail,
        known_deviation,
        elapsed: start.elapsed(),
    }
}

const SIGN_CONVENTION: &str = "θ is normalized by W(φ,θ) = 1 so that M is Herglotz; W(θ,φ) = −1 exactly";

/// `a(n) (|f(n) g(n+1)| + |f(n+1) g(n)|)`: the size of the two products
/// whose difference is the Wronskian, which sets its floating-point floor.
fn term_size(model: &CoefficientModel, f: &impl Sequence, g: &impl Sequence, n: i64) -> Result<f64> {
    Ok(model.a(n)? * ((f.at(n)? * g.at(n + 1)?).norm() + (f.at(n + 1)? * g.at(n)?).norm()))
}

pub fn criterion_1(seed: u64) -> CriterionReport {
    run(1, "fundamental system", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let (mut lit, mut flipped, mut constancy) = (0.0f64, 0.0f64, 0.0f64);
        for (model, window) in random_corpus(seed, 100, 30) {
            for _ in 0..3 {
                let z = random_z(&mut rng);
                let phi = phi_fundamental(&model, &window, z)?;
                let theta = theta_fundamental(&model, &window, z)?;
                let s = (phi.log_scale() + theta.log_scale()).exp();
                for n in window.left..window.right {
                    let w = wronskian(&model, &theta, &phi, n)? * s;
                    let size = term_size(&model, &theta, &phi, n)? * s;
                    lit = lit.max((w - 1.0).norm() / size.max(1.0));
                    flipped = flipped.max((-w - 1.0).norm() / size.max(1.0));
                }
                let n0 = rng.random_range(window.left..window.right);
                let [u0, u1, v0, v1] = [0; 4].map(|_| random_vec(&mut rng, 1)[0]);
                let u = solve_recurrence(&model, z, n0, u0, u1, &window)?;
                let v = solve_recurrence(&model, z, n0, v0, v1, &window)?;
                let s = (u.log_scale() + v.log_scale()).exp();
                let w0 = wronskian(&model, &u, &v, n0)? * s;
                for n in window.left..window.right {
                    let w = wronskian(&model, &u, &v, n)? * s;
                    let size = term_size(&model, &u, &v, n)? * s;
                    constancy = constancy.max((w - w0).norm() / size.max(w0.norm()).max(1.0));
                }
            }
        }
        let secs = start.elapsed().as_secs_f64();
        let passed = lit <= 1e-10 && constancy <= 1e-10 && secs < 10.0;
        let deviation = (!passed && flipped <= 1e-10 && constancy <= 1e-10 && secs < 10.0)
            .then_some(SIGN_CONVENTION);
        Ok((
            passed,
            format!(
                "max|W(θ,φ)−1| = {lit:.3e}, max|W(φ,θ)−1| = {flipped:.3e}, constancy {constancy:.3e} (tol 1e-10 relative to the Wronskian's product terms), {secs:.2}s (< 10s)"
            ),
            deviation,
        ))
    })
}

pub fn criterion_2(seed: u64) -> CriterionReport {
    run(2, "spectral-transform unitarity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let (mut parseval, mut round, mut diag) = (0.0f64, 0.0f64, 0.0f64);
        for (model, window) in random_corpus(seed, 100, 30) {
            let tr = SpectralTransform::new(&model, &window)?;
            let f = random_vec(&mut rng, window.sites());
            let fh = tr.forward(&f)?;
            let nf = norm(&f);
            parseval = parseval.max((tr.spectral_norm_sqr(&fh) - nf * nf).abs() / (nf * nf));
            let back = tr.inverse(&fh)?;
            let d: Vec<Complex64> = back.iter().zip(&f).map(|(x, y)| x - y).collect();
            round = round.max(norm(&d) / nf);
            let hf = tr.forward(&apply_window_operator(&model, &window, &f)?)?;
            let lam = tr.measure().locations();
            let scale = lam.iter().fold(1.0f64, |m, l| m.max(l.abs()));
            let w = tr.measure().weights();
            let gap = hf
                .iter()
                .zip(&fh)
                .zip(lam.iter().zip(&w))
                .map(|((x, y), (l, wk))| (x - y * *l).norm_sqr() * wk)
                .sum::<f64>()
                .sqrt();
            diag = diag.max(gap / (scale * nf));
        }
        let passed = parseval <= 1e-10 && round <= 1e-10 && diag <= 1e-10;
        Ok((
            passed,
            format!("Parseval {parseval:.3e}, round trip {round:.3e}, diagonalization {diag:.3e} (tol 1e-10)"),
            None,
        ))
    })
}

pub fn criterion_3(seed: u64) -> CriterionReport {
    run(3, "measure identities", || {
        let mut mass = 0.0f64;
        for (model, window) in random_corpus(seed, 100, 30) {
            mass = mass.max((spectral_measure(&model, &window)?.total_mass() - 1.0).abs());
        }
        let (model, window) = free_three_site();
        let s = 2f64.sqrt();
        let mut weight_err = 0.0f64;
        let mut half_err = 0.0f64;
        for m in [pole_residue_form(&model, &window)?, WeylFunction::sampler(&model, &window)] {
            for (lam, w) in [(-s, 0.25), (0.0, 0.5), (s, 0.25)] {
                let r = stieltjes_inversion(&m, lam - 0.5, lam + 0.5, &DEFAULT_EPSILONS)?;
                weight_err = weight_err.max((r.value - w).abs());
            }
            let r = stieltjes_inversion(&m, 0.0, 1.0, &DEFAULT_EPSILONS)?;
            half_err = half_err.max((r.value - 0.25).abs());
        }
        let passed = mass <= 1e-12 && weight_err <= 1e-4 && half_err <= 1e-4;
        Ok((
            passed,
            format!(
                "max|mass−1| = {mass:.3e} (1e-12), atom weights {weight_err:.3e} (1e-4), half-count on (0,1) {half_err:.3e} (1e-4)"
            ),
            None,
        ))
    })
}

pub fn criterion_4(seed: u64) -> CriterionReport {
    run(4, "asymptotics", || {
        let ts: Vec<f64> = (0..13).map(|k| 10f64 * 10f64.powf(k as f64 / 4.0)).collect();
        let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let mut bound = 0.0f64;
        let mut slope_dev = 0.0f64;
        for (model, window) in random_corpus(seed, 100, 30) {
            for n in window.left + 1..=(window.left + 5).min(window.right - 1) {
                let mut lm = Vec::new();
                let mut lg = Vec::new();
                for &t in &ts {
                    let z = Complex64::new(0.0, t);
                    let phi = phi_fundamental(&model, &window, z)?.true_value(n)?;
                    let r = asymptotic_remainder(&model, &window, z, n)?;
                    bound = bound.max(r.norm() * t * phi.norm_sqr());
                    lg.push(green_function(&model, &window, z, n, n)?.norm().ln());
                    if n >= window.left + 2 {
                        lm.push(m_half_line(&model, &window, z, HalfLine::Left, n)?.norm().ln());
                    }
                }
                slope_dev = slope_dev.max((linear_fit(&xs, &lg).0 + 1.0).abs());
                if !lm.is_empty() {
                    slope_dev = slope_dev.max((linear_fit(&xs, &lm).0 + 1.0).abs());
                }
            }
        }
        let passed = bound.is_finite() && bound <= 2.0 && slope_dev <= 0.02;
        Ok((
            passed,
            format!("max |M+θ/φ|·t·|φ|² = {bound:.4} (bounded by 2), max slope deviation from −1 = {slope_dev:.3e} (0.02)"),
            None,
        ))
    })
}

pub fn criterion_5(seed: u64) -> CriterionReport {
    run(5, "Krein identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        let mut worst = 0.0f64;
        for (model, window) in random_corpus(seed, 100, 30) {
            let n = (window.left + window.right) / 2;
            let rs = restriction_spectra(&model, &window, n)?;
            let sp = InterlacedSpectra::new(rs.mu, rs.nu, n + 1, true)?;
            let samples: Vec<(Complex64, Complex64)> = (0..20)
                .map(|_| {
                    let z = random_z(&mut rng);
                    Ok((z, m_half_line(&model, &window, z, HalfLine::Left, n + 1)?))
                })
                .collect::<Result<_>>()?;
            let rep = krein_fit(&sp, &samples[..1], 0, f64::INFINITY)?;
            for &(z, m) in &samples {
                worst = worst.max((rep.eval(z) - m).norm() / m.norm());
            }
        }
        let (model, window) = free_three_site();
        let sp = InterlacedSpectra::new(vec![0.0], vec![-1.0, 1.0], 3, true)?;
        let built = construct_phi_from_spectra(&sp, 0, model.a(2)?, 1.0)?;
        let zs: Vec<Complex64> = (0..5).map(|_| random_z(&mut rng)).collect();
        let k = built.detect_constant(&model, &window, &zs, 1e-12)?;
        let passed = worst <= 1e-12 && (k.abs() - 1.0).abs() <= 1e-12;
        Ok((
            passed,
            format!("max relative product error {worst:.3e} (1e-12), detected constant {k}"),
            None,
        ))
    })
}

pub fn criterion_6(seed: u64) -> CriterionReport {
    run(6, "reconstruction round trip", || {
        let start = Instant::now();
        let mut worst = 0.0f64;
        for (model, window) in random_corpus(seed ^ 6, 60, 50) {
            let rho = spectral_measure(&model, &window)?;
            let n = window.sites();
            let r = reconstruct_from_measure(&rho, n)?;
            for (k, &x) in r.a.iter().enumerate() {
                let want = model.a(k as i64 + 1)?;
                worst = worst.max((x - want).abs() / want);
            }
            for (k, &x) in r.b.iter().enumerate() {
                let want = model.b(k as i64 + 1)?;
                worst = worst.max((x - want).abs() / want.abs().max(1.0));
            }
        }
        let secs = start.elapsed().as_secs_f64();
        Ok((
            worst <= 1e-8 && secs < 30.0,
            format!("max relative coefficient error {worst:.3e} (1e-8), {secs:.2}s (< 30s)"),
            None,
        ))
    })
}

pub fn criterion_7(_seed: u64) -> CriterionReport {
    run(7, "Borg–Marchenko rates", || {
        let window = LatticeWindow::new(0, 9)?;
        let h0 = CoefficientModel::free().tabulate(&window)?;
        let ray = [PI / 2.0];
        let near = borg_marchenko_rate(&h0, &h0.with_b(6, 1.0)?, &window, 5, &ray, &EntirePart::Zero)?;
        let ctrl = borg_marchenko_rate(&h0, &h0.with_b(1, 1.0)?, &window, 5, &ray, &EntirePart::Zero)?;
        let s_near = near.rays[0].slope.unwrap_or(f64::NEG_INFINITY);
        let s_ctrl = ctrl.rays[0].slope.unwrap_or(f64::NEG_INFINITY);
        Ok((
            s_near <= -11.0 + 0.3 && s_ctrl >= -3.3,
            format!("slope with b(6) perturbed {s_near:.4} (≤ −10.7), control b(1) {s_ctrl:.4} (≥ −3.3)"),
            None,
        ))
    })
}

pub fn criterion_8(seed: u64) -> CriterionReport {
    run(8, "de Branges suite", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 8);
        let mut kernel = 0.0f64;
        for (model, window) in random_corpus(seed ^ 8, 20, 20) {
            for n in window.left + 1..window.right {
                let d = DeBrangesDescriptor::new(&model, &window, n)?;
                for _ in 0..20 {
                    let (zeta, z) = (random_z(&mut rng), random_z(&mut rng));
                    let k = d.kernel(zeta, z);
                    kernel = kernel.max((d.kernel_from_e(zeta, z) - k).norm() / k.norm().max(1.0));
                }
            }
        }
        let (mut repro, mut unitary, mut embed) = (0.0f64, 0.0f64, 0.0f64);
        for (model, window) in random_corpus(seed ^ 88, 4, 8) {
            let rho = spectral_measure(&model, &window)?;
            for n in window.left + 1..window.right {
                let d = DeBrangesDescriptor::new(&model, &window, n)?;
                let dim = d.dimension();
                for m1 in window.left + 1..=n {
                    let p1 = d.basis(m1)?;
                    for m2 in m1..=n {
                        let v = db_inner_product(&d, &p1, &d.basis(m2)?)?;
                        let want = if m1 == m2 { 1.0 } else { 0.0 };
                        unitary = unitary.max((v - want).norm());
                    }
                    let e = embedding_check(&d, &p1, &rho)?;
                    embed = embed.max(e.residual / e.l2_norm_sqr.max(1.0));
                }
                for k in 0..dim {
                    let e = embedding_check(&d, &CPoly::monomial(k), &rho)?;
                    embed = embed.max(e.residual / e.l2_norm_sqr.max(1.0));
                }
                let f = CPoly(random_vec(&mut rng, dim));
                for _ in 0..3 {
                    let w = rng.random_range(-2.5..=2.5);
                    let got = db_inner_product(&d, &d.kernel_section(w.into()), &f)?;
                    let want = f.eval(w.into());
                    repro = repro.max((got - want).norm() / want.norm().max(1.0));
                }
            }
        }
        let (model, window) = free_three_site();
        let d2 = DeBrangesDescriptor::new(&model, &window, 2)?;
        let d3 = DeBrangesDescriptor::new(&model, &window, 3)?;
        let explicit = [
            (db_inner_product(&d2, &CPoly::monomial(0), &CPoly::monomial(0))?.re, 1.0),
            (db_inner_product(&d2, &CPoly::monomial(1), &CPoly::monomial(1))?.re, 1.0),
            (db_inner_product(&d3, &CPoly::monomial(2), &CPoly::monomial(2))?.re, 2.0),
        ]
        .iter()
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        let passed = kernel < 1e-10 && repro <= 1e-7 && unitary <= 1e-7 && embed <= 1e-7 && explicit <= 1e-7;
        Ok((
            passed,
            format!(
                "kernel identity {kernel:.3e} (1e-10), reproducing {repro:.3e}, unitarity {unitary:.3e}, embedding {embed:.3e}, explicit integrals {explicit:.3e} (1e-7)"
            ),
            None,
        ))
    })
}

pub fn criterion_9(seed: u64) -> CriterionReport {
    run(9, "Hochstadt–Liebermann rigidity", || {
        let (model, window) = free_three_site();
        let rep = hochstadt_liebermann_probe(&model, &window, 3, 1000, 0.05, seed)?;
        Ok((
            rep.min_displacement > 1e-3,
            format!(
                "min over {} trials of max eigenvalue displacement {:.4e} (> 1e-3); χ/φ vanishes: {}",
                rep.trials, rep.min_displacement, rep.ratio_vanishes
            ),
            None,
        ))
    })
}

pub fn criterion_10(seed: u64) -> CriterionReport {
    run(10, "gauge covariance", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 10);
        let mut weights = 0.0f64;
        let mut moved = false;
        let mut cases = vec![free_three_site()];
        cases.extend(random_corpus(seed, 20, 30));
        for (model, window) in cases {
            let g = rng.random_range(-2.0..=2.0);
            let f = rng.random_range(-1.0..=1.0);
            let z = random_z(&mut rng);
            let rho = spectral_measure(&model, &window)?;
            let m = pole_residue_form(&model, &window)?;
            let out = gauge_apply(
                &GaugeTransform::constant(g, f),
                &theta_fundamental(&model, &window, z)?,
                &phi_fundamental(&model, &window, z)?,
                &m,
                &rho,
            )?;
            for (a, b) in out.rho.atoms().iter().zip(rho.atoms()) {
                weights = weights.max((a.weight - (-2.0 * g).exp() * b.weight).abs() / a.weight);
                moved |= a.lambda != b.lambda;
            }
            moved |= out.m.poles() != m.poles() || out.rho.len() != rho.len();
        }
        Ok((
            weights <= 1e-12 && !moved,
            format!("max relative weight error {weights:.3e} (1e-12), poles unchanged: {}", !moved),
            None,
        ))
    })
}

pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    vec![
        criterion_1(seed),
        criterion_2(seed),
        criterion_3(seed),
        criterion_4(seed),
        criterion_5(seed),
        criterion_6(seed),
        criterion_7(seed),
        criterion_8(seed),
        criterion_9(seed),
        criterion_10(seed),
    ]
}

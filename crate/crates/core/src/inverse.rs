//! Inverse reconstruction from a spectral measure, and numerical checks of
//! the local Borg–Marchenko, Hochstadt–Liebermann and shift uniqueness
//! statements on finite windows.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{phi_fundamental, CoefficientModel, LatticeWindow};
use crate::poly::Polynomial;
use crate::spectra::{
    eigen_tridiagonal, linear_fit, spectral_measure, tridiagonal_eigen, window_matrix, SpectralMeasure,
};
use crate::weyl::u_plus;

/// Largest `|QᵀQ − I|` entry tolerated during reconstruction.
pub const ORTHOGONALITY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    /// `a(1) .. a(N−1)`.
    pub a: Vec<f64>,
    /// `b(1) .. b(N)`.
    pub b: Vec<f64>,
    /// `‖Λq_j − a(j−1)q_{j−1} − b(j)q_j − a(j)q_{j+1}‖` per row.
    pub residuals: Vec<f64>,
    pub orthogonality_defect: f64,
    /// Set when the input mass was not 1 and the measure was rescaled.
    pub renormalized: bool,
}

impl ReconstructionResult {
    /// Table model on the window `[0, N+1]` with `a(0) = a(N) = 1`.
    pub fn model(&self) -> Result<CoefficientModel> {
        let mut a = Vec::with_capacity(self.a.len() + 2);
        a.push(1.0);
        a.extend_from_slice(&self.a);
        a.push(1.0);
        CoefficientModel::table(0, a, 1, self.b.clone())
    }

    pub fn window(&self) -> LatticeWindow {
        LatticeWindow::new(0, self.b.len() as i64 + 1).expect("N ≥ 1")
    }
}

/// Lanczos on `diag(λ_k)` started from `(√w_k)`, with full
/// reorthogonalization. The output coefficients live on sites `1..=N`.
pub fn reconstruct_from_measure(rho: &SpectralMeasure, sites: usize) -> Result<ReconstructionResult> {
    let atoms = rho.atoms();
    if sites == 0 || atoms.len() < sites {
        return Err(Error::NotEnoughAtoms {
            atoms: atoms.len(),
            sites,
        });
    }
    let mass = rho.total_mass();
    let renormalized = (mass - 1.0).abs() > 1e-14;
    let lam: Vec<f64> = atoms.iter().map(|a| a.lambda).collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();

    let mut q: Vec<Vec<f64>> = vec![atoms.iter().map(|a| (a.weight / mass).sqrt()).collect()];
    let mut a = Vec::with_capacity(sites - 1);
    let mut b = Vec::with_capacity(sites);
    for j in 0..sites {
        let mut r: Vec<f64> = q[j].iter().zip(&lam).map(|(v, l)| v * l).collect();
        let bj = dot(&q[j], &r);
        b.push(bj);
        if j + 1 == sites {
            break;
        }
        for (ri, qi) in r.iter_mut().zip(&q[j]) {
            *ri -= bj * qi;
        }
        if j > 0 {
            for (ri, qi) in r.iter_mut().zip(&q[j - 1]) {
                *ri -= a[j - 1] * qi;
            }
        }
        for _ in 0..2 {
            for qk in &q {
                let c = dot(&r, qk);
                for (ri, qi) in r.iter_mut().zip(qk) {
                    *ri -= c * qi;
                }
            }
        }
        let aj = dot(&r, &r).sqrt();
        let scale = lam.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        if !(aj > 1e-13 * scale) {
            return Err(Error::LossOfOrthogonality { defect: aj / scale });
        }
        a.push(aj);
        q.push(r.iter().map(|v| v / aj).collect());
    }

    let mut defect = 0.0f64;
    for i in 0..q.len() {
        for k in 0..=i {
            let want = if i == k { 1.0 } else { 0.0 };
            defect = defect.max((dot(&q[i], &q[k]) - want).abs());
        }
    }
    if defect > ORTHOGONALITY_LIMIT {
        return Err(Error::LossOfOrthogonality { defect });
    }
    let residuals = (0..sites)
        .map(|j| {
            (0..lam.len())
                .map(|i| {
                    let mut v = lam[i] * q[j][i] - b[j] * q[j][i];
                    if j > 0 {
                        v -= a[j - 1] * q[j - 1][i];
                    }
                    if j + 1 < sites {
                        v -= a[j] * q[j + 1][i];
                    }
                    v * v
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(ReconstructionResult {
        a,
        b,
        residuals,
        orthogonality_defect: defect,
        renormalized,
    })
}

type RatPoly = Vec<BigRational>;

fn rat(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidParameter(format!("{x} is not finite")))
}

fn rp_trim(mut p: RatPoly) -> RatPoly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn rp_sub(p: &RatPoly, q: &RatPoly) -> RatPoly {
    let n = p.len().max(q.len());
    rp_trim(
        (0..n)
            .map(|k| {
                p.get(k).cloned().unwrap_or_else(BigRational::zero)
                    - q.get(k).cloned().unwrap_or_else(BigRational::zero)
            })
            .collect(),
    )
}

fn rp_mul(p: &RatPoly, q: &RatPoly) -> RatPoly {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); p.len() + q.len() - 1];
    for (i, x) in p.iter().enumerate() {
        for (j, y) in q.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    rp_trim(out)
}

/// Quotient and remainder of `p / q`.
fn rp_divmod(p: &RatPoly, q: &RatPoly) -> (RatPoly, RatPoly) {
    let mut rem = p.clone();
    let dq = q.len() - 1;
    if rem.len() < q.len() {
        return (Vec::new(), rem);
    }
    let mut quot = vec![BigRational::zero(); rem.len() - dq];
    while rem.len() > dq && !rem.is_empty() {
        let k = rem.len() - 1 - dq;
        let c = rem.last().unwrap() / q.last().unwrap();
        for (i, qi) in q.iter().enumerate() {
            rem[k + i] -= &c * qi;
        }
        quot[k] = c;
        rem.pop();
        rem = rp_trim(rem);
    }
    (rp_trim(quot), rem)
}

fn rp_to_poly(p: &RatPoly) -> Polynomial {
    Polynomial::new(p.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect())
}

/// `(φ(·,right), θ(·,right))` with exact rational coefficients.
fn exact_endpoint(model: &CoefficientModel, window: &LatticeWindow) -> Result<(RatPoly, RatPoly)> {
    let one = BigRational::from_integer(BigInt::from(1));
    let step = |prev: &RatPoly, cur: &RatPoly, n: i64| -> Result<RatPoly> {
        // ((z − b) cur − a(n−1) prev) / a(n)
        let zb = vec![-rat(model.b(n)?)?, one.clone()];
        let t = rp_sub(&rp_mul(&zb, cur), &rp_mul(&vec![rat(model.a(n - 1)?)?], prev));
        Ok(rp_mul(&vec![one.clone() / rat(model.a(n)?)?], &t))
    };
    let mut phi = (Vec::new(), vec![one.clone()]);
    let mut theta = (vec![-(one.clone() / rat(model.a(window.left)?)?)], Vec::new());
    for n in window.left + 1..window.right {
        let p = step(&phi.0, &phi.1, n)?;
        let t = step(&theta.0, &theta.1, n)?;
        phi = (phi.1, p);
        theta = (theta.1, t);
    }
    Ok((phi.1, theta.1))
}

/// How the entire part `f` of `M₁ − M₀` is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum EntirePart {
    Zero,
    Given(Polynomial),
    /// Polynomial part of the exact rational difference.
    Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaySlope {
    /// Argument of the ray `z = t e^{iα}`.
    pub angle: f64,
    pub t: Vec<f64>,
    /// `|M₁ − M₀ − f|` at each `t`; all zero when the difference vanishes
    /// identically.
    pub values: Vec<f64>,
    /// `None` when the difference vanishes identically.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub rays: Vec<RaySlope>,
    pub f: Polynomial,
    /// `−(2 deg φ₀(·, ñ+1) + 1)`.
    pub predicted: f64,
    pub verdict: Verdict,
}

pub const DEFAULT_RAYS: [f64; 3] = [
    std::f64::consts::FRAC_PI_4,
    -std::f64::consts::FRAC_PI_4,
    std::f64::consts::FRAC_PI_2,
];

/// Slack on the predicted slope.
pub const SLOPE_SLACK: f64 = 0.3;

/// Decay of `M₁ − M₀ − f` along rays. The difference is formed exactly in
/// rational arithmetic before evaluation.
pub fn borg_marchenko_rate(
    h0: &CoefficientModel,
    h1: &CoefficientModel,
    window: &LatticeWindow,
    n_tilde: i64,
    rays: &[f64],
    f: &EntirePart,
) -> Result<RateReport> {
    if !window.is_interior(n_tilde) && n_tilde != window.left {
        return Err(Error::Domain {
            what: "ñ",
            index: n_tilde,
        });
    }
    for &ang in rays {
        if ang.sin().abs() < 1e-3 {
            return Err(Error::InvalidParameter(format!("ray at angle {ang} is real")));
        }
    }
    let (p0, t0) = exact_endpoint(h0, window)?;
    let (p1, t1) = exact_endpoint(h1, window)?;
    // M₁ − M₀ = (θ₀φ₁ − θ₁φ₀) / (φ₀φ₁) at the right endpoint
    let num = rp_sub(&rp_mul(&t0, &p1), &rp_mul(&t1, &p0));
    let den = rp_mul(&p0, &p1);
    let (f_poly, num) = match f {
        EntirePart::Zero => (Polynomial::zero(), num),
        EntirePart::Given(g) => {
            let g_rat: RatPoly = g.coeffs().iter().map(|&c| rat(c)).collect::<Result<_>>()?;
            (g.clone(), rp_sub(&num, &rp_mul(&g_rat, &den)))
        }
        EntirePart::Fitted => {
            let (q, r) = rp_divmod(&num, &den);
            (rp_to_poly(&q), r)
        }
    };
    let num = rp_to_poly(&num);
    let den = rp_to_poly(&den);

    let ts: Vec<f64> = (0..16).map(|k| 10f64 * 100f64.powf(k as f64 / 15.0)).collect();
    let mut out = Vec::new();
    for &ang in rays {
        let dir = Complex64::from_polar(1.0, ang);
        let values: Vec<f64> = ts
            .iter()
            .map(|&t| (num.eval_complex(dir * t) / den.eval_complex(dir * t)).norm())
            .collect();
        let slope = (!num.is_zero()).then(|| {
            let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
            let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
            linear_fit(&xs, &ys).0
        });
        out.push(RaySlope {
            angle: ang,
            t: ts.clone(),
            values,
            slope,
        });
    }
    let deg = (n_tilde + 1 - window.left - 1) as f64;
    let predicted = -(2.0 * deg + 1.0);
    let ok = out
        .iter()
        .all(|r| r.slope.is_none_or(|s| s <= predicted + SLOPE_SLACK));
    Ok(RateReport {
        rays: out,
        f: f_poly,
        predicted,
        verdict: if ok { Verdict::Consistent } else { Verdict::Violated },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HlReport {
    /// `(angle, t, |χ₀(z,ñ)/φ₀(z,ñ)|)` samples.
    pub ratio_samples: Vec<(f64, f64, f64)>,
    /// The ratio decreases along every ray and ends below `1e-3`.
    pub ratio_vanishes: bool,
    pub trials: usize,
    /// Smallest (over trials) largest eigenvalue displacement.
    pub min_displacement: f64,
    /// Index of the trial attaining the minimum.
    pub worst_trial: Option<usize>,
}

/// Rigidity probe: with the coefficients left of `ñ` fixed, random
/// perturbations of `{a(n)}_{n≥ñ−1}`, `{b(n)}_{n≥ñ}` of Euclidean size in
/// `[magnitude, 2·magnitude]`. Trial `i` draws from a generator seeded
/// with `seed + i`.
pub fn hochstadt_liebermann_probe(
    model: &CoefficientModel,
    window: &LatticeWindow,
    n_tilde: i64,
    trials: usize,
    magnitude: f64,
    seed: u64,
) -> Result<HlReport> {
    if !window.is_interior(n_tilde) {
        return Err(Error::Domain {
            what: "ñ",
            index: n_tilde,
        });
    }
    let mut ratio_samples = Vec::new();
    let mut vanishes = true;
    for &ang in &DEFAULT_RAYS {
        let mut last = f64::INFINITY;
        for t in [10.0, 100.0, 1000.0] {
            let z = Complex64::from_polar(t, ang);
            let chi = u_plus(model, window, z)?.sample.true_value(n_tilde)?;
            let phi = phi_fundamental(model, window, z)?.true_value(n_tilde)?;
            let r = (chi / phi).norm();
            ratio_samples.push((ang, t, r));
            vanishes &= r < last;
            last = r;
        }
        vanishes &= last < 1e-3;
    }

    let base = model.tabulate(window)?;
    let reference = eigen_tridiagonal(&base, window)?.eigenvalues;
    let (diag, off) = window_matrix(&base, window)?;
    // off[k] is a(left+1+k), diag[k] is b(left+1+k)
    let first = (n_tilde - window.left - 1) as usize;
    let a_idx: Vec<usize> = (first.saturating_sub(1)..off.len()).collect();
    let b_idx: Vec<usize> = (first..diag.len()).collect();
    let dims = a_idx.len() + b_idx.len();

    let displacement = |i: usize| -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        loop {
            let mut dir: Vec<f64> = (0..dims).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-3 {
                continue;
            }
            let size = magnitude * rng.random_range(1.0..=2.0);
            dir.iter_mut().for_each(|x| *x *= size / norm);
            let mut d = diag.clone();
            let mut e = off.clone();
            for (k, &j) in a_idx.iter().enumerate() {
                e[j] += dir[k];
            }
            for (k, &j) in b_idx.iter().enumerate() {
                d[j] += dir[a_idx.len() + k];
            }
            if e.iter().any(|&x| x <= 0.0) {
                continue;
            }
            let ev = tridiagonal_eigen(&d, &e, false)?.eigenvalues;
            return Ok(ev
                .iter()
                .zip(&reference)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max));
        }
    };
    let disp: Vec<f64> = if magnitude == 0.0 || dims == 0 {
        vec![0.0; trials]
    } else {
        (0..trials)
            .into_par_iter()
            .map(displacement)
            .collect::<Result<_>>()?
    };
    let worst = disp
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i);
    Ok(HlReport {
        ratio_samples,
        ratio_vanishes: vanishes,
        trials,
        min_displacement: worst.map_or(f64::INFINITY, |i| disp[i]),
        worst_trial: worst,
    })
}

/// Smallest `|k| ≤ max_shift` (positive first on ties) with
/// `h1(n) = h0(n + k)` on `window` for both coefficient sequences, to
/// relative `tol`, and with matching spectral measures.
pub fn shift_equivalence(
    h0: &CoefficientModel,
    h1: &CoefficientModel,
    window: &LatticeWindow,
    max_shift: i64,
    tol: f64,
) -> Result<Option<i64>> {
    let close = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0);
    let candidates = std::iter::once(0).chain((1..=max_shift).flat_map(|k| [k, -k]));
    'outer: for k in candidates {
        for n in window.left..window.right {
            match (h1.a(n), h0.a(n + k)) {
                (Ok(x), Ok(y)) if close(x, y) => {}
                _ => continue 'outer,
            }
        }
        for n in window.interior() {
            match (h1.b(n), h0.b(n + k)) {
                (Ok(x), Ok(y)) if close(x, y) => {}
                _ => continue 'outer,
            }
        }
        let r1 = spectral_measure(h1, window)?;
        let r0 = spectral_measure(h0, &window.translated(k))?;
        let same = r1.len() == r0.len()
            && r1
                .atoms()
                .iter()
                .zip(r0.atoms())
                .all(|(x, y)| close(x.lambda, y.lambda) && close(x.weight, y.weight));
        if same {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

//! Elementary factors, Krein's product for `m₋`, reconstruction of `φ` from
//! two interlacing spectra, and the disc-disjointness criterion.
//!
//! Site convention: for a cut at `n`, `μ` are the zeros of `φ(·,n)` and `ν`
//! the zeros of `φ(·,n+1)`; the product represents `m₋(z, n+1)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{solve_recurrence, CoefficientModel, LatticeWindow};
use crate::poly::Polynomial;
use crate::spectra::linear_fit;

/// `E_p(ζ,z) = (1 − z/ζ) exp(Σ_{k=1}^p (z/ζ)^k / k)`, and `E_p(0,z) = z`.
pub fn elementary_factor(p: u32, zeta: Complex64, z: Complex64) -> Complex64 {
    if zeta.norm() == 0.0 {
        return z;
    }
    let w = z / zeta;
    let mut s = Complex64::new(0.0, 0.0);
    let mut wk = Complex64::new(1.0, 0.0);
    for k in 1..=p {
        wk *= w;
        s += wk / k as f64;
    }
    (1.0 - w) * s.exp()
}

/// Two strictly interlacing real lists, `ν[i] < μ[i] < ν[i+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterlacedSpectra {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    /// Site `n + 1` at which the product represents `m₋`.
    pub anchor: i64,
    /// `false` when the lists are the first terms of infinite sequences.
    pub complete: bool,
}

impl InterlacedSpectra {
    pub fn new(mut mu: Vec<f64>, mut nu: Vec<f64>, anchor: i64, complete: bool) -> Result<Self> {
        mu.sort_by(f64::total_cmp);
        nu.sort_by(f64::total_cmp);
        if !(nu.len() == mu.len() || nu.len() == mu.len() + 1) {
            return Err(Error::NotInterlaced(format!(
                "{} μ against {} ν",
                mu.len(),
                nu.len()
            )));
        }
        for (i, &m) in mu.iter().enumerate() {
            if !(nu[i] < m) {
                return Err(Error::NotInterlaced(format!("ν = {} ≥ μ = {m}", nu[i])));
            }
            if let Some(&next) = nu.get(i + 1) {
                if !(m < next) {
                    return Err(Error::NotInterlaced(format!("μ = {m} ≥ ν = {next}")));
                }
            }
        }
        Ok(Self {
            mu,
            nu,
            anchor,
            complete,
        })
    }
}

fn product(p: u32, zeros: &[f64], z: Complex64) -> Complex64 {
    zeros
        .iter()
        .map(|&x| elementary_factor(p, Complex64::new(x, 0.0), z))
        .product()
}

/// Tail of a series whose last terms are `terms`, from a power-law fit
/// `t_j ≈ c j^{-α}`; errors when `α ≤ 1`.
fn power_tail(terms: &[f64]) -> Result<f64> {
    let n = terms.len();
    if n < 4 {
        return Ok(terms.iter().sum());
    }
    let from = n - (n / 2).min(10);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (from..n)
        .filter(|&j| terms[j] > 0.0)
        .map(|j| (((j + 1) as f64).ln(), terms[j].ln()))
        .unzip();
    if xs.len() < 2 {
        return Ok(0.0);
    }
    let (slope, _) = linear_fit(&xs, &ys);
    let alpha = -slope;
    if alpha <= 1.05 {
        return Err(Error::DivergentTail { k: n });
    }
    Ok(terms[n - 1] * n as f64 / (alpha - 1.0))
}

/// `h(z) = Σ_{k=1}^p z^k/k Σ_j (ν^{-k} − μ^{-k})` without the `ln C` term.
/// Zero points contribute nothing. Returns the polynomial and a tail bound
/// on its coefficients for incomplete lists.
fn h_polynomial(spectra: &InterlacedSpectra, p: u32) -> Result<(Polynomial, f64)> {
    let mut coeffs = vec![0.0; p as usize + 1];
    let mut tail = 0.0f64;
    for k in 1..=p as i32 {
        let inv = |x: f64| if x == 0.0 { 0.0 } else { x.powi(-k) };
        let terms: Vec<f64> = (0..spectra.nu.len().max(spectra.mu.len()))
            .map(|j| {
                spectra.nu.get(j).map_or(0.0, |&x| inv(x)) - spectra.mu.get(j).map_or(0.0, |&x| inv(x))
            })
            .collect();
        coeffs[k as usize] = terms.iter().sum::<f64>() / k as f64;
        if !spectra.complete {
            let abs: Vec<f64> = terms.iter().map(|t| t.abs()).collect();
            tail = tail.max(power_tail(&abs)? / k as f64);
        }
    }
    Ok((Polynomial::new(coeffs), tail))
}

/// `m₋(z, anchor) = C e^{h(z)} Π E_p(μ,z) / Π E_p(ν,z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductRepresentation {
    pub p: u32,
    pub c: f64,
    pub h: Polynomial,
    pub spectra: InterlacedSpectra,
    /// Number of factor pairs used.
    pub truncation: usize,
    /// Relative size of the omitted factors at the fit points; zero for
    /// complete lists.
    pub tail_estimate: f64,
}

impl ProductRepresentation {
    /// Product without the constant.
    fn shape(&self, z: Complex64) -> Complex64 {
        self.h.eval_complex(z).exp() * product(self.p, &self.spectra.mu, z)
            / product(self.p, &self.spectra.nu, z)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.c * self.shape(z)
    }

    /// Relative tail of the product at `z`, from the decay of
    /// `|log(E_p(μ_j)/E_p(ν_j))|`.
    pub fn tail_at(&self, z: Complex64) -> Result<f64> {
        if self.spectra.complete {
            return Ok(0.0);
        }
        let terms: Vec<f64> = self
            .spectra
            .mu
            .iter()
            .zip(&self.spectra.nu)
            .map(|(&m, &n)| {
                (elementary_factor(self.p, m.into(), z) / elementary_factor(self.p, n.into(), z))
                    .ln()
                    .norm()
            })
            .collect();
        power_tail(&terms)
    }
}

/// Fit `C` from the first sample `(z, m₋(z))` and check the others.
/// `tolerance` bounds the relative drift of `C` and its imaginary part.
pub fn krein_fit(
    spectra: &InterlacedSpectra,
    samples: &[(Complex64, Complex64)],
    p: u32,
    tolerance: f64,
) -> Result<ProductRepresentation> {
    if samples.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let (h, _) = h_polynomial(spectra, p)?;
    let mut rep = ProductRepresentation {
        p,
        c: 1.0,
        h,
        spectra: spectra.clone(),
        truncation: spectra.mu.len(),
        tail_estimate: 0.0,
    };
    let c0 = samples[0].1 / rep.shape(samples[0].0);
    let mut drift = c0.im.abs() / c0.norm();
    for &(z, m) in &samples[1..] {
        let c = m / rep.shape(z);
        drift = drift.max((c - c0).norm() / c0.norm());
    }
    if !(drift <= tolerance) || c0.re == 0.0 {
        return Err(Error::FitFailure { drift, tolerance });
    }
    rep.c = c0.re;
    if !spectra.complete {
        let mut t = 0.0f64;
        for &(z, _) in samples {
            t = t.max(rep.tail_at(z)?);
        }
        rep.tail_estimate = t;
    }
    Ok(rep)
}

/// Initial data for `φ` at the anchor: `φ(z, anchor) = α(z)`,
/// `φ(z, anchor−1) = β(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructedPhi {
    pub spectra: InterlacedSpectra,
    pub p: u32,
    pub a: f64,
    pub c: f64,
    pub h: Polynomial,
    /// Tail bound on the coefficients of `h` (zero for complete lists).
    pub h_tail: f64,
}

impl ConstructedPhi {
    /// `α(z) = Π E_p(ν, z)`.
    pub fn alpha(&self, z: Complex64) -> Complex64 {
        product(self.p, &self.spectra.nu, z)
    }

    /// `β̃(z) = Π E_p(μ, z)`.
    pub fn beta_tilde(&self, z: Complex64) -> Complex64 {
        product(self.p, &self.spectra.mu, z)
    }

    /// `β(z) = −a C e^{h(z)} β̃(z)`.
    pub fn beta(&self, z: Complex64) -> Complex64 {
        -self.a * self.c * self.h.eval_complex(z).exp() * self.beta_tilde(z)
    }

    /// `α` as an explicit polynomial; only for genus 0, where every factor
    /// is linear.
    pub fn alpha_polynomial(&self) -> Option<Polynomial> {
        (self.p == 0).then(|| {
            self.spectra.nu.iter().fold(Polynomial::constant(1.0), |acc, &x| {
                if x == 0.0 {
                    acc.mul_linear(0.0, 1.0)
                } else {
                    acc.mul_linear(x, -1.0 / x)
                }
            })
        })
    }

    /// Propagate `(β, α)` through the model's recurrence and return the
    /// real constant `k` with `constructed = k · φ`, checked at every
    /// interior site and sample point to relative `tolerance`.
    pub fn detect_constant(
        &self,
        model: &CoefficientModel,
        window: &LatticeWindow,
        zs: &[Complex64],
        tolerance: f64,
    ) -> Result<f64> {
        let anchor = self.spectra.anchor;
        let mut k: Option<Complex64> = None;
        let mut drift = 0.0f64;
        for &z in zs {
            let built = solve_recurrence(model, z, anchor - 1, self.beta(z), self.alpha(z), window)?;
            let phi = crate::lattice::phi_fundamental(model, window, z)?;
            for n in window.interior() {
                let r = built.true_value(n)? / phi.true_value(n)?;
                match k {
                    None => k = Some(r),
                    Some(k0) => drift = drift.max((r - k0).norm() / k0.norm()),
                }
            }
        }
        let k = k.ok_or(Error::TooFewPoints { needed: 1, got: 0 })?;
        drift = drift.max(k.im.abs() / k.norm());
        if drift > tolerance {
            return Err(Error::FitFailure { drift, tolerance });
        }
        Ok(k.re)
    }
}

pub fn construct_phi_from_spectra(
    spectra: &InterlacedSpectra,
    p: u32,
    a: f64,
    c: f64,
) -> Result<ConstructedPhi> {
    if !(a > 0.0) || c == 0.0 {
        return Err(Error::InvalidParameter(format!("a = {a}, C = {c}")));
    }
    let (h, h_tail) = h_polynomial(spectra, p)?;
    Ok(ConstructedPhi {
        spectra: spectra.clone(),
        p,
        a,
        c,
        h,
        h_tail,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscReport {
    /// All but finitely many discs are disjoint, judged on this sample.
    pub disjoint: bool,
    /// Overlapping pairs, ordered by the smaller centre.
    pub violations: Vec<(f64, f64)>,
    /// Points with `|x| ≤ 1`, outside the criterion.
    pub excluded: Vec<f64>,
}

impl DiscReport {
    pub fn first_violation(&self) -> Option<(f64, f64)> {
        self.violations.first().copied()
    }
}

/// Discs `|z − x| < |x|^{−r}` around every point of both lists.
/// Coincident points fail outright; otherwise the sample passes when no
/// violation involves the upper half (by modulus) of the points.
pub fn disc_disjoint_check(spectra: &InterlacedSpectra, r: f64) -> DiscReport {
    disc_check_points(
        spectra.mu.iter().chain(&spectra.nu).copied().collect(),
        r,
    )
}

/// Same check on raw lists that need not interlace.
pub fn disc_check_points(points: Vec<f64>, r: f64) -> DiscReport {
    let (mut pts, excluded): (Vec<f64>, Vec<f64>) = points.into_iter().partition(|x| x.abs() > 1.0);
    pts.sort_by(f64::total_cmp);
    let radius = |x: f64| x.abs().powf(-r);
    let mut violations = Vec::new();
    let mut coincident = false;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let gap = pts[j] - pts[i];
            if gap >= 2.0 {
                break;
            }
            if gap == 0.0 {
                coincident = true;
            }
            if gap < radius(pts[i]) + radius(pts[j]) {
                violations.push((pts[i], pts[j]));
            }
        }
    }
    let mut moduli: Vec<f64> = pts.iter().map(|x| x.abs()).collect();
    moduli.sort_by(f64::total_cmp);
    let median = moduli.get(moduli.len() / 2).copied().unwrap_or(f64::INFINITY);
    let late = violations
        .iter()
        .any(|&(x, y)| x.abs().min(y.abs()) >= median);
    DiscReport {
        disjoint: !coincident && !late,
        violations,
        excluded,
    }
}

/// Growth order of an entire function from `log log max_{|z|=r} |f|`
/// against `log r`.
pub fn growth_order(f: impl Fn(Complex64) -> Complex64, radii: &[f64]) -> Result<f64> {
    if radii.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: radii.len(),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &r in radii {
        let max = (0..128)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 128.0;
                f(Complex64::from_polar(r, t)).norm()
            })
            .fold(0.0f64, f64::max);
        if max <= std::f64::consts::E {
            continue;
        }
        xs.push(r.ln());
        ys.push(max.ln().ln());
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: xs.len(),
        });
    }
    Ok(linear_fit(&xs, &ys).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::restriction_spectra;
    use crate::weyl::{m_half_line, HalfLine};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn elementary_factor_values() {
        assert_relative_eq!(elementary_factor(0, c(2.0, 0.0), c(1.0, 0.0)).re, 0.5);
        assert_relative_eq!(
            elementary_factor(1, c(2.0, 0.0), c(1.0, 0.0)).re,
            0.5 * 0.5f64.exp(),
            epsilon = 1e-15
        );
        assert_eq!(elementary_factor(3, c(-1.5, 0.0), c(0.0, 0.0)), c(1.0, 0.0));
        let z = c(0.3, -2.0);
        assert_eq!(elementary_factor(0, c(0.0, 0.0), z), z);
    }

    #[test]
    fn interlacing_is_enforced() {
        assert!(InterlacedSpectra::new(vec![0.0], vec![-1.0, 1.0], 3, true).is_ok());
        assert!(InterlacedSpectra::new(vec![2.0], vec![1.0], 1, true).is_ok());
        assert!(matches!(
            InterlacedSpectra::new(vec![0.0, 0.5], vec![-1.0, 1.0], 3, true),
            Err(Error::NotInterlaced(_))
        ));
    }

    #[test]
    fn krein_on_p3() {
        let model = CoefficientModel::free();
        let w = LatticeWindow::new(0, 4).unwrap();
        let rs = restriction_spectra(&model, &w, 2).unwrap();
        let sp = InterlacedSpectra::new(rs.mu, rs.nu, 3, true).unwrap();
        let zs = [c(0.3, 0.4), c(-1.2, 0.5), c(2.0, -0.7)];
        let samples: Vec<_> = zs
            .iter()
            .map(|&z| (z, m_half_line(&model, &w, z, HalfLine::Left, 3).unwrap()))
            .collect();
        let rep = krein_fit(&sp, &samples, 0, 1e-12).unwrap();
        assert_relative_eq!(rep.c, 1.0, epsilon = 1e-14);
        let z = c(0.7, 1.1);
        assert_relative_eq!((rep.eval(z) - (-z / (z * z - 1.0))).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn single_pair_fit_from_origin() {
        let sp = InterlacedSpectra::new(vec![2.0], vec![1.0], 1, true).unwrap();
        let m = |z: Complex64| 3.0 * (1.0 - z / 2.0) / (1.0 - z);
        let samples = [(c(0.0, 0.0), m(c(0.0, 0.0))), (c(0.5, 0.5), m(c(0.5, 0.5)))];
        let rep = krein_fit(&sp, &samples, 0, 1e-12).unwrap();
        assert_relative_eq!(rep.c, 3.0, epsilon = 1e-15);
        let bad = [(c(0.0, 0.0), c(3.0, 0.0)), (c(0.5, 0.5), c(1.0, 0.0))];
        assert!(matches!(krein_fit(&sp, &bad, 0, 1e-9), Err(Error::FitFailure { .. })));
    }

    #[test]
    fn construct_phi_on_p3() {
        let model = CoefficientModel::free();
        let w = LatticeWindow::new(0, 4).unwrap();
        let sp = InterlacedSpectra::new(vec![0.0], vec![-1.0, 1.0], 3, true).unwrap();
        let built = construct_phi_from_spectra(&sp, 0, 1.0, 1.0).unwrap();
        let z = c(0.4, -0.9);
        assert_relative_eq!((built.alpha(z) - (1.0 - z * z)).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((built.beta(z) + z).norm(), 0.0, epsilon = 1e-15);
        let k = built
            .detect_constant(&model, &w, &[z, c(1.5, 0.2)], 1e-12)
            .unwrap();
        assert_relative_eq!(k, -1.0, epsilon = 1e-14);
        assert_eq!(built.alpha_polynomial().unwrap().degree(), Some(2));

        let empty = InterlacedSpectra::new(vec![], vec![], 1, true).unwrap();
        let e = construct_phi_from_spectra(&empty, 0, 1.0, 1.0).unwrap();
        assert_eq!(e.alpha(z), c(1.0, 0.0));
        assert_eq!(e.beta_tilde(z), c(1.0, 0.0));
    }

    #[test]
    fn squares_against_tangent_closed_form() {
        let j_max = 50;
        let mu: Vec<f64> = (1..=j_max).map(|j| (j * j) as f64).collect();
        let nu: Vec<f64> = (1..=j_max).map(|j| (j as f64 - 0.5).powi(2)).collect();
        let sp = InterlacedSpectra::new(mu, nu, 1, false).unwrap();
        let exact = |z: Complex64| {
            let s = PI * z.sqrt();
            s.tan() / s
        };
        let z = c(0.0, 1.0);
        let samples = [(c(-0.3, 0.2), exact(c(-0.3, 0.2)))];
        let rep = krein_fit(&sp, &samples, 0, 1e-3).unwrap();
        let err = (rep.eval(z) - exact(z)).norm() / exact(z).norm();
        assert!(err < 1e-3, "{err}");
        let tail = rep.tail_at(z).unwrap();
        assert!(tail > 0.0 && tail < 1e-3);
        // doubling the truncation moves the value by less than the estimate
        let j2 = 2 * j_max;
        let sp2 = InterlacedSpectra::new(
            (1..=j2).map(|j| (j * j) as f64).collect(),
            (1..=j2).map(|j| (j as f64 - 0.5).powi(2)).collect(),
            1,
            false,
        )
        .unwrap();
        let rep2 = ProductRepresentation { spectra: sp2, ..rep.clone() };
        let moved = (rep2.eval(z) - rep.eval(z)).norm() / rep.eval(z).norm();
        assert!(moved < tail, "{moved} vs {tail}");
    }

    #[test]
    fn divergent_tail_is_reported() {
        let harmonic: Vec<f64> = (1..=40).map(|j| 1.0 / j as f64).collect();
        assert!(matches!(power_tail(&harmonic), Err(Error::DivergentTail { k: 40 })));
        let squares: Vec<f64> = (1..=40).map(|j| 1.0 / (j * j) as f64).collect();
        let t = power_tail(&squares).unwrap();
        assert!((t - 1.0 / 40.0).abs() < 2e-3, "{t}");
    }

    #[test]
    fn disc_examples() {
        let mu: Vec<f64> = (2..=200).map(|j| j as f64).collect();
        let nu: Vec<f64> = (2..=200).map(|j| j as f64 - 0.5).collect();
        let r = disc_check_points(mu.iter().chain(&nu).copied().collect(), 1.0);
        assert!(r.disjoint);
        assert!(!r.violations.is_empty());

        let nu: Vec<f64> = (2..=200).map(|j| j as f64 - 0.25 / j as f64).collect();
        let r = disc_check_points(mu.iter().chain(&nu).copied().collect(), 1.0);
        assert!(!r.disjoint);

        let r = disc_check_points(vec![3.0, 3.0, 10.0], 1.0);
        assert!(!r.disjoint);
        assert_eq!(r.first_violation(), Some((3.0, 3.0)));

        let r = disc_check_points(vec![0.5, -1.0, 5.0], 1.0);
        assert_eq!(r.excluded, vec![0.5, -1.0]);
    }

    #[test]
    fn growth_order_of_cosine_product() {
        let nu: Vec<f64> = (1..=4000).map(|j| (j as f64 - 0.5).powi(2)).collect();
        let radii = [400.0, 1000.0, 2500.0, 6000.0, 15000.0];
        let order = growth_order(|z| product(0, &nu, z), &radii).unwrap();
        assert!((order - 0.5).abs() < 0.1, "{order}");
    }
}

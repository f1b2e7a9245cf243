//! de Branges functions `E(z,n)`, reproducing kernels and the spaces `B(n)`
//! of a window, with inner products by quadrature against `1/|E(λ,n)|²`.
//!
//! Sign convention: `E(z,n) = φ(z,n) − i a(n) φ(z,n+1)`, which makes
//! `|E(z)| > |E(z*)|` in the upper half-plane when `W(φ,θ) = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{phi_polynomials, CoefficientModel, LatticeWindow};
use crate::poly::Polynomial;
use crate::quad::{integrate_real_line, QuadOptions};
use crate::spectra::SpectralMeasure;

/// Polynomial with complex coefficients, ascending order. Elements of `B(n)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CPoly(pub Vec<Complex64>);

impl CPoly {
    pub fn from_real(p: &Polynomial) -> Self {
        Self(p.coeffs().iter().map(|&c| c.into()).collect())
    }

    pub fn monomial(k: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); k + 1];
        c[k] = 1.0.into();
        Self(c)
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| c.norm() != 0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn axpy(&self, s: Complex64, other: &CPoly) -> CPoly {
        let n = self.0.len().max(other.0.len());
        let zero = Complex64::new(0.0, 0.0);
        CPoly(
            (0..n)
                .map(|k| {
                    self.0.get(k).copied().unwrap_or(zero) + s * other.0.get(k).copied().unwrap_or(zero)
                })
                .collect(),
        )
    }
}

/// Everything needed to work in `B(n)` for one window.
#[derive(Debug, Clone)]
pub struct DeBrangesDescriptor {
    pub window: LatticeWindow,
    pub n: i64,
    a_n: f64,
    /// `φ(·, m)` for `m = left ..= right`.
    phi: Vec<Polynomial>,
    /// Core interval `[−cut, cut]`; the rest is integrated through `λ = ±1/u`.
    pub cut: f64,
    pub opts: QuadOptions,
}

impl DeBrangesDescriptor {
    /// Requires `left+1 ≤ n` and `n+1 ≤ right`.
    pub fn new(model: &CoefficientModel, window: &LatticeWindow, n: i64) -> Result<Self> {
        if n <= window.left || n + 1 > window.right {
            return Err(Error::Domain {
                what: "de Branges site",
                index: n,
            });
        }
        let phi = phi_polynomials(model, window)?;
        let mut radius = 1.0f64;
        for m in window.left + 1..=(n + 1).min(window.right - 1) {
            radius = radius.max(model.b(m)?.abs() + model.a(m - 1)? + model.a(m)?);
        }
        Ok(Self {
            window: *window,
            n,
            a_n: model.a(n)?,
            phi,
            cut: 2.0 * radius,
            opts: QuadOptions {
                abs_tol: 1e-10,
                rel_tol: 1e-10,
                max_panels: 20_000,
            },
        })
    }

    fn phi_at(&self, m: i64) -> &Polynomial {
        &self.phi[(m - self.window.left) as usize]
    }

    /// `φ(·, m)` as an element of `B(n)` for `left < m ≤ n`.
    pub fn basis(&self, m: i64) -> Result<CPoly> {
        if m <= self.window.left || m > self.n {
            return Err(Error::Domain {
                what: "basis site",
                index: m,
            });
        }
        Ok(CPoly::from_real(self.phi_at(m)))
    }

    /// `dim B(n) = n − left`.
    pub fn dimension(&self) -> usize {
        (self.n - self.window.left) as usize
    }

    /// Elements of `B(n)` have degree at most `n − left − 1`.
    pub fn degree_bound(&self) -> usize {
        self.dimension() - 1
    }

    pub fn e(&self, z: Complex64) -> Complex64 {
        self.phi_at(self.n).eval_complex(z)
            - Complex64::i() * self.a_n * self.phi_at(self.n + 1).eval_complex(z)
    }

    /// `E^#(z) = E(z*)*`.
    pub fn e_sharp(&self, z: Complex64) -> Complex64 {
        self.e(z.conj()).conj()
    }

    /// `K(ζ,z,n) = Σ_{m=left+1}^{n} φ(ζ,m)* φ(z,m)`.
    pub fn kernel(&self, zeta: Complex64, z: Complex64) -> Complex64 {
        (self.window.left + 1..=self.n)
            .map(|m| {
                let p = self.phi_at(m);
                p.eval_complex(zeta).conj() * p.eval_complex(z)
            })
            .sum()
    }

    /// `(E(z)E^#(ζ*) − E(ζ*)E^#(z)) / (2i(ζ* − z))`.
    pub fn kernel_from_e(&self, zeta: Complex64, z: Complex64) -> Complex64 {
        let zc = zeta.conj();
        (self.e(z) * self.e_sharp(zc) - self.e(zc) * self.e_sharp(z))
            / (2.0 * Complex64::i() * (zc - z))
    }

    /// `K(w, ·, n)` as an element of `B(n)`.
    pub fn kernel_section(&self, w: Complex64) -> CPoly {
        (self.window.left + 1..=self.n).fold(CPoly::default(), |acc, m| {
            let p = self.phi_at(m);
            acc.axpy(p.eval_complex(w).conj(), &CPoly::from_real(p))
        })
    }

    fn check_member(&self, f: &CPoly) -> Result<()> {
        match f.degree() {
            Some(d) if d > self.degree_bound() => Err(Error::DegreeTooHigh {
                degree: d,
                bound: self.degree_bound(),
            }),
            _ => Ok(()),
        }
    }
}

pub fn de_branges_e(model: &CoefficientModel, window: &LatticeWindow, n: i64, z: Complex64) -> Result<Complex64> {
    Ok(DeBrangesDescriptor::new(model, window, n)?.e(z))
}

pub fn reproducing_kernel(
    model: &CoefficientModel,
    window: &LatticeWindow,
    n: i64,
    zeta: Complex64,
    z: Complex64,
) -> Result<Complex64> {
    Ok(DeBrangesDescriptor::new(model, window, n)?.kernel(zeta, z))
}

/// `⟨F,G⟩ = (1/π) ∫ F(λ)* G(λ) / |E(λ,n)|² dλ`.
pub fn db_inner_product(desc: &DeBrangesDescriptor, f: &CPoly, g: &CPoly) -> Result<Complex64> {
    desc.check_member(f)?;
    desc.check_member(g)?;
    let integrand = |x: f64| {
        let z = Complex64::new(x, 0.0);
        f.eval(z).conj() * g.eval(z) * (1.0 / desc.e(z).norm_sqr())
    };
    let r = integrate_real_line(integrand, desc.cut, &[], desc.opts)?;
    Ok(r.value / PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingCheck {
    pub b_norm_sqr: f64,
    pub l2_norm_sqr: f64,
    pub residual: f64,
}

/// `‖F‖²_{B(n)}` against `∫ |F|² dρ`.
pub fn embedding_check(desc: &DeBrangesDescriptor, f: &CPoly, rho: &SpectralMeasure) -> Result<EmbeddingCheck> {
    let b = db_inner_product(desc, f, f)?.re;
    let l2 = rho.integrate(|x| f.eval(x.into()).norm_sqr());
    Ok(EmbeddingCheck {
        b_norm_sqr: b,
        l2_norm_sqr: l2,
        residual: (b - l2).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub dim_n: usize,
    pub dim_next: usize,
    /// Largest gap between `B(n)` and `B(n+1)` inner products over pairs of
    /// basis elements and kernel sections of `B(n)`.
    pub shared_gap: f64,
    /// `λ^d` minus its `B(n+1)` projection onto `B(n)`, `d = dim B(n)`.
    pub complement: CPoly,
    /// Largest `|⟨complement, φ_m⟩_{B(n+1)}|` over `m ≤ n`.
    pub complement_orthogonality: f64,
    /// Distance of the normalized complement from `φ(·, n+1)` (coefficient
    /// sup norm), i.e. from the transform of `δ_{n+1}`.
    pub complement_vs_delta: f64,
}

/// Checks `B(n) ⊂ B(n+1)` isometrically and exhibits the complement.
pub fn chain_inclusion_check(model: &CoefficientModel, window: &LatticeWindow, n: i64) -> Result<ChainReport> {
    let small = DeBrangesDescriptor::new(model, window, n)?;
    let big = DeBrangesDescriptor::new(model, window, n + 1)?;
    let mut elements: Vec<CPoly> = (window.left + 1..=n)
        .map(|m| small.basis(m))
        .collect::<Result<_>>()?;
    for w in [-0.7, 0.3, 1.1] {
        elements.push(small.kernel_section(Complex64::new(w, 0.0)));
    }
    let mut shared_gap = 0.0f64;
    for (i, f) in elements.iter().enumerate() {
        for g in &elements[i..] {
            let gap = (db_inner_product(&small, f, g)? - db_inner_product(&big, f, g)?).norm();
            shared_gap = shared_gap.max(gap);
        }
    }
    // the φ_m are orthonormal in B(n+1), so the projection has coefficients ⟨φ_m, λ^d⟩
    let d = small.dimension();
    let mut complement = CPoly::monomial(d);
    let top = CPoly::monomial(d);
    for m in window.left + 1..=n {
        let p = big.basis(m)?;
        let c = db_inner_product(&big, &p, &top)?;
        complement = complement.axpy(-c, &p);
    }
    let mut orth = 0.0f64;
    for m in window.left + 1..=n {
        orth = orth.max(db_inner_product(&big, &big.basis(m)?, &complement)?.norm());
    }
    let target = big.basis(n + 1)?;
    let lead = target.0[d];
    let scaled = CPoly(complement.0.iter().map(|&c| c * lead).collect());
    let vs = scaled
        .axpy(Complex64::new(-1.0, 0.0), &target)
        .0
        .iter()
        .fold(0.0f64, |m, c| m.max(c.norm()));
    Ok(ChainReport {
        dim_n: small.dimension(),
        dim_next: big.dimension(),
        shared_gap,
        complement,
        complement_orthogonality: orth,
        complement_vs_delta: vs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::spectral_measure;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p3(n: i64) -> DeBrangesDescriptor {
        DeBrangesDescriptor::new(&CoefficientModel::free(), &LatticeWindow::new(0, 4).unwrap(), n).unwrap()
    }

    #[test]
    fn e_and_kernel_on_p3() {
        let d = p3(2);
        let z = c(0.4, 0.9);
        assert_abs_diff_eq!((d.e(z) - (z - Complex64::i() * (z * z - 1.0))).norm(), 0.0, epsilon = 1e-15);
        for lam in [-1.3, 0.0, 0.5, 2.0] {
            let e = d.e(lam.into());
            assert_abs_diff_eq!(e.norm_sqr(), lam.powi(4) - lam * lam + 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(e.im, -(lam * lam - 1.0), epsilon = 1e-15);
        }
        assert!(d.e(c(0.2, 1.0)).norm() > d.e(c(0.2, -1.0)).norm());
        let zeta = c(-0.3, 0.6);
        assert_abs_diff_eq!((d.kernel(zeta, z) - (1.0 + zeta.conj() * z)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(d.kernel(c(0.0, 0.0), z), c(1.0, 0.0));
        assert!(d.kernel(z, z).re >= 0.0);
        assert_abs_diff_eq!((d.kernel_from_e(zeta, z) - d.kernel(zeta, z)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn explicit_integrals() {
        let d2 = p3(2);
        let one = CPoly::monomial(0);
        let lam = CPoly::monomial(1);
        assert_abs_diff_eq!(db_inner_product(&d2, &one, &one).unwrap().re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(db_inner_product(&d2, &one, &lam).unwrap().norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(db_inner_product(&d2, &lam, &lam).unwrap().re, 1.0, epsilon = 1e-10);
        let d3 = p3(3);
        let sq = CPoly::monomial(2);
        assert_abs_diff_eq!(db_inner_product(&d3, &sq, &sq).unwrap().re, 2.0, epsilon = 1e-10);
        assert!(matches!(
            db_inner_product(&d2, &sq, &one),
            Err(Error::DegreeTooHigh { degree: 2, bound: 1 })
        ));
    }

    #[test]
    fn embedding_on_p3() {
        let rho = spectral_measure(&CoefficientModel::free(), &LatticeWindow::new(0, 4).unwrap()).unwrap();
        for (n, k, want) in [(2, 0, 1.0), (2, 1, 1.0), (3, 2, 2.0)] {
            let e = embedding_check(&p3(n), &CPoly::monomial(k), &rho).unwrap();
            assert_abs_diff_eq!(e.b_norm_sqr, want, epsilon = 1e-10);
            assert_abs_diff_eq!(e.l2_norm_sqr, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn chain_on_p3() {
        let m = CoefficientModel::free();
        let w = LatticeWindow::new(0, 4).unwrap();
        let r = chain_inclusion_check(&m, &w, 2).unwrap();
        assert_eq!((r.dim_n, r.dim_next), (2, 3));
        assert!(r.shared_gap < 1e-8);
        assert_abs_diff_eq!(r.complement.0[0].re, -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.complement.0[1].norm(), 0.0, epsilon = 1e-10);
        assert!(r.complement_orthogonality < 1e-10);
        assert!(r.complement_vs_delta < 1e-10);

        let r = chain_inclusion_check(&m, &w, 1).unwrap();
        assert_eq!(r.dim_n, 1);
        assert_eq!(p3(1).degree_bound(), 0);
    }

    #[test]
    fn reproducing_property_on_table() {
        let m = CoefficientModel::table(0, vec![0.8, 1.4, 0.6, 1.9, 1.0, 1.2], 1, vec![0.3, -0.9, 0.5, 0.1, -0.4])
            .unwrap();
        let w = LatticeWindow::new(0, 6).unwrap();
        let d = DeBrangesDescriptor::new(&m, &w, 4).unwrap();
        let f = CPoly(vec![c(0.5, 0.1), c(-1.0, 0.3), c(0.2, 0.0), c(0.7, -0.4)]);
        for wpt in [-1.2, 0.4, 2.5] {
            let k = d.kernel_section(wpt.into());
            let got = db_inner_product(&d, &k, &f).unwrap();
            assert_abs_diff_eq!((got - f.eval(wpt.into())).norm(), 0.0, epsilon = 1e-9);
        }
        for m1 in 1..=4 {
            for m2 in 1..=4 {
                let v = db_inner_product(&d, &d.basis(m1).unwrap(), &d.basis(m2).unwrap()).unwrap();
                let want = if m1 == m2 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((v - want).norm(), 0.0, epsilon = 1e-9);
            }
        }
    }
}

//! Spectral transform of a window: `f̂(λ_k) = Σ_m φ(λ_k,m) f(m)` and its
//! inverse `f(n) = Σ_k φ(λ_k,n) f̂(λ_k) w_k`.
//!
//! Vectors on the lattice side are indexed by interior site, `f[0]` at
//! `left+1`; spectral-side vectors are indexed by atom.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{phi_at_eigenvalue, CoefficientModel, LatticeWindow};
use crate::spectra::{spectral_measure, SpectralMeasure};
use crate::weyl::green_function;

/// Transform matrix of one window, computed once.
#[derive(Debug, Clone)]
pub struct SpectralTransform {
    window: LatticeWindow,
    measure: SpectralMeasure,
    /// `phi[k][j] = φ(λ_k, left+1+j)`.
    phi: Vec<Vec<f64>>,
}

impl SpectralTransform {
    pub fn new(model: &CoefficientModel, window: &LatticeWindow) -> Result<Self> {
        let measure = spectral_measure(model, window)?;
        let phi = measure
            .atoms()
            .iter()
            .map(|a| {
                let v = phi_at_eigenvalue(model, window, a.lambda)?;
                Ok(v[1..v.len() - 1].to_vec())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            window: *window,
            measure,
            phi,
        })
    }

    pub fn measure(&self) -> &SpectralMeasure {
        &self.measure
    }

    pub fn window(&self) -> LatticeWindow {
        self.window
    }

    /// `φ(λ_k, n)` for atom `k` and interior site `n`.
    pub fn phi_at(&self, k: usize, n: i64) -> Result<f64> {
        if !self.window.is_interior(n) {
            return Err(Error::Domain {
                what: "transform site",
                index: n,
            });
        }
        Ok(self.phi[k][(n - self.window.left - 1) as usize])
    }

    fn check_len(&self, len: usize, what: &'static str) -> Result<()> {
        if len != self.phi.len() {
            return Err(Error::InvalidParameter(format!(
                "{what} has length {len}, expected {}",
                self.phi.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(f.len(), "lattice vector")?;
        Ok(self
            .phi
            .iter()
            .map(|row| row.iter().zip(f).map(|(&p, &x)| x * p).sum())
            .collect())
    }

    pub fn inverse(&self, fhat: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(fhat.len(), "spectral vector")?;
        let sites = self.window.sites();
        let mut out = vec![Complex64::new(0.0, 0.0); sites];
        for ((row, atom), &g) in self.phi.iter().zip(self.measure.atoms()).zip(fhat) {
            for (o, &p) in out.iter_mut().zip(row) {
                *o += g * p * atom.weight;
            }
        }
        Ok(out)
    }

    /// `Σ_k |f̂_k|² w_k`.
    pub fn spectral_norm_sqr(&self, fhat: &[Complex64]) -> f64 {
        fhat.iter()
            .zip(self.measure.atoms())
            .map(|(v, a)| v.norm_sqr() * a.weight)
            .sum()
    }
}

pub fn forward_transform(
    model: &CoefficientModel,
    window: &LatticeWindow,
    f: &[Complex64],
) -> Result<Vec<Complex64>> {
    SpectralTransform::new(model, window)?.forward(f)
}

pub fn inverse_transform(
    model: &CoefficientModel,
    window: &LatticeWindow,
    fhat: &[Complex64],
) -> Result<Vec<Complex64>> {
    SpectralTransform::new(model, window)?.inverse(fhat)
}

/// `H f` for the Dirichlet window operator.
pub fn apply_window_operator(
    model: &CoefficientModel,
    window: &LatticeWindow,
    f: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = window.sites();
    if f.len() != n {
        return Err(Error::InvalidParameter(format!(
            "vector has length {}, window has {n} sites",
            f.len()
        )));
    }
    (0..n)
        .map(|j| {
            let site = window.left + 1 + j as i64;
            let mut v = model.b(site)? * f[j];
            if j > 0 {
                v += model.a(site - 1)? * f[j - 1];
            }
            if j + 1 < n {
                v += model.a(site)? * f[j + 1];
            }
            Ok(v)
        })
        .collect()
}

/// Both sides of the Green transform identity for order `k ∈ {0, 1}`:
/// the transform of `m ↦ ∂_z^k G(z,n,m)` and `k! φ(λ,n) / (λ−z)^{k+1}`.
#[derive(Debug, Clone)]
pub struct GreenTransformCheck {
    pub lhs: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
    /// For `k = 1`: largest gap between the analytic derivative of `G` and a
    /// central difference of the propagated Green function.
    pub finite_difference_gap: Option<f64>,
}

pub fn green_transform_check(
    model: &CoefficientModel,
    window: &LatticeWindow,
    z: Complex64,
    n: i64,
    k: u32,
) -> Result<GreenTransformCheck> {
    let tr = SpectralTransform::new(model, window)?;
    let atoms = tr.measure().atoms().to_vec();
    let sites: Vec<i64> = window.interior().collect();
    let rhs: Vec<Complex64> = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let p = tr.phi_at(i, n)?;
            Ok(match k {
                0 => p / (a.lambda - z),
                1 => p / ((a.lambda - z) * (a.lambda - z)),
                _ => return Err(Error::InvalidParameter(format!("order {k} not supported"))),
            })
        })
        .collect::<Result<_>>()?;
    let (g, gap) = match k {
        0 => (
            sites
                .iter()
                .map(|&m| green_function(model, window, z, n, m))
                .collect::<Result<Vec<_>>>()?,
            None,
        ),
        _ => {
            // analytic derivative of Σ_k φ(λ_k,n) φ(λ_k,m) w_k / (λ_k − z)
            let dg: Vec<Complex64> = sites
                .iter()
                .map(|&m| {
                    atoms
                        .iter()
                        .enumerate()
                        .map(|(i, a)| {
                            Ok(tr.phi_at(i, n)? * tr.phi_at(i, m)? * a.weight
                                / ((a.lambda - z) * (a.lambda - z)))
                        })
                        .sum::<Result<Complex64>>()
                })
                .collect::<Result<_>>()?;
            let h = 1e-5 * z.norm().max(1.0);
            let mut gap = 0.0f64;
            for (&m, d) in sites.iter().zip(&dg) {
                let fd = (green_function(model, window, z + h, n, m)?
                    - green_function(model, window, z - h, n, m)?)
                    / (2.0 * h);
                gap = gap.max((fd - d).norm());
            }
            (dg, Some(gap))
        }
    };
    Ok(GreenTransformCheck {
        lhs: tr.forward(&g)?,
        rhs,
        finite_difference_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn re(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    fn p3() -> (CoefficientModel, LatticeWindow) {
        (CoefficientModel::free(), LatticeWindow::new(0, 4).unwrap())
    }

    #[test]
    fn delta_transforms_on_p3() {
        let (m, w) = p3();
        let tr = SpectralTransform::new(&m, &w).unwrap();
        let s = 2f64.sqrt();
        let d2 = tr.forward(&re(&[0.0, 1.0, 0.0])).unwrap();
        for (g, want) in d2.iter().zip([-s, 0.0, s]) {
            assert_relative_eq!((g - want).norm(), 0.0, epsilon = 1e-14);
        }
        let back = tr.inverse(&d2).unwrap();
        for (g, want) in back.iter().zip([0.0, 1.0, 0.0]) {
            assert_relative_eq!((g - want).norm(), 0.0, epsilon = 1e-12);
        }
        let d1 = tr.forward(&re(&[1.0, 0.0, 0.0])).unwrap();
        assert!(d1.iter().all(|v| (v - 1.0).norm() < 1e-15));
        assert_relative_eq!(tr.spectral_norm_sqr(&d1), 1.0, epsilon = 1e-14);
        assert!(tr.forward(&re(&[0.0; 3])).unwrap().iter().all(|v| v.norm() == 0.0));
        assert!(tr.inverse(&re(&[0.0; 3])).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn multiplication_by_lambda_is_h() {
        let (m, w) = p3();
        let tr = SpectralTransform::new(&m, &w).unwrap();
        let lam: Vec<Complex64> = tr.measure().locations().iter().map(|&x| x.into()).collect();
        let got = tr.inverse(&lam).unwrap();
        for (g, want) in got.iter().zip([0.0, 1.0, 0.0]) {
            assert_relative_eq!((g - want).norm(), 0.0, epsilon = 1e-12);
        }
        let hd1 = apply_window_operator(&m, &w, &re(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(hd1, re(&[0.0, 1.0, 0.0]));
    }

    #[test]
    fn green_identity_on_small_window() {
        let m = CoefficientModel::table(0, vec![0.9, 1.3, 0.6, 1.8, 1.0], 1, vec![0.5, -0.4, 0.2, 0.9])
            .unwrap();
        let w = LatticeWindow::new(0, 5).unwrap();
        let z = Complex64::new(0.3, 0.7);
        for k in [0, 1] {
            let chk = green_transform_check(&m, &w, z, 2, k).unwrap();
            for (l, r) in chk.lhs.iter().zip(&chk.rhs) {
                assert_relative_eq!((l - r).norm(), 0.0, epsilon = 1e-12);
            }
            if k == 1 {
                assert!(chk.finite_difference_gap.unwrap() < 1e-8);
            }
        }
    }
}

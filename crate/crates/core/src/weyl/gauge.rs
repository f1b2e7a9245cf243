//! Gauge freedom of the fundamental system, Herglotz renormalization of a
//! measure, and the integral-representation residual.

use num_complex::Complex64;

use super::WeylFunction;
use crate::error::Result;
use crate::lattice::SolutionSample;
use crate::poly::Polynomial;
use crate::spectra::{Atom, SpectralMeasure};

/// `θ̃ = e^{−g} θ − f φ`, `φ̃ = e^{g} φ` with real polynomials `g`, `f`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaugeTransform {
    pub g: Polynomial,
    pub f: Polynomial,
}

impl GaugeTransform {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn constant(g: f64, f: f64) -> Self {
        Self {
            g: Polynomial::constant(g),
            f: Polynomial::constant(f),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaugedObjects {
    pub theta: SolutionSample,
    pub phi: SolutionSample,
    pub m: WeylFunction,
    pub rho: SpectralMeasure,
}

/// Apply a gauge to a fundamental pair sampled at one `z`, to `M`, and to `ρ`.
/// Both samples must share `z` and scaling.
pub fn gauge_apply(
    tr: &GaugeTransform,
    theta: &SolutionSample,
    phi: &SolutionSample,
    m: &WeylFunction,
    rho: &SpectralMeasure,
) -> Result<GaugedObjects> {
    let z = phi.z();
    let g = tr.g.eval_complex(z);
    let f = tr.f.eval_complex(z);
    let phi_values: Vec<Complex64> = phi.values().iter().map(|&p| g.exp() * p).collect();
    let theta_values: Vec<Complex64> = theta
        .values()
        .iter()
        .zip(phi.values())
        .map(|(&t, &p)| (-g).exp() * t - f * p)
        .collect();
    let tagged = format!("{} gauged", rho.normalization());
    Ok(GaugedObjects {
        theta: SolutionSample::from_parts(z, theta.window(), theta_values, theta.log_scale()),
        phi: SolutionSample::from_parts(z, phi.window(), phi_values, phi.log_scale()),
        m: WeylFunction::Gauged {
            base: Box::new(m.clone()),
            gauge: tr.clone(),
        },
        rho: rho.reweighted(|lam| (-2.0 * tr.g.eval(lam)).exp(), &tagged)?,
    })
}

/// `M̃(z) = ∫ e^{−2g(λ)} / (λ − z) dρ(λ)` as a pole-residue function.
pub fn herglotz_normalize(rho: &SpectralMeasure, g: &Polynomial) -> WeylFunction {
    WeylFunction::PoleResidue {
        atoms: rho
            .atoms()
            .iter()
            .map(|a| Atom {
                lambda: a.lambda,
                weight: a.weight * (-2.0 * g.eval(a.lambda)).exp(),
            })
            .collect(),
        constant: 0.0,
    }
}

/// Positive entire weight `ĝ` of the integral representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GHat {
    One,
    /// `ĝ(z) = exp(z^{2⌈(p+1)/2⌉})` for genus `p`.
    ExpPower { genus: u32 },
}

impl GHat {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            GHat::One => Complex64::new(1.0, 0.0),
            GHat::ExpPower { genus } => {
                let k = 2 * (genus + 1).div_ceil(2);
                z.powu(k).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPoint {
    pub z: Complex64,
    /// `None` when the point sits on an atom and was skipped.
    pub e: Option<Complex64>,
}

/// `E(z) = M(z) − ĝ(z) Σ (1/(λ−z) − λ/(1+λ²)) w / ĝ(λ)` on each grid point.
pub fn integral_representation_residual(
    m: &WeylFunction,
    rho: &SpectralMeasure,
    ghat: GHat,
    grid: &[Complex64],
) -> Result<Vec<ResidualPoint>> {
    grid.iter()
        .map(|&z| {
            if rho
                .atoms()
                .iter()
                .any(|a| (a.lambda - z).norm() < 1e-12 * a.lambda.abs().max(1.0))
            {
                return Ok(ResidualPoint { z, e: None });
            }
            let sum: Complex64 = rho
                .atoms()
                .iter()
                .map(|a| {
                    let gl = ghat.eval(Complex64::new(a.lambda, 0.0)).re;
                    (1.0 / (a.lambda - z) - a.lambda / (1.0 + a.lambda * a.lambda)) * a.weight
                        / gl
                })
                .sum();
            Ok(ResidualPoint {
                z,
                e: Some(m.eval(z)? - ghat.eval(z) * sum),
            })
        })
        .collect()
}

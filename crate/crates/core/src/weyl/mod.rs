//! Weyl solutions, half-line m-functions, the singular Weyl function `M`,
//! the Weyl solution `ψ`, and the Green function of a window.
//!
//! Conventions: `φ` and `θ` are the left-Dirichlet fundamental system with
//! `W(φ,θ) = 1`; `u₊` satisfies `u₊(right) = 0`, `u₊(right-1) = 1`. With
//! these, `M` is Herglotz and equals `Σ w_k / (λ_k − z)` on a window.

mod gauge;
mod inversion;
mod support;

pub use gauge::{
    gauge_apply, herglotz_normalize, integral_representation_residual, GHat, GaugeTransform,
    GaugedObjects, ResidualPoint,
};
pub use inversion::{stieltjes_inversion, InversionResult, DEFAULT_EPSILONS};
pub use support::{classify_support, free_half_line_m, SupportTag};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{
    phi_fundamental, solve_recurrence, theta_fundamental, CoefficientModel, LatticeWindow,
    SolutionSample,
};
use crate::spectra::{eigen_tridiagonal, spectral_measure, Atom};

// |W(φ,u₊)| below this fraction of |u₊(left+1)| is treated as a pole.
const POLE_TOL: f64 = 1e-13;

/// Right-Dirichlet solution together with `W(φ, u₊)`.
#[derive(Debug, Clone)]
pub struct RightSolution {
    pub sample: SolutionSample,
    /// `W(φ, u₊)` in the sample's scaling; `α(z) = −W(φ, u₊)`.
    pub w_phi: Complex64,
    /// `z` is (numerically) a window eigenvalue, so `u₊ ∝ φ`.
    pub at_eigenvalue: bool,
}

pub fn u_plus(model: &CoefficientModel, window: &LatticeWindow, z: Complex64) -> Result<RightSolution> {
    let sample = solve_recurrence(
        model,
        z,
        window.right - 1,
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        window,
    )?;
    // W(φ,u)(left) = a(left) (0·u(left+1) − 1·u(left))
    let w_phi = -model.a(window.left)? * sample.value(window.left)?;
    let reference = sample.value(window.left + 1)?.norm().max(w_phi.norm());
    let at_eigenvalue = w_phi.norm() <= POLE_TOL * reference;
    Ok(RightSolution {
        sample,
        w_phi,
        at_eigenvalue,
    })
}

fn nearest(points: &[f64], z: Complex64) -> Option<f64> {
    points
        .iter()
        .copied()
        .min_by(|x, y| (x - z.re).abs().total_cmp(&(y - z.re).abs()))
}

fn window_pole(model: &CoefficientModel, window: &LatticeWindow, z: Complex64) -> Error {
    let near = eigen_tridiagonal(model, window)
        .ok()
        .and_then(|s| nearest(&s.eigenvalues, z));
    Error::Pole { z, near }
}

/// `M(z) = −W(θ,u₊)/W(φ,u₊)`, evaluated at the left end where it reduces to
/// `−u₊(left+1) / (a(left) u₊(left))`.
pub fn singular_m(model: &CoefficientModel, window: &LatticeWindow, z: Complex64) -> Result<Complex64> {
    let r = u_plus(model, window, z)?;
    if r.at_eigenvalue {
        return Err(window_pole(model, window, z));
    }
    // W(θ,u)(left) = a(left) θ(left) u(left+1) = −u(left+1)
    let w_theta = -r.sample.value(window.left + 1)?;
    Ok(-w_theta / r.w_phi)
}

/// Which half-line m-function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfLine {
    /// `m₋(z,n) = −φ(z,n−1) / (a(n−1) φ(z,n))`, for `left+1 <= n <= right`.
    Left,
    /// `m₊(z,n) = −u₊(z,n+1) / (a(n) u₊(z,n))`, for `left <= n <= right-1`.
    Right,
}

pub fn m_half_line(
    model: &CoefficientModel,
    window: &LatticeWindow,
    z: Complex64,
    side: HalfLine,
    n: i64,
) -> Result<Complex64> {
    match side {
        HalfLine::Left => {
            if n <= window.left || n > window.right {
                return Err(Error::Domain { what: "m-", index: n });
            }
            let phi = phi_fundamental(model, window, z)?;
            let den = model.a(n - 1)? * phi.value(n)?;
            let num = phi.value(n - 1)?;
            if den.norm() <= POLE_TOL * num.norm() {
                let near = if n - window.left >= 2 {
                    eigen_tridiagonal(model, &LatticeWindow::new(window.left, n)?)
                        .ok()
                        .and_then(|s| nearest(&s.eigenvalues, z))
                } else {
                    None
                };
                return Err(Error::Pole { z, near });
            }
            Ok(-num / den)
        }
        HalfLine::Right => {
            if n < window.left || n >= window.right {
                return Err(Error::Domain { what: "m+", index: n });
            }
            let u = u_plus(model, window, z)?.sample;
            let den = model.a(n)? * u.value(n)?;
            let num = u.value(n + 1)?;
            if den.norm() <= POLE_TOL * num.norm() {
                let near = if window.right - n >= 2 {
                    eigen_tridiagonal(model, &LatticeWindow::new(n, window.right)?)
                        .ok()
                        .and_then(|s| nearest(&s.eigenvalues, z))
                } else {
                    None
                };
                return Err(Error::Pole { z, near });
            }
            Ok(-num / den)
        }
    }
}

/// `ψ = θ + Mφ`, built as `u₊ / W(φ, u₊)` to avoid cancellation.
pub fn weyl_psi(model: &CoefficientModel, window: &LatticeWindow, z: Complex64) -> Result<SolutionSample> {
    let r = u_plus(model, window, z)?;
    if r.at_eigenvalue {
        return Err(window_pole(model, window, z));
    }
    let values = r.sample.values().iter().map(|&u| u / r.w_phi).collect();
    Ok(SolutionSample::from_parts(z, *window, values, 0.0))
}

/// `G(z,n,m) = φ(z, min) ψ(z, max)`.
pub fn green_function(
    model: &CoefficientModel,
    window: &LatticeWindow,
    z: Complex64,
    n: i64,
    m: i64,
) -> Result<Complex64> {
    let phi = phi_fundamental(model, window, z)?;
    let psi = weyl_psi(model, window, z)?;
    let (lo, hi) = (n.min(m), n.max(m));
    Ok(phi.value(lo)? * psi.value(hi)? * phi.log_scale().exp())
}

/// `M(z) + θ(z,n)/φ(z,n)`, computed through the identity
/// `M + θ/φ = ψ/φ` so the leading terms never cancel numerically.
pub fn asymptotic_remainder(
    model: &CoefficientModel,
    window: &LatticeWindow,
    z: Complex64,
    n: i64,
) -> Result<Complex64> {
    let phi = phi_fundamental(model, window, z)?;
    let psi = weyl_psi(model, window, z)?;
    let p = phi.value(n)?;
    if p.norm() == 0.0 {
        return Err(Error::Pole { z, near: None });
    }
    Ok(psi.value(n)? / p * (-phi.log_scale()).exp())
}

/// Direct `M(z) + θ(z,n)/φ(z,n)` by subtraction. Only meaningful while the
/// remainder is not far below `|M|` in relative size.
pub fn asymptotic_remainder_direct(
    model: &CoefficientModel,
    window: &LatticeWindow,
    z: Complex64,
    n: i64,
) -> Result<Complex64> {
    let m = singular_m(model, window, z)?;
    let phi = phi_fundamental(model, window, z)?;
    let theta = theta_fundamental(model, window, z)?;
    Ok(m + theta.value(n)? / phi.value(n)?)
}

/// Evaluable Weyl function. All variants satisfy `M(z*) = M(z)*`.
#[derive(Debug, Clone)]
pub enum WeylFunction {
    /// `M(z) = constant + Σ w_k / (λ_k − z)` with `w_k > 0`.
    PoleResidue { atoms: Vec<Atom>, constant: f64 },
    /// `−W(θ,u₊)/W(φ,u₊)` evaluated by propagation on the window.
    Sampler {
        model: CoefficientModel,
        window: LatticeWindow,
    },
    /// `e^{−2g(z)} M(z) + e^{−g(z)} f(z)`.
    Gauged {
        base: Box<WeylFunction>,
        gauge: GaugeTransform,
    },
}

impl WeylFunction {
    pub fn sampler(model: &CoefficientModel, window: &LatticeWindow) -> Self {
        Self::Sampler {
            model: model.clone(),
            window: *window,
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self {
            Self::PoleResidue { atoms, constant } => {
                let mut acc = Complex64::new(*constant, 0.0);
                for a in atoms {
                    let d = a.lambda - z;
                    if d.norm() == 0.0 {
                        return Err(Error::Pole {
                            z,
                            near: Some(a.lambda),
                        });
                    }
                    acc += a.weight / d;
                }
                Ok(acc)
            }
            Self::Sampler { model, window } => singular_m(model, window, z),
            Self::Gauged { base, gauge } => {
                let g = gauge.g.eval_complex(z);
                let f = gauge.f.eval_complex(z);
                Ok((-2.0 * g).exp() * base.eval(z)? + (-g).exp() * f)
            }
        }
    }

    /// `dM/dz` for the pole-residue form: `Σ w_k / (λ_k − z)²`.
    pub fn derivative(&self, z: Complex64) -> Option<Complex64> {
        match self {
            Self::PoleResidue { atoms, .. } => Some(
                atoms
                    .iter()
                    .map(|a| a.weight / ((a.lambda - z) * (a.lambda - z)))
                    .sum(),
            ),
            _ => None,
        }
    }

    /// Known pole locations, if this representation exposes them.
    pub fn poles(&self) -> Option<Vec<f64>> {
        match self {
            Self::PoleResidue { atoms, .. } => Some(atoms.iter().map(|a| a.lambda).collect()),
            Self::Sampler { model, window } => {
                eigen_tridiagonal(model, window).ok().map(|s| s.eigenvalues)
            }
            Self::Gauged { base, .. } => base.poles(),
        }
    }
}

/// Pole-residue form of `M` on a window: poles at the eigenvalues with
/// weights `γ_k⁻²`.
pub fn pole_residue_form(model: &CoefficientModel, window: &LatticeWindow) -> Result<WeylFunction> {
    let rho = spectral_measure(model, window)?;
    Ok(WeylFunction::PoleResidue {
        atoms: rho.atoms().to_vec(),
        constant: 0.0,
    })
}

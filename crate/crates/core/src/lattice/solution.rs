//! The difference expression, Wronskians, and solutions of `τu = zu`.

use num_complex::Complex64;

use super::model::{CoefficientModel, LatticeWindow};
use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Anything that can be read at an integer site.
pub trait Sequence {
    fn at(&self, n: i64) -> Result<Complex64>;
}

impl<F> Sequence for F
where
    F: Fn(i64) -> Complex64,
{
    fn at(&self, n: i64) -> Result<Complex64> {
        Ok(self(n))
    }
}

/// Finite vector indexed by site, `values[k]` lives at `start + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteVector {
    pub start: i64,
    pub values: Vec<Complex64>,
}

impl Sequence for SiteVector {
    fn at(&self, n: i64) -> Result<Complex64> {
        let k = n - self.start;
        if k < 0 || k as usize >= self.values.len() {
            return Err(Error::Domain {
                what: "sequence",
                index: n,
            });
        }
        Ok(self.values[k as usize])
    }
}

/// `(τf)(n) = a(n) f(n+1) + a(n-1) f(n-1) + b(n) f(n)`.
pub fn apply_tau(model: &CoefficientModel, f: &impl Sequence, n: i64) -> Result<Complex64> {
    Ok(model.a(n)? * f.at(n + 1)? + model.a(n - 1)? * f.at(n - 1)? + model.b(n)? * f.at(n)?)
}

/// `W(f,g)(n) = a(n) (f(n) g(n+1) - f(n+1) g(n))`.
pub fn wronskian(
    model: &CoefficientModel,
    f: &impl Sequence,
    g: &impl Sequence,
    n: i64,
) -> Result<Complex64> {
    Ok(model.a(n)? * (f.at(n)? * g.at(n + 1)? - f.at(n + 1)? * g.at(n)?))
}

// Rescale once magnitudes pass this; ratios are unaffected.
const RESCALE_ABOVE: f64 = 1e150;

/// Solution of `τu = zu` sampled on every site of a window.
///
/// Stored values are the true solution multiplied by `exp(-log_scale)`.
/// `log_scale` stays zero unless propagation threatened to overflow.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSample {
    z: Complex64,
    window: LatticeWindow,
    values: Vec<Complex64>,
    log_scale: f64,
}

impl SolutionSample {
    pub(crate) fn from_parts(
        z: Complex64,
        window: LatticeWindow,
        values: Vec<Complex64>,
        log_scale: f64,
    ) -> Self {
        Self {
            z,
            window,
            values,
            log_scale,
        }
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn window(&self) -> LatticeWindow {
        self.window
    }

    /// Scaled values for `n = left ..= right`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Scaled value at `n`; use [`true_value`](Self::true_value) for the unscaled one.
    pub fn value(&self, n: i64) -> Result<Complex64> {
        if !self.window.contains(n) {
            return Err(Error::Domain {
                what: "solution",
                index: n,
            });
        }
        Ok(self.values[(n - self.window.left) as usize])
    }

    pub fn true_value(&self, n: i64) -> Result<Complex64> {
        Ok(self.value(n)? * self.log_scale.exp())
    }

    /// Largest relative defect of the recurrence over interior sites. Sites
    /// whose scaled values have underflowed are skipped.
    pub fn recurrence_residual(&self, model: &CoefficientModel) -> Result<f64> {
        let mut worst = 0.0f64;
        for n in self.window.interior() {
            let lhs = apply_tau(model, self, n)?;
            let rhs = self.z * self.value(n)?;
            let scale = (model.a(n)? * self.value(n + 1)?.norm())
                + (model.a(n - 1)? * self.value(n - 1)?.norm())
                + (model.b(n)?.abs() + self.z.norm()) * self.value(n)?.norm();
            if scale > 1e-280 {
                worst = worst.max((lhs - rhs).norm() / scale);
            }
        }
        Ok(worst)
    }
}

impl Sequence for SolutionSample {
    fn at(&self, n: i64) -> Result<Complex64> {
        self.value(n)
    }
}

/// Propagate initial data `u(n0), u(n0+1)` across the whole window, forward
/// and backward.
pub fn solve_recurrence(
    model: &CoefficientModel,
    z: Complex64,
    n0: i64,
    u0: Complex64,
    u1: Complex64,
    window: &LatticeWindow,
) -> Result<SolutionSample> {
    if !(window.contains(n0) && window.contains(n0 + 1)) {
        return Err(Error::Domain {
            what: "initial data",
            index: n0,
        });
    }
    let len = (window.right - window.left + 1) as usize;
    let mut values = vec![Complex64::new(0.0, 0.0); len];
    let at = |n: i64| (n - window.left) as usize;
    values[at(n0)] = u0;
    values[at(n0 + 1)] = u1;
    let mut log_scale = 0.0;

    let rescale = |values: &mut [Complex64], mag: f64, log_scale: &mut f64| {
        for v in values.iter_mut() {
            *v /= mag;
        }
        *log_scale += mag.ln();
    };

    // forward: u(n+1) = ((z - b(n)) u(n) - a(n-1) u(n-1)) / a(n)
    for n in n0 + 1..window.right {
        let next = ((z - model.b(n)?) * values[at(n)] - model.a(n - 1)? * values[at(n - 1)])
            / model.a(n)?;
        values[at(n + 1)] = next;
        let mag = next.norm();
        if mag > RESCALE_ABOVE {
            rescale(&mut values, mag, &mut log_scale);
        }
    }
    // backward: u(n-1) = ((z - b(n)) u(n) - a(n) u(n+1)) / a(n-1)
    for n in (window.left + 1..=n0).rev() {
        let prev = ((z - model.b(n)?) * values[at(n)] - model.a(n)? * values[at(n + 1)])
            / model.a(n - 1)?;
        values[at(n - 1)] = prev;
        let mag = prev.norm();
        if mag > RESCALE_ABOVE {
            rescale(&mut values, mag, &mut log_scale);
        }
    }

    Ok(SolutionSample {
        z,
        window: *window,
        values,
        log_scale,
    })
}

/// `φ(z, left) = 0`, `φ(z, left+1) = 1`.
pub fn phi_fundamental(
    model: &CoefficientModel,
    window: &LatticeWindow,
    z: Complex64,
) -> Result<SolutionSample> {
    solve_recurrence(
        model,
        z,
        window.left,
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        window,
    )
}

/// `θ(z, left) = -1/a(left)`, `θ(z, left+1) = 0`, so that `W(φ,θ) = 1`.
pub fn theta_fundamental(
    model: &CoefficientModel,
    window: &LatticeWindow,
    z: Complex64,
) -> Result<SolutionSample> {
    solve_recurrence(
        model,
        z,
        window.left,
        Complex64::new(-1.0 / model.a(window.left)?, 0.0),
        Complex64::new(0.0, 0.0),
        window,
    )
}

/// Real solution at real `λ` with the `φ` initial data, returned as plain
/// values for `n = left ..= right`. No rescaling.
pub fn phi_real(model: &CoefficientModel, window: &LatticeWindow, lambda: f64) -> Result<Vec<f64>> {
    let len = (window.right - window.left + 1) as usize;
    let mut v = vec![0.0; len];
    v[1] = 1.0;
    for k in 1..len - 1 {
        let n = window.left + k as i64;
        v[k + 1] = ((lambda - model.b(n)?) * v[k] - model.a(n - 1)? * v[k - 1]) / model.a(n)?;
    }
    Ok(v)
}

/// `φ(λ, ·)` at an eigenvalue of the window, for `n = left ..= right`.
///
/// Forward propagation loses the decaying part of a localized mode, so the
/// forward solution is spliced to the Dirichlet solution from the right at
/// the site maximizing `|φ(n) u(n)|`. Small components keep their relative
/// accuracy. `φ(right)` is returned as exactly zero.
pub fn phi_at_eigenvalue(model: &CoefficientModel, window: &LatticeWindow, lambda: f64) -> Result<Vec<f64>> {
    let mut phi = phi_real(model, window, lambda)?;
    let len = phi.len();
    let mut u = vec![0.0; len];
    u[len - 2] = 1.0;
    for k in (1..len - 1).rev() {
        let n = window.left + k as i64;
        u[k - 1] = ((lambda - model.b(n)?) * u[k] - model.a(n)? * u[k + 1]) / model.a(n - 1)?;
    }
    let c = (1..len - 1)
        .max_by(|&i, &j| (phi[i] * u[i]).abs().total_cmp(&(phi[j] * u[j]).abs()))
        .expect("window has an interior site");
    let ratio = phi[c] / u[c];
    for k in c + 1..len {
        phi[k] = ratio * u[k];
    }
    Ok(phi)
}

/// Coefficients of `φ(·, n)` as polynomials in `z`, for `n = left ..= right`.
pub fn phi_polynomials(model: &CoefficientModel, window: &LatticeWindow) -> Result<Vec<Polynomial>> {
    polynomial_solution(model, window, Polynomial::zero(), Polynomial::constant(1.0))
}

/// Coefficients of `θ(·, n)` as polynomials in `z`, for `n = left ..= right`.
pub fn theta_polynomials(
    model: &CoefficientModel,
    window: &LatticeWindow,
) -> Result<Vec<Polynomial>> {
    polynomial_solution(
        model,
        window,
        Polynomial::constant(-1.0 / model.a(window.left)?),
        Polynomial::zero(),
    )
}

fn polynomial_solution(
    model: &CoefficientModel,
    window: &LatticeWindow,
    p0: Polynomial,
    p1: Polynomial,
) -> Result<Vec<Polynomial>> {
    let mut out = vec![p0, p1];
    for n in window.interior() {
        let k = (n - window.left) as usize;
        let a = model.a(n)?;
        let next = &out[k].mul_linear(model.b(n)?, 1.0 / a) - &out[k - 1].scale(model.a(n - 1)? / a);
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free_p3() -> (CoefficientModel, LatticeWindow) {
        (CoefficientModel::free(), LatticeWindow::new(0, 4).unwrap())
    }

    #[test]
    fn tau_on_simple_sequences() {
        let free = CoefficientModel::free();
        let delta = |n: i64| if n == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) };
        assert_eq!(apply_tau(&free, &delta, 0).unwrap(), c(0.0, 0.0));
        let one = |_: i64| c(1.0, 0.0);
        assert_eq!(apply_tau(&free, &one, 7).unwrap(), c(2.0, 0.0));
        let x = c(0.7, 0.2);
        let pow = move |n: i64| x.powi(n as i32);
        for n in [-3, 0, 4] {
            let got = apply_tau(&free, &pow, n).unwrap();
            let want = (x + 1.0 / x) * x.powi(n as i32);
            assert_relative_eq!((got - want).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn tau_outside_table_is_domain_error() {
        let t = CoefficientModel::table(0, vec![1.0, 1.0], 1, vec![0.0]).unwrap();
        let one = |_: i64| c(1.0, 0.0);
        assert!(matches!(apply_tau(&t, &one, 2), Err(Error::Domain { .. })));
    }

    #[test]
    fn wronskian_of_powers() {
        let free = CoefficientModel::free();
        let x = c(1.3, -0.4);
        let f = move |n: i64| x.powi(n as i32);
        let g = move |n: i64| x.powi(-n as i32);
        for n in [-2, 0, 5] {
            let w = wronskian(&free, &f, &g, n).unwrap();
            assert_relative_eq!((w - (1.0 / x - x)).norm(), 0.0, epsilon = 1e-13);
            assert_eq!(wronskian(&free, &f, &f, n).unwrap(), c(0.0, 0.0));
        }
    }

    #[test]
    fn hand_iterations() {
        let free = CoefficientModel::free();
        let w = LatticeWindow::new(0, 4).unwrap();
        let z = c(0.3, 1.1);
        let u = solve_recurrence(&free, z, 0, c(0.0, 0.0), c(1.0, 0.0), &w).unwrap();
        assert_relative_eq!((u.value(2).unwrap() - z).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((u.value(3).unwrap() - (z * z - 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(
            (u.value(4).unwrap() - (z * z * z - 2.0 * z)).norm(),
            0.0,
            epsilon = 1e-14
        );

        let v = solve_recurrence(&free, c(0.0, 0.0), 0, c(1.0, 0.0), c(0.0, 0.0), &w).unwrap();
        let re: Vec<f64> = v.values().iter().map(|x| x.re).collect();
        assert_eq!(re, vec![1.0, 0.0, -1.0, 0.0, 1.0]);

        let zero = solve_recurrence(&free, z, 2, c(0.0, 0.0), c(0.0, 0.0), &w).unwrap();
        assert!(zero.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn backward_propagation_matches_forward() {
        let m = CoefficientModel::table(-1, vec![0.7, 1.4, 0.9, 1.2, 0.6], 0, vec![0.3, -0.5, 0.8, 0.1])
            .unwrap();
        let w = LatticeWindow::new(-1, 4).unwrap();
        let z = c(-0.2, 0.9);
        let fwd = phi_fundamental(&m, &w, z).unwrap();
        let bwd = solve_recurrence(&m, z, 2, fwd.value(2).unwrap(), fwd.value(3).unwrap(), &w).unwrap();
        for n in -1..=4 {
            assert_relative_eq!(
                (fwd.value(n).unwrap() - bwd.value(n).unwrap()).norm(),
                0.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn fundamental_system_on_p3() {
        let (m, w) = free_p3();
        let z = c(0.4, 2.0);
        let phi = phi_fundamental(&m, &w, z).unwrap();
        let theta = theta_fundamental(&m, &w, z).unwrap();
        assert_relative_eq!((phi.value(2).unwrap() - z).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((phi.value(3).unwrap() - (z * z - 1.0)).norm(), 0.0, epsilon = 1e-15);
        for n in 0..4 {
            let w_pt = wronskian(&m, &phi, &theta, n).unwrap();
            assert_relative_eq!((w_pt - 1.0).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn ratio_grows_like_z_on_imaginary_axis() {
        let (m, w) = free_p3();
        let mut prev = f64::INFINITY;
        for t in [1e2, 1e3, 1e4] {
            let z = c(0.0, t);
            let phi = phi_fundamental(&m, &w, z).unwrap();
            let r = phi.value(3).unwrap() / phi.value(2).unwrap() / z;
            let dev = (r - 1.0).norm();
            assert!(dev < prev);
            prev = dev;
        }
        assert!(prev < 1e-7);
    }

    #[test]
    fn polynomial_degrees_and_values() {
        let m = CoefficientModel::table(0, vec![0.5, 2.0, 1.5, 0.8], 1, vec![0.2, -0.7, 0.4])
            .unwrap();
        let w = LatticeWindow::new(0, 4).unwrap();
        let phis = phi_polynomials(&m, &w).unwrap();
        let thetas = theta_polynomials(&m, &w).unwrap();
        let z = c(0.25, -0.6);
        let phi = phi_fundamental(&m, &w, z).unwrap();
        let theta = theta_fundamental(&m, &w, z).unwrap();
        for n in 0..=4 {
            let k = n as usize;
            if n >= 1 {
                assert_eq!(phis[k].degree(), Some(k - 1));
            }
            assert_relative_eq!(
                (phis[k].eval_complex(z) - phi.value(n).unwrap()).norm(),
                0.0,
                epsilon = 1e-13
            );
            assert_relative_eq!(
                (thetas[k].eval_complex(z) - theta.value(n).unwrap()).norm(),
                0.0,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn rescaling_keeps_ratios() {
        let m = CoefficientModel::free();
        let w = LatticeWindow::new(0, 200).unwrap();
        let z = c(0.0, 1e3);
        let phi = phi_fundamental(&m, &w, z).unwrap();
        assert!(phi.log_scale() > 0.0);
        assert!(phi.values().iter().all(|v| v.is_finite()));
        // still a solution after rescaling
        assert!(phi.recurrence_residual(&m).unwrap() < 1e-14);
        let r = phi.value(200).unwrap() / phi.value(199).unwrap();
        assert_relative_eq!((r / z - 1.0).norm(), 0.0, epsilon = 1e-5);
    }
}

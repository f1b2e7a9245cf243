//! Stieltjes–Livšić inversion: interval masses of `ρ` from `Im M` just above
//! the real axis.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::WeylFunction;
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

pub const DEFAULT_EPSILONS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

const SETTLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult {
    /// `½(ρ((x0,x1)) + ρ([x0,x1]))`.
    pub value: f64,
    /// `(1/π) ∫ Im M(x + iε) dx` for each `ε`.
    pub partials: Vec<f64>,
    /// Linear-in-`ε` extrapolants from consecutive pairs.
    pub extrapolants: Vec<f64>,
}

/// Integrates `Im M(x+iε)/π` over `[x0, x1]` for each `ε` (decreasing) and
/// extrapolates to `ε = 0`. Known poles of `M` become graded breakpoints.
pub fn stieltjes_inversion(
    m: &WeylFunction,
    x0: f64,
    x1: f64,
    epsilons: &[f64],
) -> Result<InversionResult> {
    if !(x0 < x1) {
        return Err(Error::InvalidParameter(format!("empty interval ({x0}, {x1})")));
    }
    if epsilons.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: epsilons.len(),
        });
    }
    let poles = m.poles().unwrap_or_default();
    let opts = QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 1e-11,
        max_panels: 20_000,
    };
    let mut partials = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut cuts = Vec::new();
        for &p in &poles {
            if p >= x0 - 1e3 * eps && p <= x1 + 1e3 * eps {
                cuts.push(p);
                for k in [1.0, 10.0, 100.0, 1000.0] {
                    cuts.push(p - k * eps);
                    cuts.push(p + k * eps);
                }
            }
        }
        // an evaluation failure (pole hit) poisons the integral with NaN
        let f = |x: f64| {
            m.eval(Complex64::new(x, eps))
                .map(|v| v.im / PI)
                .unwrap_or(f64::NAN)
        };
        let r = integrate(f, x0, x1, &cuts, opts)?;
        if !r.value.is_finite() {
            return Err(Error::StieltjesNoConvergence { partial: partials });
        }
        partials.push(r.value);
    }
    let extrapolants: Vec<f64> = epsilons
        .windows(2)
        .zip(partials.windows(2))
        .map(|(e, i)| (e[0] * i[1] - e[1] * i[0]) / (e[0] - e[1]))
        .collect();
    let k = extrapolants.len();
    let value = extrapolants[k - 1];
    let settled = k < 2 || (value - extrapolants[k - 2]).abs() <= SETTLE_TOL * value.abs().max(1.0);
    if !settled {
        return Err(Error::StieltjesNoConvergence { partial: partials });
    }
    Ok(InversionResult {
        value,
        partials,
        extrapolants,
    })
}

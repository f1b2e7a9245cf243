//! Grid tagging of boundary values of `M` into evidence for point, singular,
//! and absolutely continuous supports.

use num_complex::Complex64;

use crate::error::Result;

/// Tag for one real point `λ`. These are evidence from a finite `ε`
/// sequence, not certificates of minimal supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportTag {
    /// `ε Im M(λ+iε)` settles at a positive value.
    Point,
    /// `Im M(λ+iε)` grows without bound while `ε Im M → 0`.
    Singular,
    /// `Im M(λ+iε)` settles at a finite positive value.
    Ac,
    /// `Im M(λ+iε) → 0`.
    None,
    Inconclusive,
}

const POINT_FLOOR: f64 = 1e-8;
const SETTLE: f64 = 0.05;
const VANISH: f64 = 1e-6;

/// Classify each `λ` from `Im M(λ+iε)` over a decreasing `ε` sequence.
pub fn classify_support(
    m: &dyn Fn(Complex64) -> Result<Complex64>,
    grid: &[f64],
    epsilons: &[f64],
) -> Result<Vec<SupportTag>> {
    grid.iter()
        .map(|&lam| {
            let ims = epsilons
                .iter()
                .map(|&eps| m(Complex64::new(lam, eps)).map(|v| v.im))
                .collect::<Result<Vec<f64>>>()?;
            Ok(tag(&ims, epsilons))
        })
        .collect()
}

fn tag(ims: &[f64], eps: &[f64]) -> SupportTag {
    let k = ims.len();
    if k < 3 {
        return SupportTag::Inconclusive;
    }
    let (i1, i2) = (ims[k - 2], ims[k - 1]);
    let (p1, p2) = (eps[k - 2] * i1, eps[k - 1] * i2);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    if p2 > POINT_FLOOR && rel(p1, p2) < SETTLE {
        return SupportTag::Point;
    }
    let decaying = i2.abs() < 0.5 * i1.abs() && i1.abs() < 0.5 * ims[k - 3].abs();
    if (i2.abs() < VANISH && i2.abs() <= i1.abs()) || decaying {
        return SupportTag::None;
    }
    if i2 > VANISH && rel(i1, i2) < SETTLE {
        return SupportTag::Ac;
    }
    if i2 > 2.0 * i1 && i1 > 2.0 * ims[k - 3] && p2 < p1 {
        return SupportTag::Singular;
    }
    SupportTag::Inconclusive
}

/// `m(z)` of the free half-line: the root of `m² + zm + 1 = 0` with
/// `Im m > 0` for `Im z > 0` (continued by conjugation below the axis).
pub fn free_half_line_m(z: Complex64) -> Complex64 {
    let root = (z * z - 4.0).sqrt();
    // larger root without cancellation; the roots multiply to 1
    let big = if (z + root).norm() >= (z - root).norm() {
        -(z + root) / 2.0
    } else {
        -(z - root) / 2.0
    };
    let (m1, m2) = (big, 1.0 / big);
    let pick = |target_up: bool| {
        if (m1.im > m2.im) == target_up {
            m1
        } else {
            m2
        }
    };
    if z.im >= 0.0 {
        pick(true)
    } else {
        pick(false)
    }
}

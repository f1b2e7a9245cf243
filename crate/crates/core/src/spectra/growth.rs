//! Convergence exponent and genus estimators for point sequences, and a
//! heuristic probe for discreteness of half-line spectra.

use super::eigen::eigen_tridiagonal;
use crate::error::{Error, Result};
use crate::lattice::{CoefficientModel, LatticeWindow};

/// Minimum number of points before any estimate is attempted.
pub const MIN_POINTS: usize = 10;
/// Dyadic block ratio below which a series is judged convergent.
pub const RATIO_CUTOFF: f64 = 0.95;
/// Ratios inside this band are reported as uncertain.
pub const RATIO_BAND: (f64, f64) = (0.85, 0.99);

/// Whether the moduli are a complete finite set or a sample from the start
/// of an infinite sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    Finite,
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentEstimate {
    pub s: f64,
    /// Set when the fit range is short or the fit is poor. The value is an
    /// estimate either way.
    pub uncertain: bool,
    /// Moduli range used by the regression.
    pub fit_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenusEstimate {
    pub p: u32,
    pub exponent: ExponentEstimate,
    /// Dyadic block ratios of `Σ (1+|μ|^(k+1))⁻¹` for `k = 0 ..= p`.
    pub block_ratios: Vec<f64>,
    pub uncertain: bool,
}

fn sorted_moduli(moduli: &[f64]) -> Result<Vec<f64>> {
    let mut m: Vec<f64> = moduli.iter().map(|x| x.abs()).collect();
    if m.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "moduli must be nonzero and finite".into(),
        ));
    }
    m.sort_by(f64::total_cmp);
    Ok(m)
}

/// Least-squares slope of `log N(r)` against `log r`, with `N(r)` the
/// counting function, over ranks from 1% of the sample to its end.
pub fn convergence_exponent(moduli: &[f64], kind: SequenceKind) -> Result<ExponentEstimate> {
    if kind == SequenceKind::Finite {
        return Ok(ExponentEstimate {
            s: 0.0,
            uncertain: false,
            fit_range: (0.0, 0.0),
        });
    }
    if moduli.len() < MIN_POINTS {
        return Err(Error::TooFewPoints {
            needed: MIN_POINTS,
            got: moduli.len(),
        });
    }
    let m = sorted_moduli(moduli)?;
    let n = m.len();
    let first = (n / 100).max(1);
    // geometric ladder of ranks so every decade weighs the same
    let mut ranks = Vec::new();
    let mut r = first as f64;
    while (r as usize) <= n {
        let k = r as usize;
        if ranks.last() != Some(&k) {
            ranks.push(k);
        }
        r *= 1.1;
    }
    if ranks.last() != Some(&n) {
        ranks.push(n);
    }
    let xs: Vec<f64> = ranks.iter().map(|&k| m[k - 1].ln()).collect();
    let ys: Vec<f64> = ranks.iter().map(|&k| (k as f64).ln()).collect();
    let (slope, r2) = linear_fit(&xs, &ys);
    let span = m[n - 1] / m[first - 1];
    Ok(ExponentEstimate {
        s: slope.max(0.0),
        uncertain: span < 10.0 || r2 < 0.99,
        fit_range: (m[first - 1], m[n - 1]),
    })
}

/// Least-squares slope and coefficient of determination.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Ratio of the last two complete dyadic blocks (by rank) of
/// `Σ (1 + |μ|^σ)⁻¹`. About 1 for a divergent harmonic-type series.
fn dyadic_ratio(m: &[f64], sigma: f64) -> f64 {
    let term = |x: f64| 1.0 / (1.0 + x.powf(sigma));
    let mut blocks = Vec::new();
    let mut start = 1usize;
    while 2 * start - 1 <= m.len() {
        let end = 2 * start; // ranks start .. 2*start-1
        blocks.push(m[start - 1..end - 1].iter().map(|&x| term(x)).sum::<f64>());
        start = end;
    }
    match blocks.len() {
        0 | 1 => f64::NAN,
        k => blocks[k - 1] / blocks[k - 2],
    }
}

/// Smallest `p` with `Σ (1+|μ|^(p+1))⁻¹ < ∞`, decided by the dyadic ratio
/// test and cross-checked against the exponent estimate.
pub fn genus(moduli: &[f64], kind: SequenceKind) -> Result<GenusEstimate> {
    let exponent = convergence_exponent(moduli, kind)?;
    if kind == SequenceKind::Finite {
        return Ok(GenusEstimate {
            p: 0,
            exponent,
            block_ratios: Vec::new(),
            uncertain: false,
        });
    }
    let m = sorted_moduli(moduli)?;
    let mut ratios = Vec::new();
    let mut p = 0u32;
    loop {
        let ratio = dyadic_ratio(&m, (p + 1) as f64);
        ratios.push(ratio);
        if ratio < RATIO_CUTOFF || p > 64 {
            break;
        }
        p += 1;
    }
    let in_band = ratios
        .iter()
        .any(|&r| r > RATIO_BAND.0 && r < RATIO_BAND.1);
    // the exponent says p = floor(s) unless s sits on an integer
    let s = exponent.s;
    let near_integer = (s - s.round()).abs() < 0.1;
    let agrees = (near_integer && (p as f64 - s.round()).abs() <= 1.0) || p == s.floor() as u32;
    Ok(GenusEstimate {
        p,
        uncertain: exponent.uncertain || in_band || !agrees,
        exponent,
        block_ratios: ratios,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discreteness {
    DiscreteLikely,
    ContinuousLikely,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretenessReport {
    pub verdict: Discreteness,
    /// Half-line window lengths actually used.
    pub lengths: Vec<i64>,
    /// Eigenvalue count inside `interval` for each length.
    pub counts: Vec<usize>,
    pub interval: (f64, f64),
    pub note: String,
}

/// Counts eigenvalues in a fixed interval above the bottom of the smallest
/// window while the half-line window grows. Stable counts suggest discrete
/// spectrum; counts growing with the length suggest a continuum. A model
/// with finitely many coefficients on `side` is discrete by definition.
pub fn discreteness_probe(
    model: &CoefficientModel,
    side: Side,
    anchor: i64,
    lengths: &[i64],
) -> Result<DiscretenessReport> {
    let domain = model.a_domain();
    let bounded = match side {
        Side::Left => domain.min.is_some(),
        Side::Right => domain.max.is_some(),
    };
    if bounded {
        return Ok(DiscretenessReport {
            verdict: Discreteness::DiscreteLikely,
            lengths: Vec::new(),
            counts: Vec::new(),
            interval: (f64::NAN, f64::NAN),
            note: "finitely many sites on this side".into(),
        });
    }
    if lengths.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: lengths.len(),
        });
    }
    let mut lengths = lengths.to_vec();
    lengths.sort_unstable();
    let window_of = |len: i64| match side {
        Side::Left => LatticeWindow::new(anchor - len, anchor),
        Side::Right => LatticeWindow::new(anchor, anchor + len),
    };
    let base = eigen_tridiagonal(model, &window_of(lengths[0])?)?;
    let lo = base.eigenvalues[0] - 1.0;
    let interval = (lo, lo + 5.0);
    let mut counts = Vec::new();
    for &len in &lengths {
        let spec = eigen_tridiagonal(model, &window_of(len)?)?;
        counts.push(
            spec.eigenvalues
                .iter()
                .filter(|&&x| x >= interval.0 && x <= interval.1)
                .count(),
        );
    }
    let k = counts.len();
    let tail = &counts[k - 3..];
    let stable = tail.iter().all(|&c| c == tail[0]);
    let growth = counts[k - 1] as f64 / counts[k - 2].max(1) as f64;
    let len_growth = lengths[k - 1] as f64 / lengths[k - 2] as f64;
    let (verdict, note) = if stable {
        (
            Discreteness::DiscreteLikely,
            format!("count stable at {} over the last three windows", tail[0]),
        )
    } else if growth >= 0.75 * len_growth && len_growth > 1.0 {
        (
            Discreteness::ContinuousLikely,
            format!("count grows by {growth:.2} when the window grows by {len_growth:.2}"),
        )
    } else {
        (
            Discreteness::Inconclusive,
            format!("counts {counts:?} neither stable nor proportional"),
        )
    };
    Ok(DiscretenessReport {
        verdict,
        lengths,
        counts,
        interval,
        note,
    })
}

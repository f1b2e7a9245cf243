//! Restriction spectra, norming constants, and atomic spectral measures.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::eigen::{eigen_tridiagonal, sturm_count, SpectrumResult};
use crate::error::{Error, Result};
use crate::lattice::{phi_at_eigenvalue, CoefficientModel, LatticeWindow};

/// Normalization tag for measures built from the left-Dirichlet `φ`.
pub const LEFT_DIRICHLET: &str = "left-dirichlet";

const INTERLACE_TOL: f64 = 1e-10;

/// Zeros of `φ(·, n)` and `φ(·, n+1)`, i.e. the spectra of the window cut
/// at `n` and at `n+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionSpectra {
    pub site: i64,
    /// Zeros of `φ(·, n)`; empty when `n = left + 1`.
    pub mu: Vec<f64>,
    /// Zeros of `φ(·, n+1)`; one more than `mu`.
    pub nu: Vec<f64>,
    pub interlaced: bool,
}

/// `true` when `long[i] < short[i] < long[i+1]` for all `i`, with every gap
/// wider than `1e-10`.
pub fn strictly_interlaced(short: &[f64], long: &[f64]) -> bool {
    if long.len() != short.len() + 1 {
        return false;
    }
    short
        .iter()
        .enumerate()
        .all(|(i, &s)| s - long[i] > INTERLACE_TOL && long[i + 1] - s > INTERLACE_TOL)
}

pub fn restriction_spectra(
    model: &CoefficientModel,
    window: &LatticeWindow,
    n: i64,
) -> Result<RestrictionSpectra> {
    if n < window.left + 1 || n >= window.right {
        return Err(Error::InvalidWindow {
            left: window.left,
            right: window.right,
            reason: "restriction site must satisfy left+1 <= n < right",
        });
    }
    let zeros = |end: i64| -> Result<Vec<f64>> {
        if end - window.left < 2 {
            Ok(Vec::new())
        } else {
            Ok(eigen_tridiagonal(model, &LatticeWindow::new(window.left, end)?)?.eigenvalues)
        }
    };
    let mu = zeros(n)?;
    let nu = zeros(n + 1)?;
    let interlaced = strictly_interlaced(&mu, &nu);
    Ok(RestrictionSpectra {
        site: n,
        mu,
        nu,
        interlaced,
    })
}

/// `γ² = Σ φ(λ, m)²` over interior sites, for each supplied eigenvalue.
pub fn norming_constants(
    model: &CoefficientModel,
    window: &LatticeWindow,
    eigenvalues: &[f64],
) -> Result<Vec<f64>> {
    eigenvalues
        .iter()
        .map(|&lam| {
            let delta = 1e-8 * lam.abs().max(1.0);
            let jump = sturm_count(model, window, lam + delta)?
                .saturating_sub(sturm_count(model, window, lam - delta)?);
            if jump != 1 {
                return Err(Error::NotEigenvalue { value: lam, jump });
            }
            let phi = phi_at_eigenvalue(model, window, lam)?;
            Ok(phi[1..phi.len() - 1].iter().map(|x| x * x).sum())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub lambda: f64,
    pub weight: f64,
}

/// Finite atomic measure `Σ w_k δ_{λ_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    atoms: Vec<Atom>,
    normalization: String,
}

impl SpectralMeasure {
    /// Atoms are sorted on the way in; weights must be positive and finite
    /// and locations distinct.
    pub fn new(mut atoms: Vec<Atom>, normalization: impl Into<String>) -> Result<Self> {
        for a in &atoms {
            if !(a.weight > 0.0 && a.weight.is_finite() && a.lambda.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "atom ({}, {}) is not admissible",
                    a.lambda, a.weight
                )));
            }
        }
        atoms.sort_by(|x, y| x.lambda.total_cmp(&y.lambda));
        if atoms.windows(2).any(|w| w[0].lambda == w[1].lambda) {
            return Err(Error::InvalidParameter("repeated atom location".into()));
        }
        Ok(Self {
            atoms,
            normalization: normalization.into(),
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn normalization(&self) -> &str {
        &self.normalization
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.lambda).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// `∫ f dρ`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * f(a.lambda)).sum()
    }

    /// Same atoms with weights divided by the total mass.
    pub fn renormalized(&self) -> Self {
        let m = self.total_mass();
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    lambda: a.lambda,
                    weight: a.weight / m,
                })
                .collect(),
            normalization: format!("{} (renormalized)", self.normalization),
        }
    }

    /// Weights multiplied by `factor(λ)`; locations unchanged.
    pub fn reweighted(&self, factor: impl Fn(f64) -> f64, tag: &str) -> Result<Self> {
        Self::new(
            self.atoms
                .iter()
                .map(|a| Atom {
                    lambda: a.lambda,
                    weight: a.weight * factor(a.lambda),
                })
                .collect(),
            tag,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct RawAtom {
            lambda: Box<RawValue>,
            weight: Box<RawValue>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            atoms: Vec<RawAtom>,
            normalization: &'a str,
        }
        let raw = |x: f64| RawValue::from_string(format_17(x)).map_err(json_err);
        let doc = Doc {
            atoms: self
                .atoms
                .iter()
                .map(|a| {
                    Ok(RawAtom {
                        lambda: raw(a.lambda)?,
                        weight: raw(a.weight)?,
                    })
                })
                .collect::<Result<_>>()?,
            normalization: &self.normalization,
        };
        serde_json::to_string_pretty(&doc).map_err(json_err)
    }

    /// Accepts the `to_json` layout plus an optional free-form `metadata` key.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            atoms: Vec<Atom>,
            normalization: String,
            #[serde(default)]
            #[allow(dead_code)]
            metadata: Option<serde_json::Value>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(json_err)?;
        Self::new(doc.atoms, doc.normalization)
    }

    /// CSV with header `lambda,weight`.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "weight"]).map_err(csv_err)?;
        for a in &self.atoms {
            w.write_record([format_17(a.lambda), format_17(a.weight)])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(input: impl Read, normalization: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["lambda", "weight"] {
            return Err(Error::Format(format!(
                "expected header lambda,weight, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let atoms = r
            .deserialize()
            .map(|row| row.map_err(csv_err))
            .collect::<Result<Vec<Atom>>>()?;
        Self::new(atoms, normalization)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_17(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Atoms `(λ_k, γ_k⁻²)` of the window operator.
pub fn spectral_measure(model: &CoefficientModel, window: &LatticeWindow) -> Result<SpectralMeasure> {
    let spec = eigen_tridiagonal(model, window)?;
    measure_from_spectrum(model, window, &spec)
}

pub fn measure_from_spectrum(
    model: &CoefficientModel,
    window: &LatticeWindow,
    spec: &SpectrumResult,
) -> Result<SpectralMeasure> {
    let gammas = norming_constants(model, window, &spec.eigenvalues)?;
    SpectralMeasure::new(
        spec.eigenvalues
            .iter()
            .zip(gammas)
            .map(|(&lambda, g2)| Atom {
                lambda,
                weight: 1.0 / g2,
            })
            .collect(),
        LEFT_DIRICHLET,
    )
}

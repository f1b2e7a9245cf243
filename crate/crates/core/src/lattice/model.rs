//! Coefficient models `a(n) > 0`, `b(n)` real, and the truncation windows
//! they are evaluated on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Range of sites on which a coefficient sequence is defined.
/// `None` on a side means the sequence extends without bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Domain {
    pub min: Option<i64>,
    pub max: Option<i64>,
}

impl Domain {
    pub const UNBOUNDED: Domain = Domain {
        min: None,
        max: None,
    };

    pub fn contains(&self, n: i64) -> bool {
        self.min.is_none_or(|m| n >= m) && self.max.is_none_or(|m| n <= m)
    }

    fn shifted(self, offset: i64) -> Domain {
        Domain {
            min: self.min.map(|m| m - offset),
            max: self.max.map(|m| m - offset),
        }
    }
}

/// Serialized form of a coefficient model. This is what configuration files
/// contain; [`CoefficientModel`] is validated on the way in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `a ≡ 1`, `b ≡ 0`.
    Free {},
    /// `a ≡ 1`, `b(n) = c |n|`.
    LinearPotential { c: f64 },
    /// `a(n) = q^|n|` with `0 < q < 1`, `b ≡ 0`.
    GeometricA { q: f64 },
    /// Explicit tables: `a[k]` is `a(a_start + k)`, `b[k]` is `b(b_start + k)`.
    Table {
        a_start: i64,
        a: Vec<f64>,
        b_start: i64,
        b: Vec<f64>,
    },
    /// `a(n) = base.a(n + offset)`, `b(n) = base.b(n + offset)`.
    Shifted {
        offset: i64,
        base: Box<ModelSpec>,
    },
}

/// Jacobi coefficients on the integer lattice.
///
/// Immutable after construction; every constructor checks `a > 0` and
/// finiteness wherever the values are stored explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct CoefficientModel {
    spec: ModelSpec,
}

impl TryFrom<ModelSpec> for CoefficientModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        validate(&spec)?;
        Ok(Self { spec })
    }
}

impl From<CoefficientModel> for ModelSpec {
    fn from(model: CoefficientModel) -> Self {
        model.spec
    }
}

fn validate(spec: &ModelSpec) -> Result<()> {
    match spec {
        ModelSpec::Free {} => Ok(()),
        ModelSpec::LinearPotential { c } => {
            if c.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("c = {c} is not finite")))
            }
        }
        ModelSpec::GeometricA { q } => {
            if *q > 0.0 && *q < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("q = {q} outside (0, 1)")))
            }
        }
        ModelSpec::Table {
            a_start,
            a,
            b_start,
            b,
        } => {
            for (k, &v) in a.iter().enumerate() {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvariantViolation {
                        index: a_start + k as i64,
                        detail: format!("a = {v}"),
                    });
                }
            }
            for (k, &v) in b.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvariantViolation {
                        index: b_start + k as i64,
                        detail: format!("b = {v}"),
                    });
                }
            }
            Ok(())
        }
        ModelSpec::Shifted { base, .. } => validate(base),
    }
}

impl CoefficientModel {
    pub fn free() -> Self {
        Self {
            spec: ModelSpec::Free {},
        }
    }

    pub fn linear_potential(c: f64) -> Result<Self> {
        ModelSpec::LinearPotential { c }.try_into()
    }

    pub fn geometric_a(q: f64) -> Result<Self> {
        ModelSpec::GeometricA { q }.try_into()
    }

    pub fn table(a_start: i64, a: Vec<f64>, b_start: i64, b: Vec<f64>) -> Result<Self> {
        ModelSpec::Table {
            a_start,
            a,
            b_start,
            b,
        }
        .try_into()
    }

    /// Shifted copy: the returned model reports `a(n) = self.a(n + offset)`.
    pub fn shifted(&self, offset: i64) -> Self {
        Self {
            spec: ModelSpec::Shifted {
                offset,
                base: Box::new(self.spec.clone()),
            },
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Explicit table holding exactly the values a window touches:
    /// `a` on `[left, right-1]`, `b` on the interior.
    pub fn tabulate(&self, window: &LatticeWindow) -> Result<Self> {
        let a = (window.left..window.right)
            .map(|n| self.a(n))
            .collect::<Result<Vec<_>>>()?;
        let b = window
            .interior()
            .map(|n| self.b(n))
            .collect::<Result<Vec<_>>>()?;
        Self::table(window.left, a, window.left + 1, b)
    }

    /// Copy with `b(n)` replaced. Only explicit tables can be edited; call
    /// [`tabulate`](Self::tabulate) first for the analytic families.
    pub fn with_b(&self, n: i64, value: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        match &mut spec {
            ModelSpec::Table { b_start, b, .. } => {
                let k = index_in(*b_start, b.len(), n).ok_or(Error::Domain {
                    what: "b",
                    index: n,
                })?;
                b[k] = value;
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "only table models can be edited".into(),
                ))
            }
        }
        spec.try_into()
    }

    pub fn with_a(&self, n: i64, value: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        match &mut spec {
            ModelSpec::Table { a_start, a, .. } => {
                let k = index_in(*a_start, a.len(), n).ok_or(Error::Domain {
                    what: "a",
                    index: n,
                })?;
                a[k] = value;
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "only table models can be edited".into(),
                ))
            }
        }
        spec.try_into()
    }

    pub fn a(&self, n: i64) -> Result<f64> {
        let v = eval_a(&self.spec, n)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvariantViolation {
                index: n,
                detail: format!("a = {v}"),
            })
        }
    }

    pub fn b(&self, n: i64) -> Result<f64> {
        eval_b(&self.spec, n)
    }

    pub fn a_domain(&self) -> Domain {
        domain(&self.spec, true)
    }

    pub fn b_domain(&self) -> Domain {
        domain(&self.spec, false)
    }

    /// Verify every coefficient the window needs is defined and admissible.
    pub fn check_window(&self, window: &LatticeWindow) -> Result<()> {
        for n in window.left..window.right {
            self.a(n)?;
        }
        for n in window.interior() {
            self.b(n)?;
        }
        Ok(())
    }
}

fn index_in(start: i64, len: usize, n: i64) -> Option<usize> {
    let k = n.checked_sub(start)?;
    (k >= 0 && (k as usize) < len).then_some(k as usize)
}

fn eval_a(spec: &ModelSpec, n: i64) -> Result<f64> {
    match spec {
        ModelSpec::Free {} | ModelSpec::LinearPotential { .. } => Ok(1.0),
        ModelSpec::GeometricA { q } => Ok(q.powf(n.unsigned_abs() as f64)),
        ModelSpec::Table { a_start, a, .. } => index_in(*a_start, a.len(), n)
            .map(|k| a[k])
            .ok_or(Error::Domain {
                what: "a",
                index: n,
            }),
        ModelSpec::Shifted { offset, base } => eval_a(base, n + offset),
    }
}

fn eval_b(spec: &ModelSpec, n: i64) -> Result<f64> {
    match spec {
        ModelSpec::Free {} | ModelSpec::GeometricA { .. } => Ok(0.0),
        ModelSpec::LinearPotential { c } => Ok(c * n.unsigned_abs() as f64),
        ModelSpec::Table { b_start, b, .. } => index_in(*b_start, b.len(), n)
            .map(|k| b[k])
            .ok_or(Error::Domain {
                what: "b",
                index: n,
            }),
        ModelSpec::Shifted { offset, base } => eval_b(base, n + offset),
    }
}

fn domain(spec: &ModelSpec, for_a: bool) -> Domain {
    match spec {
        ModelSpec::Table {
            a_start,
            a,
            b_start,
            b,
        } => {
            let (start, len) = if for_a {
                (*a_start, a.len())
            } else {
                (*b_start, b.len())
            };
            Domain {
                min: Some(start),
                max: Some(start + len as i64 - 1),
            }
        }
        ModelSpec::Shifted { offset, base } => domain(base, for_a).shifted(*offset),
        _ => Domain::UNBOUNDED,
    }
}

/// Finite section `[left, right]` of the lattice with Dirichlet conditions
/// `u(left) = u(right) = 0` for the truncated operator. The operator acts on
/// the interior sites `left+1 ..= right-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeWindow {
    pub left: i64,
    pub right: i64,
}

impl LatticeWindow {
    pub fn new(left: i64, right: i64) -> Result<Self> {
        if right - left < 2 {
            return Err(Error::InvalidWindow {
                left,
                right,
                reason: "needs at least one interior site",
            });
        }
        Ok(Self { left, right })
    }

    /// Number of interior sites, i.e. the dimension of the truncated operator.
    pub fn sites(&self) -> usize {
        (self.right - self.left - 1) as usize
    }

    pub fn interior(&self) -> std::ops::RangeInclusive<i64> {
        self.left + 1..=self.right - 1
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.left && n <= self.right
    }

    pub fn is_interior(&self, n: i64) -> bool {
        n > self.left && n < self.right
    }

    /// Same window moved by `offset` sites.
    pub fn translated(&self, offset: i64) -> Self {
        Self {
            left: self.left + offset,
            right: self.right + offset,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_evaluate() {
        let lin = CoefficientModel::linear_potential(2.0).unwrap();
        assert_eq!(lin.b(-3).unwrap(), 6.0);
        assert_eq!(lin.a(17).unwrap(), 1.0);
        let geo = CoefficientModel::geometric_a(0.5).unwrap();
        assert_eq!(geo.a(-2).unwrap(), 0.25);
        assert_eq!(geo.a(0).unwrap(), 1.0);
    }

    #[test]
    fn shifted_copy_reads_base_at_offset() {
        let base = CoefficientModel::table(0, vec![1.0, 2.0, 3.0], 1, vec![4.0, 5.0]).unwrap();
        let s = base.shifted(1);
        assert_eq!(s.a(0).unwrap(), 2.0);
        assert_eq!(s.b(1).unwrap(), 5.0);
        assert!(matches!(s.a(2), Err(Error::Domain { .. })));
        assert_eq!(s.a_domain(), Domain { min: Some(-1), max: Some(1) });
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert!(CoefficientModel::table(0, vec![1.0, 0.0], 0, vec![]).is_err());
        assert!(CoefficientModel::table(0, vec![1.0], 0, vec![f64::NAN]).is_err());
        assert!(CoefficientModel::geometric_a(1.0).is_err());
        assert!(CoefficientModel::linear_potential(f64::INFINITY).is_err());
    }

    #[test]
    fn geometric_underflow_is_reported() {
        let geo = CoefficientModel::geometric_a(0.1).unwrap();
        assert!(matches!(
            geo.a(400),
            Err(Error::InvariantViolation { index: 400, .. })
        ));
    }

    #[test]
    fn window_rules() {
        assert!(LatticeWindow::new(0, 1).is_err());
        let w = LatticeWindow::new(0, 4).unwrap();
        assert_eq!(w.sites(), 3);
        assert_eq!(w.interior().collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn tabulate_and_edit() {
        let w = LatticeWindow::new(0, 9).unwrap();
        let t = CoefficientModel::free().tabulate(&w).unwrap();
        t.check_window(&w).unwrap();
        let p = t.with_b(6, 1.0).unwrap();
        assert_eq!(p.b(6).unwrap(), 1.0);
        assert_eq!(p.b(5).unwrap(), 0.0);
        assert!(t.with_b(9, 1.0).is_err());
        assert!(t.with_a(3, -1.0).is_err());
        assert!(CoefficientModel::free().with_b(0, 1.0).is_err());
    }
}

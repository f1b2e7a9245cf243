//! Symmetric tridiagonal eigenproblem: implicit-shift QL with Wilkinson-type
//! shifts, plus Sturm-sequence counting.

use crate::error::{Error, Result};
use crate::lattice::{CoefficientModel, LatticeWindow};

const MAX_SWEEPS: usize = 60;

/// Eigen-decomposition of a window operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Strictly increasing.
    pub eigenvalues: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector of `eigenvalues[k]`, indexed by
    /// interior site, first component positive.
    pub vectors: Option<Vec<Vec<f64>>>,
    /// `‖Hv − λv‖` when vectors were computed, otherwise the radius of a
    /// Sturm-certified enclosure around each eigenvalue.
    pub residuals: Vec<f64>,
}

/// Diagonal `b(n)` and off-diagonal `a(n)` of the interior-site matrix.
pub fn window_matrix(
    model: &CoefficientModel,
    window: &LatticeWindow,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let diag = window
        .interior()
        .map(|n| model.b(n))
        .collect::<Result<Vec<_>>>()?;
    let off = (window.left + 1..window.right - 1)
        .map(|n| model.a(n))
        .collect::<Result<Vec<_>>>()?;
    Ok((diag, off))
}

pub fn eigen_tridiagonal(model: &CoefficientModel, window: &LatticeWindow) -> Result<SpectrumResult> {
    let (d, e) = window_matrix(model, window)?;
    tridiagonal_eigen(&d, &e, false)
}

pub fn eigen_tridiagonal_with_vectors(
    model: &CoefficientModel,
    window: &LatticeWindow,
) -> Result<SpectrumResult> {
    let (d, e) = window_matrix(model, window)?;
    tridiagonal_eigen(&d, &e, true)
}

/// Eigenvalues (and optionally eigenvectors) of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off`.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], want_vectors: bool) -> Result<SpectrumResult> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::InvalidParameter(format!(
            "tridiagonal sizes {} and {}",
            diag.len(),
            off.len()
        )));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    // z[row][col]; columns become eigenvectors
    let mut z = want_vectors.then(|| {
        let mut z = vec![vec![0.0; n]; n];
        for (i, row) in z.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        z
    });

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() + dd == dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::NoConvergence {
                    index: l,
                    iterations: iter,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_mut() {
                    for row in z.iter_mut() {
                        let f = row[i + 1];
                        row[i + 1] = s * row[i] + c * f;
                        row[i] = c * row[i] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();

    let (vectors, residuals) = match z {
        Some(z) => {
            let vecs: Vec<Vec<f64>> = order
                .iter()
                .map(|&j| {
                    let mut v: Vec<f64> = z.iter().map(|row| row[j]).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
                    for x in v.iter_mut() {
                        *x *= sign / norm;
                    }
                    v
                })
                .collect();
            let res = vecs
                .iter()
                .zip(&eigenvalues)
                .map(|(v, &lam)| residual_norm(diag, off, v, lam))
                .collect();
            (Some(vecs), res)
        }
        None => {
            let res = certify(diag, off, &eigenvalues);
            (None, res)
        }
    };

    Ok(SpectrumResult {
        eigenvalues,
        vectors,
        residuals,
    })
}

fn residual_norm(diag: &[f64], off: &[f64], v: &[f64], lam: f64) -> f64 {
    let n = diag.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut hv = diag[i] * v[i];
        if i > 0 {
            hv += off[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            hv += off[i] * v[i + 1];
        }
        acc += (hv - lam * v[i]).powi(2);
    }
    acc.sqrt()
}

// Smallest radius (from a geometric ladder) for which the Sturm counts bracket
// exactly one eigenvalue; infinity if none does.
fn certify(diag: &[f64], off: &[f64], eigenvalues: &[f64]) -> Vec<f64> {
    let scale = diag
        .iter()
        .map(|x| x.abs())
        .chain(off.iter().map(|x| 2.0 * x.abs()))
        .fold(1.0f64, f64::max);
    eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &lam)| {
            let mut delta = 1e-13 * scale;
            while delta < scale {
                if sturm_count_matrix(diag, off, lam - delta) == k
                    && sturm_count_matrix(diag, off, lam + delta) == k + 1
                {
                    return delta;
                }
                delta *= 10.0;
            }
            f64::INFINITY
        })
        .collect()
}

/// Number of eigenvalues strictly below `x`.
pub fn sturm_count_matrix(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let coupling = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] / q };
        q = diag[i] - x - coupling;
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Number of window eigenvalues strictly below `x`.
pub fn sturm_count(model: &CoefficientModel, window: &LatticeWindow, x: f64) -> Result<usize> {
    let (d, e) = window_matrix(model, window)?;
    Ok(sturm_count_matrix(&d, &e, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_by_one() {
        let m = CoefficientModel::table(0, vec![1.0, 1.0], 1, vec![5.0]).unwrap();
        let r = eigen_tridiagonal(&m, &LatticeWindow::new(0, 2).unwrap()).unwrap();
        assert_eq!(r.eigenvalues, vec![5.0]);
    }

    #[test]
    fn free_small_windows() {
        let free = CoefficientModel::free();
        let r = eigen_tridiagonal(&free, &LatticeWindow::new(0, 3).unwrap()).unwrap();
        assert_relative_eq!(r.eigenvalues[0], -1.0, epsilon = 1e-15);
        assert_relative_eq!(r.eigenvalues[1], 1.0, epsilon = 1e-15);
        let r = eigen_tridiagonal_with_vectors(&free, &LatticeWindow::new(0, 4).unwrap()).unwrap();
        let s = 2f64.sqrt();
        for (got, want) in r.eigenvalues.iter().zip([-s, 0.0, s]) {
            assert_relative_eq!(*got, want, epsilon = 1e-15);
        }
        assert!(r.residuals.iter().all(|&x| x < 1e-14));
    }

    #[test]
    fn free_window_matches_cosines() {
        // eigenvalues of the n-site free matrix are 2 cos(kπ/(n+1))
        let n = 40;
        let free = CoefficientModel::free();
        let r = eigen_tridiagonal(&free, &LatticeWindow::new(0, n as i64 + 1).unwrap()).unwrap();
        for k in 1..=n {
            let want = 2.0 * (std::f64::consts::PI * (n + 1 - k) as f64 / (n + 1) as f64).cos();
            assert_relative_eq!(r.eigenvalues[k - 1], want, epsilon = 1e-13);
        }
        assert!(r.residuals.iter().all(|&x| x <= 1e-12));
    }

    #[test]
    fn vectors_are_orthonormal() {
        let d = [0.3, -1.2, 0.8, 0.0, 2.1, -0.4];
        let e = [0.9, 1.7, 0.6, 1.1, 0.5];
        let r = tridiagonal_eigen(&d, &e, true).unwrap();
        let v = r.vectors.unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let dot: f64 = v[i].iter().zip(&v[j]).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(dot, want, epsilon = 1e-13);
            }
            assert!(v[i][0] > 0.0);
        }
        assert!(r.residuals.iter().all(|&x| x < 1e-13));
    }

    #[test]
    fn sturm_counts() {
        let d = [0.0; 3];
        let e = [1.0; 2];
        assert_eq!(sturm_count_matrix(&d, &e, -2.0), 0);
        assert_eq!(sturm_count_matrix(&d, &e, -1.0), 1);
        assert_eq!(sturm_count_matrix(&d, &e, 0.5), 2);
        assert_eq!(sturm_count_matrix(&d, &e, 3.0), 3);
    }
}

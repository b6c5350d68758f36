//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Real eigendecomposition `A = R diag(a) L` with `L R = I`.
///
/// Eigenvalues are sorted ascending, right eigenvectors have unit length and
/// their largest-magnitude component is positive.
#[derive(Debug, Clone)]
pub struct RealEigen {
    pub values: Vec<f64>,
    /// Right eigenvectors as columns.
    pub right: DMatrix<f64>,
    /// Left eigenvectors as rows, dual to `right`.
    pub left: DMatrix<f64>,
}

/// Central finite-difference Jacobian with step `eps^(1/3) max(1, |u|)`.
pub fn fd_jacobian<F>(f: F, u: &[f64], m: usize) -> DMatrix<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = u.len();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = f64::EPSILON.cbrt() * norm.max(1.0);
    let mut jac = DMatrix::zeros(m, n);
    let mut up = u.to_vec();
    let mut um = u.to_vec();
    let mut fp = vec![0.0; m];
    let mut fm = vec![0.0; m];
    for k in 0..n {
        up[k] = u[k] + h;
        um[k] = u[k] - h;
        f(&up, &mut fp);
        f(&um, &mut fm);
        for i in 0..m {
            jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
        up[k] = u[k];
        um[k] = u[k];
    }
    jac
}

/// Unit null vector of a (numerically) singular complex matrix: the right
/// singular vector of the smallest singular value.
pub fn null_vector(m: &CMatrix) -> (CVector, f64) {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (idx, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let v = vt.row(idx).adjoint();
    (v, smin)
}

/// Unit null vector of a real matrix.
pub fn real_null_vector(m: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (idx, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    (vt.row(idx).transpose(), smin)
}

/// Eigenvalues of a complex square matrix via the complex Schur form.
pub fn complex_eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    if n == 2 {
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = (tr * tr - 4.0 * det).sqrt();
        return Ok(vec![(tr + disc) / 2.0, (tr - disc) / 2.0]);
    }
    let schur = nalgebra::Schur::new(m.clone());
    let (_, t) = schur.unpack();
    for j in 0..n {
        for i in (j + 1)..n {
            if t[(i, j)].norm() > 1e-10 * (1.0 + t.norm()) {
                return Err(Error::SpectralDegeneracy(
                    "complex Schur form did not converge to triangular".into(),
                ));
            }
        }
    }
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Real eigendecomposition of a matrix whose eigenvalues are real and simple.
pub fn real_eigen(a: &DMatrix<f64>, imag_tol: f64) -> Result<RealEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigenproblem"));
    }
    let scale = a.norm().max(1.0);
    let ev = a.complex_eigenvalues();
    let mut values = Vec::with_capacity(n);
    for z in ev.iter() {
        if z.im.abs() > imag_tol * scale {
            return Err(Error::SpectralDegeneracy(format!(
                "complex eigenvalue {:.6e}{:+.6e}i",
                z.re, z.im
            )));
        }
        values.push(z.re);
    }
    values.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut right = DMatrix::zeros(n, n);
    for (j, &mu) in values.iter().enumerate() {
        let shifted = a - DMatrix::identity(n, n) * mu;
        let (mut v, _) = real_null_vector(&shifted);
        let imax = v.iamax();
        if v[imax] < 0.0 {
            v = -v;
        }
        right.set_column(j, &v);
    }
    let left = right.clone().try_inverse().ok_or_else(|| {
        Error::SpectralDegeneracy("eigenvectors are linearly dependent (defective matrix)".into())
    })?;
    Ok(RealEigen { values, right, left })
}

/// Solves the small dense system `a x = b` in place by Gaussian elimination
/// with partial pivoting. `a` is row-major `n x n` and is overwritten.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return false;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let piv = a[k * n + k];
        for i in (k + 1)..n {
            let f = a[i * n + k] / piv;
            if f != 0.0 {
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in (k + 1)..n {
            s -= a[k * n + j] * b[j];
        }
        b[k] = s / a[k * n + k];
    }
    true
}

/// Solves `a X = B` for a row-major `n x m` right-hand side in place.
pub fn solve_multi_in_place(a: &mut [f64], b: &mut [f64], n: usize, m: usize) -> bool {
    for k in 0..n {
        let mut p = k;
        let mut best = a[k * n + k].abs();
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return false;
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            for j in 0..m {
                b.swap(k * m + j, p * m + j);
            }
        }
        let piv = a[k * n + k];
        for i in (k + 1)..n {
            let f = a[i * n + k] / piv;
            if f != 0.0 {
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                for j in 0..m {
                    b[i * m + j] -= f * b[k * m + j];
                }
            }
        }
    }
    for k in (0..n).rev() {
        let piv = a[k * n + k];
        for j in 0..m {
            let mut s = b[k * m + j];
            for l in (k + 1)..n {
                s -= a[k * n + l] * b[l * m + j];
            }
            b[k * m + j] = s / piv;
        }
    }
    true
}

/// Weights of the six-point central first-derivative stencil (sixth order).
pub const D1_6: [f64; 7] = [
    -1.0 / 60.0,
    3.0 / 20.0,
    -3.0 / 4.0,
    0.0,
    3.0 / 4.0,
    -3.0 / 20.0,
    1.0 / 60.0,
];

/// First derivative of uniformly sampled data: sixth-order central stencil in
/// the interior, lower-order one-sided stencils near the ends.
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    for i in 0..n {
        out[i] = if i >= 3 && i + 3 < n {
            let mut s = 0.0;
            for (k, w) in D1_6.iter().enumerate() {
                s += w * values[i + k - 3];
            }
            s / h
        } else if i >= 1 && i + 1 < n {
            (values[i + 1] - values[i - 1]) / (2.0 * h)
        } else if i == 0 {
            if n >= 3 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
            } else {
                (values[1] - values[0]) / h
            }
        } else if n >= 3 {
            (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h)
        } else {
            (values[n - 1] - values[n - 2]) / h
        };
    }
    out
}

/// Six-point Lagrange interpolation of uniformly sampled data at `x`.
/// Outside the sampled range the nearest endpoint value is returned.
pub fn lagrange6(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let s = (x - x0) / h;
    if s <= 0.0 {
        return values[0];
    }
    if s >= (n - 1) as f64 {
        return values[n - 1];
    }
    if n < 6 {
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        return values[i] * (1.0 - t) + values[i + 1] * t;
    }
    let i = s.floor() as isize;
    let start = (i - 2).clamp(0, n as isize - 6) as usize;
    let mut acc = 0.0;
    for j in 0..6 {
        let xj = (start + j) as f64;
        let mut w = 1.0;
        for k in 0..6 {
            if k != j {
                let xk = (start + k) as f64;
                w *= (s - xk) / (xj - xk);
            }
        }
        acc += w * values[start + j];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn real_eigen_is_dual_and_sorted() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.4, 0.0]);
        let e = real_eigen(&a, 1e-10).unwrap();
        assert!(e.values[0] < e.values[1]);
        let id = &e.left * &e.right;
        assert_relative_eq!(id, DMatrix::identity(2, 2), epsilon = 1e-12);
        for j in 0..2 {
            let r = e.right.column(j);
            assert_relative_eq!(&a * r, r * e.values[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn complex_eigenvalues_of_rotation() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(2.0, 1.0),
            ],
        );
        let mut ev = complex_eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert_relative_eq!(ev[0].im, -1.0, epsilon = 1e-12);
        assert_relative_eq!(ev[2].re, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn small_solver_matches_inverse() {
        let mut a = vec![4.0, 1.0, 2.0, 3.0];
        let mut b = vec![1.0, 2.0];
        // Cramer's rule for the row-major system [[4, 1], [2, 3]] x = [1, 2]
        let det = 4.0 * 3.0 - 1.0 * 2.0;
        let x = [(1.0 * 3.0 - 1.0 * 2.0) / det, (4.0 * 2.0 - 2.0 * 1.0) / det];
        assert!(solve_in_place(&mut a, &mut b, 2));
        assert_relative_eq!(b[0], x[0], epsilon = 1e-14);
        assert_relative_eq!(b[1], x[1], epsilon = 1e-14);
    }

    #[test]
    fn lagrange_reproduces_quintics() {
        let h = 0.1;
        let vals: Vec<f64> = (0..20).map(|i| (i as f64 * h).powi(5)).collect();
        let x = 0.937;
        assert_relative_eq!(lagrange6(&vals, 0.0, h, x), x.powi(5), epsilon = 1e-12);
    }

    #[test]
    fn sixth_order_derivative() {
        let h = 0.05;
        let vals: Vec<f64> = (0..100).map(|i| (i as f64 * h).sin()).collect();
        let d = derivative(&vals, h);
        for i in 3..97 {
            assert!((d[i] - (i as f64 * h).cos()).abs() < 1e-9);
        }
    }
}

//! Small dense linear-algebra kernels: power iteration, cyclic Jacobi
//! eigendecomposition and Cholesky factorization.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Relative Rayleigh-quotient change at which power iteration stops.
pub const POWER_TOL: f64 = 1e-10;
/// Iteration cap for power iteration.
pub const POWER_MAX_ITER: usize = 20_000;

fn power_start(n: usize) -> Array1<f64> {
    // all-ones, perturbed by index so that no eigenvector is orthogonal to it
    // for the structured matrices used in tests
    let v = Array1::from_shape_fn(n, |i| 1.0 + 1.0 / (i as f64 + 2.0));
    let norm = v.dot(&v).sqrt();
    v / norm
}

/// Largest eigenvalue of a symmetric PSD operator given by its action.
pub fn power_iteration<F>(n: usize, apply: F, tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(ArrayView1<f64>) -> Array1<f64>,
{
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = power_start(n);
    let mut rq_prev = f64::NAN;
    for _ in 0..max_iter {
        let w = apply(v.view());
        let rq = v.dot(&w);
        let norm = w.dot(&w).sqrt();
        if !norm.is_finite() || !rq.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        if norm == 0.0 {
            return Ok(0.0);
        }
        if (rq - rq_prev).abs() <= tol * rq.abs() {
            return Ok(rq);
        }
        rq_prev = rq;
        v = w / norm;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
    })
}

/// Spectral norm (largest eigenvalue) of a symmetric PSD matrix.
pub fn matrix_two_norm(m: ArrayView2<f64>) -> Result<f64> {
    check_square(m)?;
    power_iteration(m.nrows(), |v| m.dot(&v), POWER_TOL, POWER_MAX_ITER)
}

/// `lambda_max(A^T A) = |A|_2^2`, applied as two matrix-vector products.
pub fn gram_two_norm(a: ArrayView2<f64>) -> Result<f64> {
    power_iteration(
        a.ncols(),
        |v| a.t().dot(&a.dot(&v)),
        POWER_TOL,
        POWER_MAX_ITER,
    )
}

/// An upper estimate of the smallest eigenvalue of a symmetric matrix, by
/// power iteration on `shift * I - M`. The estimate never falls below the
/// true smallest eigenvalue, so a negative result proves indefiniteness.
pub fn min_eigenvalue_estimate(m: ArrayView2<f64>, shift: f64, max_iter: usize) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = power_start(n);
    for _ in 0..max_iter {
        let w = &v * shift - &m.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        v = w / norm;
    }
    // Rayleigh quotient of M: never below lambda_min
    v.dot(&m.dot(&v))
}

fn check_square(m: ArrayView2<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidProblem(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Maximum absolute asymmetry `max |m_ij - m_ji|`.
pub fn asymmetry(m: ArrayView2<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[[i, j]] - m[[j, i]]).abs());
        }
    }
    worst
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn jacobi_eigh(m: ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    check_square(m)?;
    let n = m.nrows();
    let mut a = m.to_owned();
    let mut v = Array2::<f64>::eye(n);
    let scale = a
        .iter()
        .fold(0.0_f64, |s, x| s.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].total_cmp(&a[[j, j]]));
    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let vectors = v.select(Axis(1), &order);
    Ok((values, vectors))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(m: ArrayView2<f64>) -> Result<Array2<f64>> {
    check_square(m)?;
    let n = m.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = m[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::InvalidProblem(
                "matrix is not positive definite".into(),
            ));
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Solve `L L^T x = b` given the lower Cholesky factor.
pub fn cholesky_solve(l: ArrayView2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = b.to_owned();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[[i, k]] * y[k];
        }
        y[i] /= l[[i, i]];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[[k, i]] * y[k];
        }
        y[i] /= l[[i, i]];
    }
    y
}

pub fn norm2(x: ArrayView1<f64>) -> f64 {
    x.dot(&x).sqrt()
}

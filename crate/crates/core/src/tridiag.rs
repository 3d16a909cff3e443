//! Symmetric tridiagonal eigenvalues (Sturm bisection, inverse iteration) and
//! Thomas solves for real and complex tridiagonal systems.

use num_complex::Complex64;

use crate::quad::Field;

/// Number of eigenvalues of the symmetric tridiagonal matrix below `x`.
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let qs = if q.abs() < 1e-300 { 1e-300f64.copysign(q) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / qs;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue by Sturm-sequence bisection.
pub fn smallest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Thomas solve of (sub, diag, sup) x = rhs. `sub[i]` couples row i+1 to i.
pub fn solve<T>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<Output = T> + std::ops::Div<Output = T>,
{
    let n = diag.len();
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    c.push(if n > 1 { sup[0] / diag[0] } else { diag[0] });
    d.push(rhs[0] / diag[0]);
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        if i + 1 < n {
            c.push(sup[i] / m);
        }
        let v = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
        d.push(v);
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi1 = x[i + 1];
        x[i] = x[i] - c[i] * xi1;
    }
    x
}

/// Eigenvector of a symmetric tridiagonal matrix for a converged eigenvalue
/// estimate, by inverse iteration. Normalized to unit Euclidean norm and a
/// positive sum.
pub fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
    let n = diag.len();
    let shift = lambda - 1e-10 * (1.0 + lambda.abs());
    let d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let mut v: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * (i + 1) as f64 / (n + 1) as f64).sin()).collect();
    for _ in 0..iters {
        let mut w = solve(off, &d, off, &v);
        let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sgn = if w.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        w.iter_mut().for_each(|x| *x *= sgn / nrm);
        v = w;
    }
    v
}

/// Complex Thomas solve helper.
pub fn solve_complex(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
    solve(sub, diag, sup, rhs)
}

/// Euclidean norm of a real or complex vector.
pub fn norm2<T: Field>(v: &[T]) -> f64 {
    v.iter().map(|x| x.modulus() * x.modulus()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_ground_state() {
        let n = 200;
        let h = 1.0 / (n + 1) as f64;
        let diag = vec![2.0 / (h * h); n];
        let off = vec![-1.0 / (h * h); n - 1];
        let lam = smallest_eigenvalue(&diag, &off);
        let exact = 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
        assert!((lam - exact).abs() < 1e-9 * exact);
        let v = inverse_iteration(&diag, &off, lam, 3);
        assert!(v.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn thomas_matches_dense() {
        let sub = [1.0, -2.0, 0.5];
        let diag = [4.0, 5.0, 6.0, 3.0];
        let sup = [0.3, 1.0, -1.0];
        let x = [1.0, -1.0, 2.0, 0.5];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i] + if i > 0 { sub[i - 1] * x[i - 1] } else { 0.0 } + if i < 3 { sup[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let got = solve(&sub, &diag, &sup, &rhs);
        for i in 0..4 {
            assert!((got[i] - x[i]).abs() < 1e-14);
        }
    }
}

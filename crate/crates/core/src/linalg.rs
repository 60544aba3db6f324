//! Small dense solves shared by the spline and regression code.

use crate::scalar::Real;

/// Solves `a x = b` (row-major `n x n`) by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `tol` times the largest
/// entry of `a`.
pub fn solve<T: Real>(mut a: Vec<T>, mut b: Vec<T>, n: usize, tol: T) -> Option<Vec<T>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let scale = a.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[piv * n + col].abs() {
                piv = row;
            }
        }
        if a[piv * n + col].abs() <= tol * scale {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        let p = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let v = a[col * n + c];
                a[row * n + c] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row * n + c] * x[c];
        }
        x[row] = acc / a[row * n + row];
    }
    Some(x)
}

/// Elementary symmetric polynomials e_0..e_len of `xs`.
pub fn elementary_symmetric<T: Real>(xs: &[T]) -> Vec<T> {
    let mut e = vec![T::zero(); xs.len() + 1];
    e[0] = T::one();
    for (i, &x) in xs.iter().enumerate() {
        for l in (1..=i + 1).rev() {
            let prev = e[l - 1];
            e[l] += x * prev;
        }
    }
    e
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

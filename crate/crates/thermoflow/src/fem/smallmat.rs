//! Dense helpers for small per-cell matrices (Vandermonde and mass inverses).

use crate::Real;

/// Invert a dense row-major n x n matrix by Gauss-Jordan with partial
/// pivoting. Returns None when a pivot falls below 1e-300 of scale.
pub fn invert<T: Real>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = T::one();
    }
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col].abs() < T::of(1e-300) {
            return None;
        }
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
        }
        let d = m[col * n + col];
        for c in 0..n {
            m[col * n + c] /= d;
            inv[col * n + c] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == T::zero() {
                continue;
            }
            for c in 0..n {
                let mc = m[col * n + c];
                let ic = inv[col * n + c];
                m[r * n + c] -= f * mc;
                inv[r * n + c] -= f * ic;
            }
        }
    }
    Some(inv)
}

/// y = A x for dense row-major A (n x n).
#[allow(dead_code)]
pub fn matvec<T: Real>(a: &[T], x: &[T], y: &mut [T]) {
    let n = x.len();
    for r in 0..n {
        let mut s = T::zero();
        for c in 0..n {
            s += a[r * n + c] * x[c];
        }
        y[r] = s;
    }
}

/// Solve A x = b in place via Gaussian elimination with partial pivoting.
#[allow(dead_code)]
pub fn solve<T: Real>(a: &mut [T], b: &mut [T]) -> Option<()> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < T::of(1e-300) {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
            }
            b.swap(piv, col);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let v = a[col * n + c];
                a[r * n + c] -= f * v;
            }
            let bc = b[col];
            b[r] -= f * bc;
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r * n + c] * b[c];
        }
        b[r] = s / a[r * n + r];
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_and_solve_agree() {
        let a = vec![4.0f64, 1.0, 2.0, 1.0, 5.0, 1.0, 2.0, 1.0, 6.0];
        let inv = invert(&a, 3).unwrap();
        let b = vec![1.0, 2.0, 3.0];
        let mut y = vec![0.0; 3];
        matvec(&inv, &b, &mut y);
        let mut a2 = a.clone();
        let mut b2 = b.clone();
        solve(&mut a2, &mut b2).unwrap();
        for i in 0..3 {
            assert!((y[i] - b2[i]).abs() < 1e-13);
        }
    }
}

/// Debug wrapper exposing the dense solve outcome.
pub fn solve_dbg<T: crate::Real>(a: &mut [T], b: &mut [T]) -> Option<()> {
    solve(a, b)
}

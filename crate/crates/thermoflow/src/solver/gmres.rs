//! Restarted GMRES with right preconditioning, nullspace projection and
//! Givens-rotation least squares.

use crate::Real;

/// Anything that can apply itself to a vector.
pub trait LinearOperator<T> {
    fn apply(&self, x: &[T], y: &mut [T]);
    fn dim(&self) -> usize;
}

impl<T: Real> LinearOperator<T> for crate::fem::CsrMatrix<T> {
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.matvec(x, y);
    }
    fn dim(&self) -> usize {
        self.nrows
    }
}

/// Identity preconditioner.
pub struct IdentityOp(pub usize);

impl<T: Real> LinearOperator<T> for IdentityOp {
    fn apply(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
    }
    fn dim(&self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct KrylovConfig<T> {
    pub restart: usize,
    pub rtol: T,
    pub atol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for KrylovConfig<T> {
    fn default() -> Self {
        Self {
            restart: 100,
            rtol: T::of(1e-10),
            atol: T::of(1e-50),
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult<T> {
    pub x: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// true residual norms, one entry per iteration plus the initial norm
    pub residual_norms: Vec<T>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn project_out<T: Real>(v: &mut [T], w: Option<&[T]>) {
    if let Some(w) = w {
        let c = dot(v, w);
        for (vi, wi) in v.iter_mut().zip(w) {
            *vi -= c * *wi;
        }
    }
}

/// Right-preconditioned restarted GMRES for `A x = b`.
///
/// `nullspace`, when given, is projected out of `b` and of every Krylov
/// direction, implementing the constant-pressure orthogonalization.
pub fn gmres<T: Real>(
    op: &dyn LinearOperator<T>,
    precond: &dyn LinearOperator<T>,
    b: &[T],
    config: &KrylovConfig<T>,
    nullspace: Option<&[T]>,
) -> GmresResult<T> {
    let n = op.dim();
    let null_unit: Option<Vec<T>> = nullspace.map(|w| {
        let nw = norm2(w);
        w.iter().map(|&x| x / nw).collect()
    });
    let null_ref = null_unit.as_deref();

    let mut rhs = b.to_vec();
    project_out(&mut rhs, null_ref);
    let bnorm = norm2(&rhs);
    let target = (config.rtol * bnorm).max(config.atol);

    let mut x = vec![T::zero(); n];
    let mut residual_norms = vec![bnorm];
    if bnorm <= config.atol {
        return GmresResult {
            x,
            iterations: 0,
            converged: true,
            residual_norms,
        };
    }

    let m = config.restart.max(1);
    let mut total_iters = 0usize;
    let mut converged = false;

    // work storage reused across cycles
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    let mut h = vec![T::zero(); (m + 1) * m];
    let mut cs = vec![T::zero(); m];
    let mut sn = vec![T::zero(); m];
    let mut g = vec![T::zero(); m + 1];
    let mut z = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];

    'outer: while total_iters < config.max_iter {
        // r = b - A x (x = 0 in the first cycle)
        let mut r = vec![T::zero(); n];
        if total_iters == 0 {
            r.copy_from_slice(&rhs);
        } else {
            op.apply(&x, &mut r);
            for i in 0..n {
                r[i] = rhs[i] - r[i];
            }
            project_out(&mut r, null_ref);
        }
        let beta = norm2(&r);
        if beta <= target {
            converged = true;
            break;
        }
        basis.clear();
        basis.push(r.iter().map(|&v| v / beta).collect());
        for gi in g.iter_mut() {
            *gi = T::zero();
        }
        g[0] = beta;

        let mut kdim = 0usize;
        for k in 0..m {
            if total_iters >= config.max_iter {
                break;
            }
            // w = A M^{-1} v_k
            precond.apply(&basis[k], &mut z);
            op.apply(&z, &mut w);
            project_out(&mut w, null_ref);
            // modified Gram-Schmidt
            for i in 0..=k {
                let hik = dot(&w, &basis[i]);
                h[i * m + k] = hik;
                for (wj, vj) in w.iter_mut().zip(&basis[i]) {
                    *wj -= hik * *vj;
                }
            }
            let hk1 = norm2(&w);
            h[(k + 1) * m + k] = hk1;
            // apply previous rotations to the new column
            for i in 0..k {
                let t1 = cs[i] * h[i * m + k] + sn[i] * h[(i + 1) * m + k];
                let t2 = -sn[i] * h[i * m + k] + cs[i] * h[(i + 1) * m + k];
                h[i * m + k] = t1;
                h[(i + 1) * m + k] = t2;
            }
            let denom = (h[k * m + k] * h[k * m + k] + hk1 * hk1).sqrt();
            if denom == T::zero() {
                kdim = k;
                break;
            }
            cs[k] = h[k * m + k] / denom;
            sn[k] = hk1 / denom;
            h[k * m + k] = denom;
            h[(k + 1) * m + k] = T::zero();
            let gk = g[k];
            g[k] = cs[k] * gk;
            g[k + 1] = -sn[k] * gk;
            kdim = k + 1;
            total_iters += 1;
            let res = g[k + 1].abs();
            residual_norms.push(res);
            if res <= target {
                converged = true;
                break;
            }
            if hk1 == T::zero() {
                // happy breakdown
                converged = true;
                break;
            }
            basis.push(w.iter().map(|&v| v / hk1).collect());
        }

        // back-substitute y and update x += M^{-1} (V y)
        if kdim > 0 {
            let mut y = vec![T::zero(); kdim];
            for i in (0..kdim).rev() {
                let mut s = g[i];
                for j in i + 1..kdim {
                    s -= h[i * m + j] * y[j];
                }
                y[i] = s / h[i * m + i];
            }
            let mut v = vec![T::zero(); n];
            for (j, yj) in y.iter().enumerate() {
                for (vi, bij) in v.iter_mut().zip(&basis[j]) {
                    *vi += *yj * *bij;
                }
            }
            precond.apply(&v, &mut z);
            for i in 0..n {
                x[i] += z[i];
            }
        }
        if converged {
            break 'outer;
        }
    }

    project_out(&mut x, null_ref);
    GmresResult {
        x,
        iterations: total_iters,
        converged,
        residual_norms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{CsrMatrix, PatternBuilder};

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let mut b = PatternBuilder::new(n, n);
        for i in 0..n {
            b.insert(i, i);
            if i > 0 {
                b.insert(i, i - 1);
            }
            if i + 1 < n {
                b.insert(i, i + 1);
            }
        }
        let mut m: CsrMatrix<f64> = b.build();
        for i in 0..n {
            m.set(i, i, 2.0);
            if i > 0 {
                m.set(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.set(i, i + 1, -1.0);
            }
        }
        m
    }

    #[test]
    fn identity_converges_in_one() {
        let n = 20;
        let mut b = PatternBuilder::new(n, n);
        b.ensure_diagonal();
        let mut m: CsrMatrix<f64> = b.build();
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let r = gmres(&m, &IdentityOp(n), &rhs, &KrylovConfig::default(), None);
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn exact_preconditioner_two_iterations() {
        let n = 64;
        let a = laplacian_1d(n);
        let f = crate::solver::sparse_lu(&a).unwrap();
        struct LuOp<'a>(&'a crate::solver::LuFactorization<f64>, usize);
        impl LinearOperator<f64> for LuOp<'_> {
            fn apply(&self, x: &[f64], y: &mut [f64]) {
                y.copy_from_slice(&crate::solver::lu_solve(self.0, x));
            }
            fn dim(&self) -> usize {
                self.1
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).cos()).collect();
        let cfg = KrylovConfig {
            rtol: 1e-12,
            ..KrylovConfig::default()
        };
        let r = gmres(&a, &LuOp(&f, n), &rhs, &cfg, None);
        assert!(r.converged);
        assert!(r.iterations <= 2, "iterations {}", r.iterations);
    }

    #[test]
    fn laplacian_unpreconditioned_monotone() {
        let n = 64;
        let a = laplacian_1d(n);
        let rhs: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let cfg = KrylovConfig {
            rtol: 1e-8,
            ..KrylovConfig::default()
        };
        let r = gmres(&a, &IdentityOp(n), &rhs, &cfg, None);
        assert!(r.converged);
        assert!(r.iterations <= 64);
        for w in r.residual_norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "residual must not increase");
        }
        // verify the true residual
        let mut ax = vec![0.0; n];
        a.matvec(&r.x, &mut ax);
        let res: f64 = ax
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let bn: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(res <= 1e-8 * bn * 1.01);
    }

    #[test]
    fn nullspace_projection_keeps_orthogonality() {
        // singular system: 1D Neumann Laplacian, nullspace = constants
        let n = 32;
        let mut b = PatternBuilder::new(n, n);
        for i in 0..n {
            b.insert(i, i);
            if i > 0 {
                b.insert(i, i - 1);
            }
            if i + 1 < n {
                b.insert(i, i + 1);
            }
        }
        let mut m: CsrMatrix<f64> = b.build();
        for i in 0..n {
            let d = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
            m.set(i, i, d);
            if i > 0 {
                m.set(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.set(i, i + 1, -1.0);
            }
        }
        let ones = vec![1.0; n];
        // consistent rhs orthogonal to constants
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64) - (n as f64 - 1.0) / 2.0).collect();
        let r = gmres(&m, &IdentityOp(n), &rhs, &KrylovConfig::default(), Some(&ones));
        assert!(r.converged);
        let mean: f64 = r.x.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-10);
    }
}

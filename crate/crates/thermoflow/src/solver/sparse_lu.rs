//! Sparse LU factorization: minimum-degree column preorder on the pattern of
//! A + A^T, left-looking Gilbert-Peierls factorization with threshold partial
//! pivoting that prefers the diagonal, and a dense fallback for tiny systems.

use crate::fem::CsrMatrix;
use crate::Real;

use super::SolverError;

/// Relative threshold under which the diagonal entry is rejected as pivot.
const PIVOT_THRESHOLD: f64 = 0.1;
const DENSE_LIMIT: usize = 32;

#[derive(Debug, Clone)]
pub enum LuFactorization<T> {
    Sparse(SparseLu<T>),
    Dense(DenseLu<T>),
}

#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SparseLu<T> {
    n: usize,
    /// column order (MD preorder): column k of the factorization is
    /// column `col_perm[k]` of A
    col_perm: Vec<usize>,
    /// row pivoted at step k (original index)
    row_perm: Vec<usize>,
    /// unit lower factor by columns; row indices are pivot positions
    l_cols: Vec<Vec<(u32, T)>>,
    /// strict upper factor by columns; row indices are pivot positions
    u_cols: Vec<Vec<(u32, T)>>,
    u_diag: Vec<T>,
}

/// Minimum-degree ordering on the symmetrized pattern, quotient-graph form
/// with element absorption and exact external degrees.
pub fn minimum_degree(a: &CsrMatrix<impl Real>) -> Vec<usize> {
    let n = a.nrows;
    // symmetrized adjacency without the diagonal
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for r in 0..n {
        for k in a.row_offsets[r]..a.row_offsets[r + 1] {
            let c = a.col_indices[k];
            if c != r {
                adj[r].push(c as u32);
                adj[c].push(r as u32);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }

    let mut elems: Vec<Vec<u32>> = vec![Vec::new(); n]; // elements per variable
    let mut bound: Vec<Vec<u32>> = vec![Vec::new(); n]; // boundary per element (indexed by pivot var)
    let mut absorbed = vec![false; n];
    let mut eliminated = vec![false; n];
    let mut degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();
    let mut mark = vec![0u32; n];
    let mut stamp = 0u32;

    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::with_capacity(2 * n);
    for v in 0..n {
        heap.push(Reverse((degree[v], v)));
    }
    let mut order = Vec::with_capacity(n);
    let mut le: Vec<u32> = Vec::new();

    while let Some(Reverse((d, v))) = heap.pop() {
        if eliminated[v] || d != degree[v] {
            continue;
        }
        eliminated[v] = true;
        order.push(v);

        // Le = adj(v) union boundaries of v's elements, minus eliminated
        stamp += 1;
        le.clear();
        mark[v] = stamp;
        for &u in &adj[v] {
            let u = u as usize;
            if !eliminated[u] && mark[u] != stamp {
                mark[u] = stamp;
                le.push(u as u32);
            }
        }
        let v_elems = std::mem::take(&mut elems[v]);
        for &e in &v_elems {
            let e = e as usize;
            if absorbed[e] {
                continue;
            }
            for &u in &bound[e] {
                let u = u as usize;
                if !eliminated[u] && mark[u] != stamp {
                    mark[u] = stamp;
                    le.push(u as u32);
                }
            }
            absorbed[e] = true;
            bound[e].clear();
            bound[e].shrink_to_fit();
        }

        // v becomes element with boundary Le
        bound[v] = le.clone();

        // update neighbours: prune adjacency covered by the new element,
        // attach the element, recompute exact degree
        for &u32u in &le {
            let u = u32u as usize;
            // mark = stamp still identifies Le members (plus v)
            adj[u].retain(|&w| {
                let w = w as usize;
                !eliminated[w] && mark[w] != stamp
            });
            elems[u].retain(|&e| !absorbed[e as usize]);
            elems[u].push(v as u32);
        }
        for &u32u in &le {
            let u = u32u as usize;
            stamp += 1;
            mark[u] = stamp;
            let mut deg = 0usize;
            for &w in &adj[u] {
                let w = w as usize;
                if mark[w] != stamp {
                    mark[w] = stamp;
                    deg += 1;
                }
            }
            for &e in &elems[u] {
                for &w in &bound[e as usize] {
                    let w = w as usize;
                    if !eliminated[w] && mark[w] != stamp {
                        mark[w] = stamp;
                        deg += 1;
                    }
                }
            }
            degree[u] = deg;
            heap.push(Reverse((deg, u)));
        }
    }
    order
}

/// Partial-pivoted sparse LU with a fill-reducing column ordering.
pub fn sparse_lu<T: Real>(a: &CsrMatrix<T>) -> Result<LuFactorization<T>, SolverError> {
    if a.nrows != a.ncols {
        return Err(SolverError::InvalidArgument(
            "matrix must be square".into(),
        ));
    }
    let n = a.nrows;
    if n <= DENSE_LIMIT {
        return dense_lu(a).map(LuFactorization::Dense);
    }
    let col_perm = minimum_degree(a);
    sparse_lu_ordered(a, col_perm).map(LuFactorization::Sparse)
}

fn dense_lu<T: Real>(a: &CsrMatrix<T>) -> Result<DenseLu<T>, SolverError> {
    let n = a.nrows;
    let mut lu = a.to_dense();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if lu[r * n + col].abs() > lu[piv * n + col].abs() {
                piv = r;
            }
        }
        if lu[piv * n + col].abs() < T::of(1e-280) {
            return Err(SolverError::SingularMatrix(col));
        }
        if piv != col {
            perm.swap(piv, col);
            for c in 0..n {
                lu.swap(piv * n + c, col * n + c);
            }
        }
        let d = lu[col * n + col];
        for r in col + 1..n {
            let f = lu[r * n + col] / d;
            lu[r * n + col] = f;
            if f == T::zero() {
                continue;
            }
            for c in col + 1..n {
                let v = lu[col * n + c];
                lu[r * n + c] -= f * v;
            }
        }
    }
    Ok(DenseLu { n, lu, perm })
}

fn sparse_lu_ordered<T: Real>(
    a: &CsrMatrix<T>,
    col_perm: Vec<usize>,
) -> Result<SparseLu<T>, SolverError> {
    let n = a.nrows;
    // A by columns
    let mut col_counts = vec![0usize; n];
    for &c in &a.col_indices {
        col_counts[c] += 1;
    }
    let mut col_ptr = vec![0usize; n + 1];
    for c in 0..n {
        col_ptr[c + 1] = col_ptr[c] + col_counts[c];
    }
    let mut arow = vec![0u32; a.nnz()];
    let mut aval = vec![T::zero(); a.nnz()];
    {
        let mut next = col_ptr.clone();
        for r in 0..n {
            for k in a.row_offsets[r]..a.row_offsets[r + 1] {
                let c = a.col_indices[k];
                arow[next[c]] = r as u32;
                aval[next[c]] = a.values[k];
                next[c] += 1;
            }
        }
    }

    let none = usize::MAX;
    let mut pinv = vec![none; n]; // original row -> pivot step
    let mut row_perm = vec![0usize; n];
    // L by columns with ORIGINAL row indices during factorization
    let mut l_cols: Vec<Vec<(u32, T)>> = Vec::with_capacity(n);
    let mut u_cols: Vec<Vec<(u32, T)>> = Vec::with_capacity(n);
    let mut u_diag = vec![T::zero(); n];

    let mut w = vec![T::zero(); n]; // dense accumulator
    let mut visited = vec![0u32; n];
    let mut stamp = 0u32;
    let mut reach: Vec<u32> = Vec::new(); // reverse postorder
    let mut dfs_stack: Vec<(u32, usize)> = Vec::new();
    let threshold = T::of(PIVOT_THRESHOLD);

    for k in 0..n {
        let j = col_perm[k];
        stamp += 1;
        reach.clear();
        // symbolic: reach of A(:,j) through pivoted L columns (iterative DFS,
        // postorder collected then reversed)
        for idx in col_ptr[j]..col_ptr[j + 1] {
            let r0 = arow[idx];
            if visited[r0 as usize] == stamp {
                continue;
            }
            dfs_stack.push((r0, 0));
            visited[r0 as usize] = stamp;
            while let Some(&(r, child)) = dfs_stack.last() {
                let rp = pinv[r as usize];
                let mut pushed = false;
                if rp != none {
                    let lcol = &l_cols[rp];
                    let mut ci = child;
                    while ci < lcol.len() {
                        let nr = lcol[ci].0;
                        ci += 1;
                        if visited[nr as usize] != stamp {
                            visited[nr as usize] = stamp;
                            dfs_stack.last_mut().unwrap().1 = ci;
                            dfs_stack.push((nr, 0));
                            pushed = true;
                            break;
                        }
                    }
                    if !pushed {
                        dfs_stack.last_mut().unwrap().1 = ci;
                    }
                }
                if !pushed {
                    reach.push(r);
                    dfs_stack.pop();
                }
            }
        }
        // numeric: scatter and eliminate in reverse postorder
        for &r in &reach {
            w[r as usize] = T::zero();
        }
        for idx in col_ptr[j]..col_ptr[j + 1] {
            w[arow[idx] as usize] = aval[idx];
        }
        for i in (0..reach.len()).rev() {
            let r = reach[i] as usize;
            let rp = pinv[r];
            if rp == none {
                continue;
            }
            let alpha = w[r];
            if alpha == T::zero() {
                continue;
            }
            for &(rr, lv) in &l_cols[rp] {
                w[rr as usize] -= alpha * lv;
            }
        }
        // pivot among unpivoted rows, preferring the natural diagonal
        let mut max_abs = T::zero();
        let mut max_row = none;
        for &r in &reach {
            let r = r as usize;
            if pinv[r] != none {
                continue;
            }
            let v = w[r].abs();
            if v > max_abs {
                max_abs = v;
                max_row = r;
            }
        }
        if max_row == none || max_abs == T::zero() || !max_abs.is_finite() {
            return Err(SolverError::SingularMatrix(j));
        }
        let mut piv = max_row;
        if visited[j] == stamp
            && pinv[j] == none
            && w[j].abs() >= threshold * max_abs
            && w[j] != T::zero()
        {
            piv = j;
        }
        let d = w[piv];
        u_diag[k] = d;
        pinv[piv] = k;
        row_perm[k] = piv;
        let mut lcol = Vec::new();
        let mut ucol = Vec::new();
        for &r in &reach {
            let r = r as usize;
            let v = w[r];
            if v == T::zero() {
                continue;
            }
            match pinv[r] {
                rp if rp == k => {}
                rp if rp != none => ucol.push((rp as u32, v)),
                _ => lcol.push((r as u32, v / d)),
            }
        }
        l_cols.push(lcol);
        u_cols.push(ucol);
    }

    // remap L row indices to pivot positions for the triangular sweeps
    for col in &mut l_cols {
        for e in col.iter_mut() {
            e.0 = pinv[e.0 as usize] as u32;
        }
        col.sort_unstable_by_key(|e| e.0);
    }
    for col in &mut u_cols {
        col.sort_unstable_by_key(|e| e.0);
    }

    Ok(SparseLu {
        n,
        col_perm,
        row_perm,
        l_cols,
        u_cols,
        u_diag,
    })
}

/// Apply permutations and triangular sweeps.
pub fn lu_solve<T: Real>(fact: &LuFactorization<T>, b: &[T]) -> Vec<T> {
    match fact {
        LuFactorization::Dense(d) => {
            let n = d.n;
            let mut y: Vec<T> = (0..n).map(|k| b[d.perm[k]]).collect();
            for c in 0..n {
                for r in c + 1..n {
                    let f = d.lu[r * n + c];
                    let yc = y[c];
                    y[r] -= f * yc;
                }
            }
            for r in (0..n).rev() {
                let mut s = y[r];
                for c in r + 1..n {
                    s -= d.lu[r * n + c] * y[c];
                }
                y[r] = s / d.lu[r * n + r];
            }
            y
        }
        LuFactorization::Sparse(s) => {
            let n = s.n;
            let mut y: Vec<T> = (0..n).map(|k| b[s.row_perm[k]]).collect();
            for k in 0..n {
                let yk = y[k];
                if yk == T::zero() {
                    continue;
                }
                for &(r, lv) in &s.l_cols[k] {
                    y[r as usize] -= lv * yk;
                }
            }
            for k in (0..n).rev() {
                let xk = y[k] / s.u_diag[k];
                y[k] = xk;
                if xk == T::zero() {
                    continue;
                }
                for &(r, uv) in &s.u_cols[k] {
                    y[r as usize] -= uv * xk;
                }
            }
            let mut x = vec![T::zero(); n];
            for k in 0..n {
                x[s.col_perm[k]] = y[k];
            }
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::PatternBuilder;
    use rand::{Rng, SeedableRng};

    fn csr_from_dense(n: usize, d: &[f64]) -> CsrMatrix<f64> {
        let mut b = PatternBuilder::new(n, n);
        for r in 0..n {
            for c in 0..n {
                if d[r * n + c] != 0.0 {
                    b.insert(r, c);
                }
            }
        }
        b.ensure_diagonal();
        let mut m: CsrMatrix<f64> = b.build();
        for r in 0..n {
            for c in 0..n {
                if d[r * n + c] != 0.0 {
                    m.set(r, c, d[r * n + c]);
                }
            }
        }
        m
    }

    #[test]
    fn identity_solve() {
        let n = 5;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            d[i * n + i] = 1.0;
        }
        let m = csr_from_dense(n, &d);
        let f = sparse_lu(&m).unwrap();
        let b = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let x = lu_solve(&f, &b);
        for i in 0..n {
            assert_eq!(x[i], b[i]);
        }
    }

    #[test]
    fn antidiagonal_exercises_pivoting() {
        let d = vec![0.0, 1.0, 1.0, 0.0];
        let m = csr_from_dense(2, &d);
        let f = sparse_lu(&m).unwrap();
        let x = lu_solve(&f, &[1.0, 2.0]);
        assert!((x[0] - 2.0).abs() < 1e-15);
        assert!((x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_residual() {
        let n = 50;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut g = vec![0.0f64; n * n];
        for v in g.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        // A = G G^T + n I is SPD and dense
        let mut d = vec![0.0f64; n * n];
        for r in 0..n {
            for c in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += g[r * n + k] * g[c * n + k];
                }
                d[r * n + c] = s + if r == c { n as f64 } else { 0.0 };
            }
        }
        let m = csr_from_dense(n, &d);
        let f = sparse_lu(&m).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = lu_solve(&f, &b);
        let mut r = vec![0.0; n];
        m.matvec(&x, &mut r);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            num += (r[i] - b[i]).powi(2);
            den += b[i].powi(2);
        }
        assert!((num / den).sqrt() <= 1e-12);
    }

    #[test]
    fn random_sparse_unsymmetric_vs_dense_oracle() {
        let n = 120;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut d = vec![0.0f64; n * n];
        for r in 0..n {
            d[r * n + r] = rng.gen_range(0.5..2.0);
            for _ in 0..6 {
                let c = rng.gen_range(0..n);
                d[r * n + c] += rng.gen_range(-1.0..1.0);
            }
        }
        let m = csr_from_dense(n, &d);
        let f = sparse_lu(&m).unwrap();
        assert!(matches!(f, LuFactorization::Sparse(_)));
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = lu_solve(&f, &b);
        // dense oracle
        let mut a2 = d.clone();
        let mut b2 = b.clone();
        crate::fem::smallmat::solve(&mut a2, &mut b2).unwrap();
        for i in 0..n {
            assert!((x[i] - b2[i]).abs() < 1e-9 * (1.0 + b2[i].abs()), "{i}");
        }
    }

    #[test]
    fn saddle_point_with_zero_diagonal_block() {
        // [I B^T; B 0] with random thin B; exercises pivoting off-diagonal
        let nu = 40;
        let np = 12;
        let n = nu + np;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut d = vec![0.0f64; n * n];
        for i in 0..nu {
            d[i * n + i] = 1.0 + rng.gen_range(0.0..1.0);
        }
        for p in 0..np {
            for _ in 0..5 {
                let c = rng.gen_range(0..nu);
                let v = rng.gen_range(-1.0..1.0);
                d[(nu + p) * n + c] += v;
                d[c * n + nu + p] += v;
            }
            // keep B full row rank via a distinct column
            d[(nu + p) * n + 3 * p] += 2.0;
            d[(3 * p) * n + nu + p] += 2.0;
        }
        let m = csr_from_dense(n, &d);
        let f = sparse_lu(&m).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = lu_solve(&f, &b);
        let mut r = vec![0.0; n];
        m.matvec(&x, &mut r);
        let res: f64 = r
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn singular_matrix_detected() {
        let d = vec![1.0, 2.0, 2.0, 4.0]; // rank 1
        let m = csr_from_dense(2, &d);
        // dense path (n <= 32)
        assert!(matches!(
            sparse_lu(&m),
            Err(SolverError::SingularMatrix(_))
        ));
    }

    #[test]
    fn minimum_degree_is_permutation() {
        let n = 60;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut b = PatternBuilder::new(n, n);
        b.ensure_diagonal();
        for _ in 0..300 {
            let r = rng.gen_range(0..n);
            let c = rng.gen_range(0..n);
            b.insert(r, c);
        }
        let m: CsrMatrix<f64> = b.build();
        let ord = minimum_degree(&m);
        let mut seen = vec![false; n];
        for &v in &ord {
            assert!(!seen[v]);
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }
}

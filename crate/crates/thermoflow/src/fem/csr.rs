//! Compressed sparse row matrices with a fixed pattern and value updates.

use crate::Real;

#[derive(Debug, Clone)]
pub struct CsrMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Build a zero matrix from per-row column lists (sorted, deduplicated
    /// internally).
    pub fn from_pattern(nrows: usize, ncols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        assert_eq!(rows.len(), nrows);
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            col_indices.extend_from_slice(r);
            row_offsets.push(col_indices.len());
        }
        let values = vec![T::zero(); col_indices.len()];
        Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    fn entry_index(&self, r: usize, c: usize) -> Option<usize> {
        let span = self.row_offsets[r]..self.row_offsets[r + 1];
        self.col_indices[span.clone()]
            .binary_search(&c)
            .ok()
            .map(|k| span.start + k)
    }

    /// Accumulate into an existing pattern entry; panics if absent.
    pub fn add(&mut self, r: usize, c: usize, v: T) {
        let k = self
            .entry_index(r, c)
            .unwrap_or_else(|| panic!("entry ({r},{c}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.entry_index(r, c)
            .map(|k| self.values[k])
            .unwrap_or_else(T::zero)
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        let k = self
            .entry_index(r, c)
            .unwrap_or_else(|| panic!("entry ({r},{c}) not in sparsity pattern"));
        self.values[k] = v;
    }

    pub fn zero_values(&mut self) {
        for v in &mut self.values {
            *v = T::zero();
        }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut s = T::zero();
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                s += self.values[k] * x[self.col_indices[k]];
            }
            y[r] = s;
        }
    }

    /// Frobenius-style max-abs value.
    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Extract the dense sub-block rows x cols (small sizes, tests).
    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.nrows * self.ncols];
        for r in 0..self.nrows {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                d[r * self.ncols + self.col_indices[k]] = self.values[k];
            }
        }
        d
    }

    /// Extract the leading square sub-matrix of dimension `n`.
    pub fn principal_submatrix(&self, n: usize) -> CsrMatrix<T> {
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..n {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                if c < n {
                    col_indices.push(c);
                    values.push(self.values[k]);
                }
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Symmetric Dirichlet elimination: zero row and column, unit diagonal,
    /// move the column contribution to the right-hand side. `bc` holds
    /// (dof, value) pairs where `value` is the solution value to enforce.
    pub fn eliminate_dirichlet(&mut self, rhs: &mut [T], bc: &[(usize, T)]) {
        let mut is_bc = vec![false; self.nrows];
        let mut bc_val = vec![T::zero(); self.nrows];
        for &(d, v) in bc {
            is_bc[d] = true;
            bc_val[d] = v;
        }
        for r in 0..self.nrows {
            if is_bc[r] {
                continue;
            }
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                if is_bc[c] {
                    rhs[r] -= self.values[k] * bc_val[c];
                    self.values[k] = T::zero();
                }
            }
        }
        for r in 0..self.nrows {
            if !is_bc[r] {
                continue;
            }
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                self.values[k] = if c == r { T::one() } else { T::zero() };
            }
            rhs[r] = bc_val[r];
        }
    }

    /// MatrixMarket coordinate format dump for debugging.
    pub fn write_matrix_market(&self, path: &std::path::Path) -> Result<(), super::FemError> {
        use std::fmt::Write as _;
        let mut buf = String::new();
        buf.push_str("%%MatrixMarket matrix coordinate real general\n");
        writeln!(buf, "{} {} {}", self.nrows, self.ncols, self.nnz()).unwrap();
        for r in 0..self.nrows {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                writeln!(buf, "{} {} {:.17e}", r + 1, self.col_indices[k] + 1, self.values[k])
                    .unwrap();
            }
        }
        std::fs::write(path, buf).map_err(|source| super::FemError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Incremental sparsity pattern builder.
#[derive(Debug, Clone)]
pub struct PatternBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<usize>>,
}

impl PatternBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn insert(&mut self, r: usize, c: usize) {
        self.rows[r].push(c);
    }

    /// Couple every row dof with every column dof.
    pub fn couple(&mut self, row_dofs: &[usize], col_dofs: &[usize]) {
        for &r in row_dofs {
            for &c in col_dofs {
                self.rows[r].push(c);
            }
        }
    }

    pub fn ensure_diagonal(&mut self) {
        for r in 0..self.nrows.min(self.ncols) {
            self.rows[r].push(r);
        }
    }

    pub fn build<T: Real>(self) -> CsrMatrix<T> {
        CsrMatrix::from_pattern(self.nrows, self.ncols, self.rows)
    }
}

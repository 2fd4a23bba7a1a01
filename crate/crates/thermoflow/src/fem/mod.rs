//! Reference elements, quadrature, function spaces, sparse assembly,
//! Dirichlet conditions and norm evaluation on triangles.

pub mod assemble;
pub mod csr;
pub mod element;
pub mod norms;
pub mod output;
pub mod quadrature;
pub mod smallmat;
pub mod space;

pub use assemble::{assemble_matrix, assemble_vector, CellCtx, FacetCtx};
pub use csr::{CsrMatrix, PatternBuilder};
pub use element::{reference_basis, ElementSpec, Family, Shape, Tabulation};
pub use norms::{error_norm, Norm};
pub use quadrature::{quadrature_rule, QuadratureRule};
pub use space::{CellGeometry, FieldLayout, FunctionSpace, LayoutField};

use crate::mesh::BoundaryMarker;
use crate::Real;

#[derive(Debug, thiserror::Error)]
pub enum FemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Apply Dirichlet data `g` on `marker` to an assembled system by nodal
/// interpolation and symmetric elimination. Returns the (dof, value) pairs
/// that were enforced.
pub fn apply_dirichlet<T: Real>(
    matrix: &mut CsrMatrix<T>,
    rhs: &mut [T],
    space: &FunctionSpace<T>,
    marker: BoundaryMarker,
    g: &dyn Fn(T, T) -> T,
) -> Result<Vec<(usize, T)>, FemError> {
    let mut bc = Vec::new();
    for comp in 0..space.elem.ncomp() {
        bc.extend(space.dirichlet_component(marker, comp, g)?);
    }
    matrix.eliminate_dirichlet(rhs, &bc);
    Ok(bc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_rect_mesh;
    use std::sync::Arc;

    /// Assemble the P1 stiffness matrix on the unit square.
    fn p1_poisson(n: usize) -> (FunctionSpace<f64>, CsrMatrix<f64>, Vec<f64>) {
        let mesh = Arc::new(generate_rect_mesh(n, n, (1.0, 1.0), 0.0).unwrap());
        let s = FunctionSpace::new(mesh, ElementSpec::scalar(Family::Continuous, 1)).unwrap();
        let nb = s.nbasis_scalar();
        let a = assemble_matrix(
            &s,
            &s,
            2,
            |ctx, local| {
                for q in 0..ctx.qweights.len() {
                    let w = ctx.qweights[q];
                    for i in 0..nb {
                        let gi = ctx.test.grads[q * nb + i];
                        for j in 0..nb {
                            let gj = ctx.trial.grads[q * nb + j];
                            local[i * nb + j] += w * (gi[0] * gj[0] + gi[1] * gj[1]);
                        }
                    }
                }
            },
            None,
        )
        .unwrap();
        let rhs = vec![0.0; s.ndof()];
        (s, a, rhs)
    }

    #[test]
    fn zero_dirichlet_gives_identity_rows() {
        let (s, mut a, mut rhs) = p1_poisson(3);
        let bc = apply_dirichlet(&mut a, &mut rhs, &s, BoundaryMarker::Left, &|_, _| 0.0).unwrap();
        for &(d, v) in &bc {
            assert_eq!(v, 0.0);
            assert_eq!(rhs[d], 0.0);
            let (cols, vals) = a.row(d);
            for (c, v) in cols.iter().zip(vals) {
                assert_eq!(*v, if *c == d { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn harmonic_linear_reproduced() {
        // grad^2 theta = 0 with theta = x on all boundaries -> theta = x
        let (s, mut a, mut rhs) = p1_poisson(4);
        for m in [
            BoundaryMarker::Left,
            BoundaryMarker::Right,
            BoundaryMarker::Top,
            BoundaryMarker::Bottom,
        ] {
            apply_dirichlet(&mut a, &mut rhs, &s, m, &|x, _| x).unwrap();
        }
        let fact = crate::solver::sparse_lu(&a).unwrap();
        let x = crate::solver::lu_solve(&fact, &rhs);
        for (dof, p) in s.dof_coords.iter().enumerate() {
            assert!((x[dof] - p.x).abs() < 1e-10, "dof {dof}: {} vs {}", x[dof], p.x);
        }
    }

    #[test]
    fn elimination_keeps_symmetry() {
        let (s, mut a, mut rhs) = p1_poisson(3);
        apply_dirichlet(&mut a, &mut rhs, &s, BoundaryMarker::Left, &|x, y| x + y).unwrap();
        let d = a.to_dense();
        let n = a.nrows;
        for r in 0..n {
            for c in 0..n {
                assert!((d[r * n + c] - d[c * n + r]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn absent_marker_rejected() {
        let (s, mut a, mut rhs) = p1_poisson(2);
        let r = apply_dirichlet(&mut a, &mut rhs, &s, BoundaryMarker::Hot, &|_, _| 0.0);
        assert!(r.is_err());
    }
}

//! Block upper-triangular augmented-Lagrangian preconditioner: an exact
//! factorization of the augmented top block paired with the scaled pressure
//! mass inverse as the Schur complement approximation.

use crate::fem::space::CellGeometry;
use crate::fem::{quadrature_rule, CsrMatrix};
use crate::formulation::{BlockSystem, Discretization};
use crate::Real;

use super::gmres::LinearOperator;
use super::{lu_solve, sparse_lu, LuFactorization, SolverError};

/// Cellwise inverse pressure mass application for discontinuous pressure.
pub struct PressureMassInverse<T> {
    /// per cell: dense inverse, nbp x nbp
    inv_blocks: Vec<T>,
    cell_dofs: Vec<usize>,
    nbp: usize,
    np: usize,
}

impl<T: Real> PressureMassInverse<T> {
    pub fn new(disc: &Discretization<T>) -> Result<Self, SolverError> {
        let pf = disc.layout.pressure_field();
        let space = &pf.space;
        let deg = space.elem.degree;
        let rule = quadrature_rule::<T>((2 * deg).max(2)).map_err(|e| {
            SolverError::InvalidArgument(format!("pressure mass quadrature: {e}"))
        })?;
        let tab = space.basis.tabulate(&rule.points);
        let nbp = tab.nb;
        let ncells = disc.mesh.cells.len();
        let mut inv_blocks = vec![T::zero(); ncells * nbp * nbp];
        let mut cell_dofs = vec![0usize; ncells * nbp];
        let mut mp = vec![T::zero(); nbp * nbp];
        for cell in 0..ncells {
            let geo = CellGeometry::new(&disc.mesh, cell);
            mp.iter_mut().for_each(|v| *v = T::zero());
            for q in 0..rule.points.len() {
                let w = rule.weights[q] * geo.det_j.abs();
                for i in 0..nbp {
                    for j in 0..nbp {
                        mp[i * nbp + j] += w * tab.vals[q * nbp + i] * tab.vals[q * nbp + j];
                    }
                }
            }
            let inv = crate::fem::smallmat::invert(&mp, nbp)
                .ok_or(SolverError::SingularMatrix(cell))?;
            inv_blocks[cell * nbp * nbp..(cell + 1) * nbp * nbp].copy_from_slice(&inv);
            for (i, &d) in space.cell_scalar_dofs(cell).iter().enumerate() {
                cell_dofs[cell * nbp + i] = d;
            }
        }
        Ok(Self {
            inv_blocks,
            cell_dofs,
            nbp,
            np: space.ndof(),
        })
    }

    /// y = M_p^{-1} x over the pressure block.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.np);
        let nbp = self.nbp;
        let ncells = self.cell_dofs.len() / nbp;
        for cell in 0..ncells {
            let dofs = &self.cell_dofs[cell * nbp..(cell + 1) * nbp];
            let blk = &self.inv_blocks[cell * nbp * nbp..(cell + 1) * nbp * nbp];
            for i in 0..nbp {
                let mut s = T::zero();
                for j in 0..nbp {
                    s += blk[i * nbp + j] * x[dofs[j]];
                }
                y[dofs[i]] = s;
            }
        }
    }
}

/// The assembled preconditioner: application is the linear operator
///   p_hat = -(nu_ref + gamma) M_p^{-1} r_p
///   z_hat = A_hat^{-1} (r_z - B^T p_hat)
pub struct AlPreconditioner<T> {
    top: LuFactorization<T>,
    /// (z-rows) x (p-cols) coupling block of the constrained system
    bt: CsrMatrix<T>,
    mp_inv: PressureMassInverse<T>,
    scale: T,
    p_offset: usize,
    ndof: usize,
}

/// Factor the augmented top block of a constrained system and cache the
/// pieces of the block application. `nu_ref` is the momentum diffusion
/// scale of the nondimensional form.
pub fn build_al_preconditioner<T: Real>(
    disc: &Discretization<T>,
    system: &BlockSystem<T>,
    gamma: T,
    nu_ref: T,
) -> Result<AlPreconditioner<T>, SolverError> {
    let p_offset = system.p_offset;
    let top_block = system.matrix.principal_submatrix(p_offset);
    let top = sparse_lu(&top_block)?;
    // extract B^T: rows < p_offset, cols >= p_offset
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); p_offset];
    for r in 0..p_offset {
        for k in system.matrix.row_offsets[r]..system.matrix.row_offsets[r + 1] {
            let c = system.matrix.col_indices[k];
            if c >= p_offset {
                rows[r].push(c - p_offset);
            }
        }
    }
    let np = system.ndof - p_offset;
    let mut bt = CsrMatrix::from_pattern(p_offset, np, rows);
    for r in 0..p_offset {
        for k in system.matrix.row_offsets[r]..system.matrix.row_offsets[r + 1] {
            let c = system.matrix.col_indices[k];
            if c >= p_offset {
                bt.set(r, c - p_offset, system.matrix.values[k]);
            }
        }
    }
    Ok(AlPreconditioner {
        top,
        bt,
        mp_inv: PressureMassInverse::new(disc)?,
        scale: nu_ref + gamma,
        p_offset,
        ndof: system.ndof,
    })
}

impl<T: Real> LinearOperator<T> for AlPreconditioner<T> {
    fn apply(&self, r: &[T], out: &mut [T]) {
        let nz = self.p_offset;
        let np = self.ndof - nz;
        // pressure update
        let mut p_hat = vec![T::zero(); np];
        self.mp_inv.apply(&r[nz..], &mut p_hat);
        for v in p_hat.iter_mut() {
            *v = -self.scale * *v;
        }
        // top-block solve of r_z - B^T p_hat
        let mut rz = vec![T::zero(); nz];
        self.bt.matvec(&p_hat, &mut rz);
        for i in 0..nz {
            rz[i] = r[i] - rz[i];
        }
        let z_hat = lu_solve(&self.top, &rz);
        out[..nz].copy_from_slice(&z_hat);
        out[nz..].copy_from_slice(&p_hat);
    }

    fn dim(&self) -> usize {
        self.ndof
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        // linearity sanity via the public interface on a tiny Stokes system
        let disc = crate::solver::newton::tests::stokes_cavity(2);
        let state = disc.lifted_zero_state();
        let (mut sys, mut rhs) = disc.assemble_raw(&state);
        crate::formulation::augment(&disc, &mut sys, 1e4, &mut rhs).unwrap();
        disc.constrain(&mut sys, &mut rhs, &state);
        let pre = build_al_preconditioner(&disc, &sys, 1e4, 1.0).unwrap();
        let r = vec![0.0; disc.ndof()];
        let mut z = vec![1.0; disc.ndof()];
        pre.apply(&r, &mut z);
        assert!(z.iter().all(|v| *v == 0.0));
    }
}

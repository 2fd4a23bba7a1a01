//! Augmented-Lagrangian algebra: grafting gamma B^T M_p^{-1} B onto the
//! velocity block, with the pressure mass matrix inverted cell by cell, and
//! the pointwise divergence diagnostic.

use crate::fem::space::CellGeometry;
use crate::fem::{quadrature_rule, Family};
use crate::Real;

use super::{BlockSystem, Discretization, FormulationError};

impl<T: Real> Discretization<T> {
    /// Unconstrained Jacobian and the residual (Dirichlet residual rows hold
    /// state - data). Use with [`augment`] and [`Discretization::constrain`].
    pub fn assemble_raw(&self, state: &[T]) -> (BlockSystem<T>, Vec<T>) {
        let (residual, jac) = self.assemble_internal_pub(state);
        (
            BlockSystem {
                matrix: jac,
                p_offset: self.pressure_offset(),
                ndof: self.ndof(),
            },
            residual,
        )
    }

    /// Symmetric Dirichlet elimination of the Newton system J delta = rhs,
    /// enforcing delta = (boundary value - state value) on constrained dofs.
    pub fn constrain(&self, system: &mut BlockSystem<T>, rhs: &mut [T], state: &[T]) {
        let bc: Vec<(usize, T)> = self
            .dirichlet
            .iter()
            .map(|&(d, v)| (d, v - state[d]))
            .collect();
        system.matrix.eliminate_dirichlet(rhs, &bc);
    }
}

/// Add gamma B^T M_p^{-1} B to the velocity block and gamma B^T M_p^{-1} g
/// to the velocity right-hand side. The solution of the system is unchanged.
/// Requires a discontinuous pressure space (cellwise-invertible M_p) unless
/// gamma = 0.
pub fn augment<T: Real>(
    disc: &Discretization<T>,
    system: &mut BlockSystem<T>,
    gamma: T,
    rhs: &mut [T],
) -> Result<(), FormulationError> {
    if gamma == T::zero() {
        return Ok(());
    }
    let pf = disc.layout.pressure_field();
    if pf.space.elem.family != Family::Discontinuous {
        return Err(FormulationError::Unsupported(
            "augmentation needs a discontinuous pressure space".into(),
        ));
    }
    let uf = &disc.layout.fields[disc.u_idx];
    let k = disc.config.velocity_degree();
    let rule = quadrature_rule::<T>((2 * k).max(2))?;
    let ptab = pf.space.basis.tabulate(&rule.points);
    let utab = uf.space.basis.tabulate(&rule.points);
    let (nbp, nbu) = (ptab.nb, utab.nb);
    let nu = 2 * nbu;

    let mut mp = vec![T::zero(); nbp * nbp];
    let mut b = vec![T::zero(); nbp * nu];
    let mut mpinv_b = vec![T::zero(); nbp * nu];
    let mut mpinv_g = vec![T::zero(); nbp];

    for cell in 0..disc.mesh.cells.len() {
        let geo = CellGeometry::new(&disc.mesh, cell);
        mp.iter_mut().for_each(|v| *v = T::zero());
        b.iter_mut().for_each(|v| *v = T::zero());
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * geo.det_j.abs();
            for i in 0..nbp {
                let psi_i = ptab.vals[q * nbp + i];
                for j in 0..nbp {
                    mp[i * nbp + j] += w * psi_i * ptab.vals[q * nbp + j];
                }
                for j in 0..nbu {
                    let g = geo.phys_grad(&utab.grads[q * nbu + j]);
                    // divergence row: -int psi div(phi e_c)
                    b[i * nu + 2 * j] -= w * psi_i * g[0];
                    b[i * nu + 2 * j + 1] -= w * psi_i * g[1];
                }
            }
        }
        let mp_inv = crate::fem::smallmat::invert(&mp, nbp).ok_or_else(|| {
            FormulationError::InvalidArgument("cell pressure mass matrix is singular".into())
        })?;
        // Mp^{-1} B and Mp^{-1} g
        let pdofs = pf.space.cell_scalar_dofs(cell);
        for i in 0..nbp {
            for j in 0..nu {
                let mut s = T::zero();
                for l in 0..nbp {
                    s += mp_inv[i * nbp + l] * b[l * nu + j];
                }
                mpinv_b[i * nu + j] = s;
            }
            let mut s = T::zero();
            for l in 0..nbp {
                s += mp_inv[i * nbp + l] * rhs[pf.offset + pdofs[l]];
            }
            mpinv_g[i] = s;
        }
        // scatter gamma B^T Mp^{-1} B and gamma B^T Mp^{-1} g
        let udofs = uf.space.cell_full_dofs(cell);
        for r in 0..nu {
            let gr = uf.offset + udofs[r];
            let mut grhs = T::zero();
            for i in 0..nbp {
                grhs += b[i * nu + r] * mpinv_g[i];
            }
            rhs[gr] += gamma * grhs;
            for c in 0..nu {
                let mut v = T::zero();
                for i in 0..nbp {
                    v += b[i * nu + r] * mpinv_b[i * nu + c];
                }
                if v != T::zero() {
                    system.matrix.add(gr, uf.offset + udofs[c], gamma * v);
                }
            }
        }
    }
    Ok(())
}

/// L2 norm of the cellwise divergence of the velocity field.
pub fn divergence_check<T: Real>(disc: &Discretization<T>, state: &[T]) -> T {
    let uf = &disc.layout.fields[disc.u_idx];
    let k = disc.config.velocity_degree();
    let rule = quadrature_rule::<T>((2 * (k.max(1))).min(20)).unwrap();
    let utab = uf.space.basis.tabulate(&rule.points);
    let nbu = utab.nb;
    let mut acc = T::zero();
    for cell in 0..disc.mesh.cells.len() {
        let geo = CellGeometry::new(&disc.mesh, cell);
        let dofs = uf.space.cell_scalar_dofs(cell);
        for q in 0..rule.points.len() {
            let w = rule.weights[q] * geo.det_j.abs();
            let mut div = T::zero();
            for (i, &sd) in dofs.iter().enumerate() {
                let g = geo.phys_grad(&utab.grads[q * nbu + i]);
                div += state[uf.offset + sd * 2] * g[0] + state[uf.offset + sd * 2 + 1] * g[1];
            }
            acc += w * div * div;
        }
    }
    acc.sqrt()
}

//! Error norms of discrete fields against coordinate functions.

use crate::Real;

use super::assemble::eval_field;
use super::quadrature::quadrature_rule;
use super::space::{physical_tabulation, CellGeometry, FunctionSpace};
use super::FemError;

#[derive(Debug, Clone, Copy)]
pub enum Norm<T> {
    /// L^s norm, s >= 1.
    Lp(T),
    /// |.|_{H^1} seminorm; requires the exact gradient.
    H1Semi,
}

/// Componentwise magnitude with the tensor Voigt weight: for shapes stored
/// as (a11, a22, a12) the off-diagonal enters twice, matching the Frobenius
/// norm; traceless (a11, a12) storage expands a22 = -a11.
fn sq_magnitude<T: Real>(diff: &[T], shape: super::element::Shape) -> T {
    use super::element::Shape;
    match shape {
        Shape::Scalar => diff[0] * diff[0],
        Shape::Vector2 => diff[0] * diff[0] + diff[1] * diff[1],
        Shape::SymTensor { traceless: false } => {
            diff[0] * diff[0] + diff[1] * diff[1] + T::of(2.0) * diff[2] * diff[2]
        }
        Shape::SymTensor { traceless: true } => {
            T::of(2.0) * (diff[0] * diff[0] + diff[1] * diff[1])
        }
    }
}

/// Quadrature evaluation of `||u_h - exact||` with a rule of exactness
/// `2*degree + 4`.
pub fn error_norm<T: Real>(
    space: &FunctionSpace<T>,
    coeffs: &[T],
    exact: &dyn Fn(T, T) -> [T; 3],
    exact_grad: Option<&dyn Fn(T, T) -> [[T; 2]; 3]>,
    norm: Norm<T>,
) -> Result<T, FemError> {
    if let Norm::Lp(s) = norm {
        if s < T::one() {
            return Err(FemError::InvalidArgument("L^s norm needs s >= 1".into()));
        }
    }
    let ncomp = space.elem.ncomp();
    let exactness = (2 * space.elem.degree + 4).clamp(2, 20);
    let rule = quadrature_rule::<T>(exactness)?;
    let tab = space.basis.tabulate(&rule.points);
    let mesh = space.mesh.clone();
    let mut acc = T::zero();
    let mut value = vec![T::zero(); ncomp];
    let mut grad = vec![[T::zero(); 2]; ncomp];
    for c in 0..mesh.cells.len() {
        let geo = CellGeometry::new(&mesh, c);
        let phys = physical_tabulation(&tab, &geo);
        let dofs = space.cell_scalar_dofs(c);
        for (q, rp) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * geo.det_j.abs();
            let p = geo.map(rp);
            eval_field(&phys, dofs, ncomp, coeffs, q, &mut value, &mut grad);
            match norm {
                Norm::Lp(s) => {
                    let ex = exact(p.x, p.y);
                    let mut diff = [T::zero(); 3];
                    for c2 in 0..ncomp {
                        diff[c2] = value[c2] - ex[c2];
                    }
                    let m2 = sq_magnitude(&diff[..ncomp], space.elem.shape);
                    acc += w * m2.sqrt().powf(s);
                }
                Norm::H1Semi => {
                    let eg = exact_grad.ok_or_else(|| {
                        FemError::InvalidArgument(
                            "H1 seminorm requires the exact gradient".into(),
                        )
                    })?(p.x, p.y);
                    let mut m2 = T::zero();
                    for c2 in 0..ncomp {
                        let dx = grad[c2][0] - eg[c2][0];
                        let dy = grad[c2][1] - eg[c2][1];
                        m2 += dx * dx + dy * dy;
                    }
                    acc += w * m2;
                }
            }
        }
    }
    Ok(match norm {
        Norm::Lp(s) => acc.powf(T::one() / s),
        Norm::H1Semi => acc.sqrt(),
    })
}

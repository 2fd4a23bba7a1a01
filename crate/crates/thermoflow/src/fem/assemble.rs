//! Generic cell and interior-facet assembly over one test/trial space pair.
//!
//! Local contributions are scattered through the dof maps; the affine cell
//! mapping provides exact Jacobians. Facet kernels see both adjacent cells'
//! tabulations and the facet diameter, which serves the jump-penalty terms.

use crate::mesh::Point2;
use crate::Real;

use super::element::Tabulation;
use super::quadrature::{gauss_rule_1d, quadrature_rule};
use super::space::{physical_tabulation, CellGeometry, FunctionSpace};
use super::{CsrMatrix, FemError, PatternBuilder};

/// Everything a cell kernel sees: quadrature on the physical cell and
/// tabulated test/trial bases with physical gradients.
pub struct CellCtx<'a, T> {
    pub cell: usize,
    pub qpoints: Vec<Point2<T>>,
    /// weights already scaled by |det J|
    pub qweights: Vec<T>,
    pub test: &'a Tabulation<T>,
    pub trial: &'a Tabulation<T>,
    pub geo: CellGeometry<T>,
}

/// Both sides of one interior facet, tabulated at the facet quadrature.
pub struct FacetCtx<'a, T> {
    pub facet: usize,
    pub cells: [usize; 2],
    pub qpoints: Vec<Point2<T>>,
    /// weights scaled by the facet length
    pub qweights: Vec<T>,
    /// test basis per side
    pub test: [&'a Tabulation<T>; 2],
    pub trial: [&'a Tabulation<T>; 2],
    /// facet diameter
    pub h: T,
}

fn check_same_mesh<T: Real>(a: &FunctionSpace<T>, b: &FunctionSpace<T>) -> Result<(), FemError> {
    if !std::sync::Arc::ptr_eq(&a.mesh, &b.mesh) {
        return Err(FemError::InvalidArgument(
            "test and trial spaces live on different meshes".into(),
        ));
    }
    Ok(())
}

/// Assemble a bilinear form into a CSR matrix. The kernel fills the local
/// dense block (test-major) for each cell; facet kernels, when given, fill
/// the 2x2 block structure over (side_test, side_trial).
pub fn assemble_matrix<T: Real>(
    test: &FunctionSpace<T>,
    trial: &FunctionSpace<T>,
    exactness: usize,
    mut kernel: impl FnMut(&CellCtx<T>, &mut [T]),
    mut facet_kernel: Option<&mut dyn FnMut(&FacetCtx<T>, &mut [T])>,
) -> Result<CsrMatrix<T>, FemError> {
    check_same_mesh(test, trial)?;
    let mesh = test.mesh.clone();
    let (nt, ntr) = (
        test.nbasis_scalar() * test.elem.ncomp(),
        trial.nbasis_scalar() * trial.elem.ncomp(),
    );
    let mut pattern = PatternBuilder::new(test.ndof(), trial.ndof());
    for c in 0..mesh.cells.len() {
        pattern.couple(&test.cell_full_dofs(c), &trial.cell_full_dofs(c));
    }
    if facet_kernel.is_some() {
        for f in &mesh.interior_facets {
            for &cr in &f.cells {
                for &cc in &f.cells {
                    pattern.couple(&test.cell_full_dofs(cr), &trial.cell_full_dofs(cc));
                }
            }
        }
    }
    let mut mat = pattern.build();

    let rule = quadrature_rule::<T>(exactness)?;
    let test_tab = test.basis.tabulate(&rule.points);
    let trial_tab = trial.basis.tabulate(&rule.points);
    let mut local = vec![T::zero(); nt * ntr];
    for c in 0..mesh.cells.len() {
        let geo = CellGeometry::new(&mesh, c);
        let ctx = CellCtx {
            cell: c,
            qpoints: rule.points.iter().map(|p| geo.map(p)).collect(),
            qweights: rule.weights.iter().map(|&w| w * geo.det_j.abs()).collect(),
            test: &physical_tabulation(&test_tab, &geo),
            trial: &physical_tabulation(&trial_tab, &geo),
            geo,
        };
        local.iter_mut().for_each(|v| *v = T::zero());
        kernel(&ctx, &mut local);
        let rd = test.cell_full_dofs(c);
        let cd = trial.cell_full_dofs(c);
        for (i, &r) in rd.iter().enumerate() {
            for (j, &cc) in cd.iter().enumerate() {
                let v = local[i * ntr + j];
                if v != T::zero() {
                    mat.add(r, cc, v);
                }
            }
        }
    }

    if let Some(fk) = facet_kernel.as_mut() {
        let fr = FacetRules::new(test.elem.degree.max(trial.elem.degree));
        let mut local2 = vec![T::zero(); 4 * nt * ntr];
        for (fi, f) in mesh.interior_facets.iter().enumerate() {
            let fctx = fr.context(&mesh, test, trial, fi, f);
            local2.iter_mut().for_each(|v| *v = T::zero());
            fk(&fctx.ctx(), &mut local2);
            let dofs_r: [Vec<usize>; 2] = [
                test.cell_full_dofs(f.cells[0]),
                test.cell_full_dofs(f.cells[1]),
            ];
            let dofs_c: [Vec<usize>; 2] = [
                trial.cell_full_dofs(f.cells[0]),
                trial.cell_full_dofs(f.cells[1]),
            ];
            for sr in 0..2 {
                for sc in 0..2 {
                    let blk = &local2[(sr * 2 + sc) * nt * ntr..][..nt * ntr];
                    for (i, &r) in dofs_r[sr].iter().enumerate() {
                        for (j, &cc) in dofs_c[sc].iter().enumerate() {
                            let v = blk[i * ntr + j];
                            if v != T::zero() {
                                mat.add(r, cc, v);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(mat)
}

/// Assemble a linear functional into a vector.
pub fn assemble_vector<T: Real>(
    space: &FunctionSpace<T>,
    exactness: usize,
    mut kernel: impl FnMut(&CellCtx<T>, &mut [T]),
) -> Result<Vec<T>, FemError> {
    let mesh = space.mesh.clone();
    let nt = space.nbasis_scalar() * space.elem.ncomp();
    let rule = quadrature_rule::<T>(exactness)?;
    let tab = space.basis.tabulate(&rule.points);
    let mut out = vec![T::zero(); space.ndof()];
    let mut local = vec![T::zero(); nt];
    for c in 0..mesh.cells.len() {
        let geo = CellGeometry::new(&mesh, c);
        let phys = physical_tabulation(&tab, &geo);
        let ctx = CellCtx {
            cell: c,
            qpoints: rule.points.iter().map(|p| geo.map(p)).collect(),
            qweights: rule.weights.iter().map(|&w| w * geo.det_j.abs()).collect(),
            test: &phys,
            trial: &phys,
            geo,
        };
        local.iter_mut().for_each(|v| *v = T::zero());
        kernel(&ctx, &mut local);
        for (i, &r) in space.cell_full_dofs(c).iter().enumerate() {
            out[r] += local[i];
        }
    }
    Ok(out)
}

/// Facet quadrature and per-side tabulation machinery, shared with the
/// formulation module's stabilization terms.
pub struct FacetRules<T> {
    pub t_nodes: Vec<T>,
    pub t_weights: Vec<T>,
    pub degree_hint: usize,
}

pub struct FacetTabs<T> {
    pub qpoints: Vec<Point2<T>>,
    pub qweights: Vec<T>,
    pub h: T,
    pub test: [Tabulation<T>; 2],
    pub trial: [Tabulation<T>; 2],
    pub cells: [usize; 2],
    pub facet: usize,
}

impl<T: Real> FacetTabs<T> {
    pub fn ctx(&self) -> FacetCtx<'_, T> {
        FacetCtx {
            facet: self.facet,
            cells: self.cells,
            qpoints: self.qpoints.clone(),
            qweights: self.qweights.clone(),
            test: [&self.test[0], &self.test[1]],
            trial: [&self.trial[0], &self.trial[1]],
            h: self.h,
        }
    }
}

impl<T: Real> FacetRules<T> {
    pub fn new(degree: usize) -> Self {
        let n = degree + 1;
        let (t_nodes, t_weights) = gauss_rule_1d::<T>(n.max(2));
        Self {
            t_nodes,
            t_weights,
            degree_hint: degree,
        }
    }

    pub fn context<'s>(
        &self,
        mesh: &crate::mesh::Mesh<T>,
        test: &'s FunctionSpace<T>,
        trial: &'s FunctionSpace<T>,
        facet: usize,
        f: &crate::mesh::InteriorFacet,
    ) -> FacetTabs<T> {
        let a = mesh.vertices[f.verts[0]];
        let b = mesh.vertices[f.verts[1]];
        let h = a.dist(&b);
        let qpoints: Vec<Point2<T>> = self
            .t_nodes
            .iter()
            .map(|&t| Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t))
            .collect();
        let qweights: Vec<T> = self.t_weights.iter().map(|&w| w * h).collect();
        let tab_for = |space: &FunctionSpace<T>, cell: usize| {
            let geo = CellGeometry::new(mesh, cell);
            let ref_pts: Vec<Point2<T>> = qpoints.iter().map(|p| geo.unmap(p)).collect();
            physical_tabulation(&space.basis.tabulate(&ref_pts), &geo)
        };
        let test_tabs = [tab_for(test, f.cells[0]), tab_for(test, f.cells[1])];
        let trial_tabs = [tab_for(trial, f.cells[0]), tab_for(trial, f.cells[1])];
        FacetTabs {
            qpoints,
            qweights,
            h,
            test: test_tabs,
            trial: trial_tabs,
            cells: f.cells,
            facet,
        }
    }
}

/// Evaluate a discrete field (value and gradient per component) at the
/// quadrature points of a tabulation. `coeffs` is the field-local slice.
pub fn eval_field<T: Real>(
    tab: &Tabulation<T>,
    scalar_dofs: &[usize],
    ncomp: usize,
    coeffs: &[T],
    q: usize,
    value: &mut [T],
    grad: &mut [[T; 2]],
) {
    for c in 0..ncomp {
        value[c] = T::zero();
        grad[c] = [T::zero(); 2];
    }
    let nb = tab.nb;
    for (i, &s) in scalar_dofs.iter().enumerate() {
        let phi = tab.vals[q * nb + i];
        let g = tab.grads[q * nb + i];
        for c in 0..ncomp {
            let u = coeffs[s * ncomp + c];
            value[c] += u * phi;
            grad[c][0] += u * g[0];
            grad[c][1] += u * g[1];
        }
    }
}

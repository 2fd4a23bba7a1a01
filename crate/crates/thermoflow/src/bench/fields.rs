//! Point evaluation, per-cell diagnostics and boundary fluxes used by the
//! benchmark drivers (f64 lane).

use crate::fem::space::CellGeometry;
use crate::formulation::Discretization;
use crate::mesh::BoundaryMarker;
use crate::rheology::{effective_viscosity, frob, Sym2};

/// Find the cell containing a physical point (linear scan, driver scale).
pub fn locate_cell(disc: &Discretization<f64>, x: f64, y: f64) -> Option<usize> {
    let tol = 1e-10;
    for cell in 0..disc.mesh.cells.len() {
        let geo = CellGeometry::new(&disc.mesh, cell);
        let r = geo.unmap(&crate::mesh::Point2::new(x, y));
        if r.x >= -tol && r.y >= -tol && r.x + r.y <= 1.0 + tol {
            return Some(cell);
        }
    }
    None
}

/// Velocity gradient at a physical point, du[c][a] = d_a u_c.
pub fn velocity_gradient_at(
    disc: &Discretization<f64>,
    state: &[f64],
    x: f64,
    y: f64,
) -> Option<[[f64; 2]; 2]> {
    let cell = locate_cell(disc, x, y)?;
    let uf = &disc.layout.fields[disc.u_idx];
    let geo = CellGeometry::new(&disc.mesh, cell);
    let r = geo.unmap(&crate::mesh::Point2::new(x, y));
    let tab = uf.space.basis.tabulate(&[r]);
    let nb = tab.nb;
    let mut gu = [[0.0; 2]; 2];
    for (i, &sd) in uf.space.cell_scalar_dofs(cell).iter().enumerate() {
        let g = geo.phys_grad(&tab.grads[i % nb]);
        for c in 0..2 {
            let cv = state[uf.offset + sd * 2 + c];
            gu[c][0] += cv * g[0];
            gu[c][1] += cv * g[1];
        }
    }
    Some(gu)
}

/// |D(u)| at a physical point.
pub fn strain_magnitude_at(
    disc: &Discretization<f64>,
    state: &[f64],
    x: f64,
    y: f64,
) -> Option<f64> {
    let gu = velocity_gradient_at(disc, state, x, y)?;
    let d: Sym2<f64> = [gu[0][0], gu[1][1], 0.5 * (gu[0][1] + gu[1][0])];
    Some(frob(&d))
}

/// Per-cell centroid values of (D(u), theta, S-field) for diagnostics.
pub fn cell_centroid_data(
    disc: &Discretization<f64>,
    state: &[f64],
    cell: usize,
) -> (Sym2<f64>, f64, Sym2<f64>) {
    let geo = CellGeometry::new(&disc.mesh, cell);
    let centroid = crate::mesh::Point2::new(1.0 / 3.0, 1.0 / 3.0);
    let uf = &disc.layout.fields[disc.u_idx];
    let utab = uf.space.basis.tabulate(&[centroid]);
    let mut gu = [[0.0; 2]; 2];
    for (i, &sd) in uf.space.cell_scalar_dofs(cell).iter().enumerate() {
        let g = geo.phys_grad(&utab.grads[i]);
        for c in 0..2 {
            let cv = state[uf.offset + sd * 2 + c];
            gu[c][0] += cv * g[0];
            gu[c][1] += cv * g[1];
        }
    }
    let d: Sym2<f64> = [gu[0][0], gu[1][1], 0.5 * (gu[0][1] + gu[1][0])];
    let tf = &disc.layout.fields[disc.theta_idx];
    let ttab = tf.space.basis.tabulate(&[centroid]);
    let mut th = 0.0;
    for (i, &sd) in tf.space.cell_scalar_dofs(cell).iter().enumerate() {
        th += state[tf.offset + sd] * ttab.vals[i];
    }
    let mut s: Sym2<f64> = [0.0; 3];
    if let Some(si) = disc.stress_idx {
        let sf = &disc.layout.fields[si];
        let stab = sf.space.basis.tabulate(&[centroid]);
        let ncs = sf.space.elem.ncomp();
        let traceless = ncs == 2;
        for (i, &sd) in sf.space.cell_scalar_dofs(cell).iter().enumerate() {
            let phi = stab.vals[i];
            if traceless {
                let c0 = state[sf.offset + sd * 2];
                let c1 = state[sf.offset + sd * 2 + 1];
                s[0] += c0 * phi;
                s[1] -= c0 * phi;
                s[2] += c1 * phi;
            } else {
                for m in 0..3 {
                    s[m] += state[sf.offset + sd * 3 + m] * phi;
                }
            }
        }
    }
    (d, th, s)
}

/// Effective-viscosity summary over cells: (min, max).
pub fn effective_viscosity_range(disc: &Discretization<f64>, state: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for cell in 0..disc.mesh.cells.len() {
        let (d, th, s) = cell_centroid_data(disc, state, cell);
        let me = effective_viscosity(&disc.model, &s, &d, th);
        lo = lo.min(me);
        hi = hi.max(me);
    }
    (lo, hi)
}

/// Axial flux int u_x ds over the facets of a marker.
pub fn axial_flux(disc: &Discretization<f64>, state: &[f64], marker: BoundaryMarker) -> f64 {
    let uf = &disc.layout.fields[disc.u_idx];
    let (tn, tw) = crate::fem::quadrature::gauss_rule_1d::<f64>(uf.space.elem.degree + 1);
    let mut flux = 0.0;
    for f in &disc.mesh.boundary_facets {
        if f.marker != marker {
            continue;
        }
        let a = disc.mesh.vertices[f.verts[0]];
        let b = disc.mesh.vertices[f.verts[1]];
        let len = a.dist(&b);
        let geo = CellGeometry::new(&disc.mesh, f.cell);
        for (&t, &w) in tn.iter().zip(&tw) {
            let p = crate::mesh::Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
            let r = geo.unmap(&p);
            let tab = uf.space.basis.tabulate(&[r]);
            let mut ux = 0.0;
            for (i, &sd) in uf.space.cell_scalar_dofs(f.cell).iter().enumerate() {
                ux += state[uf.offset + sd * 2] * tab.vals[i];
            }
            flux += w * len * ux;
        }
    }
    flux
}

/// Vertex values of a continuous field component.
pub fn vertex_component(disc: &Discretization<f64>, state: &[f64], field: usize, comp: usize) -> Vec<f64> {
    let f = &disc.layout.fields[field];
    let nc = f.space.elem.ncomp();
    (0..disc.mesh.vertices.len())
        .map(|v| state[f.offset + v * nc + comp])
        .collect()
}

/// Vertex-averaged per-cell scalar (cells sharing a vertex contribute
/// equally).
pub fn vertex_average_cell_scalar(disc: &Discretization<f64>, per_cell: &[f64]) -> Vec<f64> {
    let nv = disc.mesh.vertices.len();
    let mut acc = vec![0.0; nv];
    let mut cnt = vec![0usize; nv];
    for (c, cell) in disc.mesh.cells.iter().enumerate() {
        for &v in cell {
            acc[v] += per_cell[c];
            cnt[v] += 1;
        }
    }
    for (a, c) in acc.iter_mut().zip(cnt) {
        if c > 0 {
            *a /= c as f64;
        }
    }
    acc
}

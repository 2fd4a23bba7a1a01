//! Function spaces: dof maps, boundary dof sets and nodal interpolation.
//!
//! Scalar dofs are numbered vertices first, then edge nodes, then cell
//! interiors. Vector and tensor components interleave per scalar dof, and
//! fields are blocked contiguously by the [`FieldLayout`].

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::mesh::{BoundaryMarker, Mesh, Point2};
use crate::Real;

use super::element::{ElementSpec, Family, NodeLocation, ScalarBasis, Tabulation};
use super::FemError;

#[derive(Debug, Clone)]
pub struct FunctionSpace<T> {
    pub mesh: Arc<Mesh<T>>,
    pub elem: ElementSpec,
    /// Scalar dofs, before component interleaving.
    pub scalar_ndof: usize,
    /// Per-cell scalar dofs, stride `elem.nbasis_scalar()`.
    cell_dofs: Vec<usize>,
    pub dof_coords: Vec<Point2<T>>,
    pub boundary_dofs: BTreeMap<BoundaryMarker, Vec<usize>>,
    pub basis: ScalarBasis<T>,
}

impl<T: Real> FunctionSpace<T> {
    pub fn new(mesh: Arc<Mesh<T>>, elem: ElementSpec) -> Result<Self, FemError> {
        let nb = elem.nbasis_scalar();
        let k = elem.degree;
        let (ref_nodes, locs) = super::element::reference_nodes::<T>(k);
        let ncells = mesh.cells.len();
        let mut cell_dofs = vec![0usize; ncells * nb];
        let mut dof_coords;
        let scalar_ndof;

        match elem.family {
            Family::Discontinuous => {
                scalar_ndof = ncells * nb;
                dof_coords = vec![Point2::new(T::zero(), T::zero()); scalar_ndof];
                for c in 0..ncells {
                    let vs = mesh.cell_vertices(c);
                    for (i, rn) in ref_nodes.iter().enumerate() {
                        let dof = c * nb + i;
                        cell_dofs[c * nb + i] = dof;
                        dof_coords[dof] = map_affine(&vs, rn);
                    }
                }
            }
            Family::Continuous => {
                let nv = mesh.vertices.len();
                // deterministic edge numbering by sorted vertex pair
                let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
                let mut edge_keys: Vec<(usize, usize)> = mesh
                    .interior_facets
                    .iter()
                    .map(|f| (f.verts[0], f.verts[1]))
                    .chain(
                        mesh.boundary_facets
                            .iter()
                            .map(|f| (f.verts[0], f.verts[1])),
                    )
                    .collect();
                edge_keys.sort_unstable();
                for key in &edge_keys {
                    let id = edge_ids.len();
                    edge_ids.insert(*key, id);
                }
                let nedges = edge_ids.len();
                let per_edge = k - 1;
                let n_int = if k >= 3 { (k - 1) * (k - 2) / 2 } else { 0 };
                scalar_ndof = nv + nedges * per_edge + ncells * n_int;
                dof_coords = vec![Point2::new(T::zero(), T::zero()); scalar_ndof];
                for (v, p) in mesh.vertices.iter().enumerate() {
                    dof_coords[v] = *p;
                }
                for c in 0..ncells {
                    let cell = mesh.cells[c];
                    let vs = mesh.cell_vertices(c);
                    for (i, loc) in locs.iter().enumerate() {
                        let dof = match *loc {
                            NodeLocation::Vertex(lv) => cell[lv],
                            NodeLocation::Edge(le, slot) => {
                                let (la, lb) = (cell[le], cell[(le + 1) % 3]);
                                let key = if la < lb { (la, lb) } else { (lb, la) };
                                let eid = edge_ids[&key];
                                // global slots run from the smaller vertex index
                                let gslot = if la < lb { slot } else { per_edge - 1 - slot };
                                nv + eid * per_edge + gslot
                            }
                            NodeLocation::Interior(ii) => {
                                nv + nedges * per_edge + c * n_int + ii
                            }
                        };
                        cell_dofs[c * nb + i] = dof;
                        dof_coords[dof] = map_affine(&vs, &ref_nodes[i]);
                    }
                }
            }
        }

        // boundary scalar dofs per marker (continuous spaces only carry
        // strong conditions, but the sets are well-defined for both)
        let mut boundary_dofs: BTreeMap<BoundaryMarker, Vec<usize>> = BTreeMap::new();
        if elem.family == Family::Continuous {
            let nv = mesh.vertices.len();
            let per_edge = k - 1;
            let mut edge_keys: Vec<(usize, usize)> = mesh
                .interior_facets
                .iter()
                .map(|f| (f.verts[0], f.verts[1]))
                .chain(
                    mesh.boundary_facets
                        .iter()
                        .map(|f| (f.verts[0], f.verts[1])),
                )
                .collect();
            edge_keys.sort_unstable();
            let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
            for key in &edge_keys {
                let id = edge_ids.len();
                edge_ids.insert(*key, id);
            }
            for f in &mesh.boundary_facets {
                let entry = boundary_dofs.entry(f.marker).or_default();
                entry.push(f.verts[0]);
                entry.push(f.verts[1]);
                if per_edge > 0 {
                    let eid = edge_ids[&(f.verts[0], f.verts[1])];
                    for s in 0..per_edge {
                        entry.push(nv + eid * per_edge + s);
                    }
                }
            }
            for dofs in boundary_dofs.values_mut() {
                dofs.sort_unstable();
                dofs.dedup();
            }
        }

        Ok(Self {
            mesh,
            elem,
            scalar_ndof,
            cell_dofs,
            dof_coords,
            boundary_dofs,
            basis: ScalarBasis::new(k),
        })
    }

    pub fn ndof(&self) -> usize {
        self.scalar_ndof * self.elem.ncomp()
    }

    pub fn nbasis_scalar(&self) -> usize {
        self.elem.nbasis_scalar()
    }

    /// Scalar dofs of a cell, local-node order.
    pub fn cell_scalar_dofs(&self, cell: usize) -> &[usize] {
        let nb = self.elem.nbasis_scalar();
        &self.cell_dofs[cell * nb..(cell + 1) * nb]
    }

    /// Interleaved full dofs of a cell: scalar node major, component minor.
    pub fn cell_full_dofs(&self, cell: usize) -> Vec<usize> {
        let nc = self.elem.ncomp();
        let mut out = Vec::with_capacity(self.nbasis_scalar() * nc);
        for &s in self.cell_scalar_dofs(cell) {
            for c in 0..nc {
                out.push(s * nc + c);
            }
        }
        out
    }

    /// Nodal interpolation; `f(x, y)` returns up to 3 component values.
    pub fn interpolate(&self, f: &dyn Fn(T, T) -> [T; 3]) -> Vec<T> {
        let nc = self.elem.ncomp();
        let mut out = vec![T::zero(); self.ndof()];
        for (s, p) in self.dof_coords.iter().enumerate() {
            let vals = f(p.x, p.y);
            for c in 0..nc {
                out[s * nc + c] = vals[c];
            }
        }
        out
    }

    /// Dirichlet dof/value pairs on a marker for a single component.
    pub fn dirichlet_component(
        &self,
        marker: BoundaryMarker,
        comp: usize,
        g: &dyn Fn(T, T) -> T,
    ) -> Result<Vec<(usize, T)>, FemError> {
        let nc = self.elem.ncomp();
        let dofs = self.boundary_dofs.get(&marker).ok_or_else(|| {
            FemError::InvalidArgument(format!("marker {marker:?} absent on this mesh"))
        })?;
        Ok(dofs
            .iter()
            .map(|&s| {
                let p = self.dof_coords[s];
                (s * nc + comp, g(p.x, p.y))
            })
            .collect())
    }
}

pub(crate) fn map_affine<T: Real>(vs: &[Point2<T>; 3], r: &Point2<T>) -> Point2<T> {
    Point2::new(
        vs[0].x + (vs[1].x - vs[0].x) * r.x + (vs[2].x - vs[0].x) * r.y,
        vs[0].y + (vs[1].y - vs[0].y) * r.x + (vs[2].y - vs[0].y) * r.y,
    )
}

/// Affine geometry of one cell: Jacobian determinant and inverse transpose.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry<T> {
    pub verts: [Point2<T>; 3],
    pub det_j: T,
    /// inverse-transpose Jacobian, maps reference gradients to physical
    pub jinv_t: [[T; 2]; 2],
    pub h: T,
}

impl<T: Real> CellGeometry<T> {
    pub fn new(mesh: &Mesh<T>, cell: usize) -> Self {
        let verts = mesh.cell_vertices(cell);
        let j11 = verts[1].x - verts[0].x;
        let j12 = verts[2].x - verts[0].x;
        let j21 = verts[1].y - verts[0].y;
        let j22 = verts[2].y - verts[0].y;
        let det_j = j11 * j22 - j12 * j21;
        // J^{-1} = 1/det [[j22, -j12], [-j21, j11]]; transpose it
        let jinv_t = [
            [j22 / det_j, -j21 / det_j],
            [-j12 / det_j, j11 / det_j],
        ];
        let mut h = T::zero();
        for e in 0..3 {
            h = h.max(verts[e].dist(&verts[(e + 1) % 3]));
        }
        Self {
            verts,
            det_j,
            jinv_t,
            h,
        }
    }

    pub fn map(&self, r: &Point2<T>) -> Point2<T> {
        map_affine(&self.verts, r)
    }

    /// Reference coordinates of a physical point.
    pub fn unmap(&self, p: &Point2<T>) -> Point2<T> {
        let bx = p.x - self.verts[0].x;
        let by = p.y - self.verts[0].y;
        let j11 = self.verts[1].x - self.verts[0].x;
        let j12 = self.verts[2].x - self.verts[0].x;
        let j21 = self.verts[1].y - self.verts[0].y;
        let j22 = self.verts[2].y - self.verts[0].y;
        Point2::new(
            (j22 * bx - j12 * by) / self.det_j,
            (-j21 * bx + j11 * by) / self.det_j,
        )
    }

    pub fn phys_grad(&self, g: &[T; 2]) -> [T; 2] {
        [
            self.jinv_t[0][0] * g[0] + self.jinv_t[0][1] * g[1],
            self.jinv_t[1][0] * g[0] + self.jinv_t[1][1] * g[1],
        ]
    }
}

/// Tabulation with physical gradients for one cell.
pub fn physical_tabulation<T: Real>(tab: &Tabulation<T>, geo: &CellGeometry<T>) -> Tabulation<T> {
    let mut out = tab.clone();
    for g in &mut out.grads {
        *g = geo.phys_grad(g);
    }
    out
}

/// Ordered list of (name, space, offset) partitioning a monolithic vector.
#[derive(Debug, Clone)]
pub struct FieldLayout<T> {
    pub fields: Vec<LayoutField<T>>,
    pub pressure: usize,
    pub ndof: usize,
}

#[derive(Debug, Clone)]
pub struct LayoutField<T> {
    pub name: String,
    pub space: FunctionSpace<T>,
    pub offset: usize,
}

impl<T: Real> FieldLayout<T> {
    /// Fields in order; `pressure_name` must match exactly one of them.
    pub fn new(fields: Vec<(String, FunctionSpace<T>)>, pressure_name: &str) -> Result<Self, FemError> {
        let mut offset = 0;
        let mut out = Vec::with_capacity(fields.len());
        let mut pressure = None;
        for (i, (name, space)) in fields.into_iter().enumerate() {
            if name == pressure_name {
                if pressure.is_some() {
                    return Err(FemError::InvalidArgument(
                        "pressure field identified more than once".into(),
                    ));
                }
                pressure = Some(i);
            }
            let n = space.ndof();
            out.push(LayoutField {
                name,
                space,
                offset,
            });
            offset += n;
        }
        let pressure = pressure.ok_or_else(|| {
            FemError::InvalidArgument("pressure field not present in layout".into())
        })?;
        Ok(Self {
            fields: out,
            pressure,
            ndof: offset,
        })
    }

    pub fn field(&self, name: &str) -> &LayoutField<T> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .unwrap_or_else(|| panic!("no field named {name}"))
    }

    pub fn pressure_field(&self) -> &LayoutField<T> {
        &self.fields[self.pressure]
    }

    /// Slice of a monolithic vector belonging to one field.
    pub fn field_slice<'a>(&self, name: &str, v: &'a [T]) -> &'a [T] {
        let f = self.field(name);
        &v[f.offset..f.offset + f.space.ndof()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::element::Shape;
    use crate::mesh::generate_rect_mesh;

    fn space(n: usize, family: Family, k: usize, shape: Shape) -> FunctionSpace<f64> {
        let mesh = Arc::new(generate_rect_mesh(n, n, (1.0, 1.0), 0.0).unwrap());
        FunctionSpace::new(mesh, ElementSpec::new(family, k, shape).unwrap()).unwrap()
    }

    #[test]
    fn p1_dof_count_matches_vertices() {
        let s = space(3, Family::Continuous, 1, Shape::Scalar);
        assert_eq!(s.scalar_ndof, 16);
        assert_eq!(s.ndof(), 16);
    }

    #[test]
    fn p2_dof_count() {
        let s = space(2, Family::Continuous, 2, Shape::Scalar);
        // V=9, E = V + C - 1 = 9 + 8 - 1 = 16
        assert_eq!(s.scalar_ndof, 9 + 16);
    }

    #[test]
    fn p3_dof_count_and_shared_edges() {
        let s = space(2, Family::Continuous, 3, Shape::Scalar);
        assert_eq!(s.scalar_ndof, 9 + 2 * 16 + 8);
        // shared edge dofs agree across the two adjacent cells: every dof
        // coordinate must be claimed consistently
        let mut seen: Vec<Option<(f64, f64)>> = vec![None; s.scalar_ndof];
        let (nodes, _) = super::super::element::reference_nodes::<f64>(3);
        for c in 0..s.mesh.cells.len() {
            let geo = CellGeometry::new(&s.mesh, c);
            for (i, &d) in s.cell_scalar_dofs(c).iter().enumerate() {
                let p = geo.map(&nodes[i]);
                match seen[d] {
                    None => seen[d] = Some((p.x, p.y)),
                    Some((x, y)) => {
                        assert!(
                            (x - p.x).abs() < 1e-13 && (y - p.y).abs() < 1e-13,
                            "dof {d} claimed at ({x},{y}) and ({},{})",
                            p.x,
                            p.y
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dg_dofs_never_shared() {
        let s = space(2, Family::Discontinuous, 1, Shape::Scalar);
        assert_eq!(s.scalar_ndof, 8 * 3);
        let mut counts = vec![0usize; s.scalar_ndof];
        for c in 0..8 {
            for &d in s.cell_scalar_dofs(c) {
                counts[d] += 1;
            }
        }
        assert!(counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn cell_dofs_cover_range() {
        for (fam, k) in [
            (Family::Continuous, 1),
            (Family::Continuous, 2),
            (Family::Continuous, 3),
            (Family::Discontinuous, 0),
            (Family::Discontinuous, 1),
        ] {
            let s = space(2, fam, k, Shape::Scalar);
            let mut seen = vec![false; s.scalar_ndof];
            for c in 0..s.mesh.cells.len() {
                for &d in s.cell_scalar_dofs(c) {
                    seen[d] = true;
                }
            }
            assert!(seen.iter().all(|&x| x), "{fam:?} degree {k}");
        }
    }

    #[test]
    fn boundary_dofs_coordinates() {
        let s = space(2, Family::Continuous, 2, Shape::Scalar);
        let left = &s.boundary_dofs[&crate::mesh::BoundaryMarker::Left];
        assert_eq!(left.len(), 5); // 3 vertices + 2 edge midpoints
        for &d in left {
            assert!(s.dof_coords[d].x.abs() < 1e-14);
        }
    }

    #[test]
    fn vector_interpolation_reproduces_linears() {
        let s = space(2, Family::Continuous, 2, Shape::Vector2);
        let coeffs = s.interpolate(&|x, y| [y, x, 0.0]);
        assert_eq!(coeffs.len(), s.ndof());
        for (sdof, p) in s.dof_coords.iter().enumerate() {
            assert!((coeffs[sdof * 2] - p.y).abs() < 1e-14);
            assert!((coeffs[sdof * 2 + 1] - p.x).abs() < 1e-14);
        }
    }
}

//! Triangular meshes of rectangular domains with named boundary segments.
//!
//! Meshes are immutable after construction; refinement produces new meshes.
//! The structured generator uses an alternating-diagonal split (crossed per
//! cell pair) to avoid mesh-bias artifacts in cavity flows, and an optional
//! symmetric tanh stretch that clusters nodes at `x = 0` and `x = Lx`.

use std::collections::HashMap;

use crate::Real;

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mesh invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, o: &Self) -> T {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Named boundary segment labels used by the drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryMarker {
    Left,
    Right,
    Top,
    Bottom,
    Inlet,
    Outlet,
    Walls,
    Hot,
    Cold,
    Insulated,
}

#[derive(Debug, Clone)]
pub struct BoundaryFacet {
    /// Endpoint vertex indices.
    pub verts: [usize; 2],
    pub marker: BoundaryMarker,
    /// The single adjacent cell.
    pub cell: usize,
}

#[derive(Debug, Clone)]
pub struct InteriorFacet {
    pub verts: [usize; 2],
    /// The two adjacent cells.
    pub cells: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub vertices: Vec<Point2<T>>,
    /// Counter-clockwise vertex triples.
    pub cells: Vec<[usize; 3]>,
    pub boundary_facets: Vec<BoundaryFacet>,
    pub interior_facets: Vec<InteriorFacet>,
    /// Refinement counter, 0 for a freshly generated mesh.
    pub level: u32,
}

fn sorted_pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<T: Real> Mesh<T> {
    /// Build facet connectivity from vertices, cells and boundary markers and
    /// validate the mesh invariants.
    pub fn from_parts(
        vertices: Vec<Point2<T>>,
        cells: Vec<[usize; 3]>,
        markers: &HashMap<(usize, usize), BoundaryMarker>,
        level: u32,
    ) -> Result<Self, MeshError> {
        let mut edge_cells: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (c, cell) in cells.iter().enumerate() {
            for e in 0..3 {
                let key = sorted_pair(cell[e], cell[(e + 1) % 3]);
                edge_cells.entry(key).or_default().push(c);
            }
        }
        let mut boundary_facets = Vec::new();
        let mut interior_facets = Vec::new();
        let mut keys: Vec<_> = edge_cells.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let adj = &edge_cells[&key];
            match adj.len() {
                1 => {
                    let marker = *markers.get(&key).ok_or_else(|| {
                        MeshError::Invariant(format!("boundary facet {key:?} has no marker"))
                    })?;
                    boundary_facets.push(BoundaryFacet {
                        verts: [key.0, key.1],
                        marker,
                        cell: adj[0],
                    });
                }
                2 => interior_facets.push(InteriorFacet {
                    verts: [key.0, key.1],
                    cells: [adj[0], adj[1]],
                }),
                n => {
                    return Err(MeshError::Invariant(format!(
                        "facet {key:?} borders {n} cells"
                    )))
                }
            }
        }
        let mesh = Self {
            vertices,
            cells,
            boundary_facets,
            interior_facets,
            level,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        for (c, cell) in self.cells.iter().enumerate() {
            let a = self.signed_area(cell);
            if a <= T::zero() {
                return Err(MeshError::Invariant(format!(
                    "cell {c} has non-positive signed area {a}"
                )));
            }
        }
        if 2 * self.interior_facets.len() + self.boundary_facets.len() != 3 * self.cells.len() {
            return Err(MeshError::Invariant(
                "facet bookkeeping 2*interior + boundary != 3*cells".into(),
            ));
        }
        // duplicate vertex scan via lexicographic sort
        let tol = T::of(1e-14);
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (&self.vertices[i], &self.vertices[j]);
            a.x.partial_cmp(&b.x)
                .unwrap()
                .then(a.y.partial_cmp(&b.y).unwrap())
        });
        for w in order.windows(2) {
            let (a, b) = (&self.vertices[w[0]], &self.vertices[w[1]]);
            if a.dist(b) < tol {
                return Err(MeshError::Invariant(format!(
                    "vertices {} and {} coincide",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    fn signed_area(&self, cell: &[usize; 3]) -> T {
        let [a, b, c] = [
            &self.vertices[cell[0]],
            &self.vertices[cell[1]],
            &self.vertices[cell[2]],
        ];
        ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) / T::of(2.0)
    }

    pub fn cell_area(&self, c: usize) -> T {
        self.signed_area(&self.cells[c])
    }

    pub fn total_area(&self) -> T {
        (0..self.cells.len()).map(|c| self.cell_area(c)).sum()
    }

    pub fn cell_vertices(&self, c: usize) -> [Point2<T>; 3] {
        let cell = &self.cells[c];
        [
            self.vertices[cell[0]],
            self.vertices[cell[1]],
            self.vertices[cell[2]],
        ]
    }

    /// Longest edge of each cell, plus global max/min.
    pub fn metrics(&self) -> MeshMetrics<T> {
        let mut h_max = T::zero();
        let mut h_min = T::infinity();
        let mut areas = Vec::with_capacity(self.cells.len());
        for (c, cell) in self.cells.iter().enumerate() {
            let vs = self.cell_vertices(c);
            let mut h = T::zero();
            for e in 0..3 {
                h = h.max(vs[e].dist(&vs[(e + 1) % 3]));
            }
            h_max = h_max.max(h);
            h_min = h_min.min(h);
            let _ = cell;
            areas.push(self.cell_area(c));
        }
        MeshMetrics { h_max, h_min, areas }
    }

    /// Smallest interior angle over all cells, in degrees.
    pub fn min_angle_deg(&self) -> T {
        let mut best = T::infinity();
        for c in 0..self.cells.len() {
            let vs = self.cell_vertices(c);
            for i in 0..3 {
                let o = vs[i];
                let a = vs[(i + 1) % 3];
                let b = vs[(i + 2) % 3];
                let (ax, ay) = (a.x - o.x, a.y - o.y);
                let (bx, by) = (b.x - o.x, b.y - o.y);
                let dot = ax * bx + ay * by;
                let na = (ax * ax + ay * ay).sqrt();
                let nb = (bx * bx + by * by).sqrt();
                let cosv = (dot / (na * nb)).min(T::one()).max(-T::one());
                best = best.min(cosv.acos());
            }
        }
        best * T::of(180.0 / std::f64::consts::PI)
    }

    fn boundary_marker_map(&self) -> HashMap<(usize, usize), BoundaryMarker> {
        self.boundary_facets
            .iter()
            .map(|f| (sorted_pair(f.verts[0], f.verts[1]), f.marker))
            .collect()
    }

    /// Red refinement: each triangle into 4 congruent children via edge
    /// midpoints. Boundary markers are inherited by the child facets.
    pub fn uniform_refine(&self) -> Mesh<T> {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point2<T>>| -> usize {
            let key = sorted_pair(a, b);
            *midpoint.entry(key).or_insert_with(|| {
                let p = Point2::new(
                    (vertices[a].x + vertices[b].x) / T::of(2.0),
                    (vertices[a].y + vertices[b].y) / T::of(2.0),
                );
                vertices.push(p);
                vertices.len() - 1
            })
        };
        let mut cells = Vec::with_capacity(4 * self.cells.len());
        for cell in &self.cells {
            let [a, b, c] = *cell;
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            cells.push([a, ab, ca]);
            cells.push([ab, b, bc]);
            cells.push([ca, bc, c]);
            cells.push([ab, bc, ca]);
        }
        let mut markers = HashMap::new();
        for f in &self.boundary_facets {
            let [a, b] = f.verts;
            let m = mid(a, b, &mut vertices);
            markers.insert(sorted_pair(a, m), f.marker);
            markers.insert(sorted_pair(m, b), f.marker);
        }
        Mesh::from_parts(vertices, cells, &markers, self.level + 1)
            .expect("uniform refinement preserves mesh invariants")
    }

    /// Alfeld split: each triangle into 3 children through its barycenter.
    pub fn barycentric_refine(&self) -> Mesh<T> {
        let mut vertices = self.vertices.clone();
        let mut cells = Vec::with_capacity(3 * self.cells.len());
        let third = T::of(1.0 / 3.0);
        for cell in &self.cells {
            let [a, b, c] = *cell;
            let z = vertices.len();
            let p = Point2::new(
                (self.vertices[a].x + self.vertices[b].x + self.vertices[c].x) * third,
                (self.vertices[a].y + self.vertices[b].y + self.vertices[c].y) * third,
            );
            vertices.push(p);
            cells.push([a, b, z]);
            cells.push([b, c, z]);
            cells.push([c, a, z]);
        }
        let markers = self.boundary_marker_map();
        Mesh::from_parts(vertices, cells, &markers, self.level + 1)
            .expect("barycentric refinement preserves mesh invariants")
    }

    /// Copy with all vertices shifted by (dx, dy).
    pub fn translated(&self, dx: T, dy: T) -> Mesh<T> {
        let mut m = self.clone();
        for v in &mut m.vertices {
            v.x += dx;
            v.y += dy;
        }
        m
    }

    /// Legacy ASCII VTK unstructured grid export (cell type 5).
    pub fn write_vtk(&self, path: &std::path::Path) -> Result<(), MeshError> {
        let mut buf = String::new();
        vtk_header(&mut buf, self);
        std::fs::write(path, buf).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

pub struct MeshMetrics<T> {
    pub h_max: T,
    pub h_min: T,
    pub areas: Vec<T>,
}

pub(crate) fn vtk_header<T: Real>(buf: &mut String, mesh: &Mesh<T>) {
    use std::fmt::Write as _;
    buf.push_str("# vtk DataFile Version 3.0\nthermoflow mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(buf, "POINTS {} double", mesh.vertices.len()).unwrap();
    for v in &mesh.vertices {
        writeln!(buf, "{:.17e} {:.17e} 0.0", v.x, v.y).unwrap();
    }
    writeln!(buf, "CELLS {} {}", mesh.cells.len(), 4 * mesh.cells.len()).unwrap();
    for c in &mesh.cells {
        writeln!(buf, "3 {} {} {}", c[0], c[1], c[2]).unwrap();
    }
    writeln!(buf, "CELL_TYPES {}", mesh.cells.len()).unwrap();
    for _ in &mesh.cells {
        buf.push_str("5\n");
    }
}

/// Structured crossed-diagonal triangulation of `(0,Lx) x (0,Ly)`.
///
/// For `grading > 0` the x-coordinates are remapped by
/// `x -> Lx*(1 + tanh(g*(2x/Lx - 1))/tanh(g))/2`, clustering nodes at both
/// vertical walls. Side markers are `Left`, `Right`, `Top`, `Bottom`.
pub fn generate_rect_mesh<T: Real>(
    nx: usize,
    ny: usize,
    extent: (T, T),
    grading: T,
) -> Result<Mesh<T>, MeshError> {
    let (lx, ly) = extent;
    if nx < 1 || ny < 1 {
        return Err(MeshError::InvalidArgument(
            "cell counts must be at least 1".into(),
        ));
    }
    if lx <= T::zero() || ly <= T::zero() {
        return Err(MeshError::InvalidArgument(
            "extent must be positive".into(),
        ));
    }
    if grading < T::zero() {
        return Err(MeshError::InvalidArgument(
            "grading must be non-negative".into(),
        ));
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let xi = lx * T::of(i as f64) / T::of(nx as f64);
            let x = if grading > T::zero() {
                let s = (grading * (T::of(2.0) * xi / lx - T::one())).tanh() / grading.tanh();
                lx * (T::one() + s) / T::of(2.0)
            } else {
                xi
            };
            let y = ly * T::of(j as f64) / T::of(ny as f64);
            vertices.push(Point2::new(x, y));
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (bl, br) = (vid(i, j), vid(i + 1, j));
            let (tl, tr) = (vid(i, j + 1), vid(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                // diagonal bl-tr
                cells.push([bl, br, tr]);
                cells.push([bl, tr, tl]);
            } else {
                // diagonal br-tl
                cells.push([bl, br, tl]);
                cells.push([br, tr, tl]);
            }
        }
    }
    let mut markers = HashMap::new();
    for i in 0..nx {
        markers.insert(sorted_pair(vid(i, 0), vid(i + 1, 0)), BoundaryMarker::Bottom);
        markers.insert(sorted_pair(vid(i, ny), vid(i + 1, ny)), BoundaryMarker::Top);
    }
    for j in 0..ny {
        markers.insert(sorted_pair(vid(0, j), vid(0, j + 1)), BoundaryMarker::Left);
        markers.insert(sorted_pair(vid(nx, j), vid(nx, j + 1)), BoundaryMarker::Right);
    }
    Mesh::from_parts(vertices, cells, &markers, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(n: usize) -> Mesh<f64> {
        generate_rect_mesh(n, n, (1.0, 1.0), 0.0).unwrap()
    }

    #[test]
    fn minimal_split() {
        let m = unit_square(1);
        assert_eq!(m.cells.len(), 2);
        assert_eq!(m.vertices.len(), 4);
    }

    #[test]
    fn area_identity() {
        let m = unit_square(2);
        assert_eq!(m.cells.len(), 8);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_extent() {
        assert!(generate_rect_mesh::<f64>(2, 2, (-1.0, 1.0), 0.0).is_err());
        assert!(generate_rect_mesh::<f64>(0, 2, (1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn grading_clusters_at_walls() {
        let g = 2.0f64;
        let m = generate_rect_mesh(4, 4, (1.0, 1.0), g).unwrap();
        // evaluate the stretch map directly as the oracle
        let stretch = |x: f64| (1.0 + (g * (2.0 * x - 1.0)).tanh() / g.tanh()) / 2.0;
        let expected: Vec<f64> = (0..=4).map(|i| stretch(i as f64 / 4.0)).collect();
        for i in 0..=4 {
            assert!((m.vertices[i].x - expected[i]).abs() < 1e-14);
        }
        for w in expected.windows(2) {
            assert!(w[1] > w[0], "x-coordinates strictly increasing");
        }
        let wall = expected[1] - expected[0];
        let interior = expected[3] - expected[2];
        assert!(wall < interior, "wall spacing {wall} < interior {interior}");
    }

    #[test]
    fn barycentric_counts_and_area() {
        let m = unit_square(1);
        let b = m.barycentric_refine();
        assert_eq!(b.cells.len(), 6);
        assert_eq!(b.vertices.len(), 6);
        assert!((b.total_area() - 1.0).abs() < 1e-12);
        let bb = b.barycentric_refine();
        assert_eq!(bb.cells.len(), 18);
        assert_eq!(bb.level, 2);
    }

    #[test]
    fn uniform_refine_counts_and_h() {
        let m = unit_square(1);
        let r = m.uniform_refine();
        assert_eq!(r.cells.len(), 8);
        assert!((r.total_area() - 1.0).abs() < 1e-12);
        let met0 = m.metrics();
        let met1 = r.metrics();
        assert!((met0.h_max - 2f64.sqrt()).abs() < 1e-15);
        assert!((met1.h_max - 2f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(met1.areas.iter().all(|&a| a > 0.0));
    }

    #[test]
    fn facet_bookkeeping() {
        for m in [unit_square(3), unit_square(3).uniform_refine(), unit_square(2).barycentric_refine()] {
            assert_eq!(
                2 * m.interior_facets.len() + m.boundary_facets.len(),
                3 * m.cells.len()
            );
        }
    }

    #[test]
    fn markers_inherited_under_refinement() {
        let m = unit_square(2).uniform_refine().barycentric_refine();
        let mut seen = std::collections::HashSet::new();
        for f in &m.boundary_facets {
            seen.insert(f.marker);
            // every boundary facet endpoint lies on the marked side
            let (a, b) = (m.vertices[f.verts[0]], m.vertices[f.verts[1]]);
            match f.marker {
                BoundaryMarker::Left => assert!(a.x.abs() < 1e-14 && b.x.abs() < 1e-14),
                BoundaryMarker::Right => {
                    assert!((a.x - 1.0).abs() < 1e-14 && (b.x - 1.0).abs() < 1e-14)
                }
                BoundaryMarker::Bottom => assert!(a.y.abs() < 1e-14 && b.y.abs() < 1e-14),
                BoundaryMarker::Top => {
                    assert!((a.y - 1.0).abs() < 1e-14 && (b.y - 1.0).abs() < 1e-14)
                }
                _ => panic!("unexpected marker"),
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn hierarchy_min_angle() {
        // uniform refinements then one barycentric split, as the drivers build it
        let mut m = unit_square(8);
        for _ in 0..2 {
            m = m.uniform_refine();
        }
        let b = m.barycentric_refine();
        assert!(b.min_angle_deg() > 5.0, "min angle {}", b.min_angle_deg());
    }

    #[test]
    fn generic_scalar_f32() {
        let m = generate_rect_mesh::<f32>(2, 2, (1.0, 1.0), 0.0).unwrap();
        assert_eq!(m.cells.len(), 8);
        assert!((m.total_area() - 1.0).abs() < 1e-6);
    }
}

//! Legacy ASCII VTK field export (point data at mesh vertices).

use std::fmt::Write as _;

use crate::mesh::Mesh;
use crate::Real;

use super::FemError;

pub enum VtkField<T> {
    Scalar { name: String, values: Vec<T> },
    /// 2-component vectors, padded to 3 components on write.
    Vector { name: String, values: Vec<[T; 2]> },
}

/// Write mesh plus vertex point data. Field lengths must match the vertex
/// count; higher-order dofs are not exported.
pub fn write_vtk_fields<T: Real>(
    path: &std::path::Path,
    mesh: &Mesh<T>,
    fields: &[VtkField<T>],
) -> Result<(), FemError> {
    let nv = mesh.vertices.len();
    for f in fields {
        let len = match f {
            VtkField::Scalar { values, .. } => values.len(),
            VtkField::Vector { values, .. } => values.len(),
        };
        if len != nv {
            return Err(FemError::InvalidArgument(format!(
                "field length {len} does not match vertex count {nv}"
            )));
        }
    }
    let mut buf = String::new();
    crate::mesh::vtk_header(&mut buf, mesh);
    if !fields.is_empty() {
        writeln!(buf, "POINT_DATA {nv}").unwrap();
        for f in fields {
            match f {
                VtkField::Scalar { name, values } => {
                    writeln!(buf, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
                    for v in values {
                        writeln!(buf, "{v:.17e}").unwrap();
                    }
                }
                VtkField::Vector { name, values } => {
                    writeln!(buf, "VECTORS {name} double").unwrap();
                    for v in values {
                        writeln!(buf, "{:.17e} {:.17e} 0.0", v[0], v[1]).unwrap();
                    }
                }
            }
        }
    }
    std::fs::write(path, buf).map_err(|source| FemError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Vertex values of a continuous scalar field (components of the first
/// `scalar dofs = vertices` block; valid for vertex-bearing CG spaces).
pub fn vertex_values<T: Real>(
    space: &super::FunctionSpace<T>,
    coeffs: &[T],
    comp: usize,
) -> Vec<T> {
    let nc = space.elem.ncomp();
    let nv = space.mesh.vertices.len();
    (0..nv).map(|v| coeffs[v * nc + comp]).collect()
}

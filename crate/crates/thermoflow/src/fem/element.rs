//! Lagrange reference elements on the triangle with equispaced nodes.
//!
//! Scalar basis functions are represented in the monomial basis through an
//! inverted Vandermonde matrix; vector and tensor shapes reuse the scalar
//! tabulation componentwise. Node ordering is vertices, then edge nodes
//! (edge 0: v0-v1, edge 1: v1-v2, edge 2: v2-v0), then interior nodes.

use crate::mesh::Point2;
use crate::Real;

use super::smallmat;
use super::FemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Continuous,
    Discontinuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector2,
    /// Symmetric 2x2 tensor stored as (a11, a22, a12), or (a11, a12) with
    /// a22 = -a11 when traceless.
    SymTensor {
        traceless: bool,
    },
}

impl Shape {
    pub fn ncomp(&self) -> usize {
        match self {
            Shape::Scalar => 1,
            Shape::Vector2 => 2,
            Shape::SymTensor { traceless } => {
                if *traceless {
                    2
                } else {
                    3
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementSpec {
    pub family: Family,
    pub degree: usize,
    pub shape: Shape,
}

impl ElementSpec {
    pub fn new(family: Family, degree: usize, shape: Shape) -> Result<Self, FemError> {
        if family == Family::Continuous && degree < 1 {
            return Err(FemError::InvalidArgument(
                "continuous family requires degree >= 1".into(),
            ));
        }
        Ok(Self {
            family,
            degree,
            shape,
        })
    }

    pub fn scalar(family: Family, degree: usize) -> Self {
        Self::new(family, degree, Shape::Scalar).unwrap()
    }

    pub fn vector(family: Family, degree: usize) -> Self {
        Self::new(family, degree, Shape::Vector2).unwrap()
    }

    pub fn ncomp(&self) -> usize {
        self.shape.ncomp()
    }

    /// Scalar basis functions per cell.
    pub fn nbasis_scalar(&self) -> usize {
        if self.degree == 0 {
            1
        } else {
            (self.degree + 1) * (self.degree + 2) / 2
        }
    }
}

/// Where a local node lives, for continuous dof assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLocation {
    Vertex(usize),
    /// (edge index, position along edge, positions per edge)
    Edge(usize, usize),
    Interior(usize),
}

/// Equispaced reference nodes for degree k, with their locations.
pub fn reference_nodes<T: Real>(k: usize) -> (Vec<Point2<T>>, Vec<NodeLocation>) {
    if k == 0 {
        let third = T::of(1.0 / 3.0);
        return (
            vec![Point2::new(third, third)],
            vec![NodeLocation::Interior(0)],
        );
    }
    let kf = T::of(k as f64);
    let frac = |i: usize| T::of(i as f64) / kf;
    let mut pts = vec![
        Point2::new(T::zero(), T::zero()),
        Point2::new(T::one(), T::zero()),
        Point2::new(T::zero(), T::one()),
    ];
    let mut locs = vec![
        NodeLocation::Vertex(0),
        NodeLocation::Vertex(1),
        NodeLocation::Vertex(2),
    ];
    // edge nodes, k-1 per edge, walking from the first edge vertex
    let verts = [
        Point2::new(T::zero(), T::zero()),
        Point2::new(T::one(), T::zero()),
        Point2::new(T::zero(), T::one()),
    ];
    for e in 0..3 {
        let (a, b) = (verts[e], verts[(e + 1) % 3]);
        for i in 1..k {
            let t = frac(i);
            pts.push(Point2::new(
                a.x + (b.x - a.x) * t,
                a.y + (b.y - a.y) * t,
            ));
            locs.push(NodeLocation::Edge(e, i - 1));
        }
    }
    let mut n_int = 0;
    for i in 1..k {
        for j in 1..k {
            if i + j <= k - 1 {
                pts.push(Point2::new(frac(i), frac(j)));
                locs.push(NodeLocation::Interior(n_int));
                n_int += 1;
            }
        }
    }
    (pts, locs)
}

/// Tabulated scalar basis values and reference gradients at a point set.
/// Layout: `vals[q * nb + i]`, `grads[q * nb + i]`.
#[derive(Debug, Clone)]
pub struct Tabulation<T> {
    pub nb: usize,
    pub npts: usize,
    pub vals: Vec<T>,
    pub grads: Vec<[T; 2]>,
}

/// Coefficients of the Lagrange basis in the monomial basis, for repeated
/// point evaluation.
#[derive(Debug, Clone)]
pub struct ScalarBasis<T> {
    pub degree: usize,
    pub nb: usize,
    /// monomial exponents (a, b) for x^a y^b
    exps: Vec<(usize, usize)>,
    /// column j holds the monomial coefficients of basis function j
    coeffs: Vec<T>,
}

impl<T: Real> ScalarBasis<T> {
    pub fn new(degree: usize) -> Self {
        if degree == 0 {
            return Self {
                degree,
                nb: 1,
                exps: vec![(0, 0)],
                coeffs: vec![T::one()],
            };
        }
        let (nodes, _) = reference_nodes::<T>(degree);
        let nb = nodes.len();
        let mut exps = Vec::with_capacity(nb);
        for d in 0..=degree {
            for a in (0..=d).rev() {
                exps.push((a, d - a));
            }
        }
        debug_assert_eq!(exps.len(), nb);
        // Vandermonde V[i][m] = mono_m(node_i); coeffs = V^{-1}
        let mut v = vec![T::zero(); nb * nb];
        for (i, p) in nodes.iter().enumerate() {
            for (m, &(a, b)) in exps.iter().enumerate() {
                v[i * nb + m] = p.x.powi(a as i32) * p.y.powi(b as i32);
            }
        }
        let inv = smallmat::invert(&v, nb).expect("Lagrange Vandermonde is invertible");
        Self {
            degree,
            nb,
            exps,
            coeffs: inv,
        }
    }

    /// Evaluate all basis functions and reference gradients at `points`.
    pub fn tabulate(&self, points: &[Point2<T>]) -> Tabulation<T> {
        let nb = self.nb;
        let mut vals = vec![T::zero(); points.len() * nb];
        let mut grads = vec![[T::zero(); 2]; points.len() * nb];
        for (q, p) in points.iter().enumerate() {
            for j in 0..nb {
                let mut v = T::zero();
                let mut gx = T::zero();
                let mut gy = T::zero();
                for (m, &(a, b)) in self.exps.iter().enumerate() {
                    // coeffs stores V^{-1}; basis_j = sum_m inv[m][j] mono_m
                    let c = self.coeffs[m * nb + j];
                    if c == T::zero() {
                        continue;
                    }
                    let xa = p.x.powi(a as i32);
                    let yb = p.y.powi(b as i32);
                    v += c * xa * yb;
                    if a > 0 {
                        gx += c * T::of(a as f64) * p.x.powi(a as i32 - 1) * yb;
                    }
                    if b > 0 {
                        gy += c * T::of(b as f64) * xa * p.y.powi(b as i32 - 1);
                    }
                }
                vals[q * nb + j] = v;
                grads[q * nb + j] = [gx, gy];
            }
        }
        Tabulation {
            nb,
            npts: points.len(),
            vals,
            grads,
        }
    }
}

/// Tabulate a scalar Lagrange basis of the given degree at arbitrary points.
pub fn reference_basis<T: Real>(degree: usize, points: &[Point2<T>]) -> Tabulation<T> {
    ScalarBasis::new(degree).tabulate(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::quadrature::quadrature_rule;

    #[test]
    fn p1_nodal_property() {
        let (nodes, _) = reference_nodes::<f64>(1);
        let tab = reference_basis(1, &nodes);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((tab.vals[i * 3 + j] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let rule = quadrature_rule::<f64>(8).unwrap();
        for k in [0usize, 1, 2, 3] {
            let tab = reference_basis(k, &rule.points);
            for q in 0..tab.npts {
                let s: f64 = (0..tab.nb).map(|j| tab.vals[q * tab.nb + j]).sum();
                assert!((s - 1.0).abs() < 1e-14, "degree {k}");
            }
        }
    }

    #[test]
    fn p2_gradient_of_unity_vanishes() {
        let rule = quadrature_rule::<f64>(6).unwrap();
        let tab = reference_basis(2, &rule.points);
        for q in 0..tab.npts {
            let mut g = [0.0f64; 2];
            for j in 0..tab.nb {
                g[0] += tab.grads[q * tab.nb + j][0];
                g[1] += tab.grads[q * tab.nb + j][1];
            }
            assert!(g[0].abs() < 1e-13 && g[1].abs() < 1e-13);
        }
    }

    #[test]
    fn nodal_property_all_degrees() {
        for k in 1..=3 {
            let (nodes, _) = reference_nodes::<f64>(k);
            let tab = reference_basis(k, &nodes);
            for i in 0..tab.nb {
                for j in 0..tab.nb {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((tab.vals[i * tab.nb + j] - want).abs() < 1e-12);
                }
            }
        }
    }
}

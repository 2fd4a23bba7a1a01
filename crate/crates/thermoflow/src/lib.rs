//! 2D finite element library for steady anisothermal incompressible flow with
//! implicit and temperature-dependent non-Newtonian rheology.
//!
//! The crate provides triangular meshes of rectangular domains, Lagrange
//! finite element spaces, constitutive law evaluators with exact Newton
//! derivatives, monolithic residual/Jacobian assembly for 3-field (θ,u,p)
//! and 4-field (S,θ,u,p) formulations, a sparse direct solver, restarted
//! GMRES with an augmented-Lagrangian block preconditioner, Newton and
//! parameter-continuation drivers, and benchmark drivers behind the
//! `thermoflow` CLI.

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub mod bench;
pub mod fem;
pub mod formulation;
pub mod mesh;
pub mod rheology;
pub mod solver;

/// Scalar type for all core numerics: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::ops::DivAssign
    + std::iter::Sum
    + std::fmt::Display
    + std::fmt::LowerExp
    + std::fmt::Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` constant; panics only on types too small to hold it.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Widen to `f64` for reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable in f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Mesh64 = mesh::Mesh<f64>;
pub type CsrMatrix64 = fem::CsrMatrix<f64>;
pub type FunctionSpace64 = fem::FunctionSpace<f64>;
pub type RheologyModel64 = rheology::RheologyModel<f64>;

//! Symmetric interior penalty discontinuous Galerkin discretisation of variable-viscosity
//! Stokes flow on Cartesian meshes, with a block-triangular preconditioner whose viscous
//! block is solved by Krylov iterations accelerated with hp-multigrid.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented for `f32` and
//! `f64`); the aliases at the crate root fix it to `f64`, which is what the benchmarks use.

pub mod assembly;
pub mod basis;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod krylov;
pub mod mesh;
pub mod multigrid;
pub mod problems;
pub mod scalar;
pub mod sparse;
pub mod stokes;

pub use error::{Error, Result};
pub use scalar::Real;

pub use assembly::{SipConfig, ViscosityField};
pub use basis::DGSpace;
pub use krylov::{ChebyshevBounds, SolveReport, SolverSettings};
pub use mesh::{BoundaryKind, BoundarySpec, CartesianMesh, CoarsenMode, Rect};
pub use multigrid::{MgHierarchy, Variant};
pub use problems::ProblemSpec;
pub use sparse::CsrMatrix;
pub use stokes::{StokesSolverConfig, StokesSystem};

pub type Mesh = CartesianMesh<f64>;
pub type Space = DGSpace<f64>;
pub type Csr = CsrMatrix<f64>;
pub type Viscosity = ViscosityField<f64>;
pub type Hierarchy = MgHierarchy<f64>;
pub type System = StokesSystem<f64>;

//! Reference mesh, shape functions, quadrature, dof numbering, sparse
//! assembly and linear solves.

pub mod assembly;
pub mod dof;
pub mod element;
pub mod geometry;
pub mod gmsh;
pub mod linsolve;
pub mod mesh;
pub mod program;
pub mod sparse;

pub use assembly::{gather, apply_dirichlet, assemble, reduce, Assembler, LocalSystem, ReducedSystem};
pub use dof::{DofLayout, Field};
pub use element::{physical_gradients, shape_eval, ElementKind, QuadratureRule, ShapeValues};
pub use geometry::{FaceQp, FacetGeom, Geometry, QpGeom, ShapeData};
pub use linsolve::{solve, LinearSolver};
pub use mesh::{box_hex, solid_cylinder, tags, tube, unit_cube, Element, Facet, Mesh};
pub use program::PiecewiseLinear;
pub use sparse::CsrMatrix;

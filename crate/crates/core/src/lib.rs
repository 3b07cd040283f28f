//! Diffuse interface box method (DIBM) for the Poisson problem with Dirichlet
//! data on a curved boundary embedded in a triangulated hold-all square.
//!
//! The pipeline is: [`mesh::TriMesh`] → [`dual::DualMesh`] (barycentric boxes) →
//! [`region::RegionMap`] (diffuse interface classification) → [`assembly`] of the
//! box-method system → [`linalg::cg_solve`] → [`error_analysis`]. The [`driver`]
//! module strings these together into h-, ε- and locally refined convergence
//! studies.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod cases;
pub mod driver;
pub mod dual;
pub mod error_analysis;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod region;
pub mod vtk;

mod error;

pub use error::{Error, Result};

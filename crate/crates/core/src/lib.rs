//! Numerical toolkit for shifted eikonal equations, double obstacle problems
//! and regularity measurements on planar grids.
//!
//! Everything is generic over [`Real`]; the aliases below fix `f64`.

pub mod error;
pub mod grid;
pub mod hamilton_jacobi;
pub mod io;
pub mod linalg;
pub mod obstacle;
pub mod oracles;
pub mod regularity;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Domain = grid::Domain<f64>;
pub type Grid = grid::Grid2D<f64>;
pub type Field = grid::ScalarField<f64>;
pub type VectorField = grid::VectorField2<f64>;
pub type HjProblem = hamilton_jacobi::ShiftedEikonalProblem<f64>;
pub type HjSolution = hamilton_jacobi::HjSolution<f64>;
pub type ObstacleProblem = obstacle::DoubleObstacleProblem<f64>;
pub type Normalized = regularity::NormalizedData<f64>;

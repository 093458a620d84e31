//! Stationary incompressible flows with density-dependent viscosity, computed through a
//! stream-function formulation. The density is transported along streamlines, so
//! `ρ = η(Φ)` and `μ = b(ρ)` close a single fourth-order equation for `Φ`, which is
//! solved by an Oseen-type fixed point on a uniform grid.

pub mod error;
pub mod fields;
pub mod io;
pub mod lift;
pub mod linalg;
pub mod mms;
pub mod operators;
pub mod picard;
pub mod reconstruct;
pub mod symmetric;
pub mod verify;

pub use error::{Error, Result};
pub use fields::{ClosureTable, Grid, ProblemSpec, RunReport, ScalarField, TensorField, VectorField};

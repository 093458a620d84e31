//! Exact and one-dimensional numerical solutions for flows whose streamlines are straight
//! lines, circles or rays. They serve as reference solutions for the two-dimensional solver.

mod concentric;
mod couette;
mod identities;
mod profile;
mod quadrature;
mod radial;

pub use concentric::{
    concentric_constants, concentric_flux, concentric_ode, concentric_profile, concentric_viscosity, INNER_RADIUS,
    OUTER_RADIUS,
};
pub use couette::{couette_constants, couette_eta_table, couette_ode, couette_profile, couette_stream, couette_viscosity, CouetteDensity};
pub use identities::{
    concentric_convection_check, radial_laplacian_check, radial_viscous_check, symmetric_stream_residual, Family,
};
pub use profile::{Coordinate, Piece, PiecewiseProfile, Term, TermKind};
pub use radial::{radial_bvp, radial_bvp_richardson, radial_example, RadialExample};

//! Phase-space discretization: periodic spatial grid, truncated velocity
//! grid, the fluid basis of the collision invariants, the projection onto it
//! and the norms used throughout.

mod basis;
mod field;
mod grid;
pub mod io;
mod norms;

pub use basis::{invariant_polynomials, sqrt_maxwellian, FluidBasis, DEFAULT_TOL_GRAM};
pub use field::{
    macro_flux, moments, project_pi_l, spatial_differences, velocity_differences, FluidMoments,
    GridFunction, H1Field,
};

pub use grid::{
    maxwellian, PhaseGrid, SpatialGrid, VelocityGrid, MAX_VELOCITY_NODES, MIN_VELOCITY_NODES,
};
pub use norms::{h1_norm, h1_norm_sq, l2_norm, lambda_norm};

//! Discrete linearized collision operators and numerical checks of their
//! coercivity.

mod assemble;
mod hypo;
mod kernel;
mod matrix;

pub use assemble::{
    assemble_bgk_surrogate, assemble_boltzmann_matrix, assemble_component, assemble_factor,
    bgk_rate_slope, collision_frequency, fluid_projector, frequency_for,
};
pub use hypo::{
    projection_constants, speed_weights, verify_hypocoercivity, verify_with_tolerance, HypoReport,
    DEFAULT_TOL_KERNEL, K_REG_DELTAS,
};
pub use kernel::{sphere_measure, AngularFactor, KernelSpec};
pub use matrix::{Backend, CollisionMatrix};

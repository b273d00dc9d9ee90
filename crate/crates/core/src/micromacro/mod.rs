//! Micro-macro residuals of the Galerkin system, their recombination into
//! the kinetic equation, and the acoustic limit.

mod acoustic;
mod ops;
mod residual;

pub use acoustic::{acoustic_flux_matrix, acoustic_rhs, sound_speed, temperature_coupling};
pub use ops::{CollisionOps, VelocityOperators};
pub use residual::{
    assemble_h, boundary_residual, check_projection, full_residual, initial_residual,
    macro_residual, micro_residual, micro_residual_checked, recombine_residual,
    write_residual_csv, Algebra, Dense, FieldWithDerivatives,
};

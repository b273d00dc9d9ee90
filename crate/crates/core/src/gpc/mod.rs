//! Polynomial chaos in the random variable and the stochastic Galerkin
//! coupling of the collision operator.

mod basis;
mod coupling;

pub use basis::GpcBasis;
pub use coupling::{
    assemble_sg_coupling, assemble_sg_coupling_quadrature, energy_ek, kernel_components,
    mode_weight, q_warning, sg_apply, SgCoupling,
};

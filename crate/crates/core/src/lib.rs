//! Asymptotic-preserving neural networks for the linearized Boltzmann
//! equation with an uncertain collision kernel.
//!
//! The crate is organised bottom-up: [`phase_space`] discretizes `(x, v)`,
//! [`collision`] builds the linearized collision operator and checks its
//! coercivity, [`gpc`] adds the stochastic Galerkin coupling, [`micromacro`]
//! holds the residual algebra, [`apnn`] trains the networks and
//! [`reference`] provides deterministic solvers to compare against.

pub mod apnn;
pub mod autodiff;
pub mod collision;
pub mod error;
pub mod gpc;
pub mod linalg;
pub mod micromacro;
pub mod par;
pub mod phase_space;
pub mod problem;
pub mod quadrature;
pub mod reference;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Reverse-mode differentiation on a tape of matrices, with forward tangents
//! for input derivatives of small networks.

mod mlp;
mod tape;

pub use mlp::Mlp;
pub use tape::{Tape, Var};

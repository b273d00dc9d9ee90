//! Deterministic solutions to compare networks against: the exact modal
//! solution, an IMEX micro-macro solver, the acoustic limit, manufactured
//! solutions, and the metrics built on them.

mod acoustic;
mod imex;
mod lyapunov;
mod metrics;
mod mms;
mod modal;
mod stats;
mod tails;
mod trajectory;

pub use acoustic::{solve_acoustic, AcousticConfig, AcousticScheme, AcousticTrajectory};
pub use imex::{solve_from, solve_sg_micromacro, SolverConfig, Source};
pub use lyapunov::{
    discrete_projection_constant, equivalence_study, lyapunov_series, EquivalenceReport,
    LyapunovReport, LyapunovWeights,
};
pub use metrics::{error_ek, model_trajectory, trajectory_energy};
pub use mms::{refinement_study, Manufactured, RefinementReport};
pub use modal::ModalExact;
pub use stats::{fit_exponential_decay, spearman};
pub use tails::{tail_report, TailEntry, TailReport};
pub use trajectory::Trajectory;

use ndarray::Array2;

/// Fourth-order central difference along `axis`, periodic.
pub(crate) fn d4(grid: &crate::phase_space::SpatialGrid, f: &Array2<f64>, axis: usize) -> Array2<f64> {
    let inv = 1.0 / (12.0 * grid.spacing());
    let mut out = Array2::zeros(f.dim());
    for p in 0..grid.len() {
        let p1 = grid.neighbor(p, axis, 1);
        let p2 = grid.neighbor(p, axis, 2);
        let m1 = grid.neighbor(p, axis, -1);
        let m2 = grid.neighbor(p, axis, -2);
        for c in 0..f.ncols() {
            out[[p, c]] = (-f[[p2, c]] + 8.0 * f[[p1, c]] - 8.0 * f[[m1, c]] + f[[m2, c]]) * inv;
        }
    }
    out
}

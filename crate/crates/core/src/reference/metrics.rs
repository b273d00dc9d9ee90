use std::sync::Arc;

use ndarray::Array2;

use super::trajectory::Trajectory;
use crate::apnn::FieldModel;
use crate::error::{Error, Result};
use crate::gpc::energy_ek;
use crate::micromacro::assemble_h;
use crate::micromacro::Dense;
use crate::phase_space::{GridFunction, H1Field, PhaseGrid};
use crate::problem::Problem;

/// Fields of a model sampled on the trajectory's grid and times.
pub fn model_trajectory(model: &dyn FieldModel, problem: &Problem, like: &Trajectory) -> Result<Trajectory> {
    like.check_compatible(model.n_modes(), problem.n_v())?;
    if like.grid.dim() != problem.dim() {
        return Err(Error::GridMismatch("spatial dimension differs from the problem".into()));
    }
    let n = like.grid.len();
    let x = Array2::from_shape_fn((n, like.grid.dim()), |(p, a)| like.grid.coords(p)[a]);
    let mut m = Vec::with_capacity(like.len());
    let mut g = Vec::with_capacity(like.len());
    for &t in &like.times {
        let tt = vec![t; n];
        let mut ms = Vec::new();
        let mut gs = Vec::new();
        for i in 0..model.n_modes() {
            let f = model.fields(problem, i, &tt, &x)?;
            ms.push(f.m);
            gs.push(f.g);
        }
        m.push(ms);
        g.push(gs);
    }
    Ok(Trajectory { grid: like.grid.clone(), eps: problem.eps(), times: like.times.clone(), m, g })
}

/// `E^K_t` of the trajectory itself at each snapshot.
pub fn trajectory_energy(problem: &Problem, traj: &Trajectory, q: u32) -> Result<Vec<f64>> {
    traj.check_compatible(problem.modes(), problem.n_v())?;
    (0..traj.len())
        .map(|s| Ok(energy_ek(&traj.h1_fields(&problem.ops, &problem.vgrid, s)?, q)))
        .collect()
}

/// `E^K_t` of `h - h_theta` at each snapshot, derivatives by central
/// differences on the solver grid.
pub fn error_ek(model: &dyn FieldModel, problem: &Problem, traj: &Trajectory, q: u32) -> Result<Vec<f64>> {
    traj.check_compatible(problem.modes(), problem.n_v())?;
    if (traj.eps - problem.eps()).abs() > 1e-15 * problem.eps().max(1.0) {
        return Err(Error::GridMismatch(format!("trajectory eps {} vs problem eps {}", traj.eps, problem.eps())));
    }
    let net = model_trajectory(model, problem, traj)?;
    let phase = Arc::new(PhaseGrid::new(traj.grid.clone(), problem.vgrid.clone())?);
    let eps = problem.eps();
    (0..traj.len())
        .map(|s| {
            let fields: Result<Vec<H1Field>> = (0..traj.n_modes())
                .map(|i| {
                    let h_net = assemble_h(&mut Dense, &problem.ops, &net.m[s][i], &net.g[s][i], eps);
                    let diff = traj.h(&problem.ops, s, i) - h_net;
                    Ok(H1Field::from_differences(GridFunction::new(phase.clone(), diff)?))
                })
                .collect();
            Ok(energy_ek(&fields?, q))
        })
        .collect()
}

//! One module per subcommand. Each returns an [`Outcome`](crate::report::Outcome)
//! and writes its tables into the run directory.

pub mod ap;
pub mod hypo;
pub mod loss_error;
pub mod solve;
pub mod tails;
pub mod train;

use kinetic_apnn::problem::Problem;
use kinetic_apnn::reference::{solve_sg_micromacro, Trajectory};

use crate::config::ExperimentConfig;
use crate::error::RunResult;
use crate::output::RunDir;

/// IMEX solution on the configured grid, with its snapshot times in the event log.
pub(crate) fn reference_solution(cfg: &ExperimentConfig, p: &Problem, dir: &mut RunDir) -> RunResult<Trajectory> {
    let traj = solve_sg_micromacro(p, &cfg.solver)?;
    dir.event(
        "reference-solution",
        serde_json::json!({ "eps": p.eps(), "n_x": p.config.n_x, "dt": cfg.solver.dt, "snapshots": traj.len() }),
    )?;
    Ok(traj)
}

/// Writes `traj` through its own CSV encoder.
pub(crate) fn write_trajectory(dir: &mut RunDir, name: &str, traj: &Trajectory) -> RunResult<()> {
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    dir.write_text(name, &String::from_utf8_lossy(&buf))
}

pub(crate) fn time_average(times: &[f64], values: &[f64]) -> f64 {
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    if values.len() < 2 || span <= 0.0 {
        return values.first().copied().unwrap_or(0.0);
    }
    let area: f64 = times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum();
    area / span
}

use kinetic_apnn::reference::{trajectory_energy, ModalExact};
use serde::Serialize;

use super::{reference_solution, write_trajectory};
use crate::config::ExperimentConfig;
use crate::error::RunResult;
use crate::output::RunDir;
use crate::report::{Check, Outcome};

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub eps: f64,
    pub n_x: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub exact_energy: Vec<f64>,
    /// Largest `|pi_L g|` over snapshots and modes.
    pub max_projection: f64,
    /// `max_t ||h - h_exact|| / max_t ||h_exact||` over moments and micro part.
    pub relative_error: f64,
}

pub fn run(cfg: &ExperimentConfig, dir: &mut RunDir) -> RunResult<Outcome> {
    let p = cfg.problem()?;
    let traj = reference_solution(cfg, &p, dir)?;
    let q = p.kernel.q_weight;
    let energy = trajectory_energy(&p, &traj, q)?;
    let exact = ModalExact::new(&p).trajectory(&p, &traj.grid, &traj.times)?;
    let exact_energy = trajectory_energy(&p, &exact, q)?;
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for s in 0..traj.len() {
        for i in 0..traj.n_modes() {
            let dm = (&traj.m[s][i] - &exact.m[s][i]).iter().map(|x| x * x).sum::<f64>();
            let dg = (&traj.g[s][i] - &exact.g[s][i]).iter().map(|x| x * x).sum::<f64>();
            num = num.max(dm + p.eps().powi(2) * dg);
            let em = exact.m[s][i].iter().map(|x| x * x).sum::<f64>();
            let eg = exact.g[s][i].iter().map(|x| x * x).sum::<f64>();
            den = den.max(em + p.eps().powi(2) * eg);
        }
    }
    let report = SolveReport {
        eps: p.eps(),
        n_x: p.config.n_x,
        dt: cfg.solver.dt,
        max_projection: traj.max_projection(&p.ops),
        relative_error: if den > 0.0 { (num / den).sqrt() } else { num.sqrt() },
        times: traj.times.clone(),
        energy,
        exact_energy,
    };
    write_trajectory(dir, "trajectory.csv", &traj)?;
    let rows: Vec<Vec<f64>> = report
        .times
        .iter()
        .zip(&report.energy)
        .zip(&report.exact_energy)
        .map(|((t, e), x)| vec![*t, *e, *x])
        .collect();
    dir.write_csv("energy.csv", &["t", "energy", "exact_energy"], &rows)?;
    let checks = vec![
        Check::at_most("micro_projection", report.max_projection, 1e-10),
        Check::holds("finite_energy", report.energy.iter().all(|e| e.is_finite())),
    ];
    Ok(Outcome::new("solve", checks, &report))
}

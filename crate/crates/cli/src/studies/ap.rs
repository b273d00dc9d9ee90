use kinetic_apnn::linalg::sym_eig;
use kinetic_apnn::micromacro::acoustic_flux_matrix;
use kinetic_apnn::phase_space::SpatialGrid;
use kinetic_apnn::problem::ProblemConfig;
use kinetic_apnn::reference::{solve_acoustic, solve_sg_micromacro, SolverConfig};
use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{RunError, RunResult};
use crate::output::RunDir;
use crate::report::{Check, Outcome};

#[derive(Debug, Clone, Serialize)]
pub struct ApRow {
    pub eps: f64,
    /// Relative L2 distance of the moments to the acoustic solution at `t_end`.
    pub gap: f64,
    pub micro_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SoundSpeed {
    pub exact: f64,
    pub eigenvalue: f64,
    pub measured: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApReport {
    pub n_x: usize,
    pub dt: f64,
    pub t_end: f64,
    pub rows: Vec<ApRow>,
    pub monotone: bool,
    pub sound_speed: SoundSpeed,
}

fn gap(cfg: &ExperimentConfig, eps: f64) -> RunResult<ApRow> {
    let pc = ProblemConfig { eps, n_x: cfg.studies.ap_n_x, ..cfg.problem.clone() };
    let p = cfg.problem_with(&pc)?;
    let solver = SolverConfig { dt: cfg.studies.ap_dt, snapshots: 2, ..cfg.solver.clone() };
    let traj = solve_sg_micromacro(&p, &solver)?;
    let nb = p.n_moments();
    let x0 = Array1::from_iter((0..traj.grid.len()).map(|q| traj.grid.coords(q)[0]));
    let (mut num, mut den, mut micro) = (0.0, 0.0, 0.0f64);
    for i in 0..p.modes() {
        let m0 = p.config.initial.moments(i, nb, &x0).0;
        let ac = solve_acoustic(1, &m0, &[pc.t_end], &cfg.acoustic)?;
        num += (&traj.m[1][i] - &ac.m[0]).iter().map(|x| x * x).sum::<f64>();
        den += ac.m[0].iter().map(|x| x * x).sum::<f64>();
        micro = micro.max(traj.g[1][i].iter().fold(0.0, |m, x| m.max(x.abs())));
    }
    Ok(ApRow { eps, gap: if den > 0.0 { (num / den).sqrt() } else { num.sqrt() }, micro_norm: micro })
}

/// Phase speed of the fastest dim-3 acoustic eigenmode reduced to one axis.
fn sound_speed(cfg: &ExperimentConfig) -> RunResult<SoundSpeed> {
    let a = acoustic_flux_matrix(3, 0);
    let (lam, r) = sym_eig(&a);
    let top = lam.len() - 1;
    let exact = (5.0f64 / 3.0).sqrt();
    let n = 64;
    let grid = SpatialGrid::new(1, n)?;
    let x: Vec<f64> = (0..n).map(|p| grid.node_1d(p)).collect();
    let m0 = Array2::from_shape_fn((n, 5), |(p, b)| x[p].cos() * r[[b, top]]);
    let tr = solve_acoustic(3, &m0, &[1.0], &cfg.acoustic)?;
    let (mut re, mut im) = (0.0, 0.0);
    for p in 0..n {
        let proj: f64 = (0..5).map(|b| tr.m[0][[p, b]] * r[[b, top]]).sum();
        re += proj * x[p].cos();
        im += proj * x[p].sin();
    }
    let measured = im.atan2(re);
    Ok(SoundSpeed { exact, eigenvalue: lam[top], measured, relative_error: (measured - exact).abs() / exact })
}

pub fn run(cfg: &ExperimentConfig, dir: &mut RunDir) -> RunResult<Outcome> {
    if cfg.problem.dim != 1 {
        return Err(RunError::config("problem.dim", "the asymptotic study runs in one dimension"));
    }
    let mut eps_list = cfg.studies.ap_eps.clone();
    eps_list.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::new();
    for &eps in &eps_list {
        let row = gap(cfg, eps)?;
        dir.event("ap", serde_json::json!({ "eps": eps, "gap": row.gap }))?;
        rows.push(row);
    }
    let monotone = rows.windows(2).all(|w| w[1].gap <= w[0].gap);
    let sound = sound_speed(cfg)?;
    let smallest = rows.last().map_or(f64::NAN, |r| r.gap);
    let checks = vec![
        Check::at_most("smallest_eps_gap", smallest, cfg.studies.ap_tolerance),
        Check::holds("gap_monotone_in_eps", monotone),
        Check::at_most("sound_speed_phase_error", sound.relative_error, 1e-3),
    ];
    let table: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.eps, r.gap, r.micro_norm]).collect();
    dir.write_csv("ap.csv", &["eps", "gap", "micro_max"], &table)?;
    let report = ApReport {
        n_x: cfg.studies.ap_n_x,
        dt: cfg.studies.ap_dt,
        t_end: cfg.problem.t_end,
        rows,
        monotone,
        sound_speed: sound,
    };
    Ok(Outcome::new("ap-study", checks, &report))
}

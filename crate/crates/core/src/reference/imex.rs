use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use super::d4;
use crate::error::{Error, Result};
use crate::linalg::{from_na, to_na};
use crate::par;
use crate::phase_space::SpatialGrid;
use crate::problem::Problem;

/// Time stepping of the reference solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt: f64,
    /// Largest admissible `dt v_max / dx`.
    pub cfl: f64,
    /// Number of stored snapshots, including `t = 0` and `t_end`.
    pub snapshots: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dt: 1e-3, cfl: 1.0, snapshots: 11 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, m: &str| Err(Error::Config { key: format!("solver.{key}"), message: m.into() });
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "must be positive");
        }
        if !(self.cfl.is_finite() && self.cfl > 0.0) {
            return bad("cfl", "must be positive");
        }
        if self.snapshots < 2 {
            return bad("snapshots", "need at least 2");
        }
        Ok(())
    }
}

/// Source terms `(S1_i, S2_i)` added to the macro and micro equations of
/// mode `i` at time `t`, on the solver grid.
pub type Source<'a> = &'a (dyn Fn(usize, f64) -> (Array2<f64>, Array2<f64>) + Sync);

/// Integrates the micro-macro Galerkin system from the problem's initial data
/// (`g = 0`).
pub fn solve_sg_micromacro(problem: &Problem, cfg: &SolverConfig) -> Result<Trajectory> {
    let grid = SpatialGrid::new(problem.dim(), problem.config.n_x)?;
    let x0 = Array1::from_iter((0..grid.len()).map(|p| grid.coords(p)[0]));
    let nb = problem.n_moments();
    let m0 = (0..problem.modes()).map(|i| problem.config.initial.moments(i, nb, &x0).0).collect();
    let g0 = vec![Array2::zeros((grid.len(), problem.n_v())); problem.modes()];
    solve_from(problem, cfg, &grid, m0, g0, None)
}

/// Upwind `v_a d_a g` per velocity node.
fn upwind(grid: &SpatialGrid, g: &Array2<f64>, v: &[f64], axis: usize) -> Array2<f64> {
    let inv = 1.0 / grid.spacing();
    let mut out = Array2::zeros(g.dim());
    for p in 0..grid.len() {
        let pp = grid.neighbor(p, axis, 1);
        let pm = grid.neighbor(p, axis, -1);
        for (j, &vj) in v.iter().enumerate() {
            out[[p, j]] = if vj > 0.0 {
                vj * (g[[p, j]] - g[[pm, j]]) * inv
            } else {
                vj * (g[[pp, j]] - g[[p, j]]) * inv
            };
        }
    }
    out
}

fn snapshot_steps(n_steps: usize, snapshots: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (0..snapshots)
        .map(|k| ((k as f64) * n_steps as f64 / (snapshots - 1) as f64).round() as usize)
        .collect();
    s.dedup();
    s
}

/// First-order IMEX integration from given fields.
///
/// Each step solves the micro equation with the collision term implicit and
/// the transport explicit (upwind), re-projects `g` onto the complement of
/// the invariants, then advances the moments with Heun's method using the
/// new `g`.
pub fn solve_from(
    problem: &Problem,
    cfg: &SolverConfig,
    grid: &SpatialGrid,
    m0: Vec<Array2<f64>>,
    g0: Vec<Array2<f64>>,
    source: Option<Source<'_>>,
) -> Result<Trajectory> {
    cfg.validate()?;
    let k = problem.modes();
    let nv = problem.n_v();
    let nx = grid.len();
    let d = problem.dim();
    if grid.dim() != d || m0.len() != k || g0.len() != k {
        return Err(Error::GridMismatch("initial data does not match the problem".into()));
    }
    let eps = problem.eps();
    let t_end = problem.config.t_end;
    let n_steps = ((t_end / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / n_steps as f64;
    let bound = cfg.cfl * grid.spacing() / problem.vgrid.v_max();
    if dt > bound {
        return Err(Error::CflViolation { dt, bound });
    }

    let ops = &problem.ops;
    let qe = ops.q.as_ref();
    let mut sys = problem.coupling.dense() * -1.0;
    for r in 0..k * nv {
        sys[[r, r]] += eps / dt;
    }
    let lu = to_na(&sys).lu();
    if !lu.is_invertible() {
        return Err(Error::SingularImplicitSolve);
    }
    let vel: Vec<Vec<f64>> = (0..d).map(|a| problem.vgrid.nodes().column(a).to_vec()).collect();

    let stored = snapshot_steps(n_steps, cfg.snapshots);
    let mut m = m0;
    let mut g: Vec<Array2<f64>> = g0.into_iter().map(|g| g.dot(qe)).collect();
    let mut times = Vec::new();
    let mut ms = Vec::new();
    let mut gs = Vec::new();
    let mut next = 0;
    for step in 0..=n_steps {
        if next < stored.len() && stored[next] == step {
            times.push(step as f64 * dt);
            ms.push(m.clone());
            gs.push(g.clone());
            next += 1;
        }
        if step == n_steps {
            break;
        }
        let t0 = step as f64 * dt;
        let t1 = t0 + dt;

        // micro: (eps/dt - L) g^{n+1} = eps/dt g^n - m_x T - eps (v.grad g)^perp + S2
        let rhs: Vec<Array2<f64>> = par::map_range(k, |i| {
            let mut r = &g[i] * (eps / dt);
            let mut tr = Array2::<f64>::zeros((nx, nv));
            for a in 0..d {
                r = r - d4(grid, &m[i], a).dot(ops.transport_macro[a].as_ref());
                tr = tr + upwind(grid, &g[i], &vel[a], a);
            }
            r = r - tr.dot(ops.q.as_ref()) * eps;
            if let Some(src) = source {
                r = r + src(i, t1).1;
            }
            r.dot(qe)
        });
        let mut stacked = DMatrix::zeros(k * nv, nx);
        for (i, r) in rhs.iter().enumerate() {
            for p in 0..nx {
                for j in 0..nv {
                    stacked[(i * nv + j, p)] = r[[p, j]];
                }
            }
        }
        let sol = lu.solve(&stacked).ok_or(Error::SingularImplicitSolve)?;
        let sol = from_na(&sol);
        g = (0..k)
            .map(|i| {
                let block = sol.slice(ndarray::s![i * nv..(i + 1) * nv, ..]);
                block.t().dot(qe)
            })
            .collect();
        if g.iter().any(|a| a.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFiniteOutput);
        }

        // macro: Heun with the new g frozen
        let new_m: Vec<Array2<f64>> = par::map_range(k, |i| {
            let mut frozen = Array2::<f64>::zeros(m[i].dim());
            for a in 0..d {
                frozen = frozen - d4(grid, &g[i], a).dot(ops.flux_micro[a].as_ref()) * eps;
            }
            let rate = |mm: &Array2<f64>, t: f64| {
                let mut out = frozen.clone();
                for a in 0..d {
                    out = out - d4(grid, mm, a).dot(ops.flux_macro[a].as_ref());
                }
                if let Some(src) = source {
                    out = out + src(i, t).0;
                }
                out
            };
            let k1 = rate(&m[i], t0);
            let pred = &m[i] + &(&k1 * dt);
            let k2 = rate(&pred, t1);
            &m[i] + &((k1 + k2) * (0.5 * dt))
        });
        m = new_m;
    }
    Ok(Trajectory { grid: grid.clone(), eps, times, m: ms, g: gs })
}

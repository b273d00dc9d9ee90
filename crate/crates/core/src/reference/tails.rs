use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use crate::collision::{bgk_rate_slope, frequency_for, Backend};
use crate::error::Result;
use crate::phase_space::{SpatialGrid, VelocityGrid};
use crate::problem::Problem;

/// Velocity-tail integrals outside one trial box `max_a |v_a| <= half_width`,
/// each integrated over `[0, T]` where a time integral applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEntry {
    pub half_width: f64,
    /// Per mode `i`.
    pub c: Vec<f64>,
    pub c_dx: Vec<f64>,
    pub c_dv: Vec<f64>,
    /// `c_lambda[i][k]`.
    pub c_lambda: Vec<Vec<f64>>,
    /// `r[j][i]` for `j = 1, 2, 3` of the plain, `grad_x` and `grad_v` kinds.
    pub r: [Vec<f64>; 3],
    pub r_dx: [Vec<f64>; 3],
    pub r_dv: [Vec<f64>; 3],
    /// Sum of all `c` terms.
    pub c_total: f64,
    /// Sum of all `r` terms.
    pub r_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub eps: f64,
    pub t_end: f64,
    /// The same integrals over the whole velocity grid, for scale.
    pub full: TailEntry,
    pub boxes: Vec<TailEntry>,
}

impl TailReport {
    /// True when every total is non-increasing in the box width.
    pub fn is_monotone(&self) -> bool {
        let mut sorted: Vec<&TailEntry> = self.boxes.iter().collect();
        sorted.sort_by(|a, b| a.half_width.total_cmp(&b.half_width));
        sorted.windows(2).all(|w| w[1].c_total <= w[0].c_total && w[1].r_total <= w[0].r_total)
    }
}

fn central(grid: &SpatialGrid, f: &Array2<f64>, axis: usize) -> Array2<f64> {
    let inv = 1.0 / (2.0 * grid.spacing());
    let mut out = Array2::zeros(f.dim());
    for p in 0..grid.len() {
        let pp = grid.neighbor(p, axis, 1);
        let pm = grid.neighbor(p, axis, -1);
        let row = (&f.row(pp) - &f.row(pm)) * inv;
        out.row_mut(p).assign(&row);
    }
    out
}

/// Frequencies `nu[b0]`, `nu[b1]` whose combination gives `nu_ik`.
fn mode_frequencies(problem: &Problem) -> (Array1<f64>, Array1<f64>) {
    let nv = problem.n_v();
    match problem.config.backend {
        Backend::BgkSurrogate => {
            let beta = bgk_rate_slope(&problem.kernel, problem.dim());
            (Array1::ones(nv), Array1::from_elem(nv, beta))
        }
        Backend::BoltzmannQuadrature => {
            let k = &problem.kernel;
            let nu0 = frequency_for(k, &problem.vgrid, &|eta| k.b0.eval(eta));
            let nu1 = frequency_for(k, &problem.vgrid, &|eta| k.b1.eval(eta));
            (nu0, nu1)
        }
    }
}

struct Integrator<'a> {
    grid: &'a SpatialGrid,
    w: Array1<f64>,
}

impl Integrator<'_> {
    fn sq(&self, f: &Array2<f64>) -> f64 {
        let mut s = 0.0;
        for row in f.rows() {
            for (j, x) in row.iter().enumerate() {
                s += self.w[j] * x * x;
            }
        }
        s * self.grid.weight()
    }

    /// `sum_a int_{x_a = +-pi} int |v_a| f^2`, both faces coincide on the torus.
    fn faces(&self, f: &Array2<f64>, vgrid: &VelocityGrid) -> f64 {
        let d = self.grid.dim();
        let face_w = self.grid.spacing().powi(d as i32 - 1);
        let mut s = 0.0;
        for a in 0..d {
            for p in 0..self.grid.len() {
                if self.grid.multi_index(p)[a] != 0 {
                    continue;
                }
                for j in 0..self.w.len() {
                    s += 2.0 * self.w[j] * vgrid.node(j)[a].abs() * f[[p, j]] * f[[p, j]];
                }
            }
        }
        s * face_w
    }
}

fn trapezoid(times: &[f64], vals: &[f64]) -> f64 {
    times.windows(2).zip(vals.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Derivatives of every stored micro field.
struct Derived {
    /// `[s][i]`
    g: Vec<Vec<Array2<f64>>>,
    g_t: Vec<Vec<Array2<f64>>>,
    /// `[s][i][a]`
    gx: Vec<Vec<Vec<Array2<f64>>>>,
    gv: Vec<Vec<Vec<Array2<f64>>>>,
}

fn derive(problem: &Problem, traj: &Trajectory) -> Derived {
    let d = problem.dim();
    let ns = traj.len();
    let k = traj.n_modes();
    let g = traj.g.clone();
    let g_t = (0..ns)
        .map(|s| {
            (0..k)
                .map(|i| {
                    if ns < 2 {
                        return Array2::zeros(g[s][i].dim());
                    }
                    let (lo, hi) = (s.saturating_sub(1), (s + 1).min(ns - 1));
                    (&g[hi][i] - &g[lo][i]) / (traj.times[hi] - traj.times[lo])
                })
                .collect()
        })
        .collect();
    let gx = g
        .iter()
        .map(|gs| gs.iter().map(|gi| (0..d).map(|a| central(&traj.grid, gi, a)).collect()).collect())
        .collect();
    let gv = g
        .iter()
        .map(|gs| gs.iter().map(|gi| (0..d).map(|a| gi.dot(problem.ops.dv[a].as_ref())).collect()).collect())
        .collect();
    Derived { g, g_t, gx, gv }
}

fn v_dot_grad(problem: &Problem, grid: &SpatialGrid, f: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(f.dim());
    for a in 0..problem.dim() {
        out = out + central(grid, f, a).dot(problem.ops.velocity[a].as_ref());
    }
    out
}

fn apply_l(problem: &Problem, fields: &[Array2<f64>], i: usize) -> Array2<f64> {
    let mut out = Array2::zeros(fields[0].dim());
    for (k, f) in fields.iter().enumerate() {
        if let Some(b) = problem.coll.block_t(i, k) {
            out = out + f.dot(b.as_ref());
        }
    }
    out
}

fn entry(problem: &Problem, traj: &Trajectory, der: &Derived, half_width: f64, mask: &[bool]) -> TailEntry {
    let d = problem.dim();
    let k = traj.n_modes();
    let ns = traj.len();
    let vw = problem.vgrid.weights();
    let w = Array1::from_iter((0..vw.len()).map(|j| if mask[j] { vw[j] } else { 0.0 }));
    let int = Integrator { grid: &traj.grid, w };
    let grid = &traj.grid;
    let (nu0, nu1) = mode_frequencies(problem);
    let z = &problem.coupling.z_factor;
    let chi = &problem.coupling.chi;

    let c_term = |f: &Array2<f64>| int.sq(f) + int.sq(&v_dot_grad(problem, grid, f));
    let mut c = vec![0.0; k];
    let mut c_dx = vec![0.0; k];
    let mut c_dv = vec![0.0; k];
    let mut c_lambda = vec![vec![0.0; k]; k];
    let mut r = [vec![0.0; k], vec![0.0; k], vec![0.0; k]];
    let mut r_dx = r.clone();
    let mut r_dv = r.clone();
    for i in 0..k {
        let series = |f: &dyn Fn(usize) -> f64| -> f64 {
            let vals: Vec<f64> = (0..ns).map(f).collect();
            trapezoid(&traj.times, &vals)
        };
        c[i] = series(&|s| c_term(&der.g[s][i]));
        c_dx[i] = series(&|s| der.gx[s][i].iter().map(c_term).sum());
        c_dv[i] = series(&|s| der.gv[s][i].iter().map(c_term).sum());
        for kk in 0..k {
            if !chi[i][kk] {
                continue;
            }
            let delta = if i == kk { 1.0 } else { 0.0 };
            let nu = &nu0 * delta + &nu1 * z[i][kk];
            let grad_nu: Vec<Array1<f64>> =
                (0..d).map(|a| nu.view().insert_axis(ndarray::Axis(0)).dot(problem.ops.dv[a].as_ref()).row(0).to_owned()).collect();
            c_lambda[i][kk] = series(&|s| {
                let mut acc = 0.0;
                for a in 0..d {
                    acc += int.sq(&(&der.gv[s][kk][a] * &nu));
                    acc += int.sq(&(&der.g[s][kk] * &grad_nu[a]));
                }
                acc
            });
        }

        // r1: dt g, v.grad g, L_i(g); derivatives are applied to L_i(g) as a whole
        let lg: Vec<Array2<f64>> = (0..ns).map(|s| apply_l(problem, &der.g[s], i)).collect();
        let r1 = |f: &dyn Fn(usize) -> Array2<f64>, ft: &dyn Fn(usize) -> Array2<f64>, fl: &dyn Fn(usize) -> Array2<f64>| {
            series(&|s| int.sq(&ft(s)) + int.sq(&v_dot_grad(problem, grid, &f(s))) + int.sq(&fl(s)))
        };
        r[0][i] = r1(&|s| der.g[s][i].clone(), &|s| der.g_t[s][i].clone(), &|s| lg[s].clone());
        r[1][i] = int.sq(&der.g[0][i]);
        r[2][i] = series(&|s| int.faces(&der.g[s][i], &problem.vgrid));
        for a in 0..d {
            let dv = problem.ops.dv[a].as_ref();
            r_dx[0][i] += r1(
                &|s| der.gx[s][i][a].clone(),
                &|s| central(grid, &der.g_t[s][i], a),
                &|s| central(grid, &lg[s], a),
            );
            r_dx[1][i] += int.sq(&der.gx[0][i][a]);
            r_dx[2][i] += series(&|s| int.faces(&der.gx[s][i][a], &problem.vgrid));
            r_dv[0][i] += r1(&|s| der.gv[s][i][a].clone(), &|s| der.g_t[s][i].dot(dv), &|s| lg[s].dot(dv));
            r_dv[1][i] += int.sq(&der.gv[0][i][a]);
            r_dv[2][i] += series(&|s| int.faces(&der.gv[s][i][a], &problem.vgrid));
        }
    }
    let c_total = c.iter().chain(&c_dx).chain(&c_dv).sum::<f64>() + c_lambda.iter().flatten().sum::<f64>();
    let r_total = r.iter().chain(&r_dx).chain(&r_dv).flatten().sum();
    TailEntry { half_width, c, c_dx, c_dv, c_lambda, r, r_dx, r_dv, c_total, r_total }
}

/// Tail integrals of the micro part of `traj` outside each trial box.
pub fn tail_report(problem: &Problem, traj: &Trajectory, half_widths: &[f64]) -> Result<TailReport> {
    traj.check_compatible(problem.modes(), problem.n_v())?;
    let der = derive(problem, traj);
    let vg = &problem.vgrid;
    let all = vec![true; vg.len()];
    let full = entry(problem, traj, &der, 0.0, &all);
    let boxes = half_widths
        .iter()
        .map(|&w| {
            let mask: Vec<bool> = (0..vg.len()).map(|j| !VelocityGrid::inside_box(vg.node(j), w)).collect();
            entry(problem, traj, &der, w, &mask)
        })
        .collect();
    Ok(TailReport { eps: traj.eps, t_end: traj.times.last().copied().unwrap_or(0.0), full, boxes })
}

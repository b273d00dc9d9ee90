use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::imex::{solve_from, SolverConfig};
use crate::apnn::FieldModel;
use crate::error::Result;
use crate::micromacro::{macro_residual, micro_residual, Dense, FieldWithDerivatives};
use crate::phase_space::SpatialGrid;
use crate::problem::Problem;

/// Separable manufactured solution, mode `i` scaled by `1 / (i + 1)`:
/// `m = e^{-t} (a cos x_0 + b sin x_0)`,
/// `g = e^{-t} sin x_0 He_3(v_0) M(v) Q`.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    profile: Array1<f64>,
    k: usize,
}

impl Manufactured {
    pub fn new(problem: &Problem) -> Self {
        let nb = problem.n_moments();
        let a: Vec<f64> = (0..nb).map(|c| 0.4 / (c + 1) as f64).collect();
        let b: Vec<f64> = (0..nb).map(|c| if c % 2 == 0 { 0.2 } else { -0.3 }).collect();
        let sqm = problem.basis.sqrt_maxwellian();
        let raw = Array1::from_iter((0..problem.n_v()).map(|j| {
            let v = problem.vgrid.node(j)[0];
            (v * v * v - 3.0 * v) * sqm[j]
        }));
        let profile = raw.dot(problem.ops.q.as_ref());
        Self { a, b, profile, k: problem.modes() }
    }

    fn at(&self, problem: &Problem, i: usize, t: &[f64], x: &Array2<f64>) -> FieldWithDerivatives<Array2<f64>> {
        let n = t.len();
        let nb = self.a.len();
        let nv = self.profile.len();
        let d = problem.dim();
        let scale = 1.0 / (i + 1) as f64;
        let mut m = Array2::zeros((n, nb));
        let mut mx = Array2::zeros((n, nb));
        let mut g = Array2::zeros((n, nv));
        let mut gx = Array2::zeros((n, nv));
        for p in 0..n {
            let e = (-t[p]).exp() * scale;
            let (s, c) = x[[p, 0]].sin_cos();
            for q in 0..nb {
                m[[p, q]] = e * (self.a[q] * c + self.b[q] * s);
                mx[[p, q]] = e * (-self.a[q] * s + self.b[q] * c);
            }
            for j in 0..nv {
                g[[p, j]] = e * s * self.profile[j];
                gx[[p, j]] = e * c * self.profile[j];
            }
        }
        let mut m_x = vec![Array2::zeros((n, nb)); d];
        let mut g_x = vec![Array2::zeros((n, nv)); d];
        m_x[0] = mx;
        g_x[0] = gx;
        FieldWithDerivatives { m_t: -&m, m, m_x, g_t: -&g, g, g_x }
    }

    /// Sources `(S1_i, S2_i)` that make the fields an exact solution of the
    /// velocity-discrete system.
    pub fn sources(&self, problem: &Problem, t: &[f64], x: &Array2<f64>) -> Vec<(Array2<f64>, Array2<f64>)> {
        let eps = problem.eps();
        let fields: Vec<_> = (0..self.k).map(|i| self.at(problem, i, t, x)).collect();
        (0..self.k)
            .map(|i| {
                let s1 = macro_residual(&mut Dense, &problem.ops, &fields[i], eps);
                let s2 = micro_residual(&mut Dense, &problem.ops, &problem.coll, &fields, i, eps);
                (s1, s2)
            })
            .collect()
    }
}

impl FieldModel for Manufactured {
    fn n_modes(&self) -> usize {
        self.k
    }

    fn fields(
        &self,
        problem: &Problem,
        i: usize,
        t: &[f64],
        x: &Array2<f64>,
    ) -> Result<FieldWithDerivatives<Array2<f64>>> {
        Ok(self.at(problem, i, t, x))
    }
}

/// Errors of the manufactured solution at `t_end` for a sequence of grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub n_x: Vec<usize>,
    pub dt: Vec<f64>,
    /// Relative weighted `L^2` error of `h` at `t_end`.
    pub errors: Vec<f64>,
    /// `errors[l] / errors[l + 1]`.
    pub ratios: Vec<f64>,
}

/// Runs the solver with manufactured sources on grids `n_x`, with
/// `dt = courant dx / v_max` so that `dt` halves with `dx`.
pub fn refinement_study(problem: &Problem, levels: &[usize], courant: f64) -> Result<RefinementReport> {
    let mms = Manufactured::new(problem);
    let eps = problem.eps();
    let wv = problem.vgrid.weights();
    let mut dts = Vec::new();
    let mut errors = Vec::new();
    for &n in levels {
        let grid = SpatialGrid::new(problem.dim(), n)?;
        let x = Array2::from_shape_fn((grid.len(), grid.dim()), |(p, a)| grid.coords(p)[a]);
        let dt = courant * grid.spacing() / problem.vgrid.v_max();
        let cfg = SolverConfig { dt, cfl: 1.0, snapshots: 2 };
        let zeros = vec![0.0; grid.len()];
        let init: Vec<_> = (0..mms.k).map(|i| mms.at(problem, i, &zeros, &x)).collect();
        let m0 = init.iter().map(|f| f.m.clone()).collect();
        let g0 = init.iter().map(|f| f.g.clone()).collect();
        let src = |i: usize, t: f64| {
            let tt = vec![t; grid.len()];
            mms.sources(problem, &tt, &x).swap_remove(i)
        };
        let traj = solve_from(problem, &cfg, &grid, m0, g0, Some(&src))?;
        let s = traj.len() - 1;
        let t_end = traj.times[s];
        let tt = vec![t_end; grid.len()];
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..mms.k {
            let ex = mms.at(problem, i, &tt, &x);
            let h_ex = ex.m.dot(problem.ops.phi.as_ref()) + &ex.g * eps;
            let diff = traj.h(&problem.ops, s, i) - &h_ex;
            for p in 0..grid.len() {
                for j in 0..wv.len() {
                    num += wv[j] * diff[[p, j]] * diff[[p, j]];
                    den += wv[j] * h_ex[[p, j]] * h_ex[[p, j]];
                }
            }
        }
        dts.push(t_end / ((t_end / dt) - 1e-9).ceil());
        errors.push((num / den).sqrt());
    }
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(RefinementReport { n_x: levels.to_vec(), dt: dts, errors, ratios })
}

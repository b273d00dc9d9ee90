use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::stats::fit_exponential_decay;
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::gpc::mode_weight;
use crate::linalg::generalized_min;
use crate::phase_space::SpatialGrid;
use crate::problem::Problem;

/// Young parameter used in the equivalence bracket.
const ETA: f64 = 2.0;

/// Weights of the functional
/// `a1 sum |i^q h_i|^2 + a2 sum |i^q grad_x h_i|^2 + a3 sum |i^q grad_v h_i^perp|^2
///  + a4 eps sum i^{2q} <grad_x h_i, grad_v h_i>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovWeights {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl LyapunovWeights {
    /// `a3`, `a4` first, then `a1` above the projection constant, then a
    /// large `a2`.
    pub fn constructive(c_pi1: f64) -> Self {
        let a4 = 1.0;
        let a3 = 1.0;
        let a1 = 1.0 + a4 * c_pi1;
        let a2 = 10.0;
        Self { a1, a2, a3, a4 }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("a1", self.a1), ("a2", self.a2), ("a3", self.a3), ("a4", self.a4)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config { key: format!("lyapunov.{k}"), message: "must be positive".into() });
            }
        }
        Ok(())
    }

    /// `(c1, c2)` with `c1 E <= E_perp <= c2 E` for every `eps <= 1`, where
    /// `E = |h|^2 + |grad_x h|^2 + |grad_v h^perp|^2` mode-weighted.
    pub fn bracket(&self, c_pi1: f64) -> (f64, f64) {
        let lo = [self.a1 - self.a4 * c_pi1 / ETA, self.a2 - self.a4 * ETA / 2.0, self.a3 - self.a4 / ETA];
        let hi = [self.a1 + self.a4 * c_pi1 / ETA, self.a2 + self.a4 * ETA / 2.0, self.a3 + self.a4 / ETA];
        (lo.iter().copied().fold(f64::INFINITY, f64::min), hi.iter().copied().fold(0.0, f64::max))
    }
}

/// Largest `|grad_v pi h|^2 / |pi h|^2` with the grid difference operator.
pub fn discrete_projection_constant(problem: &Problem) -> f64 {
    let ops = &problem.ops;
    let w = ops.weights.as_ref();
    let gram = (ops.phi.as_ref() * w).dot(&ops.phi.t());
    let mut s = Array2::<f64>::zeros(gram.dim());
    for a in 0..problem.dim() {
        let pd = ops.phi.dot(ops.dv[a].as_ref());
        s = s + (&pd * w).dot(&pd.t());
    }
    -generalized_min(&(-s), &gram)
}

fn central(grid: &SpatialGrid, f: &Array2<f64>, axis: usize) -> Array2<f64> {
    let inv = 1.0 / (2.0 * grid.spacing());
    let mut out = Array2::zeros(f.dim());
    for p in 0..grid.len() {
        let row = (&f.row(grid.neighbor(p, axis, 1)) - &f.row(grid.neighbor(p, axis, -1))) * inv;
        out.row_mut(p).assign(&row);
    }
    out
}

/// `(E_perp, E)` of per-mode fields on `grid`.
fn functional(problem: &Problem, grid: &SpatialGrid, hs: &[Array2<f64>], wts: &LyapunovWeights, eps: f64) -> (f64, f64) {
    let ops = &problem.ops;
    let w = ops.weights.as_ref();
    let dx = grid.weight();
    let inner = |a: &Array2<f64>, b: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for (ra, rb) in a.rows().into_iter().zip(b.rows()) {
            for j in 0..w.len() {
                s += w[j] * ra[j] * rb[j];
            }
        }
        s * dx
    };
    let q = problem.kernel.q_weight;
    let (mut e_perp, mut e) = (0.0, 0.0);
    for (i, h) in hs.iter().enumerate() {
        let mw = mode_weight(i + 1, q);
        let perp = h.dot(ops.q.as_ref());
        let mut n0 = inner(h, h);
        let (mut nx, mut nv, mut cross) = (0.0, 0.0, 0.0);
        for a in 0..problem.dim() {
            let hx = central(grid, h, a);
            let hv = h.dot(ops.dv[a].as_ref());
            let pv = perp.dot(ops.dv[a].as_ref());
            nx += inner(&hx, &hx);
            nv += inner(&pv, &pv);
            cross += inner(&hx, &hv);
        }
        e_perp += mw * (wts.a1 * n0 + wts.a2 * nx + wts.a3 * nv + wts.a4 * eps * cross);
        n0 += nx + nv;
        e += mw * n0;
    }
    (e_perp, e)
}

/// Values of the functional along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub weights: LyapunovWeights,
    pub eps: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// The unweighted-in-`a` reference norm at the same times.
    pub norms: Vec<f64>,
    /// Largest `E(t_{s+1}) - E(t_s)`.
    pub max_increase: f64,
    pub tolerance: f64,
    pub non_increasing: bool,
    /// Fit `E ~ c exp(-rate t)`.
    pub decay_rate: f64,
    pub decay_prefactor: f64,
}

/// Evaluates the functional at every snapshot; increases up to
/// `dt * E(0)` count as time-discretization drift.
pub fn lyapunov_series(problem: &Problem, traj: &Trajectory, wts: &LyapunovWeights, dt: f64) -> Result<LyapunovReport> {
    wts.validate()?;
    traj.check_compatible(problem.modes(), problem.n_v())?;
    let mut values = Vec::with_capacity(traj.len());
    let mut norms = Vec::with_capacity(traj.len());
    for s in 0..traj.len() {
        let hs: Vec<Array2<f64>> = (0..traj.n_modes()).map(|i| traj.h(&problem.ops, s, i)).collect();
        let (ep, e) = functional(problem, &traj.grid, &hs, wts, traj.eps);
        values.push(ep);
        norms.push(e);
    }
    let max_increase = values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let tolerance = dt * values.first().copied().unwrap_or(0.0).abs();
    let (decay_rate, decay_prefactor) = fit_exponential_decay(&traj.times, &values);
    Ok(LyapunovReport {
        weights: *wts,
        eps: traj.eps,
        times: traj.times.clone(),
        non_increasing: values.len() < 2 || max_increase <= tolerance,
        values,
        norms,
        max_increase,
        tolerance,
        decay_rate,
        decay_prefactor,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub eps: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Measured `E_perp / E` over random fields against the analytic bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub weights: LyapunovWeights,
    pub c_pi1: f64,
    pub bracket: (f64, f64),
    pub n_fields: usize,
    pub rows: Vec<EquivalenceRow>,
    pub within: bool,
}

fn random_field(problem: &Problem, grid: &SpatialGrid, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let nv = problem.n_v();
    let sqm = problem.basis.sqrt_maxwellian();
    let d = problem.dim();
    let mut normal = || -> f64 { StandardNormal.sample(rng) };
    // sum over x-frequencies 0..=3 and Hermite products of degree <= 4
    let mut coef = vec![[[0.0; 5]; 2]; 4];
    for c in coef.iter_mut() {
        for part in c.iter_mut() {
            for v in part.iter_mut() {
                *v = normal();
            }
        }
    }
    let axis_x = (normal().abs() * 10.0) as usize % d;
    let axis_v = (normal().abs() * 10.0) as usize % d;
    let herm = |n: usize, v: f64| match n {
        0 => 1.0,
        1 => v,
        2 => v * v - 1.0,
        3 => v * v * v - 3.0 * v,
        _ => v.powi(4) - 6.0 * v * v + 3.0,
    };
    Array2::from_shape_fn((grid.len(), nv), |(p, j)| {
        let x = grid.coords(p)[axis_x];
        let v = problem.vgrid.node(j)[axis_v];
        let mut s = 0.0;
        for (k, c) in coef.iter().enumerate() {
            let (sk, ck) = (k as f64 * x).sin_cos();
            for n in 0..5 {
                s += (c[0][n] * ck + c[1][n] * sk) * herm(n, v);
            }
        }
        s * sqm[j]
    })
}

/// Ratios `E_perp / E` on `n_fields` random smooth fields per `eps`.
pub fn equivalence_study(
    problem: &Problem,
    wts: &LyapunovWeights,
    eps_list: &[f64],
    n_fields: usize,
    n_x: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    wts.validate()?;
    let grid = SpatialGrid::new(problem.dim(), n_x)?;
    let c_pi1 = discrete_projection_constant(problem);
    let bracket = wts.bracket(c_pi1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<Vec<Array2<f64>>> = (0..n_fields)
        .map(|_| (0..problem.modes()).map(|_| random_field(problem, &grid, &mut rng)).collect())
        .collect();
    let rows: Vec<EquivalenceRow> = eps_list
        .iter()
        .map(|&eps| {
            let ratios: Vec<f64> = crate::par::map_slice(&fields, |hs| {
                let (ep, e) = functional(problem, &grid, hs, wts, eps);
                ep / e
            });
            EquivalenceRow {
                eps,
                min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
                max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    let within = rows.iter().all(|r| r.min_ratio >= bracket.0 && r.max_ratio <= bracket.1);
    Ok(EquivalenceReport { weights: *wts, c_pi1, bracket, n_fields, rows, within })
}

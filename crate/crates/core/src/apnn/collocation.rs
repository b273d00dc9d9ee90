use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::{CollocationConfig, VelocitySampling};
use crate::error::Result;
use crate::phase_space::VelocityGrid;

/// Points of one loss evaluation, with the quadrature weights that turn sums
/// into the integrals over `[0, T] x torus x velocity box`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollocationBatch {
    pub interior_t: Vec<f64>,
    /// `n x d`.
    pub interior_x: Array2<f64>,
    pub initial_x: Array2<f64>,
    pub boundary_t: Vec<f64>,
    /// Per axis `a`, the tangential coordinates of the boundary points with
    /// `x_a` left free (it is set to `+pi` and `-pi` at evaluation).
    pub boundary_x: Vec<Array2<f64>>,
    /// Velocity samples; the grid nodes for [`VelocitySampling::Grid`].
    pub v_samples: Array2<f64>,
    /// Weight of each velocity grid node in the `v` integrals.
    pub v_weights: Array1<f64>,
    /// Per-point weights: `T |torus| / n`, `|torus| / n`, `T |face| / n`.
    pub w_interior: f64,
    pub w_initial: f64,
    pub w_boundary: f64,
}

fn uniform_x(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.gen_range(-PI..PI))
}

/// Nearest grid node of an in-box velocity.
fn snap(vgrid: &VelocityGrid, v: &[f64]) -> usize {
    let dv = vgrid.spacing();
    let n = vgrid.n();
    v.iter().fold(0, |acc, &c| {
        let k = ((c + vgrid.v_max()) / dv).round().clamp(0.0, (n - 1) as f64) as usize;
        acc * n + k
    })
}

/// Draws a batch. Identical seeds give identical batches.
pub fn sample_collocation(
    cfg: &CollocationConfig,
    vgrid: &VelocityGrid,
    t_end: f64,
    seed: u64,
) -> Result<CollocationBatch> {
    cfg.validate()?;
    let d = vgrid.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interior_t: Vec<f64> = (0..cfg.n_interior).map(|_| rng.gen_range(0.0..t_end)).collect();
    let interior_x = uniform_x(&mut rng, cfg.n_interior, d);
    let initial_x = uniform_x(&mut rng, cfg.n_initial, d);
    let boundary_t: Vec<f64> = (0..cfg.n_boundary).map(|_| rng.gen_range(0.0..t_end)).collect();
    let boundary_x: Vec<Array2<f64>> = (0..d).map(|_| uniform_x(&mut rng, cfg.n_boundary, d)).collect();
    let vm = vgrid.v_max();
    let box_measure = (2.0 * vm).powi(d as i32);
    let (v_samples, v_weights) = match cfg.velocity {
        VelocitySampling::Grid => (vgrid.nodes().clone(), vgrid.weights().clone()),
        VelocitySampling::Uniform => {
            let s = Array2::from_shape_fn((cfg.n_velocity, d), |_| rng.gen_range(-vm..vm));
            let mut w = Array1::zeros(vgrid.len());
            let each = box_measure / cfg.n_velocity as f64;
            for r in s.rows() {
                w[snap(vgrid, r.as_slice().expect("contiguous"))] += each;
            }
            (s, w)
        }
        VelocitySampling::Maxwellian => {
            // truncated Gaussian by rejection; importance weight 1 / (n p(v))
            let mass = vgrid.maxwellian_mass();
            let mut s = Array2::zeros((cfg.n_velocity, d));
            let mut w = Array1::zeros(vgrid.len());
            for p in 0..cfg.n_velocity {
                let v: Vec<f64> = loop {
                    let cand: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    if cand.iter().all(|c| c.abs() <= vm) {
                        break cand;
                    }
                };
                let sq: f64 = v.iter().map(|c| c * c).sum();
                let density = crate::phase_space::maxwellian(sq, d) / mass;
                w[snap(vgrid, &v)] += 1.0 / (cfg.n_velocity as f64 * density);
                for a in 0..d {
                    s[[p, a]] = v[a];
                }
            }
            (s, w)
        }
    };
    let torus = (2.0 * PI).powi(d as i32);
    Ok(CollocationBatch {
        interior_t,
        interior_x,
        initial_x,
        boundary_t,
        boundary_x,
        v_samples,
        v_weights,
        w_interior: t_end * torus / cfg.n_interior as f64,
        w_initial: torus / cfg.n_initial as f64,
        w_boundary: t_end * torus / (2.0 * PI) / cfg.n_boundary as f64,
    })
}

impl CollocationBatch {
    pub fn n_interior(&self) -> usize {
        self.interior_t.len()
    }

    /// Velocity weights as a shared `1 x N_v` row.
    pub fn v_row(&self) -> Arc<Array2<f64>> {
        Arc::new(self.v_weights.clone().insert_axis(ndarray::Axis(0)))
    }

    /// Shard `s` of `count`: contiguous slices of every point set, keeping the
    /// per-point weights so shard losses sum to the full loss.
    pub fn shard(&self, s: usize, count: usize) -> CollocationBatch {
        let range = |n: usize| (s * n / count, (s + 1) * n / count);
        let rows = |a: &Array2<f64>| {
            let (lo, hi) = range(a.nrows());
            a.slice(ndarray::s![lo..hi, ..]).to_owned()
        };
        let vec = |v: &Vec<f64>| {
            let (lo, hi) = range(v.len());
            v[lo..hi].to_vec()
        };
        CollocationBatch {
            interior_t: vec(&self.interior_t),
            interior_x: rows(&self.interior_x),
            initial_x: rows(&self.initial_x),
            boundary_t: vec(&self.boundary_t),
            boundary_x: self.boundary_x.iter().map(rows).collect(),
            v_samples: self.v_samples.clone(),
            v_weights: self.v_weights.clone(),
            w_interior: self.w_interior,
            w_initial: self.w_initial,
            w_boundary: self.w_boundary,
        }
    }
}

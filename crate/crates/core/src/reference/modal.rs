use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};

use super::trajectory::Trajectory;
use crate::apnn::FieldModel;
use crate::error::{Error, Result};
use crate::micromacro::FieldWithDerivatives;
use crate::phase_space::SpatialGrid;
use crate::problem::Problem;

const CACHE_LIMIT: usize = 8192;

/// Exact solution of the velocity-discrete Galerkin system for initial data
/// that is a single Fourier mode in `x_0`.
///
/// Writing `h_i = a_i cos x_0 - b_i sin x_0`, the pair solves the linear ODE
/// `a' = v_0 b + L a / eps`, `b' = -v_0 a + L b / eps`, integrated with the
/// matrix exponential.
pub struct ModalExact {
    k: usize,
    nv: usize,
    eps: f64,
    generator: DMatrix<f64>,
    y0: DVector<f64>,
    phi: Array2<f64>,
    moment: Array2<f64>,
    cache: Mutex<HashMap<u64, (DVector<f64>, DVector<f64>)>>,
}

impl ModalExact {
    pub fn new(problem: &Problem) -> Self {
        let k = problem.modes();
        let nv = problem.n_v();
        let nb = problem.n_moments();
        let eps = problem.eps();
        let l = problem.coupling.dense();
        let n = k * nv;
        let v0 = problem.vgrid.nodes().column(0).to_owned();
        let mut gen = DMatrix::zeros(2 * n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                gen[(r, c)] = l[[r, c]] / eps;
                gen[(n + r, n + c)] = l[[r, c]] / eps;
            }
            let v = v0[r % nv];
            gen[(r, n + r)] = v;
            gen[(n + r, r)] = -v;
        }
        let phi = problem.ops.phi.as_ref().clone();
        let mut y0 = DVector::zeros(2 * n);
        for i in 0..k {
            let (c, s) = problem.config.initial.amplitudes(i, nb);
            let a = Array1::from(c).dot(&phi);
            let b = Array1::from(s).dot(&phi);
            for j in 0..nv {
                y0[i * nv + j] = a[j];
                y0[n + i * nv + j] = -b[j];
            }
        }
        Self {
            k,
            nv,
            eps,
            generator: gen,
            y0,
            phi,
            moment: problem.ops.moment.as_ref().clone(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// State `y(t)` and its time derivative.
    fn state(&self, t: f64) -> (DVector<f64>, DVector<f64>) {
        if let Some(s) = self.cache.lock().expect("cache lock").get(&t.to_bits()) {
            return s.clone();
        }
        let y = (&self.generator * t).exp() * &self.y0;
        let yt = &self.generator * &y;
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(t.to_bits(), (y.clone(), yt.clone()));
        (y, yt)
    }

    /// Snapshots on a grid at the given times.
    pub fn trajectory(&self, problem: &Problem, grid: &SpatialGrid, times: &[f64]) -> Result<Trajectory> {
        if grid.dim() != problem.dim() {
            return Err(Error::GridMismatch("spatial dimension differs from the problem".into()));
        }
        let n = grid.len();
        let x = Array2::from_shape_fn((n, grid.dim()), |(p, a)| grid.coords(p)[a]);
        let mut m = Vec::with_capacity(times.len());
        let mut g = Vec::with_capacity(times.len());
        for &t in times {
            let tt = vec![t; n];
            let mut ms = Vec::with_capacity(self.k);
            let mut gs = Vec::with_capacity(self.k);
            for i in 0..self.k {
                let f = self.fields(problem, i, &tt, &x)?;
                ms.push(f.m);
                gs.push(f.g);
            }
            m.push(ms);
            g.push(gs);
        }
        Ok(Trajectory { grid: grid.clone(), eps: self.eps, times: times.to_vec(), m, g })
    }
}

impl FieldModel for ModalExact {
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
        let npts = t.len();
        let nv = self.nv;
        let off = self.k * nv;
        let mut h = Array2::zeros((npts, nv));
        let mut h_t = Array2::zeros((npts, nv));
        let mut h_x = Array2::zeros((npts, nv));
        for p in 0..npts {
            let (y, yt) = self.state(t[p]);
            let (s, c) = x[[p, 0]].sin_cos();
            for j in 0..nv {
                let (a, b) = (y[i * nv + j], y[off + i * nv + j]);
                let (at, bt) = (yt[i * nv + j], yt[off + i * nv + j]);
                h[[p, j]] = a * c - b * s;
                h_t[[p, j]] = at * c - bt * s;
                h_x[[p, j]] = -a * s - b * c;
            }
        }
        let split = |h: &Array2<f64>| {
            let m = h.dot(&self.moment);
            let g = (h - &m.dot(&self.phi)) / self.eps;
            (m, g)
        };
        let (m, g) = split(&h);
        let (m_t, g_t) = split(&h_t);
        let (mx0, gx0) = split(&h_x);
        let d = problem.dim();
        let mut m_x = vec![Array2::zeros(m.dim()); d];
        let mut g_x = vec![Array2::zeros(g.dim()); d];
        m_x[0] = mx0;
        g_x[0] = gx0;
        Ok(FieldWithDerivatives { m, m_t, m_x, g, g_t, g_x })
    }
}

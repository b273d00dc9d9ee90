//! The stochastic Galerkin kinetic problem shared by the networks and the
//! reference solvers: grids, operators, coupling and initial data.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::collision::{Backend, KernelSpec};
use crate::error::{Error, Result};
use crate::gpc::{assemble_sg_coupling, GpcBasis, SgCoupling};
use crate::micromacro::{CollisionOps, VelocityOperators};
use crate::phase_space::{FluidBasis, VelocityGrid};

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.into(), message: message.into() }
}

/// Well-prepared initial data: per gPC mode `i`,
/// `h_I,i(x, v) = sum_b (cos[i][b] cos x_0 + sin[i][b] sin x_0) phi_b(v) M(v)`.
///
/// Modes beyond the listed rows start at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub cos: Vec<Vec<f64>>,
    pub sin: Vec<Vec<f64>>,
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self {
            cos: vec![vec![0.5, 0.0, 0.2], vec![0.1, 0.0, 0.0]],
            sin: vec![vec![0.0, 0.3, 0.0], vec![0.0, 0.05, 0.0]],
        }
    }
}

impl InitialCondition {
    fn row(rows: &[Vec<f64>], i: usize, nb: usize) -> Vec<f64> {
        rows.get(i).cloned().unwrap_or_else(|| vec![0.0; nb])
    }

    /// Moment amplitudes `(cos, sin)` of mode `i`.
    pub fn amplitudes(&self, i: usize, nb: usize) -> (Vec<f64>, Vec<f64>) {
        (Self::row(&self.cos, i, nb), Self::row(&self.sin, i, nb))
    }

    fn validate(&self, nb: usize, k: usize) -> Result<()> {
        for (name, rows) in [("cos", &self.cos), ("sin", &self.sin)] {
            let key = format!("problem.initial.{name}");
            if rows.len() > k {
                return Err(config_err(&key, format!("{} rows for {k} modes", rows.len())));
            }
            for r in rows {
                if r.len() != nb {
                    return Err(config_err(&key, format!("rows need {nb} moment amplitudes")));
                }
                if r.iter().any(|a| !a.is_finite()) {
                    return Err(config_err(&key, "non-finite amplitude"));
                }
            }
        }
        Ok(())
    }

    /// Moments of mode `i` and their `x_0` derivative at the given points.
    pub fn moments(&self, i: usize, nb: usize, x0: &Array1<f64>) -> (Array2<f64>, Array2<f64>) {
        let (c, s) = self.amplitudes(i, nb);
        let n = x0.len();
        let mut m = Array2::zeros((n, nb));
        let mut mx = Array2::zeros((n, nb));
        for (p, &x) in x0.iter().enumerate() {
            let (sx, cx) = x.sin_cos();
            for b in 0..nb {
                m[[p, b]] = c[b] * cx + s[b] * sx;
                mx[[p, b]] = -c[b] * sx + s[b] * cx;
            }
        }
        (m, mx)
    }
}

/// Size and physics of the kinetic problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub dim: usize,
    pub n_x: usize,
    pub n_v: usize,
    pub v_max: f64,
    pub eps: f64,
    pub t_end: f64,
    /// Number of gPC modes `K`.
    pub modes: usize,
    pub backend: Backend,
    pub initial: InitialCondition,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            n_x: 64,
            n_v: 24,
            v_max: 8.0,
            eps: 1.0,
            t_end: 0.5,
            modes: 2,
            backend: Backend::BgkSurrogate,
            initial: InitialCondition::default(),
        }
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(config_err("problem.dim", "must be 1, 2 or 3"));
        }
        if self.n_x < 4 {
            return Err(config_err("problem.n_x", "need at least 4 points"));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return Err(config_err("problem.v_max", "must be positive"));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(config_err("problem.eps", "must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(config_err("problem.t_end", "must be positive"));
        }
        if self.modes == 0 {
            return Err(config_err("problem.modes", "need at least one mode"));
        }
        self.initial.validate(self.dim + 2, self.modes)
    }
}

/// Assembled operators for one configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ProblemConfig,
    pub kernel: KernelSpec,
    pub vgrid: VelocityGrid,
    pub basis: FluidBasis,
    pub gpc: GpcBasis,
    pub coupling: SgCoupling,
    pub ops: VelocityOperators,
    pub coll: CollisionOps,
    pub sqrt_m: Arc<Array2<f64>>,
}

impl Problem {
    pub fn new(config: &ProblemConfig, kernel: &KernelSpec) -> Result<Self> {
        config.validate()?;
        kernel.validate()?;
        let vgrid = VelocityGrid::new(config.dim, config.n_v, config.v_max).map_err(|e| match e {
            Error::InvalidGrid(m) => config_err("problem.n_v", m),
            other => other,
        })?;
        let basis = FluidBasis::new(&vgrid)?;
        let gpc = GpcBasis::new(config.modes, kernel.c_z).map_err(|e| match e {
            Error::Config { key, message } if key == "gpc.k" => config_err("problem.modes", message),
            other => other,
        })?;
        let coupling = assemble_sg_coupling(kernel, &gpc, &vgrid, &basis, config.backend)?;
        let ops = VelocityOperators::new(&vgrid, &basis);
        let coll = CollisionOps::new(&coupling);
        let sqrt_m = Arc::new(basis.sqrt_maxwellian().clone().insert_axis(ndarray::Axis(0)));
        Ok(Self { config: config.clone(), kernel: kernel.clone(), vgrid, basis, gpc, coupling, ops, coll, sqrt_m })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn modes(&self) -> usize {
        self.config.modes
    }

    pub fn n_v(&self) -> usize {
        self.vgrid.len()
    }

    pub fn n_moments(&self) -> usize {
        self.config.dim + 2
    }

    pub fn eps(&self) -> f64 {
        self.config.eps
    }

    /// Initial field of mode `i` on the velocity grid, and its `x_0`
    /// derivative, at points whose first coordinate is `x0`.
    pub fn initial_field(&self, i: usize, x0: &Array1<f64>) -> (Array2<f64>, Array2<f64>) {
        let (m, mx) = self.config.initial.moments(i, self.n_moments(), x0);
        (m.dot(self.ops.phi.as_ref()), mx.dot(self.ops.phi.as_ref()))
    }
}

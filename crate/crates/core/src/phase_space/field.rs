use std::sync::Arc;

use ndarray::{Array2, Array3, Axis};

use super::basis::FluidBasis;
use super::grid::PhaseGrid;
use crate::error::{Error, Result};

/// Values of a phase-space field on the tensor grid, rows indexed by spatial
/// node and columns by velocity node.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<PhaseGrid>,
    values: Array2<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<PhaseGrid>, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::ShapeMismatch(format!(
                "values {:?} vs grid {:?}",
                values.dim(),
                grid.shape()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteOutput);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<PhaseGrid>) -> Self {
        let values = Array2::zeros(grid.shape());
        Self { grid, values }
    }

    /// Samples `f(x, v)` at every node.
    pub fn from_fn(grid: Arc<PhaseGrid>, f: impl Fn(&[f64], &[f64]) -> f64) -> Self {
        let (nx, nv) = grid.shape();
        let mut values = Array2::zeros((nx, nv));
        for p in 0..nx {
            let x = grid.x.coords(p);
            for j in 0..nv {
                let v = grid.v.node(j).to_vec();
                values[[p, j]] = f(&x, &v);
            }
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<PhaseGrid> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Same grid (by value) as `other`.
    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }

    pub fn with_values(&self, values: Array2<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }

    /// Quadrature inner product over x and v.
    pub fn dot(&self, other: &GridFunction) -> f64 {
        let wx = self.grid.x.weight();
        let wv = self.grid.v.weights();
        let mut s = 0.0;
        for (ra, rb) in self.values.outer_iter().zip(other.values.outer_iter()) {
            for j in 0..ra.len() {
                s += wv[j] * ra[j] * rb[j];
            }
        }
        s * wx
    }
}

/// Coefficients `m = (rho, u, T)` of the fluid projection at each spatial node.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidMoments {
    /// `N_x x (dim + 2)`.
    pub values: Array2<f64>,
}

impl FluidMoments {
    pub fn zeros(nx: usize, dim: usize) -> Self {
        Self { values: Array2::zeros((nx, dim + 2)) }
    }

    pub fn dim(&self) -> usize {
        self.values.ncols() - 2
    }

    pub fn rho(&self) -> ndarray::ArrayView1<'_, f64> {
        self.values.column(0)
    }

    pub fn u(&self, axis: usize) -> ndarray::ArrayView1<'_, f64> {
        self.values.column(1 + axis)
    }

    pub fn temperature(&self) -> ndarray::ArrayView1<'_, f64> {
        self.values.column(self.values.ncols() - 1)
    }

    /// `h~ = m^T phi M` on the velocity grid.
    pub fn reconstruct(&self, grid: Arc<PhaseGrid>, basis: &FluidBasis) -> GridFunction {
        let values = self.values.dot(basis.values());
        GridFunction { grid, values }
    }
}

/// Orthogonal projection onto the collision invariants.
///
/// Returns the moments, `h~ = pi_L(h)` and `h_perp = h - h~`.
pub fn project_pi_l(
    h: &GridFunction,
    basis: &FluidBasis,
) -> Result<(FluidMoments, GridFunction, GridFunction)> {
    if basis.values().ncols() != h.values.ncols() {
        return Err(Error::ShapeMismatch("basis and field velocity grids differ".into()));
    }
    let moments = h.values.dot(&basis.moment_matrix());
    // coefficients `moments G^{-1}`, with `G` symmetric
    let coef = crate::linalg::solve(basis.gram(), &moments.t().to_owned())
        .ok_or_else(|| Error::ShapeMismatch("singular fluid Gram matrix".into()))?;
    let tilde = coef.t().dot(basis.values());
    let perp = &h.values - &tilde;
    Ok((
        FluidMoments { values: moments },
        GridFunction { grid: h.grid.clone(), values: tilde },
        GridFunction { grid: h.grid.clone(), values: perp },
    ))
}

/// Per spatial node, the `(dim+2) x dim` array `<v_a h phi_i M>`.
pub fn macro_flux(h: &GridFunction, basis: &FluidBasis) -> Array3<f64> {
    let vg = &h.grid.v;
    let d = vg.dim();
    let nx = h.values.nrows();
    let mut out = Array3::zeros((nx, d + 2, d));
    for a in 0..d {
        let va = vg.nodes().column(a).to_owned();
        // N_v x (d+2): w_j v_a phi_i M
        let mat = basis.moment_matrix() * &va.insert_axis(Axis(1));
        let f = h.values.dot(&mat);
        out.index_axis_mut(Axis(2), a).assign(&f);
    }
    out
}

/// Field value together with its first derivatives in x and v.
#[derive(Debug, Clone)]
pub struct H1Field {
    pub value: GridFunction,
    pub grad_x: Vec<Array2<f64>>,
    pub grad_v: Vec<Array2<f64>>,
}

impl H1Field {
    /// Derivatives by central differences: periodic in x, zero-extended in v.
    pub fn from_differences(h: GridFunction) -> Self {
        let grad_x = spatial_differences(&h);
        let grad_v = velocity_differences(&h);
        Self { value: h, grad_x, grad_v }
    }

    pub fn from_parts(value: GridFunction, grad_x: Vec<Array2<f64>>, grad_v: Vec<Array2<f64>>) -> Result<Self> {
        let d = value.grid.dim();
        if grad_x.len() != d || grad_v.len() != d {
            return Err(Error::ShapeMismatch("gradient arity differs from dimension".into()));
        }
        for g in grad_x.iter().chain(grad_v.iter()) {
            if g.dim() != value.values.dim() {
                return Err(Error::ShapeMismatch("gradient shape differs from field".into()));
            }
        }
        Ok(Self { value, grad_x, grad_v })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            value: GridFunction { grid: self.value.grid.clone(), values: &self.value.values * c },
            grad_x: self.grad_x.iter().map(|g| g * c).collect(),
            grad_v: self.grad_v.iter().map(|g| g * c).collect(),
        }
    }
}

/// Central differences along every spatial axis (periodic).
pub fn spatial_differences(h: &GridFunction) -> Vec<Array2<f64>> {
    let xg = &h.grid.x;
    let inv = 1.0 / (2.0 * xg.spacing());
    (0..xg.dim())
        .map(|a| {
            let mut out = Array2::zeros(h.values.dim());
            for p in 0..xg.len() {
                let pp = xg.neighbor(p, a, 1);
                let pm = xg.neighbor(p, a, -1);
                let diff = (&h.values.row(pp) - &h.values.row(pm)) * inv;
                out.row_mut(p).assign(&diff);
            }
            out
        })
        .collect()
}

/// Central differences along every velocity axis with zero extension.
pub fn velocity_differences(h: &GridFunction) -> Vec<Array2<f64>> {
    (0..h.grid.v.dim())
        .map(|a| h.values.dot(&h.grid.v.difference_matrix(a)))
        .collect()
}

/// Weighted sum of squares of an `N_x x N_v` array.
pub(crate) fn weighted_sq(grid: &PhaseGrid, a: &Array2<f64>) -> f64 {
    let wv = grid.v.weights();
    let mut s = 0.0;
    for row in a.outer_iter() {
        let mut r = 0.0;
        for j in 0..row.len() {
            r += wv[j] * row[j] * row[j];
        }
        s += r;
    }
    s * grid.x.weight()
}

/// Moments array helper for a single velocity profile collection.
pub fn moments(h: &GridFunction, basis: &FluidBasis) -> Array2<f64> {
    h.values.dot(&basis.moment_matrix())
}

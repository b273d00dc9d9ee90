use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest velocity resolution accepted per dimension.
pub const MIN_VELOCITY_NODES: usize = 8;
/// Largest velocity resolution accepted per dimension (dense operators).
pub const MAX_VELOCITY_NODES: usize = 128;

/// Standard normal density in `dim` dimensions evaluated at `|v|^2`.
pub fn maxwellian(v_sq: f64, dim: usize) -> f64 {
    (2.0 * PI).powf(-(dim as f64) / 2.0) * (-0.5 * v_sq).exp()
}

/// Periodic grid on the torus `[-pi, pi)^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    dim: usize,
    n: usize,
}

impl SpatialGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("spatial dimension {dim} not in 1..=3")));
        }
        if n < 4 {
            return Err(Error::InvalidGrid(format!("n_x = {n} < 4")));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Quadrature weight of a single node.
    pub fn weight(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Measure of the torus.
    pub fn measure(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    pub fn node_1d(&self, k: usize) -> f64 {
        -PI + k as f64 * self.spacing()
    }

    /// Multi-index of a flat node index; axis 0 varies slowest.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &k| acc * self.n + k)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .into_iter()
            .map(|k| self.node_1d(k))
            .collect()
    }

    /// Periodic neighbor of `idx` shifted by `shift` along `axis`.
    pub fn neighbor(&self, idx: usize, axis: usize, shift: isize) -> usize {
        let mut m = self.multi_index(idx);
        let n = self.n as isize;
        m[axis] = (((m[axis] as isize + shift) % n + n) % n) as usize;
        self.flat_index(&m)
    }
}

/// Uniform tensor grid on the truncated velocity box `[-v_max, v_max]^dim`
/// with trapezoidal weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VelocityGrid {
    dim: usize,
    n: usize,
    v_max: f64,
    nodes_1d: Vec<f64>,
    weights_1d: Vec<f64>,
    nodes: Array2<f64>,
    weights: Array1<f64>,
}

impl PartialEq for VelocityGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.v_max == other.v_max
    }
}

impl VelocityGrid {
    pub fn new(dim: usize, n: usize, v_max: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("velocity dimension {dim} not in 1..=3")));
        }
        if n < MIN_VELOCITY_NODES {
            return Err(Error::InvalidGrid(format!(
                "n_v = {n} below minimum {MIN_VELOCITY_NODES}"
            )));
        }
        if n > MAX_VELOCITY_NODES {
            return Err(Error::InvalidGrid(format!(
                "n_v = {n} above maximum {MAX_VELOCITY_NODES}"
            )));
        }
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::InvalidGrid(format!("v_max = {v_max} must be positive")));
        }
        let dv = 2.0 * v_max / (n - 1) as f64;
        // symmetric construction so that v -> -v maps nodes onto nodes exactly
        let nodes_1d: Vec<f64> = (0..n)
            .map(|j| {
                let k = j as f64 - (n - 1) as f64 / 2.0;
                k * dv
            })
            .collect();
        let weights_1d: Vec<f64> = (0..n)
            .map(|j| if j == 0 || j == n - 1 { 0.5 * dv } else { dv })
            .collect();
        let total = n.pow(dim as u32);
        let mut nodes = Array2::zeros((total, dim));
        let mut weights = Array1::zeros(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut w = 1.0;
            for a in (0..dim).rev() {
                let k = rem % n;
                rem /= n;
                nodes[[idx, a]] = nodes_1d[k];
                w *= weights_1d[k];
            }
            weights[idx] = w;
        }
        Ok(Self { dim, n, v_max, nodes_1d, weights_1d, nodes, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.v_max / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> &Array2<f64> {
        &self.nodes
    }

    pub fn nodes_1d(&self) -> &[f64] {
        &self.nodes_1d
    }

    pub fn weights_1d(&self) -> &[f64] {
        &self.weights_1d
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn node(&self, j: usize) -> ndarray::ArrayView1<'_, f64> {
        self.nodes.row(j)
    }

    pub fn speed_sq(&self, j: usize) -> f64 {
        self.nodes.row(j).iter().map(|x| x * x).sum()
    }

    /// Global Maxwellian at every node.
    pub fn maxwellian(&self) -> Array1<f64> {
        (0..self.len())
            .map(|j| maxwellian(self.speed_sq(j), self.dim))
            .collect()
    }

    /// `sum_j w_j M(v_j)`: the truncated Gaussian mass.
    pub fn maxwellian_mass(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.maxwellian().iter())
            .map(|(w, m)| w * m)
            .sum()
    }

    /// Checks the truncated mass lies in `[1 - tol_mass, 1]` up to rounding.
    pub fn check_mass(&self, tol_mass: f64) -> Result<f64> {
        let mass = self.maxwellian_mass();
        if mass < 1.0 - tol_mass || mass > 1.0 + 1e-12 {
            return Err(Error::InvalidGrid(format!(
                "truncated Maxwellian mass {mass:.12} outside [1 - {tol_mass:.1e}, 1]"
            )));
        }
        Ok(mass)
    }

    /// Index of the node mirrored through the origin.
    pub fn mirror(&self, j: usize) -> usize {
        let mut rem = j;
        let mut digits = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            digits[a] = self.n - 1 - rem % self.n;
            rem /= self.n;
        }
        digits.iter().fold(0, |acc, &k| acc * self.n + k)
    }

    /// Neighbor along `axis`, `None` when it leaves the box.
    pub fn neighbor(&self, j: usize, axis: usize, shift: isize) -> Option<usize> {
        let stride = self.n.pow((self.dim - 1 - axis) as u32);
        let k = (j / stride) % self.n;
        let moved = k as isize + shift;
        if moved < 0 || moved >= self.n as isize {
            return None;
        }
        Some((j as isize + shift * stride as isize) as usize)
    }

    /// Central-difference matrix for `d/dv_axis`, acting on row vectors
    /// (`row * D`). Values outside the box are taken as zero, matching the
    /// extension-by-zero convention for truncated velocity fields.
    pub fn difference_matrix(&self, axis: usize) -> Array2<f64> {
        let n = self.len();
        let inv = 1.0 / (2.0 * self.spacing());
        let mut d = Array2::zeros((n, n));
        for j in 0..n {
            if let Some(p) = self.neighbor(j, axis, 1) {
                d[[p, j]] += inv;
            }
            if let Some(m) = self.neighbor(j, axis, -1) {
                d[[m, j]] -= inv;
            }
        }
        d
    }

    /// Index of the box cell containing `v` together with linear
    /// interpolation weights over its `2^dim` corners; `None` outside.
    pub fn interpolation_stencil(&self, v: &[f64]) -> Option<Vec<(usize, f64)>> {
        let dv = self.spacing();
        let mut base = vec![0usize; self.dim];
        let mut frac = vec![0.0; self.dim];
        for a in 0..self.dim {
            let s = (v[a] + self.v_max) / dv;
            if !(s >= -1e-12 && s <= (self.n - 1) as f64 + 1e-12) {
                return None;
            }
            let s = s.clamp(0.0, (self.n - 1) as f64);
            let mut k = s.floor() as usize;
            if k == self.n - 1 {
                k -= 1;
            }
            base[a] = k;
            frac[a] = s - k as f64;
        }
        let mut out = Vec::with_capacity(1 << self.dim);
        for corner in 0..(1usize << self.dim) {
            let mut idx = 0;
            let mut w = 1.0;
            for a in 0..self.dim {
                let bit = (corner >> (self.dim - 1 - a)) & 1;
                idx = idx * self.n + base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                out.push((idx, w));
            }
        }
        Some(out)
    }

    /// Whether `v` lies inside the box with all coordinates at most `half_width`.
    pub fn inside_box(v: ndarray::ArrayView1<'_, f64>, half_width: f64) -> bool {
        v.iter().all(|c| c.abs() <= half_width + 1e-12)
    }
}

/// Spatial and velocity grids of one phase-space discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub x: SpatialGrid,
    pub v: VelocityGrid,
}

impl PhaseGrid {
    pub fn new(x: SpatialGrid, v: VelocityGrid) -> Result<Self> {
        if x.dim() != v.dim() {
            return Err(Error::InvalidGrid(format!(
                "dim_x = {} differs from dim_v = {}",
                x.dim(),
                v.dim()
            )));
        }
        Ok(Self { x, v })
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x.len(), self.v.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_wrap() {
        let g = SpatialGrid::new(2, 5).unwrap();
        let idx = g.flat_index(&[4, 0]);
        assert_eq!(g.multi_index(g.neighbor(idx, 0, 1)), vec![0, 0]);
        assert_eq!(g.multi_index(g.neighbor(idx, 1, -1)), vec![4, 4]);
        assert_eq!(g.neighbor(idx, 0, 5), idx);
        assert!((g.spacing() - 2.0 * PI / 5.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(SpatialGrid::new(1, 3).is_err());
        assert!(VelocityGrid::new(1, 7, 8.0).is_err());
        assert!(VelocityGrid::new(4, 16, 8.0).is_err());
        assert!(VelocityGrid::new(1, 16, -1.0).is_err());
        assert!(PhaseGrid::new(
            SpatialGrid::new(1, 8).unwrap(),
            VelocityGrid::new(2, 8, 6.0).unwrap()
        )
        .is_err());
    }

    #[test]
    fn velocity_grid_symmetry_and_mass() {
        for dim in 1..=2 {
            let g = VelocityGrid::new(dim, 32, 8.0).unwrap();
            for j in 0..g.len() {
                let m = g.mirror(j);
                for a in 0..dim {
                    assert_eq!(g.nodes()[[j, a]], -g.nodes()[[m, a]]);
                }
                assert!(g.weights()[j] > 0.0);
            }
            let mass = g.check_mass(1e-10).unwrap();
            assert!(mass <= 1.0 + 1e-12 && mass > 1.0 - 1e-10);
        }
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let g = VelocityGrid::new(2, 9, 4.0).unwrap();
        let f = |v: &[f64]| 1.0 + 2.0 * v[0] - 0.5 * v[1];
        let p = [0.37, -1.91];
        let st = g.interpolation_stencil(&p).unwrap();
        let val: f64 = st
            .iter()
            .map(|&(j, w)| w * f(&[g.nodes()[[j, 0]], g.nodes()[[j, 1]]]))
            .sum();
        assert!((val - f(&p)).abs() < 1e-12);
        assert!(g.interpolation_stencil(&[4.5, 0.0]).is_none());
    }
}

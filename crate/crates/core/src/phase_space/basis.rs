use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::grid::{maxwellian, VelocityGrid};
use crate::error::{Error, Result};

/// Default Gram tolerance for the discrete fluid basis.
pub const DEFAULT_TOL_GRAM: f64 = 1e-8;

/// Polynomial part of the collision invariants at `v`:
/// `1, v_1..v_d, (|v|^2 - d) / sqrt(2 d)`.
pub fn invariant_polynomials(v: &[f64]) -> Vec<f64> {
    let d = v.len();
    let mut out = Vec::with_capacity(d + 2);
    out.push(1.0);
    out.extend_from_slice(v);
    let sq: f64 = v.iter().map(|c| c * c).sum();
    out.push((sq - d as f64) / (2.0 * d as f64).sqrt());
    out
}

/// `sqrt(M(v))`, the weight of the linearization.
pub fn sqrt_maxwellian(v: &[f64]) -> f64 {
    let sq: f64 = v.iter().map(|c| c * c).sum();
    maxwellian(sq, v.len()).sqrt()
}

/// Orthonormal basis `{phi_i M}` of the null space of the collision operator,
/// sampled on a velocity grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluidBasis {
    dim: usize,
    /// `(dim + 2) x N_v`, row `i` holds `phi_i(v_j) M(v_j)`.
    values: Array2<f64>,
    sqrt_maxwellian: Array1<f64>,
    weights: Array1<f64>,
    gram: Array2<f64>,
    tol_gram: f64,
}

impl FluidBasis {
    pub fn new(vgrid: &VelocityGrid) -> Result<Self> {
        Self::with_tolerance(vgrid, DEFAULT_TOL_GRAM)
    }

    pub fn with_tolerance(vgrid: &VelocityGrid, tol_gram: f64) -> Result<Self> {
        let dim = vgrid.dim();
        let nb = dim + 2;
        let nv = vgrid.len();
        let mut values = Array2::zeros((nb, nv));
        let mut sqrt_m = Array1::zeros(nv);
        for j in 0..nv {
            let v: Vec<f64> = vgrid.node(j).to_vec();
            let m = sqrt_maxwellian(&v);
            sqrt_m[j] = m;
            for (i, p) in invariant_polynomials(&v).into_iter().enumerate() {
                values[[i, j]] = p * m;
            }
        }
        let weights = vgrid.weights().clone();
        let weighted = &values * &weights;
        let gram = weighted.dot(&values.t());
        let mut defect: f64 = 0.0;
        for i in 0..nb {
            for k in 0..nb {
                let target = if i == k { 1.0 } else { 0.0 };
                defect = defect.max((gram[[i, k]] - target).abs());
            }
        }
        if defect > tol_gram {
            return Err(Error::GramNotOrthonormal { defect, tol: tol_gram });
        }
        Ok(Self { dim, values, sqrt_maxwellian: sqrt_m, weights, gram, tol_gram })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of collision invariants, `dim + 2`.
    pub fn len(&self) -> usize {
        self.dim + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn sqrt_maxwellian(&self) -> &Array1<f64> {
        &self.sqrt_maxwellian
    }

    pub fn gram(&self) -> &Array2<f64> {
        &self.gram
    }

    pub fn tol_gram(&self) -> f64 {
        self.tol_gram
    }

    /// Largest deviation of the discrete Gram matrix from the identity.
    pub fn gram_defect(&self) -> f64 {
        let n = self.len();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for k in 0..n {
                let t = if i == k { 1.0 } else { 0.0 };
                d = d.max((self.gram[[i, k]] - t).abs());
            }
        }
        d
    }

    /// `phi_i(v) M(v)` at an arbitrary velocity.
    pub fn eval(&self, v: &[f64]) -> Vec<f64> {
        let m = sqrt_maxwellian(v);
        invariant_polynomials(v).into_iter().map(|p| p * m).collect()
    }

    /// `d/dv_a [phi_i(v) M(v)]`, returned as `grad[i][a]`.
    pub fn eval_grad(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let d = v.len();
        let m = sqrt_maxwellian(v);
        let poly = invariant_polynomials(v);
        let norm = (2.0 * d as f64).sqrt();
        (0..d + 2)
            .map(|i| {
                (0..d)
                    .map(|a| {
                        let dpoly = match i {
                            0 => 0.0,
                            i if i <= d => {
                                if i - 1 == a {
                                    1.0
                                } else {
                                    0.0
                                }
                            }
                            _ => 2.0 * v[a] / norm,
                        };
                        // d/dv_a M = -v_a / 2 M
                        m * (dpoly - 0.5 * v[a] * poly[i])
                    })
                    .collect()
            })
            .collect()
    }

    /// Moments `<h, phi_i M>` of a single velocity profile.
    pub fn moments_of(&self, h: ndarray::ArrayView1<'_, f64>) -> Array1<f64> {
        let wh = &h * &self.weights;
        self.values.dot(&wh)
    }

    /// Matrix `I - W Phi^T G^{-1} Phi` applied to row vectors: `g_row * Q`
    /// removes the fluid component of `g`. The Gram correction keeps `Q` an
    /// exact projector on the grid.
    pub fn complement_projector(&self) -> Array2<f64> {
        let nv = self.weights.len();
        let wp = self.moment_matrix();
        let ginv_phi = crate::linalg::solve(&self.gram, &self.values).expect("Gram matrix near the identity");
        Array2::eye(nv) - wp.dot(&ginv_phi)
    }

    /// Matrix `W Phi^T` (`N_v x (dim+2)`): `h_row * C` gives the moments.
    pub fn moment_matrix(&self) -> Array2<f64> {
        (&self.values * &self.weights).t().to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_invariant_in_three_dimensions() {
        let v = [0.3, -1.2, 2.0];
        let p = invariant_polynomials(&v);
        let sq = 0.09 + 1.44 + 4.0;
        assert!((p[4] - (sq - 3.0) / 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(&p[1..4], &v);
    }

    #[test]
    fn gram_is_identity_on_default_grid() {
        let vg = VelocityGrid::new(1, 64, 8.0).unwrap();
        let b = FluidBasis::new(&vg).unwrap();
        assert!(b.gram_defect() < 1e-10);
        // first diagonal entry is the truncated mass
        assert!((b.gram()[[0, 0]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let vg = VelocityGrid::new(1, 8, 2.0).unwrap();
        match FluidBasis::new(&vg) {
            Err(Error::GramNotOrthonormal { defect, .. }) => assert!(defect > 1e-8),
            other => panic!("expected GramNotOrthonormal, got {other:?}"),
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let vg = VelocityGrid::new(2, 32, 8.0).unwrap();
        let b = FluidBasis::new(&vg).unwrap();
        let v = [0.7, -0.4];
        let g = b.eval_grad(&v);
        let h = 1e-6;
        for a in 0..2 {
            let mut vp = v;
            let mut vm = v;
            vp[a] += h;
            vm[a] -= h;
            let fp = b.eval(&vp);
            let fm = b.eval(&vm);
            for i in 0..4 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - g[i][a]).abs() < 1e-8, "i={i} a={a}");
            }
        }
    }
}

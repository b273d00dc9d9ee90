use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::GridFunction;

/// Which discretization produced a collision matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    BgkSurrogate,
    BoltzmannQuadrature,
}

/// Dense linearized collision operator on the velocity nodes.
///
/// Matrices act on column vectors of nodal values: `(L h)_j = sum_l L[j,l] h_l`.
/// The operator is self-adjoint for the weighted product `sum_j w_j f_j g_j`.
#[derive(Debug, Clone)]
pub struct CollisionMatrix {
    pub backend: Backend,
    pub l: Array2<f64>,
    pub k: Array2<f64>,
    pub lambda: Array2<f64>,
    pub nu: Array1<f64>,
    pub weights: Array1<f64>,
    /// Weighted symmetry defect before symmetrization.
    pub assembly_sym_defect: f64,
    /// Post-collisional velocities that left the box and were dropped.
    pub out_of_domain: usize,
    pub total_collisions: usize,
    /// Largest `|L (phi_i M)|` before the conservative correction.
    pub conservation_defect: f64,
}

impl CollisionMatrix {
    pub(crate) fn from_l_and_nu(
        backend: Backend,
        l: Array2<f64>,
        nu: Array1<f64>,
        weights: Array1<f64>,
    ) -> Self {
        let lambda = Array2::from_diag(&nu);
        let k = &l + &lambda;
        let mut m = Self {
            backend,
            l,
            k,
            lambda,
            nu,
            weights,
            assembly_sym_defect: 0.0,
            out_of_domain: 0,
            total_collisions: 0,
            conservation_defect: 0.0,
        };
        m.assembly_sym_defect = m.sym_defect();
        m
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// `W^{1/2} L W^{-1/2}`, symmetric when `L` is weighted self-adjoint.
    pub fn symmetric_form(&self) -> Array2<f64> {
        similarity(&self.l, &self.weights)
    }

    /// Largest entry of `S - S^T` for the symmetric form `S`.
    pub fn sym_defect(&self) -> f64 {
        let s = self.symmetric_form();
        let n = s.nrows();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                d = d.max((s[[i, j]] - s[[j, i]]).abs());
            }
        }
        d
    }

    /// Replaces `L` by its weighted self-adjoint part and rebuilds `K`.
    pub fn symmetrize(&mut self) {
        let s = self.symmetric_form();
        let sym = (&s + &s.t()) * 0.5;
        let n = sym.nrows();
        let mut l = Array2::zeros((n, n));
        for i in 0..n {
            let ri = self.weights[i].sqrt();
            for j in 0..n {
                l[[i, j]] = sym[[i, j]] * self.weights[j].sqrt() / ri;
            }
        }
        self.k = &l + &self.lambda;
        self.l = l;
    }

    /// Applies `L` to a single velocity profile.
    pub fn apply_vec(&self, h: ndarray::ArrayView1<'_, f64>) -> Array1<f64> {
        self.l.dot(&h)
    }

    /// Applies `L` to every row (spatial node) of an `N_x x N_v` array.
    pub fn apply_rows(&self, h: &Array2<f64>) -> Array2<f64> {
        h.dot(&self.l.t())
    }

    pub fn apply(&self, h: &GridFunction) -> Result<GridFunction> {
        if h.values().ncols() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "collision matrix of size {} applied to {} velocity nodes",
                self.len(),
                h.values().ncols()
            )));
        }
        h.with_values(self.apply_rows(h.values()))
    }

    /// Weighted product `sum_j w_j (L h)_j h_j`.
    pub fn quadratic_form(&self, h: ndarray::ArrayView1<'_, f64>) -> f64 {
        let lh = self.l.dot(&h);
        lh.iter().zip(h.iter()).zip(self.weights.iter()).map(|((a, b), w)| a * b * w).sum()
    }
}

pub(crate) fn similarity(m: &Array2<f64>, w: &Array1<f64>) -> Array2<f64> {
    let n = m.nrows();
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        let ri = w[i].sqrt();
        for j in 0..n {
            s[[i, j]] = ri * m[[i, j]] / w[j].sqrt();
        }
    }
    s
}

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::gpc::SgCoupling;
use crate::phase_space::{FluidBasis, VelocityGrid};

/// Constant velocity-space matrices of the micro-macro system, all in row
/// convention (`N_x x N_v` fields are multiplied from the right).
#[derive(Debug, Clone)]
pub struct VelocityOperators {
    pub dim: usize,
    pub n_v: usize,
    /// `Phi`, `(d+2) x N_v`: `m * Phi` reconstructs `h~`.
    pub phi: Arc<Array2<f64>>,
    /// `W Phi^T`, `N_v x (d+2)`: `h * C` gives the moments.
    pub moment: Arc<Array2<f64>>,
    /// `I - W Phi^T G^{-1} Phi`: removes the fluid part.
    pub q: Arc<Array2<f64>>,
    /// `A^a[i,k] = <v_a phi_i phi_k M^2>`.
    pub flux_macro: Vec<Arc<Array2<f64>>>,
    /// `F^a = diag(v_a) W Phi^T`: `g * F^a = <v_a g phi M>`.
    pub flux_micro: Vec<Arc<Array2<f64>>>,
    /// `T^a = Phi diag(v_a) Q`: `(I - pi)(v_a h~)` from moments.
    pub transport_macro: Vec<Arc<Array2<f64>>>,
    /// `V^a = diag(v_a) Q`.
    pub transport_micro: Vec<Arc<Array2<f64>>>,
    /// `diag(v_a)`.
    pub velocity: Vec<Arc<Array2<f64>>>,
    /// Central differences in `v_a` with zero extension.
    pub dv: Vec<Arc<Array2<f64>>>,
    pub weights: Arc<Array1<f64>>,
}

impl VelocityOperators {
    pub fn new(vgrid: &VelocityGrid, basis: &FluidBasis) -> Self {
        let d = vgrid.dim();
        let phi = basis.values().clone();
        let moment = basis.moment_matrix();
        let q = basis.complement_projector();
        let w = vgrid.weights();
        let mut flux_macro = Vec::new();
        let mut flux_micro = Vec::new();
        let mut transport_macro = Vec::new();
        let mut transport_micro = Vec::new();
        let mut velocity = Vec::new();
        let mut dv = Vec::new();
        for a in 0..d {
            let va = vgrid.nodes().column(a).to_owned();
            let diag = Array2::from_diag(&va);
            let phiv = &phi * &va;
            flux_macro.push(Arc::new((&phiv * w).dot(&phi.t())));
            flux_micro.push(Arc::new(diag.dot(&moment)));
            transport_macro.push(Arc::new(phiv.dot(&q)));
            transport_micro.push(Arc::new(diag.dot(&q)));
            velocity.push(Arc::new(diag));
            dv.push(Arc::new(vgrid.difference_matrix(a)));
        }
        Self {
            dim: d,
            n_v: vgrid.len(),
            phi: Arc::new(phi),
            moment: Arc::new(moment),
            q: Arc::new(q),
            flux_macro,
            flux_micro,
            transport_macro,
            transport_micro,
            velocity,
            dv,
            weights: Arc::new(w.clone()),
        }
    }

    pub fn n_moments(&self) -> usize {
        self.dim + 2
    }
}

/// Transposed Galerkin blocks `L_ik^T`, ready for row-convention products.
#[derive(Debug, Clone)]
pub struct CollisionOps {
    pub k: usize,
    blocks_t: Vec<Option<Arc<Array2<f64>>>>,
}

impl CollisionOps {
    pub fn new(coupling: &SgCoupling) -> Self {
        let k = coupling.k;
        let mut blocks_t = Vec::with_capacity(k * k);
        for i in 0..k {
            for kk in 0..k {
                blocks_t.push(coupling.block(i, kk).map(|b| Arc::new(b.t().to_owned())));
            }
        }
        Self { k, blocks_t }
    }

    pub fn block_t(&self, i: usize, k: usize) -> Option<&Arc<Array2<f64>>> {
        self.blocks_t[i * self.k + k].as_ref()
    }
}

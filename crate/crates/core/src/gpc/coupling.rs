use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::basis::GpcBasis;
use crate::collision::{
    assemble_bgk_surrogate, assemble_component, assemble_factor, bgk_rate_slope, Backend,
    KernelSpec,
};
use crate::error::{Error, Result};
use crate::par;
use crate::phase_space::{FluidBasis, GridFunction, H1Field, h1_norm_sq, VelocityGrid};

const CHI_TOL: f64 = 1e-12;

/// Galerkin coupling `L_ik = delta_ik L[b0] + <z phi_i, phi_k> L[b1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgCoupling {
    pub k: usize,
    pub q_weight: u32,
    pub backend: Backend,
    pub z_factor: Vec<Vec<f64>>,
    pub chi: Vec<Vec<bool>>,
    /// Dense `N_v x N_v` blocks (column action) for every `chi_ik`, row-major in `(i, k)`.
    #[serde(skip)]
    blocks: Vec<Option<Array2<f64>>>,
    #[serde(skip)]
    weights: ndarray::Array1<f64>,
}

impl SgCoupling {
    pub fn block(&self, i: usize, k: usize) -> Option<&Array2<f64>> {
        self.blocks[i * self.k + k].as_ref()
    }

    pub fn n_v(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &ndarray::Array1<f64> {
        &self.weights
    }

    /// Rows applied per mode: `out_i = sum_k h_k L_ik^T` for `N_x x N_v` arrays.
    pub fn apply_rows(&self, h: &[Array2<f64>]) -> Vec<Array2<f64>> {
        par::map_range(self.k, |i| {
            let mut out = Array2::zeros(h[0].dim());
            for (kk, hk) in h.iter().enumerate() {
                if let Some(b) = self.block(i, kk) {
                    out = out + hk.dot(&b.t());
                }
            }
            out
        })
    }

    /// Stacked block matrix of size `K N_v`.
    pub fn dense(&self) -> Array2<f64> {
        let n = self.n_v();
        let mut m = Array2::zeros((self.k * n, self.k * n));
        for i in 0..self.k {
            for kk in 0..self.k {
                if let Some(b) = self.block(i, kk) {
                    m.slice_mut(ndarray::s![i * n..(i + 1) * n, kk * n..(kk + 1) * n]).assign(b);
                }
            }
        }
        m
    }

    /// Weighted symmetry defect of the stacked operator.
    pub fn sym_defect(&self) -> f64 {
        let m = self.dense();
        let n = self.n_v();
        let sw = |r: usize| self.weights[r % n].sqrt();
        let mut d: f64 = 0.0;
        for r in 0..m.nrows() {
            for c in (r + 1)..m.ncols() {
                let a = sw(r) * m[[r, c]] / sw(c);
                let b = sw(c) * m[[c, r]] / sw(r);
                d = d.max((a - b).abs());
            }
        }
        d
    }

    /// `chi` and the z-factor matrix as CSV rows `i,k,chi,z_factor`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,k,chi,z_factor")?;
        for i in 0..self.k {
            for kk in 0..self.k {
                writeln!(w, "{},{},{},{:e}", i + 1, kk + 1, self.chi[i][kk] as u8, self.z_factor[i][kk])?;
            }
        }
        Ok(())
    }
}

fn pattern(z: &[Vec<f64>], b0_zero: bool, b1_zero: bool) -> Result<Vec<Vec<bool>>> {
    let k = z.len();
    let mut chi = vec![vec![false; k]; k];
    for i in 0..k {
        for kk in 0..k {
            chi[i][kk] = (i == kk && !b0_zero) || (!b1_zero && z[i][kk].abs() > CHI_TOL);
            if chi[i][kk] && i.abs_diff(kk) > 1 {
                return Err(Error::BandwidthViolation { i: i + 1, k: kk + 1 });
            }
        }
    }
    Ok(chi)
}

/// The two kernel components `L[b0]`, `L[b1]` for a backend.
pub fn kernel_components(
    spec: &KernelSpec,
    vgrid: &VelocityGrid,
    fluid: &FluidBasis,
    backend: Backend,
) -> (Array2<f64>, Array2<f64>) {
    match backend {
        Backend::BgkSurrogate => {
            let l0 = assemble_bgk_surrogate(fluid).l;
            let l1 = &l0 * bgk_rate_slope(spec, vgrid.dim());
            (l0, l1)
        }
        Backend::BoltzmannQuadrature => {
            let l0 = assemble_factor(spec, vgrid, &spec.b0).l;
            let l1 = if spec.b1.is_zero() {
                Array2::zeros(l0.dim())
            } else {
                assemble_factor(spec, vgrid, &spec.b1).l
            };
            (l0, l1)
        }
    }
}

/// Builds the Galerkin blocks using the linearity of `b` in `z`.
pub fn assemble_sg_coupling(
    spec: &KernelSpec,
    basis: &GpcBasis,
    vgrid: &VelocityGrid,
    fluid: &FluidBasis,
    backend: Backend,
) -> Result<SgCoupling> {
    spec.validate()?;
    spec.check_margin(201)?;
    let z = basis.z_factor();
    let b1_zero = spec.b1.is_zero() || spec.c_z == 0.0;
    let chi = pattern(&z, spec.b0.is_zero(), b1_zero)?;
    let (l0, l1) = kernel_components(spec, vgrid, fluid, backend);
    let k = basis.k();
    let mut blocks = Vec::with_capacity(k * k);
    for i in 0..k {
        for kk in 0..k {
            if !chi[i][kk] {
                blocks.push(None);
                continue;
            }
            let mut b = &l1 * z[i][kk];
            if i == kk {
                b = b + &l0;
            }
            blocks.push(Some(b));
        }
    }
    Ok(SgCoupling {
        k,
        q_weight: spec.q_weight,
        backend,
        z_factor: z,
        chi,
        blocks,
        weights: vgrid.weights().clone(),
    })
}

/// Reference assembly integrating `L(z) phi_i phi_k` over the z rule, with
/// the operator reassembled at every node. Used to cross-check the linear
/// shortcut.
pub fn assemble_sg_coupling_quadrature(
    spec: &KernelSpec,
    basis: &GpcBasis,
    vgrid: &VelocityGrid,
    fluid: &FluidBasis,
    backend: Backend,
) -> Result<Vec<Vec<Array2<f64>>>> {
    spec.validate()?;
    let k = basis.k();
    let n = vgrid.len();
    let mut out = vec![vec![Array2::<f64>::zeros((n, n)); k]; k];
    for (&zq, &wq) in basis.z_nodes.iter().zip(&basis.z_weights) {
        let lz = match backend {
            Backend::BgkSurrogate => {
                let rate = 1.0 + bgk_rate_slope(spec, vgrid.dim()) * zq;
                assemble_bgk_surrogate(fluid).l * rate
            }
            Backend::BoltzmannQuadrature => {
                assemble_component(spec, vgrid, &|eta| spec.b(eta, zq)).l
            }
        };
        let phi = basis.eval(zq);
        for i in 0..k {
            for kk in 0..k {
                out[i][kk].scaled_add(wq * phi[i] * phi[kk], &lz);
            }
        }
    }
    Ok(out)
}

/// `out_i = sum_k L_ik h_k`, skipping entries outside the coupling pattern.
pub fn sg_apply(coupling: &SgCoupling, h_modes: &[GridFunction]) -> Result<Vec<GridFunction>> {
    if h_modes.len() != coupling.k {
        return Err(Error::ShapeMismatch(format!(
            "{} modes supplied for a {}-mode coupling",
            h_modes.len(),
            coupling.k
        )));
    }
    for h in h_modes {
        h_modes[0].check_same_grid(h)?;
        if h.values().ncols() != coupling.n_v() {
            return Err(Error::ShapeMismatch("velocity grid differs from coupling".into()));
        }
    }
    let vals: Vec<Array2<f64>> = h_modes.iter().map(|h| h.values().clone()).collect();
    coupling
        .apply_rows(&vals)
        .into_iter()
        .map(|v| h_modes[0].with_values(v))
        .collect()
}

/// Weight `i^{2q}` of mode `i` (1-based).
pub fn mode_weight(i: usize, q: u32) -> f64 {
    (i as f64).powi(2 * q as i32)
}

/// `E^K = sum_i i^{2q} |h_i|_{H^1}^2`.
pub fn energy_ek(modes: &[H1Field], q: u32) -> f64 {
    modes
        .iter()
        .enumerate()
        .map(|(i, f)| mode_weight(i + 1, q) * h1_norm_sq(f))
        .sum()
}

/// Warning text when `q` does not exceed `p_growth + 2`.
pub fn q_warning(q: u32, basis: &GpcBasis) -> Option<String> {
    if (q as f64) <= basis.p_growth + 2.0 {
        Some(format!(
            "QTooSmall: q = {q} does not exceed p_growth + 2 = {:.3}",
            basis.p_growth + 2.0
        ))
    } else {
        None
    }
}

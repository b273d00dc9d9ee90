use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::matrix::{Backend, CollisionMatrix};
use crate::error::{Error, Result};
use crate::linalg::{generalized_min, lambda_max, sym_eig};
use crate::phase_space::FluidBasis;

/// Default kernel tolerance for counting null eigenvalues.
pub const DEFAULT_TOL_KERNEL: f64 = 1e-6;
/// Regularization levels at which `C(delta)` is reported.
pub const K_REG_DELTAS: [f64; 4] = [0.05, 0.1, 0.5, 1.0];

/// Numerically measured coercivity constants of a discrete collision operator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HypoReport {
    pub backend: Backend,
    pub gamma: f64,
    pub n_v: usize,
    pub sym_defect: f64,
    pub assembly_sym_defect: f64,
    pub kernel_dim: usize,
    pub kernel_residual: f64,
    pub lambda_gap: f64,
    /// `nu_0 .. nu_4`.
    pub nu_constants: [f64; 5],
    /// `(delta, C(delta))`.
    pub k_reg: Vec<(f64, f64)>,
    pub c_pi: f64,
    pub c_pi1: f64,
    pub c_p: f64,
    pub c_l: f64,
    pub spectrum_min: f64,
    pub spectrum_max: f64,
    pub out_of_domain: usize,
}

/// Measures symmetry, kernel, spectral gap and the coercivity constants.
pub fn verify_hypocoercivity(
    l: &CollisionMatrix,
    basis: &FluidBasis,
    gamma: f64,
) -> Result<HypoReport> {
    verify_with_tolerance(l, basis, gamma, DEFAULT_TOL_KERNEL)
}

pub fn verify_with_tolerance(
    l: &CollisionMatrix,
    basis: &FluidBasis,
    gamma: f64,
    tol_kernel: f64,
) -> Result<HypoReport> {
    let nv = l.len();
    if basis.weights().len() != nv {
        return Err(Error::ShapeMismatch("basis and collision matrix sizes differ".into()));
    }
    let s = l.symmetric_form();
    let s_sym = (&s + &s.t()) * 0.5;
    let (eigs, _) = sym_eig(&s_sym);
    let scale = eigs.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1.0);
    let kernel_dim = eigs.iter().filter(|e| e.abs() < tol_kernel * scale).count();

    let kernel_residual = basis
        .values()
        .outer_iter()
        .map(|phi| {
            let r = l.apply_vec(phi);
            r.iter().zip(basis.weights()).map(|(a, w)| a * a * w).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);

    let speeds = speed_weights(basis, gamma);
    let lambda_gap = spectral_gap(&s_sym, basis, &speeds);
    if !(lambda_gap > 0.0) {
        return Err(Error::GapNonPositive(lambda_gap));
    }

    let nu_constants = nu_constants(l, basis, &speeds);
    let k_reg = regularization(l, basis);
    let (c_pi, c_pi1) = projection_constants(basis, gamma);

    // |<L h, g>| <= C_L |h|_Lambda |g|_Lambda
    let mut scaled = s_sym.clone();
    for i in 0..nv {
        for j in 0..nv {
            scaled[[i, j]] /= (speeds[i] * speeds[j]).sqrt();
        }
    }
    let (sc, _) = sym_eig(&scaled);
    let c_l = sc[0].abs().max(sc[sc.len() - 1].abs());

    Ok(HypoReport {
        backend: l.backend,
        gamma,
        n_v: nv,
        sym_defect: l.sym_defect(),
        assembly_sym_defect: l.assembly_sym_defect,
        kernel_dim,
        kernel_residual,
        lambda_gap,
        nu_constants,
        k_reg,
        c_pi,
        c_pi1,
        c_p: 1.0,
        c_l,
        spectrum_min: eigs[0],
        spectrum_max: eigs[eigs.len() - 1],
        out_of_domain: l.out_of_domain,
    })
}

/// `(1 + |v_j|)^gamma` at every node.
pub fn speed_weights(basis: &FluidBasis, gamma: f64) -> Array1<f64> {
    // |v| recovered from phi_1..phi_d, which equal v_a M
    let m = basis.sqrt_maxwellian();
    let d = basis.dim();
    Array1::from_iter((0..m.len()).map(|j| {
        let sq: f64 = (1..=d).map(|a| (basis.values()[[a, j]] / m[j]).powi(2)).sum();
        (1.0 + sq.sqrt()).powf(gamma)
    }))
}

/// `-max <L h, h> / |h_perp|_Lambda^2` over the orthogonal complement of the
/// fluid space, in symmetric coordinates.
fn spectral_gap(s_sym: &Array2<f64>, basis: &FluidBasis, speeds: &Array1<f64>) -> f64 {
    let nv = s_sym.nrows();
    let nb = basis.len();
    let w = basis.weights();
    // U: orthonormalized W^{1/2} Phi^T
    let mut u = Array2::zeros((nv, nb));
    for i in 0..nb {
        for j in 0..nv {
            u[[j, i]] = w[j].sqrt() * basis.values()[[i, j]];
        }
    }
    let qr = crate::linalg::to_na(&u).qr();
    let q = crate::linalg::from_na(&qr.q());
    let proj = Array2::<f64>::eye(nv) - q.dot(&q.t());
    let (pv, pvec) = sym_eig(&proj);
    let cols: Vec<usize> = (0..nv).filter(|&k| pv[k] > 0.5).collect();
    let mut v = Array2::zeros((nv, cols.len()));
    for (c, &k) in cols.iter().enumerate() {
        v.column_mut(c).assign(&pvec.column(k));
    }
    let a = -(v.t().dot(s_sym).dot(&v));
    let b = v.t().dot(&Array2::from_diag(speeds)).dot(&v);
    generalized_min(&a, &b)
}

fn nu_constants(l: &CollisionMatrix, basis: &FluidBasis, speeds: &Array1<f64>) -> [f64; 5] {
    let ratio: Vec<f64> = l.nu.iter().zip(speeds).map(|(n, s)| n / s).collect();
    let nu1 = ratio.iter().cloned().fold(f64::INFINITY, f64::min);
    let nu2 = ratio.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let smin = speeds.iter().cloned().fold(f64::INFINITY, f64::min);
    let nu0 = nu1 * smin;
    // <grad(nu h), grad h> >= nu1/2 |grad h|^2_Lambda - sup|grad nu|^2 / (2 nu1 s^2) |h|^2_Lambda
    let d = basis.dim();
    let n = basis.weights().len();
    let grid_h = grid_spacing(basis);
    let mut grad_sq = vec![0.0; n];
    for a in 0..d {
        let stride = (n as f64).powf(1.0 / d as f64).round() as usize;
        let st = stride.pow((d - 1 - a) as u32);
        for j in 0..n {
            let k = (j / st) % stride;
            let up = if k + 1 < stride { l.nu[j + st] } else { l.nu[j] };
            let dn = if k > 0 { l.nu[j - st] } else { l.nu[j] };
            let span = if k + 1 < stride && k > 0 { 2.0 } else { 1.0 };
            let g = (up - dn) / (span * grid_h);
            grad_sq[j] += g * g;
        }
    }
    let sup = grad_sq
        .iter()
        .zip(speeds)
        .map(|(g, s)| g / (s * s))
        .fold(0.0, f64::max);
    let nu3 = 0.5 * nu1;
    let nu4 = if sup == 0.0 { 0.0 } else { sup / (2.0 * nu1) };
    [nu0, nu1, nu2, nu3, nu4]
}

fn grid_spacing(basis: &FluidBasis) -> f64 {
    // adjacent nodes along the last axis differ by one spacing in v_d
    let m = basis.sqrt_maxwellian();
    let d = basis.dim();
    let v0 = basis.values()[[d, 0]] / m[0];
    let v1 = basis.values()[[d, 1]] / m[1];
    (v1 - v0).abs()
}

/// Difference matrices in column convention, derived from the grid spacing.
fn column_differences(basis: &FluidBasis) -> Vec<Array2<f64>> {
    let d = basis.dim();
    let n = basis.weights().len();
    let per = (n as f64).powf(1.0 / d as f64).round() as usize;
    let inv = 1.0 / (2.0 * grid_spacing(basis));
    (0..d)
        .map(|a| {
            let st = per.pow((d - 1 - a) as u32);
            let mut e = Array2::zeros((n, n));
            for j in 0..n {
                let k = (j / st) % per;
                if k + 1 < per {
                    e[[j, j + st]] += inv;
                }
                if k > 0 {
                    e[[j, j - st]] -= inv;
                }
            }
            e
        })
        .collect()
}

/// `C(delta)` with `<grad K h, grad h> <= C |h|^2 + delta |grad h|^2`.
fn regularization(l: &CollisionMatrix, basis: &FluidBasis) -> Vec<(f64, f64)> {
    let w = basis.weights();
    let n = w.len();
    let wm = Array2::from_diag(w);
    let mut form = Array2::<f64>::zeros((n, n));
    let mut gram = Array2::<f64>::zeros((n, n));
    for e in column_differences(basis) {
        let ew = e.t().dot(&wm).dot(&e);
        form = form + ew.dot(&l.k);
        gram = gram + ew;
    }
    let form = (&form + &form.t()) * 0.5;
    let scale = |m: &Array2<f64>| {
        Array2::from_shape_fn((n, n), |(i, j)| m[[i, j]] / (w[i] * w[j]).sqrt())
    };
    K_REG_DELTAS
        .iter()
        .map(|&delta| {
            let m = scale(&(&form - &(&gram * delta)));
            (delta, lambda_max(&m).max(0.0))
        })
        .collect()
}

/// `C_pi` and `C_pi1` from the closed-form basis gradients.
pub fn projection_constants(basis: &FluidBasis, gamma: f64) -> (f64, f64) {
    let d = basis.dim();
    let nb = basis.len();
    let w = basis.weights();
    let n = w.len();
    let m = basis.sqrt_maxwellian();
    let vel: Vec<Vec<f64>> = (0..n)
        .map(|j| (1..=d).map(|a| basis.values()[[a, j]] / m[j]).collect())
        .collect();
    let grads: Vec<Vec<Vec<f64>>> = vel.iter().map(|v| basis.eval_grad(v)).collect();
    let speeds = speed_weights(basis, gamma);

    let gram_of = |f: &dyn Fn(usize, usize) -> Vec<f64>| {
        let mut g = Array2::<f64>::zeros((nb, nb));
        for j in 0..n {
            let vals: Vec<Vec<f64>> = (0..nb).map(|i| f(i, j)).collect();
            for i in 0..nb {
                for k in 0..nb {
                    let s: f64 = vals[i].iter().zip(&vals[k]).map(|(a, b)| a * b).sum();
                    g[[i, k]] += w[j] * s;
                }
            }
        }
        g
    };
    let phi = basis.values();
    let c_pi = lambda_max(&gram_of(&|i, j| vec![speeds[j].sqrt() * phi[[i, j]]])).max(lambda_max(
        &gram_of(&|i, j| grads[j][i].iter().map(|g| speeds[j].sqrt() * g).collect()),
    ));

    let g_grad = gram_of(&|i, j| grads[j][i].clone());
    let g_vgrad = gram_of(&|i, j| {
        vec![grads[j][i].iter().zip(&vel[j]).map(|(g, v)| g * v).sum::<f64>()]
    });
    // pi(v_a phi_i M) = sum_k T^a_{ki} phi_k M
    let mut t = Array2::<f64>::zeros((nb, d * nb));
    for a in 0..d {
        for i in 0..nb {
            for k in 0..nb {
                let s: f64 = (0..n).map(|j| w[j] * vel[j][a] * phi[[i, j]] * phi[[k, j]]).sum();
                t[[k, a * nb + i]] = s;
            }
        }
    }
    let third = t.t().dot(&g_grad).dot(&t);
    let c_pi1 = lambda_max(&g_grad).max(lambda_max(&g_vgrad)).max(lambda_max(&third));
    (c_pi, c_pi1)
}

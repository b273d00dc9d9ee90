use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Orthonormal polynomial chaos for `z` uniform on `[-c_z, c_z]`.
///
/// Built by the discrete Stieltjes procedure on a Gauss rule, so the same code
/// serves any measure given by nodes and weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpcBasis {
    k: usize,
    c_z: f64,
    /// Probability-weighted quadrature, exact to degree `2K + 2`.
    pub z_nodes: Vec<f64>,
    pub z_weights: Vec<f64>,
    /// Recurrence `sqrt(b_{i+1}) phi_{i+1} = (z - a_i) phi_i - sqrt(b_i) phi_{i-1}`.
    alpha: Vec<f64>,
    beta: Vec<f64>,
    pub p_growth: f64,
}

impl GpcBasis {
    pub fn new(k: usize, c_z: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config { key: "gpc.k".into(), message: "need at least one mode".into() });
        }
        if !(c_z.is_finite() && c_z >= 0.0) {
            return Err(Error::Config { key: "kernel.c_z".into(), message: "must be non-negative".into() });
        }
        if c_z == 0.0 && k > 1 {
            return Err(Error::Config {
                key: "gpc.k".into(),
                message: "a deterministic kernel (c_z = 0) supports a single mode".into(),
            });
        }
        let nq = k + 2;
        let (x, w) = gauss_legendre(nq);
        let z_nodes: Vec<f64> = x.iter().map(|t| t * c_z).collect();
        let z_weights: Vec<f64> = w.iter().map(|t| 0.5 * t).collect();
        let (alpha, beta) = stieltjes(&z_nodes, &z_weights, k);
        let mut basis = Self { k, c_z, z_nodes, z_weights, alpha, beta, p_growth: 0.0 };
        basis.p_growth = basis.measure_growth(2001);
        Ok(basis)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c_z(&self) -> f64 {
        self.c_z
    }

    /// `phi_1(z) .. phi_K(z)`.
    pub fn eval(&self, z: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.k);
        out.push(1.0);
        if self.k == 1 {
            return out;
        }
        let mut prev = 0.0;
        let mut cur = 1.0;
        for i in 0..self.k - 1 {
            let next = ((z - self.alpha[i]) * cur - self.beta[i].sqrt() * prev) / self.beta[i + 1].sqrt();
            out.push(next);
            prev = cur;
            cur = next;
        }
        out
    }

    /// `int phi_i phi_j pi dz` by the stored rule.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let vals: Vec<Vec<f64>> = self.z_nodes.iter().map(|&z| self.eval(z)).collect();
        (0..self.k)
            .map(|i| {
                (0..self.k)
                    .map(|j| vals.iter().zip(&self.z_weights).map(|(v, w)| w * v[i] * v[j]).sum())
                    .collect()
            })
            .collect()
    }

    /// `<z phi_i, phi_k>`.
    pub fn z_factor(&self) -> Vec<Vec<f64>> {
        let vals: Vec<Vec<f64>> = self.z_nodes.iter().map(|&z| self.eval(z)).collect();
        (0..self.k)
            .map(|i| {
                (0..self.k)
                    .map(|j| {
                        vals.iter()
                            .zip(&self.z_nodes)
                            .zip(&self.z_weights)
                            .map(|((v, z), w)| w * z * v[i] * v[j])
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// `max |phi_i|` over a uniform scan of the support.
    pub fn sup_norms(&self, n_scan: usize) -> Vec<f64> {
        let mut sup = vec![0.0f64; self.k];
        for s in 0..n_scan {
            let z = if n_scan == 1 {
                0.0
            } else {
                -self.c_z + 2.0 * self.c_z * s as f64 / (n_scan - 1) as f64
            };
            for (m, v) in sup.iter_mut().zip(self.eval(z)) {
                *m = m.max(v.abs());
            }
        }
        sup
    }

    /// Least-squares slope of `log max|phi_i|` against `log i` over the upper
    /// half of the modes.
    fn measure_growth(&self, n_scan: usize) -> f64 {
        if self.k < 2 {
            return 0.0;
        }
        let sup = self.sup_norms(n_scan);
        let lo = self.k.div_ceil(2).max(1);
        let pts: Vec<(f64, f64)> =
            (lo..=self.k).map(|i| ((i as f64).ln(), sup[i - 1].ln())).collect();
        if pts.len() < 2 {
            return 0.0;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// Discrete Stieltjes procedure: recurrence coefficients of the orthonormal
/// polynomials of a discrete measure.
fn stieltjes(x: &[f64], w: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut alpha = vec![0.0; k];
    let mut beta = vec![0.0; k + 1];
    beta[0] = w.iter().sum();
    let mut p_prev = vec![0.0; n];
    let mut p_cur: Vec<f64> = vec![1.0 / beta[0].sqrt(); n];
    for i in 0..k {
        let num: f64 = (0..n).map(|q| w[q] * x[q] * p_cur[q] * p_cur[q]).sum();
        alpha[i] = num;
        let mut next: Vec<f64> = (0..n)
            .map(|q| (x[q] - alpha[i]) * p_cur[q] - beta[i].sqrt() * p_prev[q])
            .collect();
        let nrm: f64 = (0..n).map(|q| w[q] * next[q] * next[q]).sum();
        beta[i + 1] = nrm;
        if nrm > 0.0 {
            let s = nrm.sqrt();
            next.iter_mut().for_each(|v| *v /= s);
        }
        p_prev = p_cur;
        p_cur = next;
    }
    // phi_1 = 1 for a probability measure: beta[0] = 1
    beta[0] = 1.0;
    (alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_closed_forms() {
        let b = GpcBasis::new(3, 1.0).unwrap();
        for &z in &[-0.9, -0.2, 0.0, 0.4, 1.0] {
            let p = b.eval(z);
            assert!((p[0] - 1.0).abs() < 1e-14);
            assert!((p[1] - 3f64.sqrt() * z).abs() < 1e-13);
            assert!((p[2] - 5f64.sqrt() / 2.0 * (3.0 * z * z - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn growth_rate_of_normalized_legendre() {
        let b = GpcBasis::new(6, 1.0).unwrap();
        assert!(b.p_growth > 0.4 && b.p_growth < 0.6, "p = {}", b.p_growth);
    }
}

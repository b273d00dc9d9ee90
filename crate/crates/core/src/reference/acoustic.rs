use ndarray::{Array1, Array2};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eig;
use crate::micromacro::acoustic_flux_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcousticScheme {
    /// Exact propagation of every Fourier mode.
    Spectral,
    /// Flux-split first-order upwind differences with Heun steps.
    Upwind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcousticConfig {
    pub scheme: AcousticScheme,
    /// Step of the upwind scheme.
    pub dt: f64,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        Self { scheme: AcousticScheme::Spectral, dt: 1e-3 }
    }
}

/// Moments on a periodic 1-D grid at the requested times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticTrajectory {
    pub dim: usize,
    pub times: Vec<f64>,
    /// `n_x x (dim+2)` per time.
    pub m: Vec<Array2<f64>>,
}

impl AcousticTrajectory {
    /// `||rho||^2 + ||u||^2 + ||T||^2` per stored time (grid sum times `dx`).
    pub fn energies(&self) -> Vec<f64> {
        self.m
            .iter()
            .map(|m| {
                let dx = 2.0 * std::f64::consts::PI / m.nrows() as f64;
                m.iter().map(|x| x * x).sum::<f64>() * dx
            })
            .collect()
    }
}

/// Solves `dt m + dx m A = 0` with the flux matrix of the `dim`-dimensional
/// acoustic system restricted to variation along the first axis.
/// `m0` holds `n_x` rows on the grid `x_j = -pi + j dx`.
pub fn solve_acoustic(
    dim: usize,
    m0: &Array2<f64>,
    times: &[f64],
    cfg: &AcousticConfig,
) -> Result<AcousticTrajectory> {
    let nb = dim + 2;
    if m0.ncols() != nb {
        return Err(Error::ShapeMismatch(format!("{} moments for dimension {dim}", m0.ncols())));
    }
    let a = acoustic_flux_matrix(dim, 0);
    let m = match cfg.scheme {
        AcousticScheme::Spectral => spectral(&a, m0, times),
        AcousticScheme::Upwind => upwind(&a, m0, times, cfg.dt)?,
    };
    Ok(AcousticTrajectory { dim, times: times.to_vec(), m })
}

fn wavenumber(idx: usize, n: usize) -> f64 {
    if 2 * idx == n {
        0.0
    } else if idx <= n / 2 {
        idx as f64
    } else {
        idx as f64 - n as f64
    }
}

fn spectral(a: &Array2<f64>, m0: &Array2<f64>, times: &[f64]) -> Vec<Array2<f64>> {
    let (n, nb) = m0.dim();
    let (lam, r) = sym_eig(a);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    // hat[k][b]
    let mut hat = vec![vec![Complex64::new(0.0, 0.0); nb]; n];
    for b in 0..nb {
        let mut col: Vec<Complex64> = m0.column(b).iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fwd.process(&mut col);
        for (kk, c) in col.into_iter().enumerate() {
            hat[kk][b] = c;
        }
    }
    times
        .iter()
        .map(|&t| {
            let mut cols = vec![vec![Complex64::new(0.0, 0.0); n]; nb];
            for (kk, row) in hat.iter().enumerate() {
                let k = wavenumber(kk, n);
                // row * R diag(exp(-i k lam t)) R^T
                for e in 0..nb {
                    let proj: Complex64 = (0..nb).map(|b| row[b] * r[[b, e]]).sum();
                    let ph = Complex64::from_polar(1.0, -k * lam[e] * t) * proj;
                    for (b, col) in cols.iter_mut().enumerate() {
                        col[kk] += ph * r[[b, e]];
                    }
                }
            }
            let mut out = Array2::zeros((n, nb));
            for (b, mut col) in cols.into_iter().enumerate() {
                inv.process(&mut col);
                for p in 0..n {
                    out[[p, b]] = col[p].re / n as f64;
                }
            }
            out
        })
        .collect()
}

fn upwind(a: &Array2<f64>, m0: &Array2<f64>, times: &[f64], dt: f64) -> Result<Vec<Array2<f64>>> {
    let (n, nb) = m0.dim();
    let dx = 2.0 * std::f64::consts::PI / n as f64;
    let (lam, r) = sym_eig(a);
    let split = |sign: f64| {
        let d = Array1::from_iter(lam.iter().map(|&l| if sign * l > 0.0 { l } else { 0.0 }));
        (&r * &d).dot(&r.t())
    };
    let (ap, am) = (split(1.0), split(-1.0));
    let speed = lam.iter().fold(0.0f64, |s, l| s.max(l.abs()));
    if dt * speed > dx {
        return Err(Error::CflViolation { dt, bound: dx / speed });
    }
    let rate = |m: &Array2<f64>| {
        let mut back = Array2::zeros((n, nb));
        let mut fwd = Array2::zeros((n, nb));
        for p in 0..n {
            let (pm, pp) = ((p + n - 1) % n, (p + 1) % n);
            for b in 0..nb {
                back[[p, b]] = (m[[p, b]] - m[[pm, b]]) / dx;
                fwd[[p, b]] = (m[[pp, b]] - m[[p, b]]) / dx;
            }
        }
        -(back.dot(&ap) + fwd.dot(&am))
    };
    let mut out = Vec::with_capacity(times.len());
    let mut m = m0.clone();
    let mut t = 0.0;
    for &target in times {
        let steps = ((target - t) / dt - 1e-9).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = (target - t) / steps as f64;
            for _ in 0..steps {
                let k1 = rate(&m);
                let pred = &m + &(&k1 * h);
                let k2 = rate(&pred);
                m = &m + &((k1 + k2) * (0.5 * h));
            }
        }
        t = target;
        out.push(m.clone());
    }
    Ok(out)
}

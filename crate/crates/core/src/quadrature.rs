//! One-dimensional Gauss-Legendre rules and angular quadratures on spheres.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, refined by Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Directions and weights on the unit sphere `S^{dim-1}`.
///
/// The weights sum to the surface measure: 2 for the two-point set `S^0`,
/// `2 pi` on the circle, `4 pi` on the sphere.
#[derive(Debug, Clone)]
pub struct AngularQuadrature {
    pub dirs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl AngularQuadrature {
    /// `resolution` is ignored in 1-D; the number of angles in 2-D; and the
    /// number of polar nodes in 3-D (azimuth uses twice as many).
    pub fn new(dim: usize, resolution: usize) -> Self {
        match dim {
            1 => Self { dirs: vec![vec![-1.0], vec![1.0]], weights: vec![1.0, 1.0] },
            2 => {
                let n = resolution.max(4);
                let w = 2.0 * PI / n as f64;
                let dirs = (0..n)
                    .map(|k| {
                        let a = (k as f64 + 0.5) * w;
                        vec![a.cos(), a.sin()]
                    })
                    .collect();
                Self { dirs, weights: vec![w; n] }
            }
            3 => {
                let np = resolution.max(2);
                let na = 2 * np;
                let (mu, wmu) = gauss_legendre(np);
                let mut dirs = Vec::with_capacity(np * na);
                let mut weights = Vec::with_capacity(np * na);
                for (m, wm) in mu.iter().zip(wmu.iter()) {
                    let s = (1.0 - m * m).sqrt();
                    for k in 0..na {
                        let phi = (k as f64 + 0.5) * 2.0 * PI / na as f64;
                        dirs.push(vec![s * phi.cos(), s * phi.sin(), *m]);
                        weights.push(wm * 2.0 * PI / na as f64);
                    }
                }
                Self { dirs, weights }
            }
            _ => panic!("angular quadrature only for dim 1..=3"),
        }
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            }
        }
    }

    #[test]
    fn sphere_measures() {
        assert_eq!(AngularQuadrature::new(1, 0).measure(), 2.0);
        assert!((AngularQuadrature::new(2, 12).measure() - 2.0 * PI).abs() < 1e-13);
        let s = AngularQuadrature::new(3, 4);
        assert!((s.measure() - 4.0 * PI).abs() < 1e-12);
        // second moment of a coordinate over the sphere: 4 pi / 3
        let m2: f64 = s.dirs.iter().zip(&s.weights).map(|(d, w)| w * d[2] * d[2]).sum();
        assert!((m2 - 4.0 * PI / 3.0).abs() < 1e-12);
    }
}

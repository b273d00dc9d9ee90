use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::AngularQuadrature;

/// Angular factor `b(cos theta)` of the collision kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AngularFactor {
    Constant { value: f64 },
    /// `sum_k coeffs[k] * eta^k`.
    Polynomial { coeffs: Vec<f64> },
    /// Piecewise-linear table over increasing `eta` nodes covering `[-1, 1]`.
    Tabulated { eta: Vec<f64>, values: Vec<f64> },
}

impl AngularFactor {
    pub fn zero() -> Self {
        AngularFactor::Constant { value: 0.0 }
    }

    pub fn eval(&self, eta: f64) -> f64 {
        match self {
            AngularFactor::Constant { value } => *value,
            AngularFactor::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * eta + c)
            }
            AngularFactor::Tabulated { eta: xs, values } => {
                if xs.is_empty() {
                    return 0.0;
                }
                if eta <= xs[0] {
                    return values[0];
                }
                for k in 1..xs.len() {
                    if eta <= xs[k] {
                        let t = (eta - xs[k - 1]) / (xs[k] - xs[k - 1]);
                        return values[k - 1] * (1.0 - t) + values[k] * t;
                    }
                }
                values[values.len() - 1]
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            AngularFactor::Constant { value } => *value == 0.0,
            AngularFactor::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
            AngularFactor::Tabulated { values, .. } => values.iter().all(|c| *c == 0.0),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |m: String| Err(Error::Config { key: format!("kernel.{name}"), message: m });
        match self {
            AngularFactor::Constant { value } if !value.is_finite() => bad("not finite".into()),
            AngularFactor::Polynomial { coeffs } if coeffs.iter().any(|c| !c.is_finite()) => {
                bad("non-finite coefficient".into())
            }
            AngularFactor::Tabulated { eta, values } => {
                if eta.len() != values.len() || eta.len() < 2 {
                    return bad("table needs matching eta/values of length >= 2".into());
                }
                if eta.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("eta nodes must increase".into());
                }
                if eta[0] > -1.0 || eta[eta.len() - 1] < 1.0 {
                    return bad("table must cover [-1, 1]".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Collision kernel `B = C |v - v_*|^gamma (b0(cos theta) + z b1(cos theta))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSpec {
    pub gamma: f64,
    pub c: f64,
    pub b0: AngularFactor,
    pub b1: AngularFactor,
    /// Bound on the random variable, `|z| <= c_z`.
    pub c_z: f64,
    /// Exponent `q` of the `i^{2q}` mode weights.
    pub q_weight: u32,
    /// Angular resolution of the sphere rule (angles in 2-D, polar nodes in 3-D).
    pub angular_nodes: usize,
}

fn default_angular() -> usize {
    16
}

/// Surface measure of `S^{dim-1}` under the angular rule.
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    }
}

impl Default for KernelSpec {
    /// Maxwell-type kernel `b = 0.5 + 0.1 z`, `|z| <= 1`, `q = 1`.
    fn default() -> Self {
        Self {
            gamma: 0.0,
            c: 1.0,
            b0: AngularFactor::Constant { value: 0.5 },
            b1: AngularFactor::Constant { value: 0.1 },
            c_z: 1.0,
            q_weight: 1,
            angular_nodes: default_angular(),
        }
    }
}

impl KernelSpec {
    /// Maxwell molecules with unit angular mass and no randomness.
    pub fn maxwell_molecules(dim: usize) -> Self {
        Self {
            gamma: 0.0,
            c: 1.0,
            b0: AngularFactor::Constant { value: 1.0 / sphere_measure(dim) },
            b1: AngularFactor::zero(),
            c_z: 0.0,
            q_weight: 3,
            angular_nodes: default_angular(),
        }
    }

    /// `b(eta, z) = b0(eta) + z b1(eta)`.
    pub fn b(&self, eta: f64, z: f64) -> f64 {
        self.b0.eval(eta) + z * self.b1.eval(eta)
    }

    /// `2^q + 2`, the margin factor between `b0` and `|b1| C_z`.
    pub fn margin_factor(&self) -> f64 {
        2f64.powi(self.q_weight as i32) + 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, m: &str| {
            Err(Error::Config { key: format!("kernel.{key}"), message: m.into() })
        };
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1]");
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad("c", "must be positive");
        }
        if !(self.c_z.is_finite() && self.c_z >= 0.0) {
            return bad("c_z", "must be non-negative");
        }
        if self.angular_nodes == 0 {
            return bad("angular_nodes", "must be positive");
        }
        self.b0.validate("b0")?;
        self.b1.validate("b1")
    }

    /// Checks `b0(eta) >= (2^q + 2) |b1(eta)| C_z` on `n_check` points of `[-1, 1]`.
    pub fn check_margin(&self, n_check: usize) -> Result<()> {
        let n = n_check.max(2);
        for k in 0..n {
            let eta = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
            let b0 = self.b0.eval(eta);
            let required = self.margin_factor() * self.b1.eval(eta).abs() * self.c_z;
            if b0 < required {
                return Err(Error::KernelMarginViolated { eta, b0, required });
            }
        }
        Ok(())
    }

    pub fn check_z(&self, z: f64) -> Result<()> {
        if !z.is_finite() || z.abs() > self.c_z + 1e-14 {
            return Err(Error::RandomVariableOutOfRange { z, bound: self.c_z });
        }
        Ok(())
    }

    /// `int b(cos theta) dsigma` of an angular factor over `S^{dim-1}`,
    /// taking `theta` relative to a fixed axis.
    pub fn angular_mass(&self, factor: &AngularFactor, dim: usize) -> f64 {
        let q = AngularQuadrature::new(dim, self.angular_nodes);
        q.dirs
            .iter()
            .zip(&q.weights)
            .map(|(d, w)| w * factor.eval(d[dim - 1]))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_table() {
        let p = AngularFactor::Polynomial { coeffs: vec![1.0, 2.0, 3.0] };
        assert_eq!(p.eval(2.0), 1.0 + 4.0 + 12.0);
        let t = AngularFactor::Tabulated { eta: vec![-1.0, 0.0, 1.0], values: vec![0.0, 2.0, 4.0] };
        assert_eq!(t.eval(0.5), 3.0);
        assert_eq!(t.eval(-1.0), 0.0);
    }

    #[test]
    fn margin_detects_violation() {
        let mut k = KernelSpec::maxwell_molecules(1);
        k.c_z = 1.0;
        k.b0 = AngularFactor::Constant { value: 1.0 };
        k.b1 = AngularFactor::Constant { value: 0.1 };
        assert!(k.check_margin(33).is_ok());
        k.b1 = AngularFactor::Constant { value: 0.11 };
        assert!(matches!(k.check_margin(33), Err(Error::KernelMarginViolated { .. })));
    }

    #[test]
    fn unit_angular_mass() {
        for d in 1..=3 {
            let k = KernelSpec::maxwell_molecules(d);
            assert!((k.angular_mass(&k.b0, d) - 1.0).abs() < 1e-12);
        }
    }
}

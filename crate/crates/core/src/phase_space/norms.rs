use super::field::{weighted_sq, GridFunction, H1Field};

/// Discrete `L^2_{x,v}` norm.
pub fn l2_norm(h: &GridFunction) -> f64 {
    weighted_sq(h.grid(), h.values()).sqrt()
}

/// `|| h (1 + |v|)^{gamma/2} ||_{L^2_{x,v}}`.
pub fn lambda_norm(h: &GridFunction, gamma: f64) -> f64 {
    let vg = &h.grid().v;
    let factor: Vec<f64> = (0..vg.len())
        .map(|j| (1.0 + vg.speed_sq(j).sqrt()).powf(gamma))
        .collect();
    let wv = vg.weights();
    let mut s = 0.0;
    for row in h.values().outer_iter() {
        for j in 0..row.len() {
            s += wv[j] * factor[j] * row[j] * row[j];
        }
    }
    (s * h.grid().x.weight()).sqrt()
}

/// Squared H^1 norm `||h||^2 + ||grad_x h||^2 + ||grad_v h||^2`.
pub fn h1_norm_sq(f: &H1Field) -> f64 {
    let grid = f.value.grid();
    let mut s = weighted_sq(grid, f.value.values());
    for g in f.grad_x.iter().chain(f.grad_v.iter()) {
        s += weighted_sq(grid, g);
    }
    s
}

pub fn h1_norm(f: &H1Field) -> f64 {
    h1_norm_sq(f).sqrt()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::phase_space::{PhaseGrid, SpatialGrid, VelocityGrid};

    fn grid() -> Arc<PhaseGrid> {
        Arc::new(
            PhaseGrid::new(SpatialGrid::new(1, 16).unwrap(), VelocityGrid::new(1, 32, 8.0).unwrap())
                .unwrap(),
        )
    }

    #[test]
    fn lambda_norm_with_zero_exponent_is_l2() {
        let g = grid();
        let h = GridFunction::from_fn(g, |x, v| (x[0] * 3.0).sin() + v[0] * 0.1);
        assert!((lambda_norm(&h, 0.0) - l2_norm(&h)).abs() < 1e-14);
    }

    #[test]
    fn single_node_indicator() {
        let g = grid();
        let mut h = GridFunction::zeros(g.clone());
        let (p, j) = (3, 20);
        h.values_mut()[[p, j]] = 1.0;
        let v0 = g.v.nodes()[[j, 0]].abs();
        let expect = (1.0 + v0).powf(0.5) * (g.x.weight() * g.v.weights()[j]).sqrt();
        assert!((lambda_norm(&h, 1.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn constant_field_has_zero_x_gradient() {
        let g = grid();
        let h = GridFunction::from_fn(g.clone(), |_, _| 2.0);
        let f = H1Field::from_differences(h);
        assert!(f.grad_x[0].iter().all(|v| v.abs() < 1e-12));
        let expect = 4.0 * g.x.measure() * g.v.weights().sum();
        let l2 = weighted_sq(&g, f.value.values());
        assert!((l2 - expect).abs() < 1e-10 * expect);
    }
}

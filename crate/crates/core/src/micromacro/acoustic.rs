use ndarray::Array2;

/// Temperature coupling of the acoustic system, `sqrt(2 / d)`.
pub fn temperature_coupling(dim: usize) -> f64 {
    (2.0 / dim as f64).sqrt()
}

/// Analytic flux matrix `A^a` of the acoustic system (symmetric, row
/// convention): `dt m + sum_a dx_a m A^a = 0`.
pub fn acoustic_flux_matrix(dim: usize, axis: usize) -> Array2<f64> {
    let nb = dim + 2;
    let c_t = temperature_coupling(dim);
    let mut a = Array2::zeros((nb, nb));
    a[[0, 1 + axis]] = 1.0;
    a[[1 + axis, 0]] = 1.0;
    a[[1 + axis, nb - 1]] = c_t;
    a[[nb - 1, 1 + axis]] = c_t;
    a
}

/// Sound speed `sqrt(1 + c_T^2)`.
pub fn sound_speed(dim: usize) -> f64 {
    (1.0 + 2.0 / dim as f64).sqrt()
}

/// `(dt rho, dt u, dt T) = (-div u, -grad(rho + c_T T), -c_T div u)` for
/// `N_x x (d+2)` moment gradients.
pub fn acoustic_rhs(m_x: &[Array2<f64>]) -> Array2<f64> {
    let dim = m_x.len();
    let mut out = Array2::zeros(m_x[0].dim());
    for (a, g) in m_x.iter().enumerate() {
        out = out - g.dot(&acoustic_flux_matrix(dim, a));
    }
    out
}

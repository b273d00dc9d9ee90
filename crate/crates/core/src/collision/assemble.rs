use ndarray::{Array1, Array2};

use super::kernel::{AngularFactor, KernelSpec};
use super::matrix::{Backend, CollisionMatrix};
use crate::error::{Error, Result};
use crate::par;
use crate::phase_space::{invariant_polynomials, sqrt_maxwellian, FluidBasis, VelocityGrid};
use crate::quadrature::AngularQuadrature;

const MARGIN_CHECK_POINTS: usize = 201;

/// Weighted orthogonal projector onto `span{phi_i M}` acting on column
/// vectors, computed with the inverse discrete Gram matrix so that it is an
/// exact projector on the grid.
pub fn fluid_projector(vgrid: &VelocityGrid) -> Array2<f64> {
    let nv = vgrid.len();
    let d = vgrid.dim();
    let nb = d + 2;
    let w = vgrid.weights();
    let mut phi = Array2::zeros((nb, nv));
    for j in 0..nv {
        let v = vgrid.node(j).to_vec();
        let m = sqrt_maxwellian(&v);
        for (i, p) in invariant_polynomials(&v).into_iter().enumerate() {
            phi[[i, j]] = p * m;
        }
    }
    let gram = (&phi * w).dot(&phi.t());
    let g = nalgebra::DMatrix::from_fn(nb, nb, |i, k| gram[[i, k]]);
    let ginv = g.try_inverse().expect("fluid Gram matrix is invertible");
    let ginv = Array2::from_shape_fn((nb, nb), |(i, k)| ginv[(i, k)]);
    // P[j, l] = sum_ik phi_i(j) Ginv_ik phi_k(l) w_l
    phi.t().dot(&ginv).dot(&(&phi * w))
}

/// Collision frequency of the angular factor `b` at each node: quadrature of
/// `C |v - v_*|^gamma b(cos theta) M(v_*)` over the grid and the sphere.
pub fn frequency_for(
    spec: &KernelSpec,
    vgrid: &VelocityGrid,
    b: &(dyn Fn(f64) -> f64 + Sync),
) -> Array1<f64> {
    let d = vgrid.dim();
    let quad = AngularQuadrature::new(d, spec.angular_nodes);
    let maxw = vgrid.maxwellian();
    let w = vgrid.weights();
    let nv = vgrid.len();
    let vals = par::map_range(nv, |j| {
        let vj = vgrid.node(j);
        let mut s = 0.0;
        for l in 0..nv {
            let (r, nhat) = relative(vj, vgrid.node(l));
            let phi = spec.c * radial(r, spec.gamma);
            if phi == 0.0 {
                continue;
            }
            let ang: f64 = quad
                .dirs
                .iter()
                .zip(&quad.weights)
                .map(|(sig, a)| a * b(dot(sig, &nhat)))
                .sum();
            s += w[l] * maxw[l] * phi * ang;
        }
        s
    });
    Array1::from(vals)
}

/// `nu(v_j, z)` for the kernel at a fixed value of the random variable.
pub fn collision_frequency(spec: &KernelSpec, vgrid: &VelocityGrid, z: f64) -> Result<Array1<f64>> {
    spec.validate()?;
    spec.check_z(z)?;
    let nu = frequency_for(spec, vgrid, &|eta| spec.b(eta, z));
    check_positive(&nu)?;
    Ok(nu)
}

fn check_positive(nu: &Array1<f64>) -> Result<()> {
    for (node, &value) in nu.iter().enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositiveFrequency { node, value });
        }
    }
    Ok(())
}

/// `L = P - I`: relaxation to the fluid projection with unit rate.
pub fn assemble_bgk_surrogate(basis: &FluidBasis) -> CollisionMatrix {
    let phi = basis.values();
    let w = basis.weights();
    let nv = w.len();
    let p = phi.t().dot(&(phi * w));
    let l = &p - &Array2::<f64>::eye(nv);
    CollisionMatrix::from_l_and_nu(Backend::BgkSurrogate, l, Array1::ones(nv), w.clone())
}

/// BGK rate `r(z) = 1 + beta z` with `beta` the ratio of angular masses of
/// `b1` and `b0`.
pub fn bgk_rate_slope(spec: &KernelSpec, dim: usize) -> f64 {
    let m0 = spec.angular_mass(&spec.b0, dim);
    if m0 == 0.0 {
        return 0.0;
    }
    spec.angular_mass(&spec.b1, dim) / m0
}

/// Quadrature assembly of the linearized Boltzmann operator at `z`.
///
/// In one velocity dimension elastic binary collisions only exchange the two
/// velocities, so the operator is replaced by the relaxation closure
/// `L = -(I - P) diag(nu) (I - P)` with the same quadrature frequency `nu`.
pub fn assemble_boltzmann_matrix(
    spec: &KernelSpec,
    vgrid: &VelocityGrid,
    z: f64,
) -> Result<CollisionMatrix> {
    spec.validate()?;
    spec.check_margin(MARGIN_CHECK_POINTS)?;
    spec.check_z(z)?;
    let m = assemble_component(spec, vgrid, &|eta| spec.b(eta, z));
    check_positive(&m.nu)?;
    Ok(m)
}

/// Assembly for an arbitrary angular function, without positivity checks.
/// Linear in `b`, which the Galerkin coupling relies on.
pub fn assemble_component(
    spec: &KernelSpec,
    vgrid: &VelocityGrid,
    b: &(dyn Fn(f64) -> f64 + Sync),
) -> CollisionMatrix {
    if vgrid.dim() == 1 {
        let mut m = relaxation_closure(spec, vgrid, b);
        m.symmetrize();
        return m;
    }
    let mut m = binary_collisions(spec, vgrid, b);
    m.symmetrize();
    // Interpolation and truncation break exact conservation; restore it by
    // compressing onto the complement of the invariants.
    let p = fluid_projector(vgrid);
    let nv = vgrid.len();
    let phi = p.clone();
    m.conservation_defect = (0..nv)
        .map(|c| m.l.dot(&phi.column(c)).iter().fold(0.0f64, |a, x| a.max(x.abs())))
        .fold(0.0, f64::max);
    let q = Array2::<f64>::eye(nv) - &p;
    m.l = q.dot(&m.l).dot(&q);
    m.symmetrize();
    m.k = &m.l + &m.lambda;
    m
}

/// Assembly for one angular factor of the kernel.
pub fn assemble_factor(spec: &KernelSpec, vgrid: &VelocityGrid, f: &AngularFactor) -> CollisionMatrix {
    assemble_component(spec, vgrid, &|eta| f.eval(eta))
}

fn relaxation_closure(
    spec: &KernelSpec,
    vgrid: &VelocityGrid,
    b: &(dyn Fn(f64) -> f64 + Sync),
) -> CollisionMatrix {
    let nu = frequency_for(spec, vgrid, b);
    let nv = vgrid.len();
    let p = fluid_projector(vgrid);
    let q = Array2::<f64>::eye(nv) - &p;
    let l = -(q.dot(&Array2::from_diag(&nu)).dot(&q));
    CollisionMatrix::from_l_and_nu(Backend::BoltzmannQuadrature, l, nu, vgrid.weights().clone())
}

fn binary_collisions(
    spec: &KernelSpec,
    vgrid: &VelocityGrid,
    b: &(dyn Fn(f64) -> f64 + Sync),
) -> CollisionMatrix {
    let d = vgrid.dim();
    let nv = vgrid.len();
    let quad = AngularQuadrature::new(d, spec.angular_nodes);
    let w = vgrid.weights();
    let maxw = vgrid.maxwellian();
    let sqm: Vec<f64> = maxw.iter().map(|m| m.sqrt()).collect();

    // each row: (L row, nu_j, dropped, attempted)
    let rows = par::map_range(nv, |j| {
        let vj = vgrid.node(j);
        let mut row = vec![0.0; nv];
        let mut nu = 0.0;
        let mut dropped = 0usize;
        let mut attempted = 0usize;
        let mut vp = vec![0.0; d];
        let mut vps = vec![0.0; d];
        for l in 0..nv {
            let vl = vgrid.node(l);
            let (r, nhat) = relative(vj, vl);
            let phi = spec.c * radial(r, spec.gamma);
            if phi == 0.0 {
                continue;
            }
            for (sig, a) in quad.dirs.iter().zip(&quad.weights) {
                let bw = b(dot(sig, &nhat));
                if bw == 0.0 {
                    continue;
                }
                let weight = phi * bw * a * w[l];
                nu += weight * maxw[l];
                // h_* term
                row[l] -= weight * sqm[j] * sqm[l];
                for c in 0..d {
                    let mid = 0.5 * (vj[c] + vl[c]);
                    vp[c] = mid + 0.5 * r * sig[c];
                    vps[c] = mid - 0.5 * r * sig[c];
                }
                // gain terms, using M M_* = M' M'_*
                for (target, partner) in [(&vp, &vps), (&vps, &vp)] {
                    attempted += 1;
                    match vgrid.interpolation_stencil(target) {
                        Some(st) => {
                            let coef = weight * sqm[l] * sqrt_maxwellian(partner);
                            for (idx, c) in st {
                                row[idx] += coef * c;
                            }
                        }
                        None => dropped += 1,
                    }
                }
            }
        }
        row[j] -= nu;
        (row, nu, dropped, attempted)
    });

    let mut l = Array2::zeros((nv, nv));
    let mut nu = Array1::zeros(nv);
    let mut dropped = 0;
    let mut attempted = 0;
    for (j, (row, n, dr, at)) in rows.into_iter().enumerate() {
        l.row_mut(j).assign(&Array1::from(row));
        nu[j] = n;
        dropped += dr;
        attempted += at;
    }
    let mut m = CollisionMatrix::from_l_and_nu(Backend::BoltzmannQuadrature, l, nu, w.clone());
    m.out_of_domain = dropped;
    m.total_collisions = attempted;
    m
}

fn radial(r: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        1.0
    } else {
        r.powf(gamma)
    }
}

fn relative(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> (f64, Vec<f64>) {
    let diff: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    let r = diff.iter().map(|c| c * c).sum::<f64>().sqrt();
    if r == 0.0 {
        let mut e = vec![0.0; diff.len()];
        e[diff.len() - 1] = 1.0;
        (0.0, e)
    } else {
        (r, diff.into_iter().map(|c| c / r).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

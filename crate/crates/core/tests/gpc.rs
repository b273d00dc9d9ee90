use std::sync::Arc;

use kinetic_apnn::collision::*;
use kinetic_apnn::gpc::*;
use kinetic_apnn::phase_space::*;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_kernel(c_z: f64) -> KernelSpec {
    KernelSpec {
        gamma: 1.0,
        c: 1.0,
        b0: AngularFactor::Constant { value: 0.5 },
        b1: AngularFactor::Polynomial { coeffs: vec![0.02, 0.01] },
        c_z,
        q_weight: 3,
        angular_nodes: 8,
    }
}

#[test]
fn orthonormal_to_quadrature_precision() {
    for k in 1..=8 {
        let b = GpcBasis::new(k, 1.5).unwrap();
        let g = b.gram();
        for i in 0..k {
            for j in 0..k {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((g[i][j] - t).abs() < 1e-12);
            }
        }
        assert_eq!(b.eval(0.3)[0], 1.0);
    }
}

#[test]
fn legendre_against_gram_schmidt_oracle() {
    // Gram-Schmidt on monomials with exact moments of U[-1, 1]
    let mom = |n: usize| if n % 2 == 1 { 0.0 } else { 1.0 / (n as f64 + 1.0) };
    let k = 4;
    let mut polys: Vec<Vec<f64>> = Vec::new();
    let inner = |a: &Vec<f64>, b: &Vec<f64>| {
        let mut s = 0.0;
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                s += x * y * mom(i + j);
            }
        }
        s
    };
    for deg in 0..k {
        let mut p = vec![0.0; deg + 1];
        p[deg] = 1.0;
        for q in &polys {
            let c = inner(&p, q);
            for (i, qi) in q.iter().enumerate() {
                p[i] -= c * qi;
            }
        }
        let n = inner(&p, &p).sqrt();
        p.iter_mut().for_each(|x| *x /= n);
        polys.push(p);
    }
    let b = GpcBasis::new(k, 1.0).unwrap();
    for &z in &[-1.0, -0.37, 0.0, 0.81] {
        let v = b.eval(z);
        for (i, p) in polys.iter().enumerate() {
            let o: f64 = p.iter().enumerate().map(|(d, c)| c * z.powi(d as i32)).sum();
            assert!((v[i] - o).abs() < 1e-12);
        }
    }
}

#[test]
fn z_factor_entries() {
    let b = GpcBasis::new(5, 1.0).unwrap();
    let z = b.z_factor();
    assert!((z[0][1] - 1.0 / 3f64.sqrt()).abs() < 1e-14);
    for i in 0..5 {
        assert!(z[i][i].abs() < 1e-14);
        for k in 0..5 {
            assert!((z[i][k] - z[k][i]).abs() < 1e-14);
        }
    }
}

#[test]
fn chi_is_tridiagonal() {
    let vg = VelocityGrid::new(1, 32, 8.0).unwrap();
    let fb = FluidBasis::new(&vg).unwrap();
    let gb = GpcBasis::new(6, 1.0).unwrap();
    let c = assemble_sg_coupling(&random_kernel(1.0), &gb, &vg, &fb, Backend::BoltzmannQuadrature).unwrap();
    for i in 0..6 {
        for k in 0..6 {
            assert_eq!(c.chi[i][k], i.abs_diff(k) <= 1, "({i},{k})");
        }
    }
    // deterministic kernel: identity pattern
    let mut det = random_kernel(1.0);
    det.b1 = AngularFactor::zero();
    let c = assemble_sg_coupling(&det, &gb, &vg, &fb, Backend::BgkSurrogate).unwrap();
    for i in 0..6 {
        for k in 0..6 {
            assert_eq!(c.chi[i][k], i == k);
        }
    }
}

#[test]
fn analytic_blocks_match_z_quadrature() {
    let vg = VelocityGrid::new(1, 24, 7.0).unwrap();
    let fb = FluidBasis::with_tolerance(&vg, 1e-6).unwrap();
    let gb = GpcBasis::new(4, 1.0).unwrap();
    for backend in [Backend::BgkSurrogate, Backend::BoltzmannQuadrature] {
        let spec = random_kernel(1.0);
        let c = assemble_sg_coupling(&spec, &gb, &vg, &fb, backend).unwrap();
        let q = assemble_sg_coupling_quadrature(&spec, &gb, &vg, &fb, backend).unwrap();
        for i in 0..4 {
            for k in 0..4 {
                let a = c.block(i, k).cloned().unwrap_or_else(|| Array2::zeros((24, 24)));
                let diff = (&a - &q[i][k]).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(diff < 1e-10, "{backend:?} ({i},{k}) diff {diff}");
            }
        }
        assert!(c.sym_defect() < 1e-12);
    }
}

fn random_modes(grid: &Arc<PhaseGrid>, k: usize, seed: u64) -> Vec<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| {
            let v = Array2::from_shape_fn(grid.shape(), |_| rng.gen_range(-1.0..1.0));
            GridFunction::new(grid.clone(), v).unwrap()
        })
        .collect()
}

#[test]
fn single_mode_reduces_to_deterministic_operator() {
    let vg = VelocityGrid::new(1, 32, 8.0).unwrap();
    let fb = FluidBasis::new(&vg).unwrap();
    let grid = Arc::new(PhaseGrid::new(SpatialGrid::new(1, 8).unwrap(), vg.clone()).unwrap());
    let spec = KernelSpec { gamma: 1.0, ..KernelSpec::maxwell_molecules(1) };
    let gb = GpcBasis::new(1, 0.0).unwrap();
    let c = assemble_sg_coupling(&spec, &gb, &vg, &fb, Backend::BoltzmannQuadrature).unwrap();
    let l = assemble_boltzmann_matrix(&spec, &vg, 0.0).unwrap();
    let h = random_modes(&grid, 1, 3);
    let out = sg_apply(&c, &h).unwrap();
    let direct = l.apply(&h[0]).unwrap();
    let d = (out[0].values() - direct.values()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(d <= 1e-12);
}

#[test]
fn sparse_apply_matches_dense_sum() {
    let vg = VelocityGrid::new(1, 32, 8.0).unwrap();
    let fb = FluidBasis::new(&vg).unwrap();
    let grid = Arc::new(PhaseGrid::new(SpatialGrid::new(1, 6).unwrap(), vg.clone()).unwrap());
    let gb = GpcBasis::new(3, 1.0).unwrap();
    let spec = random_kernel(1.0);
    let c = assemble_sg_coupling(&spec, &gb, &vg, &fb, Backend::BoltzmannQuadrature).unwrap();
    let h = random_modes(&grid, 3, 4);
    let out = sg_apply(&c, &h).unwrap();
    let (l0, l1) = kernel_components(&spec, &vg, &fb, Backend::BoltzmannQuadrature);
    let z = gb.z_factor();
    for i in 0..3 {
        let mut acc = Array2::<f64>::zeros(grid.shape());
        for k in 0..3 {
            let mut b = &l1 * z[i][k];
            if i == k {
                b = b + &l0;
            }
            acc = acc + h[k].values().dot(&b.t());
        }
        let d = (&acc - out[i].values()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(d < 1e-14, "mode {i}: {d}");
    }
    let zero: Vec<GridFunction> = (0..3).map(|_| GridFunction::zeros(grid.clone())).collect();
    assert!(sg_apply(&c, &zero).unwrap().iter().all(|g| g.values().iter().all(|x| *x == 0.0)));
}

#[test]
fn energy_weights() {
    let vg = VelocityGrid::new(1, 16, 6.0).unwrap();
    let grid = Arc::new(PhaseGrid::new(SpatialGrid::new(1, 8).unwrap(), vg).unwrap());
    let h = GridFunction::from_fn(grid.clone(), |x, v| x[0].sin() + 0.1 * v[0]);
    let f = H1Field::from_differences(h);
    let n = h1_norm_sq(&f);
    let unit = f.scaled(1.0 / n.sqrt());
    assert!((energy_ek(std::slice::from_ref(&f), 3) - n).abs() < 1e-12 * n);
    let e = energy_ek(&[unit.clone(), unit.clone()], 3);
    assert!((e - 65.0).abs() < 1e-10);
    let e2 = energy_ek(&[unit.scaled(2.0), unit.scaled(2.0)], 3);
    assert!((e2 - 4.0 * e).abs() < 1e-10);
    let gb = GpcBasis::new(6, 1.0).unwrap();
    assert!(q_warning(3, &gb).is_none());
    assert!(q_warning(2, &gb).is_some());
}

#[test]
fn coupling_csv_export() {
    let vg = VelocityGrid::new(1, 16, 6.0).unwrap();
    let fb = FluidBasis::with_tolerance(&vg, 1e-5).unwrap();
    let gb = GpcBasis::new(2, 1.0).unwrap();
    let c = assemble_sg_coupling(&random_kernel(1.0), &gb, &vg, &fb, Backend::BgkSurrogate).unwrap();
    let mut buf = Vec::new();
    c.write_csv(&mut buf).unwrap();
    let s = String::from_utf8(buf).unwrap();
    assert_eq!(s.lines().count(), 5);
    assert!(s.starts_with("i,k,chi,z_factor"));
}

use std::f64::consts::PI;

use kinetic_apnn::collision::*;
use kinetic_apnn::phase_space::*;
use ndarray::Array1;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| rng.gen_range(-1.0..1.0)))
}

fn weighted_norm_sq(h: &Array1<f64>, w: &Array1<f64>) -> f64 {
    h.iter().zip(w).map(|(a, b)| a * a * b).sum()
}

fn perp(h: &Array1<f64>, basis: &FluidBasis) -> Array1<f64> {
    let m = basis.moments_of(h.view());
    h - &m.dot(basis.values())
}

#[test]
fn maxwell_molecules_frequency_is_constant_in_3d() {
    let vg = VelocityGrid::new(3, 12, 6.0).unwrap();
    let spec = KernelSpec { angular_nodes: 3, ..KernelSpec::maxwell_molecules(3) };
    let nu = collision_frequency(&spec, &vg, 0.0).unwrap();
    let mass = vg.maxwellian_mass();
    for n in nu.iter() {
        assert!((n - spec.c * mass).abs() < 1e-12, "nu = {n}");
    }
    assert!((mass - 1.0).abs() < 1e-6);
}

#[test]
fn frequency_at_zero_randomness_ignores_b1() {
    let vg = VelocityGrid::new(1, 33, 8.0).unwrap();
    let mut spec = KernelSpec::maxwell_molecules(1);
    spec.gamma = 1.0;
    spec.c_z = 1.0;
    let base = collision_frequency(&spec, &vg, 0.0).unwrap();
    spec.b1 = AngularFactor::Constant { value: 0.04 };
    let with_b1 = collision_frequency(&spec, &vg, 0.0).unwrap();
    assert_eq!(base, with_b1);
    let shifted = collision_frequency(&spec, &vg, 0.5).unwrap();
    assert!(shifted.iter().zip(base.iter()).all(|(a, b)| a > b));
}

#[test]
fn hard_sphere_frequency_at_rest() {
    // grid containing v = 0; nu(0) = C * (b(1) + b(-1)) * E|v_*|
    let vg = VelocityGrid::new(1, 127, 10.0).unwrap();
    let mut spec = KernelSpec::maxwell_molecules(1);
    spec.gamma = 1.0;
    spec.c = 1.3;
    let nu = collision_frequency(&spec, &vg, 0.0).unwrap();
    let mid = 63;
    assert!(vg.node(mid)[0].abs() < 1e-14);
    // quadrature oracle for E|v| at fine resolution
    let fine = 20001;
    let h = 20.0 / (fine - 1) as f64;
    let oracle: f64 = (0..fine)
        .map(|k| {
            let v = -10.0 + k as f64 * h;
            let w = if k == 0 || k == fine - 1 { 0.5 * h } else { h };
            w * v.abs() * (-0.5 * v * v).exp() / (2.0 * PI).sqrt()
        })
        .sum();
    assert!((oracle - (2.0 / PI).sqrt()).abs() < 1e-6);
    // the kink of |v| at the node limits the trapezoid rule to second order
    let dv = vg.spacing();
    assert!((nu[mid] - 1.3 * oracle).abs() < 1.3 * dv * dv / 6.0, "nu(0) = {}", nu[mid]);
}

#[test]
fn negative_frequency_is_rejected() {
    let vg = VelocityGrid::new(1, 16, 6.0).unwrap();
    let mut spec = KernelSpec::maxwell_molecules(1);
    spec.b0 = AngularFactor::Constant { value: -0.5 };
    assert!(matches!(
        collision_frequency(&spec, &vg, 0.0),
        Err(kinetic_apnn::Error::NonPositiveFrequency { .. })
    ));
}

#[test]
fn bgk_surrogate_identities() {
    let vg = VelocityGrid::new(1, 48, 8.0).unwrap();
    let basis = FluidBasis::new(&vg).unwrap();
    let l = assemble_bgk_surrogate(&basis);
    let w = basis.weights().clone();
    // kernel
    for phi in basis.values().outer_iter() {
        let r = l.apply_vec(phi);
        assert!(r.iter().all(|x| x.abs() < 1e-10));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let h = random_profile(&mut rng, vg.len());
        let hp = perp(&h, &basis);
        // L h_perp = -h_perp
        let lh = l.apply_vec(hp.view());
        assert!((&lh + &hp).iter().all(|x| x.abs() < 1e-10));
        let q = l.quadratic_form(h.view());
        let n = weighted_norm_sq(&hp, &w);
        assert!((q + n).abs() <= 1e-12 * n);
    }
    assert!(l.sym_defect() <= 1e-12);
}

#[test]
fn bgk_report_is_exact() {
    for dim in 1..=2 {
        let vg = VelocityGrid::new(dim, if dim == 1 { 48 } else { 24 }, 8.0).unwrap();
        let basis = FluidBasis::new(&vg).unwrap();
        let r = verify_hypocoercivity(&assemble_bgk_surrogate(&basis), &basis, 0.0).unwrap();
        assert_eq!(r.kernel_dim, dim + 2);
        assert!((r.lambda_gap - 1.0).abs() < 1e-10);
        assert!(r.sym_defect <= 1e-12);
        for c in &r.nu_constants[..3] {
            assert!((c - 1.0).abs() < 1e-14);
        }
        assert_eq!(r.c_p, 1.0);
    }
}

fn quadrature_1d(n: usize, gamma: f64) -> (VelocityGrid, FluidBasis, CollisionMatrix) {
    let vg = VelocityGrid::new(1, n, 8.0).unwrap();
    let basis = FluidBasis::with_tolerance(&vg, 1e-6).unwrap();
    let spec = KernelSpec { gamma, ..KernelSpec::maxwell_molecules(1) };
    let l = assemble_boltzmann_matrix(&spec, &vg, 0.0).unwrap();
    (vg, basis, l)
}

#[test]
fn quadrature_operator_conserves_and_dissipates() {
    for gamma in [0.0, 1.0] {
        let (vg, basis, l) = quadrature_1d(48, gamma);
        for phi in basis.values().outer_iter() {
            let r = l.apply_vec(phi);
            assert!(weighted_norm_sq(&r, vg.weights()).sqrt() <= 1e-6);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let h = random_profile(&mut rng, vg.len());
            assert!(l.quadratic_form(h.view()) <= 1e-14);
        }
        let r = verify_hypocoercivity(&l, &basis, gamma).unwrap();
        assert_eq!(r.kernel_dim, 3);
    }
}

#[test]
fn quadrature_gap_converges_under_refinement() {
    for gamma in [0.0, 1.0] {
        let gaps: Vec<f64> = [24, 48, 96]
            .iter()
            .map(|&n| {
                let (_, basis, l) = quadrature_1d(n, gamma);
                verify_hypocoercivity(&l, &basis, gamma).unwrap().lambda_gap
            })
            .collect();
        let d1 = (gaps[1] - gaps[0]).abs();
        let d2 = (gaps[2] - gaps[1]).abs();
        assert!(d2 <= 0.5 * d1 + 1e-12, "gaps {gaps:?}");
        assert!(d2 / gaps[2] < 0.05, "gaps {gaps:?}");
    }
}

#[test]
fn two_dimensional_collisions_are_conservative_and_dissipative() {
    let vg = VelocityGrid::new(2, 16, 6.0).unwrap();
    let basis = FluidBasis::with_tolerance(&vg, 1e-4).unwrap();
    let spec = KernelSpec { angular_nodes: 12, ..KernelSpec::maxwell_molecules(2) };
    let l = assemble_boltzmann_matrix(&spec, &vg, 0.0).unwrap();
    assert!(l.out_of_domain > 0 && l.out_of_domain < l.total_collisions);
    let r = verify_hypocoercivity(&l, &basis, 0.0).unwrap();
    assert_eq!(r.kernel_dim, 4);
    assert!(r.kernel_residual < 1e-10);
    assert!(r.spectrum_max < 1e-10);
    assert!(r.lambda_gap > 0.0);
}

#[test]
fn margin_violation_blocks_assembly() {
    let vg = VelocityGrid::new(1, 16, 6.0).unwrap();
    let mut spec = KernelSpec::maxwell_molecules(1);
    spec.c_z = 1.0;
    spec.b1 = AngularFactor::Constant { value: 0.2 };
    assert!(matches!(
        assemble_boltzmann_matrix(&spec, &vg, 0.0),
        Err(kinetic_apnn::Error::KernelMarginViolated { .. })
    ));
}

#[test]
fn report_serializes() {
    let vg = VelocityGrid::new(1, 32, 8.0).unwrap();
    let basis = FluidBasis::new(&vg).unwrap();
    let r = verify_hypocoercivity(&assemble_bgk_surrogate(&basis), &basis, 0.0).unwrap();
    let s = serde_json::to_string(&r).unwrap();
    let back: HypoReport = serde_json::from_str(&s).unwrap();
    assert_eq!(back, r);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // coercivity and the Lambda sandwich on random profiles
    #[test]
    fn coercivity_and_sandwich(seed in any::<u64>(), gamma in prop::sample::select(vec![0.0, 0.5, 1.0])) {
        let (vg, basis, l) = quadrature_1d(48, gamma);
        let r = verify_hypocoercivity(&l, &basis, gamma).unwrap();
        let speeds = speed_weights(&basis, gamma);
        let w = vg.weights();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            let h = random_profile(&mut rng, vg.len());
            let hp = perp(&h, &basis);
            let lam_sq: f64 = hp.iter().zip(w).zip(&speeds).map(|((a, b), s)| a * a * b * s).sum();
            prop_assert!(l.quadratic_form(h.view()) <= -(r.lambda_gap - 1e-9) * lam_sq);
            let l2 = weighted_norm_sq(&h, w);
            let lam: f64 = h.iter().zip(w).zip(&speeds).map(|((a, b), s)| a * a * b * s).sum();
            let nu_form: f64 = h.iter().zip(w).zip(&l.nu).map(|((a, b), n)| a * a * b * n).sum();
            let [n0, n1, n2, _, _] = r.nu_constants;
            prop_assert!(n0 * l2 <= n1 * lam * (1.0 + 1e-12));
            prop_assert!(n1 * lam <= nu_form * (1.0 + 1e-12));
            prop_assert!(nu_form <= n2 * lam * (1.0 + 1e-12));
        }
    }

    // projection bound with the reported C_pi
    #[test]
    fn projection_bound(seed in any::<u64>()) {
        let (vg, basis, _) = quadrature_1d(48, 1.0);
        let (c_pi, _) = projection_constants(&basis, 1.0);
        let speeds = speed_weights(&basis, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..64 {
            let h = random_profile(&mut rng, vg.len());
            let m = basis.moments_of(h.view());
            let ph = m.dot(basis.values());
            let lam: f64 = ph.iter().zip(vg.weights()).zip(&speeds).map(|((a, b), s)| a * a * b * s).sum();
            prop_assert!(lam <= c_pi * weighted_norm_sq(&h, vg.weights()) * (1.0 + 1e-10));
        }
    }
}

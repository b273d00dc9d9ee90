use std::f64::consts::PI;
use std::sync::Arc;

use kinetic_apnn::collision::*;
use kinetic_apnn::gpc::*;
use kinetic_apnn::linalg;
use kinetic_apnn::micromacro::*;
use kinetic_apnn::phase_space::*;
use kinetic_apnn::Error;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Setup {
    vgrid: VelocityGrid,
    basis: FluidBasis,
    ops: VelocityOperators,
    coupling: SgCoupling,
    coll: CollisionOps,
}

fn kernel(c_z: f64) -> KernelSpec {
    KernelSpec {
        gamma: 0.0,
        c: 1.0,
        b0: AngularFactor::Constant { value: 0.5 },
        b1: if c_z > 0.0 { AngularFactor::Constant { value: 0.05 } } else { AngularFactor::zero() },
        c_z,
        q_weight: 1,
        angular_nodes: 8,
    }
}

fn setup(dim: usize, k: usize, backend: Backend, n_v: usize, v_max: f64) -> Setup {
    let vgrid = VelocityGrid::new(dim, n_v, v_max).unwrap();
    let basis = FluidBasis::new(&vgrid).unwrap();
    let ops = VelocityOperators::new(&vgrid, &basis);
    let c_z = if k > 1 { 1.0 } else { 0.0 };
    let spec = kernel(c_z);
    let gpc = GpcBasis::new(k, c_z).unwrap();
    let coupling = assemble_sg_coupling(&spec, &gpc, &vgrid, &basis, backend).unwrap();
    let coll = CollisionOps::new(&coupling);
    Setup { vgrid, basis, ops, coupling, coll }
}

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.gen_range(-1.0..1.0))
}

fn random_fields(s: &Setup, rng: &mut ChaCha8Rng, n: usize) -> Vec<FieldWithDerivatives<Array2<f64>>> {
    let nb = s.ops.n_moments();
    let nv = s.ops.n_v;
    let d = s.ops.dim;
    let q = s.ops.q.as_ref();
    (0..s.coupling.k)
        .map(|_| FieldWithDerivatives {
            m: random(rng, n, nb),
            m_t: random(rng, n, nb),
            m_x: (0..d).map(|_| random(rng, n, nb)).collect(),
            g: random(rng, n, nv).dot(q),
            g_t: random(rng, n, nv).dot(q),
            g_x: (0..d).map(|_| random(rng, n, nv).dot(q)).collect(),
        })
        .collect()
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn zero_fields(s: &Setup, n: usize) -> Vec<FieldWithDerivatives<Array2<f64>>> {
    let nb = s.ops.n_moments();
    let nv = s.ops.n_v;
    (0..s.coupling.k)
        .map(|_| FieldWithDerivatives {
            m: Array2::zeros((n, nb)),
            m_t: Array2::zeros((n, nb)),
            m_x: vec![Array2::zeros((n, nb)); s.ops.dim],
            g: Array2::zeros((n, nv)),
            g_t: Array2::zeros((n, nv)),
            g_x: vec![Array2::zeros((n, nv)); s.ops.dim],
        })
        .collect()
}

#[test]
fn zero_fields_have_zero_residuals() {
    let s = setup(1, 2, Backend::BgkSurrogate, 32, 8.0);
    let f = zero_fields(&s, 5);
    for i in 0..2 {
        assert_eq!(max_abs(&macro_residual(&mut Dense, &s.ops, &f[i], 0.3)), 0.0);
        assert_eq!(max_abs(&micro_residual(&mut Dense, &s.ops, &s.coll, &f, i, 0.3)), 0.0);
    }
    let a = recombine_residual(&s.ops, &Array2::zeros((5, 3)), &Array2::zeros((5, 32)));
    assert_eq!(max_abs(&a), 0.0);
}

#[test]
fn recombination_reproduces_full_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for backend in [Backend::BgkSurrogate, Backend::BoltzmannQuadrature] {
        let s = setup(1, 3, backend, 48, 10.0);
        for eps in [1.0, 0.1, 1e-3] {
            let f = random_fields(&s, &mut rng, 7);
            for i in 0..3 {
                let d1 = macro_residual(&mut Dense, &s.ops, &f[i], eps);
                let d2 = micro_residual(&mut Dense, &s.ops, &s.coll, &f, i, eps);
                let a = recombine_residual(&s.ops, &d1, &d2);
                let full = full_residual(&s.ops, &s.coll, &f, i, eps);
                let err = max_abs(&(&a + &full)) / max_abs(&full);
                assert!(err < 1e-12, "{backend:?} eps {eps} mode {i}: {err:e}");
            }
        }
    }
}

#[test]
fn d2_only_recombines_to_its_negative() {
    let s = setup(1, 1, Backend::BgkSurrogate, 32, 8.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d2 = random(&mut rng, 4, 32);
    let a = recombine_residual(&s.ops, &Array2::zeros((4, 3)), &d2);
    assert_eq!(a, -d2);
}

#[test]
fn micro_residual_matches_dense_oracle() {
    // independent per-node evaluation of the Galerkin micro equation, eps = 1
    let s = setup(1, 2, Backend::BgkSurrogate, 32, 8.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 6;
    let f = random_fields(&s, &mut rng, n);
    let grid = Arc::new(PhaseGrid::new(SpatialGrid::new(1, n).unwrap(), s.vgrid.clone()).unwrap());
    let v = s.vgrid.nodes().column(0).to_owned();
    for i in 0..2 {
        let mut transport = Array2::<f64>::zeros((n, 32));
        let mut coll = Array2::<f64>::zeros((n, 32));
        for r in 0..n {
            for j in 0..32 {
                let mut ht = 0.0;
                for b in 0..3 {
                    ht += f[i].m_x[0][[r, b]] * s.basis.values()[[b, j]];
                }
                transport[[r, j]] = v[j] * (ht + f[i].g_x[0][[r, j]]);
            }
            for (k, fk) in f.iter().enumerate() {
                if let Some(b) = s.coupling.block(i, k) {
                    let lg: Array1<f64> = b.dot(&fk.g.row(r));
                    for j in 0..32 {
                        coll[[r, j]] += lg[j];
                    }
                }
            }
        }
        let tf = GridFunction::new(grid.clone(), transport).unwrap();
        let (_, _, perp) = project_pi_l(&tf, &s.basis).unwrap();
        let oracle = &f[i].g_t + perp.values() - &coll;
        let d2 = micro_residual(&mut Dense, &s.ops, &s.coll, &f, i, 1.0);
        assert!(max_abs(&(&d2 - &oracle)) < 1e-12);
    }
}

#[test]
fn transport_part_of_micro_residual_has_no_fluid_component() {
    // g = 0, h~ = rho(x) phi_0 M
    let s = setup(1, 1, Backend::BgkSurrogate, 32, 8.0);
    let n = 8;
    let mut f = zero_fields(&s, n);
    for r in 0..n {
        let x = -PI + 2.0 * PI * r as f64 / n as f64;
        f[0].m[[r, 0]] = x.sin();
        f[0].m_x[0][[r, 0]] = x.cos();
    }
    let d2 = micro_residual(&mut Dense, &s.ops, &s.coll, &f, 0, 0.5);
    assert!(max_abs(&d2.dot(s.ops.moment.as_ref())) < 1e-12);
    let v = s.vgrid.nodes().column(0);
    let expected_raw = Array2::from_shape_fn((n, 32), |(r, j)| {
        f[0].m_x[0][[r, 0]] * v[j] * s.basis.values()[[0, j]]
    });
    let expected = expected_raw.dot(s.ops.q.as_ref());
    assert!(max_abs(&(&d2 - &expected)) < 1e-12);
}

#[test]
fn density_gradient_drives_momentum() {
    // m = (rho(x), 0, 0), g = 0: d1 = (0, rho', 0) with <v phi_0 phi_1 M^2> = 1
    let s = setup(1, 1, Backend::BgkSurrogate, 48, 10.0);
    let n = 5;
    let mut f = zero_fields(&s, n);
    for r in 0..n {
        f[0].m_x[0][[r, 0]] = 0.3 * r as f64 - 0.5;
    }
    let d1 = macro_residual(&mut Dense, &s.ops, &f[0], 1.0);
    for r in 0..n {
        assert!(d1[[r, 0]].abs() < 1e-12);
        assert!((d1[[r, 1]] - f[0].m_x[0][[r, 0]]).abs() < 1e-12);
        assert!(d1[[r, 2]].abs() < 1e-12);
    }
}

#[test]
fn pythagoras_for_the_fluid_split() {
    let vgrid = VelocityGrid::new(1, 48, 10.0).unwrap();
    let basis = FluidBasis::new(&vgrid).unwrap();
    let grid = Arc::new(PhaseGrid::new(SpatialGrid::new(1, 16).unwrap(), vgrid).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let h = GridFunction::new(grid.clone(), random(&mut rng, 16, 48)).unwrap();
        let (_, tilde, perp) = project_pi_l(&h, &basis).unwrap();
        let lhs = l2_norm(&h).powi(2);
        let rhs = l2_norm(&tilde).powi(2) + l2_norm(&perp).powi(2);
        assert!((lhs - rhs).abs() / lhs < 1e-10);
    }
}

#[test]
fn unprojected_micro_field_is_rejected() {
    let s = setup(1, 1, Backend::BgkSurrogate, 32, 8.0);
    let mut f = zero_fields(&s, 3);
    f[0].g = Array2::from_shape_fn((3, 32), |(_, j)| s.basis.values()[[0, j]]);
    let err = micro_residual_checked(&s.ops, &s.coll, &f, 0, 1.0, 1e-10).unwrap_err();
    assert!(matches!(err, Error::ProjectionNotApplied { .. }));
    f[0].g = f[0].g.dot(s.ops.q.as_ref());
    assert!(micro_residual_checked(&s.ops, &s.coll, &f, 0, 1.0, 1e-10).is_ok());
}

#[test]
fn initial_and_boundary_mismatch() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = random(&mut rng, 4, 16);
    assert_eq!(max_abs(&initial_residual(&h, &h)), 0.0);
    // h = x is not periodic
    let plus = Array2::from_elem((3, 16), PI);
    let minus = Array2::from_elem((3, 16), -PI);
    let db = boundary_residual(&[(plus.clone(), minus)]);
    assert!(db.iter().all(|x| (x - 4.0 * PI * PI).abs() < 1e-12));
    assert_eq!(max_abs(&boundary_residual(&[(plus.clone(), plus)])), 0.0);
}

#[test]
fn acoustic_coefficients() {
    assert!((temperature_coupling(3) - 6f64.sqrt() / 3.0).abs() < 1e-15);
    assert!((temperature_coupling(1) - 2f64.sqrt()).abs() < 1e-15);
    // brute-force eigenvalues of the flux Jacobians
    for (dim, speed) in [(1, 3f64.sqrt()), (3, (5.0f64 / 3.0).sqrt())] {
        let (vals, _) = linalg::sym_eig(&acoustic_flux_matrix(dim, 0));
        assert!((vals[vals.len() - 1] - speed).abs() < 1e-12);
        assert!((vals[0] + speed).abs() < 1e-12);
        assert!((sound_speed(dim) - speed).abs() < 1e-15);
    }
    // constant moments: no time derivative
    let rhs = acoustic_rhs(&[Array2::zeros((4, 3))]);
    assert_eq!(max_abs(&rhs), 0.0);
}

#[test]
fn quadrature_fluxes_match_acoustic_matrix() {
    for (dim, n, vmax) in [(1, 48, 10.0), (2, 32, 8.0)] {
        let vgrid = VelocityGrid::new(dim, n, vmax).unwrap();
        let basis = FluidBasis::new(&vgrid).unwrap();
        let ops = VelocityOperators::new(&vgrid, &basis);
        for a in 0..dim {
            let err = max_abs(&(ops.flux_macro[a].as_ref() - &acoustic_flux_matrix(dim, a)));
            assert!(err < 1e-8, "dim {dim}: {err:e}");
        }
    }
}

/// Plane acoustic wave `m = r cos(x - c t)` with `g` slaved to it through
/// the collision operator.
fn slaved_wave(s: &Setup, eps: f64) -> (Array2<f64>, Array2<f64>) {
    let (vals, vecs) = linalg::sym_eig(s.ops.flux_macro[0].as_ref());
    let c = vals[vals.len() - 1];
    let r = vecs.column(vecs.ncols() - 1).to_owned();
    let l = s.coupling.block(0, 0).unwrap();
    let shifted = l - &fluid_projector(&s.vgrid);
    let tm = s.ops.transport_macro[0].as_ref();
    // g = m_x T (L - P)^{-T}, linear in m_x
    let slave = linalg::solve(&shifted, &tm.t().to_owned()).unwrap().t().to_owned();
    let n = 9;
    let t = 0.3;
    let nb = 3;
    let mut f = zero_fields(s, n);
    for p in 0..n {
        let x = -PI + 2.0 * PI * p as f64 / n as f64;
        let ph = x - c * t;
        for b in 0..nb {
            f[0].m[[p, b]] = r[b] * ph.cos();
            f[0].m_x[0][[p, b]] = -r[b] * ph.sin();
            f[0].m_t[[p, b]] = c * r[b] * ph.sin();
        }
    }
    let mxx = f[0].m.mapv(|x| -x);
    let mxt = f[0].m.mapv(|x| c * x);
    f[0].g = f[0].m_x[0].dot(&slave);
    f[0].g_x[0] = mxx.dot(&slave);
    f[0].g_t = mxt.dot(&slave);
    let d1 = macro_residual(&mut Dense, &s.ops, &f[0], eps);
    let d2 = micro_residual(&mut Dense, &s.ops, &s.coll, &f, 0, eps);
    (d1, d2)
}

#[test]
fn residuals_vanish_in_the_fluid_limit() {
    for backend in [Backend::BgkSurrogate, Backend::BoltzmannQuadrature] {
        let s = setup(1, 1, backend, 48, 10.0);
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for eps in [1e-2, 1e-4, 1e-6] {
            let (d1, d2) = slaved_wave(&s, eps);
            let cur = (max_abs(&d1), max_abs(&d2));
            assert!(cur.0 < prev.0 && cur.1 < prev.1, "{backend:?} eps {eps}: {cur:?}");
            assert!(cur.0 < 10.0 * eps && cur.1 < 10.0 * eps);
            prev = cur;
        }
        // eps = 0: pure acoustic residual of the plane wave
        let (d1, _) = slaved_wave(&s, 0.0);
        assert!(max_abs(&d1) < 1e-10);
    }
}

#[test]
fn residual_csv_layout() {
    let s = setup(1, 1, Backend::BgkSurrogate, 24, 8.0);
    let mut buf = Vec::new();
    let pts = vec![(0.1, vec![0.2]), (0.3, vec![0.4])];
    let d1 = Array2::zeros((2, 3));
    let d2 = Array2::zeros((2, 24));
    write_residual_csv(&mut buf, &pts, s.vgrid.nodes(), 0, &d1, &d2).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x0,v0,mode,d1_0,d1_1,d1_2,d2");
    assert_eq!(lines.len(), 1 + 2 * 24);
}

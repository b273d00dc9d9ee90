use kinetic_apnn::apnn::*;
use kinetic_apnn::autodiff::{Mlp, Tape};
use kinetic_apnn::collision::KernelSpec;
use kinetic_apnn::phase_space::VelocityGrid;
use kinetic_apnn::problem::{Problem, ProblemConfig};
use kinetic_apnn::reference::ModalExact;
use kinetic_apnn::Error;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn desk() -> Problem {
    Problem::new(&ProblemConfig::default(), &KernelSpec::default()).unwrap()
}

fn config(dim: usize, modes: usize, eps: f64) -> ProblemConfig {
    let mut cfg = ProblemConfig { dim, modes, eps, ..Default::default() };
    let pad = |rows: &mut Vec<Vec<f64>>| {
        rows.truncate(modes);
        for r in rows.iter_mut() {
            r.resize(dim + 2, 0.0);
        }
    };
    pad(&mut cfg.initial.cos);
    pad(&mut cfg.initial.sin);
    cfg
}

fn small_problem(modes: usize, eps: f64) -> Problem {
    Problem::new(&config(1, modes, eps), &KernelSpec::default()).unwrap()
}

fn small_batch(p: &Problem, seed: u64) -> CollocationBatch {
    let cfg = CollocationConfig { n_interior: 12, n_initial: 8, n_boundary: 4, ..Default::default() };
    sample_collocation(&cfg, &p.vgrid, p.config.t_end, seed).unwrap()
}

fn bundle(p: &Problem, embedding: Embedding, seed: u64) -> NetworkBundle {
    let spec = NetworkSpec { width: 8, depth: 2, embedding };
    NetworkBundle::new(&spec, p, seed).unwrap()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn fd2(f: impl Fn(f64) -> Vec<f64>, h: f64) -> Vec<f64> {
    let (p, m) = (f(h), f(-h));
    p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

fn fd4(f: impl Fn(f64) -> Vec<f64>, h: f64) -> Vec<f64> {
    let (p2, p1, m1, m2) = (f(2.0 * h), f(h), f(-h), f(-2.0 * h));
    (0..p1.len()).map(|k| (-p2[k] + 8.0 * p1[k] - 8.0 * m1[k] + m2[k]) / (12.0 * h)).collect()
}

fn random_probe(rng: &mut ChaCha8Rng, d: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let t = rng.gen_range(0.0..0.5);
    let x = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let v = (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect();
    (t, x, v)
}

/// Every tangent of one probe, stacked: `d_t`, then `d_x`, then `d_v`.
fn stacked(pd: &PointDerivatives) -> Vec<f64> {
    let mut out = pd.d_t.clone();
    out.extend(pd.d_x.iter().flatten());
    out.extend(pd.d_v.iter().flatten());
    out
}

fn fd_tangents(
    b: &NetworkBundle,
    i: usize,
    t: f64,
    x: &[f64],
    v: Option<&[f64]>,
    diff: impl Fn(&dyn Fn(f64) -> Vec<f64>) -> Vec<f64>,
) -> Vec<f64> {
    let eval = |t: f64, x: &[f64], v: Option<&[f64]>| match v {
        Some(v) => b.micro_point(i, t, x, v).value,
        None => b.macro_point(i, t, x).value,
    };
    let mut out = diff(&|h| eval(t + h, x, v));
    for a in 0..x.len() {
        out.extend(diff(&|h| {
            let mut y = x.to_vec();
            y[a] += h;
            eval(t, &y, v)
        }));
    }
    if let Some(v) = v {
        for a in 0..v.len() {
            out.extend(diff(&|h| {
                let mut w = v.to_vec();
                w[a] += h;
                eval(t, x, Some(&w))
            }));
        }
    }
    out
}

#[test]
fn forward_tangents_match_central_differences() {
    for (dim, embedding) in [(1, Embedding::Periodic), (1, Embedding::Raw), (2, Embedding::Periodic)] {
        let cfg = ProblemConfig { n_v: 24, v_max: if dim == 1 { 8.0 } else { 7.0 }, ..config(dim, 2, 1.0) };
        let p = Problem::new(&cfg, &KernelSpec::default()).unwrap();
        let b = bundle(&p, embedding, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for probe in 0..100 {
            let (t, x, v) = random_probe(&mut rng, dim);
            let i = probe % p.modes();
            let ad = stacked(&b.macro_point(i, t, &x));
            let fd = fd_tangents(&b, i, t, &x, None, |f| fd2(f, 1e-4));
            assert!(rel(&ad, &fd) <= 1e-5, "macro dim {dim} probe {probe}: {}", rel(&ad, &fd));
            let ad = stacked(&b.micro_point(i, t, &x, &v));
            let fd = fd_tangents(&b, i, t, &x, Some(&v), |f| fd2(f, 1e-4));
            assert!(rel(&ad, &fd) <= 1e-5, "micro dim {dim} probe {probe}: {}", rel(&ad, &fd));
        }
    }
}

#[test]
fn forward_tangents_match_five_point_oracle() {
    let p = small_problem(2, 1.0);
    let b = bundle(&p, Embedding::Periodic, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for probe in 0..20 {
        let (t, x, v) = random_probe(&mut rng, 1);
        let ad = stacked(&b.micro_point(probe % 2, t, &x, &v));
        let fd = fd_tangents(&b, probe % 2, t, &x, Some(&v), |f| fd4(f, 1e-3));
        assert!(rel(&ad, &fd) <= 1e-7, "{}", rel(&ad, &fd));
        let ad = stacked(&b.macro_point(probe % 2, t, &x));
        let fd = fd_tangents(&b, probe % 2, t, &x, None, |f| fd4(f, 1e-3));
        assert!(rel(&ad, &fd) <= 1e-7, "{}", rel(&ad, &fd));
    }
}

#[test]
fn zero_weights_give_the_output_bias() {
    let p = small_problem(2, 1.0);
    let mut b = bundle(&p, Embedding::Raw, 1);
    let zero = vec![0.0; b.n_params()];
    b.set_flat_params(&zero).unwrap();
    let net = b.macro_nets[1].clone();
    let last = net.offset + net.n_blocks() - 1;
    let bias = Array2::from_shape_vec((1, 3), vec![0.25, -1.5, 2.0]).unwrap();
    b.params[last] = bias.clone();
    let pd = b.macro_point(1, 0.3, &[1.1]);
    assert_eq!(pd.value, bias.row(0).to_vec());
    assert!(pd.d_t.iter().chain(pd.d_x.iter().flatten()).all(|v| *v == 0.0));
    let other = b.macro_point(0, 0.3, &[1.1]);
    assert!(other.value.iter().all(|v| *v == 0.0));
}

#[test]
fn single_linear_neuron_has_exact_slope() {
    let net = Mlp::new(vec![1, 1], 0);
    let mut tape = Tape::new();
    let w = tape.param(0, Array2::from_elem((1, 1), 0.7));
    let bias = tape.param(1, Array2::from_elem((1, 1), -0.2));
    let x = tape.constant(Array2::from_elem((1, 1), 3.0));
    let dx = tape.constant(Array2::from_elem((1, 1), 1.0));
    let (out, tans) = net.forward(&mut tape, &[w, bias], x, &[dx]);
    assert_eq!(tape.scalar(out), 0.7 * 3.0 - 0.2);
    assert_eq!(tape.scalar(tans[0]), 0.7);
}

#[test]
fn non_finite_parameters_are_reported() {
    let p = small_problem(1, 1.0);
    let mut b = bundle(&p, Embedding::Periodic, 1);
    b.params[0][[0, 0]] = f64::NAN;
    let x = Array2::zeros((2, 1));
    assert!(matches!(b.fields(&p, 0, &[0.0, 0.1], &x), Err(Error::NonFiniteOutput)));
    let batch = small_batch(&p, 1);
    assert!(matches!(
        loss_and_gradient(&b, &p, &batch, &LossConfig::default(), 1.0),
        Err(Error::NonFiniteOutput)
    ));
}

fn projection_norm(p: &Problem, g: &Array2<f64>) -> f64 {
    g.dot(p.ops.moment.as_ref()).iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn postprocess_removes_the_fluid_part() {
    let p = desk();
    let nv = p.n_v();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = Array2::from_shape_fn((5, nv), |_| rng.gen_range(-1.0..1.0));
    let out = postprocess_micro(&p, &g);
    assert!(projection_norm(&p, &out) <= 1e-10, "{}", projection_norm(&p, &out));
    let again = postprocess_micro(&p, &out);
    let diff = (&again - &out).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(diff <= 1e-12, "{diff}");

    let fluid = p.ops.phi.row(0).to_owned().insert_axis(ndarray::Axis(0));
    let killed = postprocess_micro(&p, &fluid);
    assert!(killed.iter().all(|x| x.abs() <= 1e-10));
}

#[test]
fn network_micro_output_is_orthogonal() {
    let p = desk();
    let b = bundle(&p, Embedding::Periodic, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Array2::from_shape_fn((20, 1), |_| rng.gen_range(-3.0..3.0));
    let t: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..0.5)).collect();
    for i in 0..p.modes() {
        let f = b.fields(&p, i, &t, &x).unwrap();
        for g in [&f.g, &f.g_t, &f.g_x[0]] {
            assert!(projection_norm(&p, g) <= 1e-10);
        }
    }
}

#[test]
fn collocation_is_reproducible_and_in_domain() {
    let p = desk();
    let cfg = CollocationConfig::default();
    let a = sample_collocation(&cfg, &p.vgrid, 0.5, 42).unwrap();
    let b = sample_collocation(&cfg, &p.vgrid, 0.5, 42).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = sample_collocation(&cfg, &p.vgrid, 0.5, 43).unwrap();
    assert_ne!(a.interior_t, c.interior_t);
    assert!(a.interior_t.iter().chain(&a.boundary_t).all(|t| (0.0..=0.5).contains(t)));
    let all_x = a.interior_x.iter().chain(a.initial_x.iter()).chain(a.boundary_x.iter().flatten());
    assert!(all_x.into_iter().all(|x| x.abs() <= std::f64::consts::PI));
    let tau = 2.0 * std::f64::consts::PI;
    assert!((a.w_interior * cfg.n_interior as f64 - 0.5 * tau).abs() < 1e-12);
    assert!((a.w_initial * cfg.n_initial as f64 - tau).abs() < 1e-12);
    assert!((a.v_weights.sum() - 16.0).abs() < 1e-12);

    let uni = CollocationConfig { velocity: VelocitySampling::Uniform, n_velocity: 1000, ..cfg };
    let u = sample_collocation(&uni, &p.vgrid, 0.5, 1).unwrap();
    assert!((u.v_weights.sum() - 16.0).abs() < 1e-9);
    assert!(u.v_samples.iter().all(|v| v.abs() <= 8.0));
}

#[test]
fn uniform_time_samples_have_the_right_mean() {
    let p = desk();
    let n = 100_000;
    let cfg = CollocationConfig { n_interior: n, n_initial: 1, n_boundary: 1, ..Default::default() };
    let b = sample_collocation(&cfg, &p.vgrid, 0.5, 3).unwrap();
    let mean = b.interior_t.iter().sum::<f64>() / n as f64;
    let sigma = 0.5 / 12f64.sqrt() / (n as f64).sqrt();
    assert!((mean - 0.25).abs() <= 3.0 * sigma, "{mean}");
}

#[test]
fn maxwellian_proposal_has_truncated_second_moment() {
    // truncated standard normal on [-a, a]: E v^2 = 1 - 2 a phi(a) / (2 Phi(a) - 1)
    let a = 2.0;
    let vgrid = VelocityGrid::new(1, 24, a).unwrap();
    let cfg = CollocationConfig { velocity: VelocitySampling::Maxwellian, n_velocity: 20_000, ..Default::default() };
    let b = sample_collocation(&cfg, &vgrid, 0.5, 8).unwrap();
    let n = b.v_samples.nrows() as f64;
    let m2 = b.v_samples.iter().map(|v| v * v).sum::<f64>() / n;
    let phi = (-a * a / 2.0f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mass = 0.954_499_736_103_641_6; // P(|N(0,1)| <= 2)
    let exact = 1.0 - 2.0 * a * phi / mass;
    assert!((m2 - exact).abs() <= 0.05 * exact, "{m2} vs {exact}");
    assert!(b.v_samples.iter().all(|v| v.abs() <= a));
}

#[test]
fn loss_parts_add_up_and_are_nonnegative() {
    let p = small_problem(3, 0.5);
    let b = bundle(&p, Embedding::Periodic, 2);
    let batch = small_batch(&p, 2);
    let l = assemble_loss(&b, &p, &batch, &LossConfig::default(), 0.5).unwrap();
    assert!(l.check_additivity());
    assert!(l.all_nonnegative());
    assert_eq!(l.modes.len(), 3);
    for m in &l.modes {
        assert_eq!(m.weight, (m.mode as f64).powi(2));
        assert!(m.parts.iter().all(|x| *x > 0.0));
    }
    let by_name: f64 = PART_NAMES.iter().map(|n| l.part(n)).sum();
    assert!((by_name - l.total).abs() <= 1e-12 * l.total);
    let (tape_loss, _) = loss_and_gradient(&b, &p, &batch, &LossConfig::default(), 0.5).unwrap();
    assert!((tape_loss.total - l.total).abs() <= 1e-12 * l.total);
}

#[test]
fn single_mode_weighting_is_trivial() {
    let kernel = KernelSpec { q_weight: 3, c_z: 0.5, ..Default::default() };
    let cfg = config(1, 1, 1.0);
    let p = Problem::new(&cfg, &kernel).unwrap();
    let b = bundle(&p, Embedding::Periodic, 2);
    let l = assemble_loss(&b, &p, &small_batch(&p, 1), &LossConfig::default(), 1.0).unwrap();
    assert_eq!(l.total, l.unweighted_total());
}

#[test]
fn loss_is_quadratic_in_eps_at_fixed_fields() {
    let p = small_problem(2, 1.0);
    let b = bundle(&p, Embedding::Periodic, 6);
    let batch = small_batch(&p, 6);
    let at = |eps: f64| assemble_loss(&b, &p, &batch, &LossConfig::default(), eps).unwrap();
    let ls: Vec<LossBreakdown> = [0.0, 0.5, 1.0, 1.5].iter().map(|e| at(*e)).collect();
    for i in 0..2 {
        for k in 0..PART_NAMES.len() {
            let v: Vec<f64> = ls.iter().map(|l| l.modes[i].parts[k]).collect();
            let third = v[3] - 3.0 * v[2] + 3.0 * v[1] - v[0];
            let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(third.abs() <= 1e-9 * scale + 1e-30, "{} mode {i}: {third}", PART_NAMES[k]);
        }
    }
    let mid = at(0.75);
    assert!(mid.total.is_finite() && mid.total > 0.0);
}

#[test]
fn zero_eps_loss_is_the_fluid_limit_residual() {
    let p = small_problem(2, 1.0);
    let b = bundle(&p, Embedding::Periodic, 7);
    let batch = small_batch(&p, 7);
    let l = assemble_loss(&b, &p, &batch, &LossConfig { h1: false, ..Default::default() }, 0.0).unwrap();
    let t = &batch.interior_t;
    let x = &batch.interior_x;
    let fields: Vec<_> = (0..2).map(|i| b.fields(&p, i, t, x).unwrap()).collect();
    for i in 0..2 {
        // m_t + m_x A = 0 and m_x T = L_i(g)
        let d1 = &fields[i].m_t + &fields[i].m_x[0].dot(p.ops.flux_macro[0].as_ref());
        let mut d2 = fields[i].m_x[0].dot(p.ops.transport_macro[0].as_ref());
        for (k, f) in fields.iter().enumerate() {
            if let Some(blk) = p.coll.block_t(i, k) {
                d2 = d2 - f.g.dot(blk.as_ref());
            }
        }
        let r1 = batch.w_interior * d1.iter().map(|v| v * v).sum::<f64>();
        let r2 = batch.w_interior * (&d2 * &d2 * &batch.v_weights).sum();
        let parts = &l.modes[i].parts;
        assert!((parts[0] - r1).abs() <= 1e-12 * r1, "{} vs {r1}", parts[0]);
        assert!((parts[1] - r2).abs() <= 1e-12 * r2, "{} vs {r2}", parts[1]);
    }
}

#[test]
fn exact_solution_sits_below_the_discretization_floor() {
    for eps in [1.0, 0.1] {
        let cfg = ProblemConfig { eps, ..Default::default() };
        let p = Problem::new(&cfg, &KernelSpec::default()).unwrap();
        let batch = sample_collocation(&CollocationConfig::default(), &p.vgrid, 0.5, 10).unwrap();
        let exact = ModalExact::new(&p);
        let l = assemble_loss(&exact, &p, &batch, &LossConfig::default(), eps).unwrap();
        assert!(l.total <= 1e-6, "eps {eps}: {}", l.total);
        let zero = assemble_loss(&ZeroModel { modes: 2 }, &p, &batch, &LossConfig::default(), eps).unwrap();
        assert!(zero.total > 1e-2);
    }
}

#[test]
fn fd_step_halving_changes_little() {
    let p = small_problem(2, 1.0);
    let b = bundle(&p, Embedding::Periodic, 8);
    let batch = small_batch(&p, 8);
    let l1 = assemble_loss(&b, &p, &batch, &LossConfig { fd_step: 1e-3, ..Default::default() }, 1.0).unwrap();
    let l2 = assemble_loss(&b, &p, &batch, &LossConfig { fd_step: 5e-4, ..Default::default() }, 1.0).unwrap();
    for name in ["r1_dx", "r2_dx"] {
        let (a, c) = (l1.part(name), l2.part(name));
        assert!((a - c).abs() <= 1e-3 * c, "{name}: {a} vs {c}");
    }
}

#[test]
fn shards_reduce_to_the_same_loss() {
    let p = small_problem(2, 1.0);
    let b = bundle(&p, Embedding::Periodic, 8);
    let batch = small_batch(&p, 8);
    let one = assemble_loss(&b, &p, &batch, &LossConfig::default(), 1.0).unwrap();
    let three = assemble_loss(&b, &p, &batch, &LossConfig { shards: 3, ..Default::default() }, 1.0).unwrap();
    assert!((one.total - three.total).abs() <= 1e-12 * one.total);
    let again = assemble_loss(&b, &p, &batch, &LossConfig { shards: 3, ..Default::default() }, 1.0).unwrap();
    assert_eq!(three, again);
}

#[test]
fn loss_gradient_matches_directional_differences() {
    let p = small_problem(2, 0.5);
    let mut b = bundle(&p, Embedding::Periodic, 13);
    let batch = small_batch(&p, 13);
    let cfg = LossConfig::default();
    let (_, grads) = loss_and_gradient(&b, &p, &batch, &cfg, 0.5).unwrap();
    let flat_grad: Vec<f64> = grads.iter().flat_map(|g| g.iter().cloned()).collect();
    let theta = b.flat_params();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-5;
    for dir in 0..10 {
        let u: Vec<f64> = (0..theta.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let analytic: f64 = flat_grad.iter().zip(&u).map(|(g, u)| g * u).sum();
        let mut at = |s: f64| {
            let moved: Vec<f64> = theta.iter().zip(&u).map(|(t, u)| t + s * u).collect();
            b.set_flat_params(&moved).unwrap();
            assemble_loss(&b, &p, &batch, &cfg, 0.5).unwrap().total
        };
        let numeric = (at(h) - at(-h)) / (2.0 * h);
        let err = (analytic - numeric).abs() / numeric.abs().max(analytic.abs());
        assert!(err <= 1e-4, "direction {dir}: {analytic} vs {numeric}");
    }
}

fn quick_settings(steps: usize, lr: f64) -> ApnnSettings {
    ApnnSettings {
        collocation: CollocationConfig { n_interior: 12, n_initial: 8, n_boundary: 4, ..Default::default() },
        loss: LossConfig::default(),
        training: TrainConfig { steps, lr, log_every: 1, checkpoint_every: 0, ..Default::default() },
    }
}

#[test]
fn zero_learning_rate_freezes_parameters() {
    let p = small_problem(2, 1.0);
    let mut b = bundle(&p, Embedding::Periodic, 4);
    let before = b.params.clone();
    let mut s = quick_settings(5, 0.0);
    s.collocation.resample_every = 0;
    let st = train(&mut b, &p, &s, 4, "h", None, &mut NoObserver).unwrap();
    assert_eq!(b.params, before);
    assert_eq!(st.history.len(), 5);
    assert!(st.history.iter().all(|l| *l == st.history[0]));
    assert_eq!(st.last.unwrap().total, st.history[0]);
}

#[test]
fn training_is_deterministic_and_resumable() {
    let p = small_problem(2, 1.0);
    let s = quick_settings(6, 1e-2);
    let run = |steps: usize, from: Option<(Vec<Array2<f64>>, TrainState)>| {
        let mut b = bundle(&p, Embedding::Periodic, 4);
        let mut s = s.clone();
        s.training.steps = steps;
        let state = from.map(|(params, st)| {
            b.params = params;
            st
        });
        let st = train(&mut b, &p, &s, 4, "h", state, &mut NoObserver).unwrap();
        (b.params, st)
    };
    let (pa, sa) = run(6, None);
    let (pb, sb) = run(6, None);
    assert_eq!(pa, pb);
    assert_eq!(sa.history, sb.history);
    assert!(sa.history.last().unwrap() < &sa.history[0]);

    let half = run(3, None);
    let (pc, sc) = run(6, Some(half));
    assert_eq!(pc, pa);
    assert_eq!(sc.history, sa.history);
}

#[test]
fn divergence_is_reported() {
    let p = small_problem(1, 1.0);
    let mut b = bundle(&p, Embedding::Periodic, 4);
    let mut s = quick_settings(3, 1e-3);
    s.training.diverge_at = 1e-12;
    let err = train(&mut b, &p, &s, 1, "h", None, &mut NoObserver).unwrap_err();
    assert!(matches!(err, Error::DivergedLoss { step: 0, .. }), "{err:?}");
}

#[test]
fn logs_and_checkpoints_are_written() {
    let p = small_problem(1, 1.0);
    let mut b = bundle(&p, Embedding::Periodic, 4);
    let mut s = quick_settings(4, 1e-3);
    s.training.log_every = 2;
    s.training.checkpoint_every = 2;
    let dir = tempfile::tempdir().unwrap();
    let mut obs = FileObserver::new(&dir.path().join("log.jsonl"), &dir.path().join("ck")).unwrap();
    train(&mut b, &p, &s, 1, "abc", None, &mut obs).unwrap();
    let log = std::fs::read_to_string(dir.path().join("log.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1]["step"], 2);
    for name in PART_NAMES {
        assert!(lines[0][name].is_number());
    }
    assert_eq!(obs.checkpoints.len(), 3);
    let last = Checkpoint::load(obs.checkpoints.last().unwrap()).unwrap();
    assert_eq!(last.step, 4);
    assert_eq!(last.config_hash, "abc");
    assert_eq!(last.params, b.params);
}

#[test]
fn adam_minimizes_a_quadratic() {
    let target = [Array2::from_shape_vec((1, 3), vec![1.0, -2.0, 0.5]).unwrap()];
    let mut params = vec![Array2::zeros((1, 3))];
    let mut adam = Adam::new(&params, 0.9, 0.999, 1e-8);
    for step in 0..5000 {
        let grads = vec![(&params[0] - &target[0]) * 2.0];
        let lr = 0.05 * (1e-4f64).powf(step as f64 / 4999.0);
        adam.update(&mut params, &grads, lr);
    }
    let err = (&params[0] - &target[0]).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn learning_rate_schedule_hits_both_ends() {
    let tc = TrainConfig { steps: 11, lr: 1e-2, lr_final: Some(1e-4), ..Default::default() };
    assert_eq!(tc.lr_at(0), 1e-2);
    assert!((tc.lr_at(10) - 1e-4).abs() < 1e-18);
    assert!((tc.lr_at(5) - 1e-3).abs() < 1e-15);
}

#[test]
fn invalid_settings_name_their_key() {
    let bad = |f: &dyn Fn(&mut ApnnSettings)| {
        let mut s = ApnnSettings::default();
        f(&mut s);
        match s.validate() {
            Err(Error::Config { key, .. }) => key,
            other => panic!("{other:?}"),
        }
    };
    assert_eq!(bad(&|s| s.training.lr = -1.0), "training.lr");
    assert_eq!(bad(&|s| s.loss.fd_step = 0.0), "loss.fd_step");
    assert_eq!(bad(&|s| s.collocation.n_interior = 0), "collocation.n_interior");
    let spec = NetworkSpec { width: 0, ..Default::default() };
    assert!(matches!(spec.validate(), Err(Error::Config { key, .. }) if key == "network.width"));
}

#[test]
fn zero_model_loss_is_the_data_misfit() {
    let p = desk();
    let batch = small_batch(&p, 3);
    let l = assemble_loss(&ZeroModel { modes: 2 }, &p, &batch, &LossConfig::default(), 1.0).unwrap();
    for name in ["r1", "r2", "r_b", "r1_dx", "r2_dx", "r_b_dx", "r2_dv", "r_b_dv"] {
        assert_eq!(l.part(name), 0.0, "{name}");
    }
    let x0: Array1<f64> = batch.initial_x.column(0).to_owned();
    let mut expect = 0.0;
    for i in 0..2 {
        let (h, _) = p.initial_field(i, &x0);
        expect += (i as f64 + 1.0).powi(2) * batch.w_initial * (&h * &h * &batch.v_weights).sum();
    }
    assert!((l.part("r_ini") - expect).abs() <= 1e-12 * expect);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn loss_additivity_holds_for_any_network(seed in any::<u64>(), eps in 0.0f64..2.0) {
        let p = small_problem(2, 1.0);
        let b = bundle(&p, Embedding::Periodic, seed);
        let batch = small_batch(&p, seed ^ 1);
        let l = assemble_loss(&b, &p, &batch, &LossConfig::default(), eps).unwrap();
        prop_assert!(l.check_additivity());
        prop_assert!(l.all_nonnegative());
    }

    #[test]
    fn postprocess_is_idempotent(seed in any::<u64>()) {
        let p = small_problem(1, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Array2::from_shape_fn((3, p.n_v()), |_| rng.gen_range(-10.0..10.0));
        let once = postprocess_micro(&p, &g);
        let twice = postprocess_micro(&p, &once);
        let scale = g.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        prop_assert!((&twice - &once).iter().all(|x| x.abs() <= 1e-12 * scale));
        prop_assert!(projection_norm(&p, &once) <= 1e-10 * scale);
    }
}

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Embedding, NetworkSpec};
use super::model::FieldModel;
use crate::autodiff::{Mlp, Tape, Var};
use crate::error::{Error, Result};
use crate::micromacro::FieldWithDerivatives;
use crate::problem::Problem;

/// One macro and one micro network per gPC mode.
///
/// Macro nets map `(t, x)` to the `d+2` moments; micro nets map `(t, x, v)`
/// to a scalar that is multiplied by `M(v)` and then stripped of its fluid
/// part on the velocity grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkBundle {
    pub spec: NetworkSpec,
    pub dim: usize,
    pub v_max: f64,
    pub macro_nets: Vec<Mlp>,
    pub micro_nets: Vec<Mlp>,
    pub params: Vec<Array2<f64>>,
}

/// Network values and input derivatives at a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointDerivatives {
    pub value: Vec<f64>,
    pub d_t: Vec<f64>,
    /// `d_x[a][c]`: derivative of output `c` along `x_a`.
    pub d_x: Vec<Vec<f64>>,
    /// Empty for macro nets.
    pub d_v: Vec<Vec<f64>>,
}

impl NetworkBundle {
    pub fn new(spec: &NetworkSpec, problem: &Problem, seed: u64) -> Result<Self> {
        spec.validate()?;
        let dim = problem.dim();
        let feat = match spec.embedding {
            Embedding::Raw => dim,
            Embedding::Periodic => 2 * dim,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut macro_nets = Vec::new();
        let mut micro_nets = Vec::new();
        let mut params = Vec::new();
        for _ in 0..problem.modes() {
            let mut sizes = vec![1 + feat];
            sizes.extend(std::iter::repeat_n(spec.width, spec.depth));
            sizes.push(problem.n_moments());
            let net = Mlp::new(sizes, params.len());
            params.extend(net.init(&mut rng));
            macro_nets.push(net);
            let mut sizes = vec![1 + feat + dim];
            sizes.extend(std::iter::repeat_n(spec.width, spec.depth));
            sizes.push(1);
            let net = Mlp::new(sizes, params.len());
            params.extend(net.init(&mut rng));
            micro_nets.push(net);
        }
        Ok(Self { spec: spec.clone(), dim, v_max: problem.config.v_max, macro_nets, micro_nets, params })
    }

    pub fn n_modes(&self) -> usize {
        self.macro_nets.len()
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(|p| p.len()).sum()
    }

    /// All parameters as one vector, block by block in row-major order.
    pub fn flat_params(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.iter().cloned()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for a bundle of {}",
                flat.len(),
                self.n_params()
            )));
        }
        let mut off = 0;
        for p in &mut self.params {
            for x in p.iter_mut() {
                *x = flat[off];
                off += 1;
            }
        }
        Ok(())
    }

    /// Registers every parameter block on the tape.
    pub fn register(&self, tape: &mut Tape) -> Vec<Var> {
        self.params.iter().enumerate().map(|(i, p)| tape.param(i, p.clone())).collect()
    }

    fn n_features(&self) -> usize {
        match self.spec.embedding {
            Embedding::Raw => self.dim,
            Embedding::Periodic => 2 * self.dim,
        }
    }

    fn push_features(&self, row: &mut Vec<f64>, x: &[f64]) {
        for &c in x {
            match self.spec.embedding {
                Embedding::Raw => row.push(c / std::f64::consts::PI),
                Embedding::Periodic => {
                    row.push(c.sin());
                    row.push(c.cos());
                }
            }
        }
    }

    /// Derivative of the feature vector along `x_axis`.
    fn push_feature_tangent(&self, row: &mut Vec<f64>, x: &[f64], axis: usize) {
        for (a, &c) in x.iter().enumerate() {
            let on = a == axis;
            match self.spec.embedding {
                Embedding::Raw => row.push(if on { 1.0 / std::f64::consts::PI } else { 0.0 }),
                Embedding::Periodic => {
                    row.push(if on { c.cos() } else { 0.0 });
                    row.push(if on { -c.sin() } else { 0.0 });
                }
            }
        }
    }

    /// Macro inputs and their tangents along `t`, `x_0`, ..., `x_{d-1}`.
    fn macro_inputs(&self, t: &[f64], x: &Array2<f64>) -> (Array2<f64>, Vec<Array2<f64>>) {
        let n = t.len();
        let w = 1 + self.n_features();
        let mut input = Vec::with_capacity(n * w);
        let mut tans = vec![Vec::with_capacity(n * w); 1 + self.dim];
        for p in 0..n {
            let xp: Vec<f64> = x.row(p).to_vec();
            input.push(t[p]);
            self.push_features(&mut input, &xp);
            tans[0].push(1.0);
            tans[0].extend(std::iter::repeat_n(0.0, w - 1));
            for a in 0..self.dim {
                tans[1 + a].push(0.0);
                self.push_feature_tangent(&mut tans[1 + a], &xp, a);
            }
        }
        let to = |v: Vec<f64>| Array2::from_shape_vec((n, w), v).expect("row layout");
        (to(input), tans.into_iter().map(to).collect())
    }

    /// Micro inputs over every (point, velocity node) pair, point-major.
    fn micro_inputs(&self, problem: &Problem, t: &[f64], x: &Array2<f64>) -> (Array2<f64>, Vec<Array2<f64>>) {
        let (mi, mt) = self.macro_inputs(t, x);
        let nv = problem.n_v();
        let nodes = problem.vgrid.nodes();
        let n = t.len();
        let w = mi.ncols() + self.dim;
        let rows = n * nv;
        let mut input = Array2::zeros((rows, w));
        let mut tans = vec![Array2::zeros((rows, w)); mt.len()];
        for p in 0..n {
            for j in 0..nv {
                let r = p * nv + j;
                for c in 0..mi.ncols() {
                    input[[r, c]] = mi[[p, c]];
                    for (k, tk) in mt.iter().enumerate() {
                        tans[k][[r, c]] = tk[[p, c]];
                    }
                }
                for a in 0..self.dim {
                    input[[r, mi.ncols() + a]] = nodes[[j, a]] / self.v_max;
                }
            }
        }
        (input, tans)
    }

    /// Post-processed fields and their `t`, `x` derivatives for mode `i`,
    /// recorded on `tape`.
    pub fn fields_on_tape(
        &self,
        tape: &mut Tape,
        vars: &[Var],
        problem: &Problem,
        i: usize,
        t: &[f64],
        x: &Array2<f64>,
    ) -> FieldWithDerivatives<Var> {
        let n = t.len();
        let nv = problem.n_v();
        let (mi, mt) = self.macro_inputs(t, x);
        let net = &self.macro_nets[i];
        let inp = tape.constant(mi);
        let tvars: Vec<Var> = mt.into_iter().map(|a| tape.constant(a)).collect();
        let (m, mtan) = net.forward(tape, &vars[net.offset..net.offset + net.n_blocks()], inp, &tvars);

        let (ui, ut) = self.micro_inputs(problem, t, x);
        let net = &self.micro_nets[i];
        let inp = tape.constant(ui);
        let tvars: Vec<Var> = ut.into_iter().map(|a| tape.constant(a)).collect();
        let (g, gtan) = net.forward(tape, &vars[net.offset..net.offset + net.n_blocks()], inp, &tvars);
        let post = |tape: &mut Tape, raw: Var| {
            let r = tape.reshape(raw, n, nv);
            let e = tape.mul_const(r, &problem.sqrt_m);
            tape.mat_const(e, &problem.ops.q)
        };
        let g = post(tape, g);
        let gtan: Vec<Var> = gtan.into_iter().map(|v| post(tape, v)).collect();
        FieldWithDerivatives {
            m,
            m_t: mtan[0],
            m_x: mtan[1..].to_vec(),
            g,
            g_t: gtan[0],
            g_x: gtan[1..].to_vec(),
        }
    }

    /// Macro outputs and derivatives at one point.
    pub fn macro_point(&self, i: usize, t: f64, x: &[f64]) -> PointDerivatives {
        let xa = Array2::from_shape_vec((1, self.dim), x.to_vec()).expect("point");
        let (mi, mt) = self.macro_inputs(&[t], &xa);
        let mut tape = Tape::new();
        let vars = self.register(&mut tape);
        let net = &self.macro_nets[i];
        let inp = tape.constant(mi);
        let tv: Vec<Var> = mt.into_iter().map(|a| tape.constant(a)).collect();
        let (out, tans) = net.forward(&mut tape, &vars[net.offset..net.offset + net.n_blocks()], inp, &tv);
        let row = |v: Var| tape.value(v).row(0).to_vec();
        PointDerivatives {
            value: row(out),
            d_t: row(tans[0]),
            d_x: tans[1..].iter().map(|&v| row(v)).collect(),
            d_v: Vec::new(),
        }
    }

    /// Micro network output times `M(v)` at one off-grid point, before the
    /// fluid projection (which needs the whole velocity grid).
    pub fn micro_point(&self, i: usize, t: f64, x: &[f64], v: &[f64]) -> PointDerivatives {
        let xa = Array2::from_shape_vec((1, self.dim), x.to_vec()).expect("point");
        let (mi, mt) = self.macro_inputs(&[t], &xa);
        let w = mi.ncols() + self.dim;
        let mut input = Array2::zeros((1, w));
        let mut tans = vec![Array2::zeros((1, w)); 1 + 2 * self.dim];
        for c in 0..mi.ncols() {
            input[[0, c]] = mi[[0, c]];
            for (k, tk) in mt.iter().enumerate() {
                tans[k][[0, c]] = tk[[0, c]];
            }
        }
        for a in 0..self.dim {
            input[[0, mi.ncols() + a]] = v[a] / self.v_max;
            tans[1 + self.dim + a][[0, mi.ncols() + a]] = 1.0 / self.v_max;
        }
        let mut tape = Tape::new();
        let vars = self.register(&mut tape);
        let net = &self.micro_nets[i];
        let inp = tape.constant(input);
        let tv: Vec<Var> = tans.into_iter().map(|a| tape.constant(a)).collect();
        let (out, outs) = net.forward(&mut tape, &vars[net.offset..net.offset + net.n_blocks()], inp, &tv);
        let env = crate::phase_space::sqrt_maxwellian(v);
        let raw = tape.scalar(out);
        let d = |k: usize| tape.scalar(outs[k]);
        PointDerivatives {
            value: vec![raw * env],
            d_t: vec![d(0) * env],
            d_x: (0..self.dim).map(|a| vec![d(1 + a) * env]).collect(),
            d_v: (0..self.dim)
                .map(|a| vec![(d(1 + self.dim + a) - 0.5 * v[a] * raw) * env])
                .collect(),
        }
    }
}

impl FieldModel for NetworkBundle {
    fn n_modes(&self) -> usize {
        self.macro_nets.len()
    }

    fn fields(
        &self,
        problem: &Problem,
        i: usize,
        t: &[f64],
        x: &Array2<f64>,
    ) -> Result<FieldWithDerivatives<Array2<f64>>> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape);
        let f = self.fields_on_tape(&mut tape, &vars, problem, i, t, x);
        let get = |v: Var| -> Result<Array2<f64>> {
            let a = tape.value(v);
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteOutput);
            }
            Ok(a.clone())
        };
        Ok(FieldWithDerivatives {
            m: get(f.m)?,
            m_t: get(f.m_t)?,
            m_x: f.m_x.iter().map(|&v| get(v)).collect::<Result<_>>()?,
            g: get(f.g)?,
            g_t: get(f.g_t)?,
            g_x: f.g_x.iter().map(|&v| get(v)).collect::<Result<_>>()?,
        })
    }
}

/// `g - pi_L(g)` for rows of velocity profiles.
pub fn postprocess_micro(problem: &Problem, g: &Array2<f64>) -> Array2<f64> {
    g.dot(problem.ops.q.as_ref())
}

/// Helper for callers holding bare coordinates: `x` as an `n x d` array.
pub fn points(x: &[Vec<f64>]) -> Array2<f64> {
    let d = x.first().map_or(1, |p| p.len());
    Array2::from_shape_fn((x.len(), d), |(p, a)| x[p][a])
}

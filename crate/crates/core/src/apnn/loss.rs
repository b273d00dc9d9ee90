use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::collocation::CollocationBatch;
use super::config::LossConfig;
use super::model::FieldModel;
use super::network::NetworkBundle;
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::gpc::mode_weight;
use crate::micromacro::{assemble_h, macro_residual, micro_residual, Algebra, Dense, FieldWithDerivatives};
use crate::par;
use crate::problem::Problem;

/// Extra operations the loss needs on top of the residual algebra.
pub trait LossAlgebra: Algebra {
    fn constant(&mut self, a: Array2<f64>) -> Self::T;
    fn mul(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    /// `sum w .* a.^2` as a `1 x 1` value.
    fn weighted_sum_sq(&mut self, a: &Self::T, w: &Arc<Array2<f64>>) -> Self::T;
    fn value(&self, a: &Self::T) -> f64;
}

impl LossAlgebra for Dense {
    fn constant(&mut self, a: Array2<f64>) -> Array2<f64> {
        a
    }
    fn mul(&mut self, a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        a * b
    }
    fn weighted_sum_sq(&mut self, a: &Array2<f64>, w: &Arc<Array2<f64>>) -> Array2<f64> {
        Array2::from_elem((1, 1), (a * a * w.as_ref()).sum())
    }
    fn value(&self, a: &Array2<f64>) -> f64 {
        a[[0, 0]]
    }
}

impl LossAlgebra for Tape {
    fn constant(&mut self, a: Array2<f64>) -> Var {
        Tape::constant(self, a)
    }
    fn mul(&mut self, a: &Var, b: &Var) -> Var {
        Tape::mul(self, *a, *b)
    }
    fn weighted_sum_sq(&mut self, a: &Var, w: &Arc<Array2<f64>>) -> Var {
        Tape::weighted_sum_sq(self, *a, w)
    }
    fn value(&self, a: &Var) -> f64 {
        self.scalar(*a)
    }
}

/// Names of the loss parts, in the order they are stored and summed.
///
/// The `grad_v` counterpart of `r1` is identically zero (the macro residual
/// does not depend on `v`) and is not stored.
pub const PART_NAMES: [&str; 11] = [
    "r1", "r2", "r_ini", "r_b", "r1_dx", "r2_dx", "r_ini_dx", "r_b_dx", "r2_dv", "r_ini_dv", "r_b_dv",
];

const R1: usize = 0;
const R2: usize = 1;
const RINI: usize = 2;
const RB: usize = 3;
const R1DX: usize = 4;
const R2DX: usize = 5;
const RINIDX: usize = 6;
const RBDX: usize = 7;
const R2DV: usize = 8;
const RINIDV: usize = 9;
const RBDV: usize = 10;

/// Loss parts of one gPC mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeLoss {
    /// 1-based mode index.
    pub mode: usize,
    /// `i^{2q}`.
    pub weight: f64,
    pub parts: [f64; 11],
    pub unweighted: f64,
    pub weighted: f64,
}

/// All components of the stochastic H1-type loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub modes: Vec<ModeLoss>,
    pub total: f64,
}

impl LossBreakdown {
    fn from_parts(parts: Vec<[f64; 11]>, q: u32) -> Result<Self> {
        let mut modes = Vec::with_capacity(parts.len());
        for (i, p) in parts.into_iter().enumerate() {
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteOutput);
            }
            let weight = mode_weight(i + 1, q);
            let unweighted: f64 = p.iter().sum();
            modes.push(ModeLoss { mode: i + 1, weight, parts: p, unweighted, weighted: weight * unweighted });
        }
        let total = modes.iter().map(|m| m.weighted).sum();
        Ok(Self { modes, total })
    }

    /// Sum over modes of the unweighted parts.
    pub fn unweighted_total(&self) -> f64 {
        self.modes.iter().map(|m| m.unweighted).sum()
    }

    /// Named part summed over modes with weights.
    pub fn part(&self, name: &str) -> f64 {
        let k = PART_NAMES.iter().position(|n| *n == name).expect("known part");
        self.modes.iter().map(|m| m.weight * m.parts[k]).sum()
    }

    /// Recomputes the total from the parts in storage order.
    pub fn check_additivity(&self) -> bool {
        let total: f64 = self
            .modes
            .iter()
            .map(|m| m.weight * m.parts.iter().sum::<f64>())
            .sum();
        total == self.total
    }

    pub fn all_nonnegative(&self) -> bool {
        self.modes.iter().all(|m| m.parts.iter().all(|p| *p >= 0.0))
    }

    fn add_shard(parts: &mut [[f64; 11]], shard: &[[f64; 11]]) {
        for (acc, s) in parts.iter_mut().zip(shard) {
            for (a, b) in acc.iter_mut().zip(s) {
                *a += b;
            }
        }
    }
}

type Eval<'a, A> =
    dyn FnMut(&mut A, usize, &[f64], &Array2<f64>) -> Result<FieldWithDerivatives<<A as Algebra>::T>> + 'a;

fn shifted(x: &Array2<f64>, axis: usize, by: f64) -> Array2<f64> {
    let mut y = x.clone();
    y.column_mut(axis).mapv_inplace(|c| c + by);
    y
}

fn pinned(x: &Array2<f64>, axis: usize, at: f64) -> Array2<f64> {
    let mut y = x.clone();
    y.column_mut(axis).fill(at);
    y
}

fn accumulate<A: LossAlgebra>(alg: &mut A, acc: &mut Option<A::T>, term: A::T) {
    *acc = Some(match acc.take() {
        None => term,
        Some(a) => alg.add(&a, &term),
    });
}

/// Every loss part for every mode on one batch, as algebra scalars.
pub fn loss_terms<A: LossAlgebra>(
    alg: &mut A,
    problem: &Problem,
    batch: &CollocationBatch,
    cfg: &LossConfig,
    eps: f64,
    eval: &mut Eval<'_, A>,
) -> Result<Vec<Vec<A::T>>> {
    let k = problem.modes();
    let d = problem.dim();
    let ops = &problem.ops;
    let coll = &problem.coll;
    let vrow = batch.v_row();
    let scaled = |w: f64| Arc::new(vrow.as_ref() * w);
    let w1 = Arc::new(Array2::from_elem((1, 1), batch.w_interior));
    let w2 = scaled(batch.w_interior);
    let wini = scaled(batch.w_initial);
    let wb = scaled(batch.w_boundary);
    let mut terms: Vec<Vec<Option<A::T>>> = vec![vec![None; PART_NAMES.len()]; k];

    let n = batch.n_interior();
    if n > 0 {
        let t = &batch.interior_t;
        let x = &batch.interior_x;
        let center: Vec<_> = (0..k).map(|i| eval(alg, i, t, x)).collect::<Result<_>>()?;
        let mut d2c = Vec::with_capacity(k);
        for i in 0..k {
            let d1 = macro_residual(alg, ops, &center[i], eps);
            let d2 = micro_residual(alg, ops, coll, &center, i, eps);
            terms[i][R1] = Some(alg.weighted_sum_sq(&d1, &w1));
            terms[i][R2] = Some(alg.weighted_sum_sq(&d2, &w2));
            d2c.push(d2);
        }
        if cfg.h1 {
            let h = cfg.fd_step;
            for a in 0..d {
                let xp = shifted(x, a, h);
                let xm = shifted(x, a, -h);
                let fp: Vec<_> = (0..k).map(|i| eval(alg, i, t, &xp)).collect::<Result<_>>()?;
                let fm: Vec<_> = (0..k).map(|i| eval(alg, i, t, &xm)).collect::<Result<_>>()?;
                for i in 0..k {
                    let p1 = macro_residual(alg, ops, &fp[i], eps);
                    let m1 = macro_residual(alg, ops, &fm[i], eps);
                    let diff = alg.sub(&p1, &m1);
                    let g1 = alg.scale(&diff, 0.5 / h);
                    let s = alg.weighted_sum_sq(&g1, &w1);
                    accumulate(alg, &mut terms[i][R1DX], s);
                    let p2 = micro_residual(alg, ops, coll, &fp, i, eps);
                    let m2 = micro_residual(alg, ops, coll, &fm, i, eps);
                    let diff = alg.sub(&p2, &m2);
                    let g2 = alg.scale(&diff, 0.5 / h);
                    let s = alg.weighted_sum_sq(&g2, &w2);
                    accumulate(alg, &mut terms[i][R2DX], s);
                }
            }
            for (i, d2) in d2c.iter().enumerate() {
                for a in 0..d {
                    let dv = alg.mat(d2, &ops.dv[a]);
                    let s = alg.weighted_sum_sq(&dv, &w2);
                    accumulate(alg, &mut terms[i][R2DV], s);
                }
            }
        }
    }

    let n0 = batch.initial_x.nrows();
    if n0 > 0 {
        let t0 = vec![0.0; n0];
        let x = &batch.initial_x;
        let x0: Array1<f64> = x.column(0).to_owned();
        for i in 0..k {
            let f = eval(alg, i, &t0, x)?;
            let (hi, hix) = problem.initial_field(i, &x0);
            let h = assemble_h(alg, ops, &f.m, &f.g, eps);
            let c = alg.constant(hi);
            let dini = alg.sub(&h, &c);
            terms[i][RINI] = Some(alg.weighted_sum_sq(&dini, &wini));
            if cfg.h1 {
                for a in 0..d {
                    let mut hx = assemble_h(alg, ops, &f.m_x[a], &f.g_x[a], eps);
                    if a == 0 {
                        let c = alg.constant(hix.clone());
                        hx = alg.sub(&hx, &c);
                    }
                    let s = alg.weighted_sum_sq(&hx, &wini);
                    accumulate(alg, &mut terms[i][RINIDX], s);
                    let dv = alg.mat(&dini, &ops.dv[a]);
                    let s = alg.weighted_sum_sq(&dv, &wini);
                    accumulate(alg, &mut terms[i][RINIDV], s);
                }
            }
        }
    }

    let nb = batch.boundary_t.len();
    if nb > 0 {
        let t = &batch.boundary_t;
        for i in 0..k {
            let mut db: Option<A::T> = None;
            let mut db_dx: Option<A::T> = None;
            let mut db_dv: Option<A::T> = None;
            for a in 0..d {
                let xp = pinned(&batch.boundary_x[a], a, PI);
                let xm = pinned(&batch.boundary_x[a], a, -PI);
                let fp = eval(alg, i, t, &xp)?;
                let fm = eval(alg, i, t, &xm)?;
                let hp = assemble_h(alg, ops, &fp.m, &fp.g, eps);
                let hm = assemble_h(alg, ops, &fm.m, &fm.g, eps);
                let diff = alg.sub(&hp, &hm);
                let sq = alg.mul(&diff, &diff);
                accumulate(alg, &mut db, sq);
                if cfg.h1 {
                    for c in 0..d {
                        let gp = assemble_h(alg, ops, &fp.m_x[c], &fp.g_x[c], eps);
                        let gm = assemble_h(alg, ops, &fm.m_x[c], &fm.g_x[c], eps);
                        let dd = alg.sub(&gp, &gm);
                        let sq = alg.mul(&dd, &dd);
                        accumulate(alg, &mut db_dx, sq);
                        let dv = alg.mat(&diff, &ops.dv[c]);
                        let sq = alg.mul(&dv, &dv);
                        accumulate(alg, &mut db_dv, sq);
                    }
                }
            }
            if let Some(db) = db {
                terms[i][RB] = Some(alg.weighted_sum_sq(&db, &wb));
            }
            if let Some(x) = db_dx {
                terms[i][RBDX] = Some(alg.weighted_sum_sq(&x, &wb));
            }
            if let Some(x) = db_dv {
                terms[i][RBDV] = Some(alg.weighted_sum_sq(&x, &wb));
            }
        }
    }

    Ok(terms
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|t| t.unwrap_or_else(|| alg.constant(Array2::zeros((1, 1)))))
                .collect()
        })
        .collect())
}

fn values<A: LossAlgebra>(alg: &A, terms: &[Vec<A::T>]) -> Vec<[f64; 11]> {
    terms
        .iter()
        .map(|row| {
            let mut p = [0.0; 11];
            for (k, t) in row.iter().enumerate() {
                p[k] = alg.value(t);
            }
            p
        })
        .collect()
}

/// Loss of any field model, without gradients.
pub fn assemble_loss(
    model: &dyn FieldModel,
    problem: &Problem,
    batch: &CollocationBatch,
    cfg: &LossConfig,
    eps: f64,
) -> Result<LossBreakdown> {
    cfg.validate()?;
    let shards = par::map_range(cfg.shards, |s| -> Result<Vec<[f64; 11]>> {
        let sub = batch.shard(s, cfg.shards);
        let mut alg = Dense;
        let mut eval = |_: &mut Dense, i: usize, t: &[f64], x: &Array2<f64>| model.fields(problem, i, t, x);
        let terms = loss_terms(&mut alg, problem, &sub, cfg, eps, &mut eval)?;
        Ok(values(&alg, &terms))
    });
    let mut parts = vec![[0.0; 11]; problem.modes()];
    for s in shards {
        LossBreakdown::add_shard(&mut parts, &s?);
    }
    LossBreakdown::from_parts(parts, problem.kernel.q_weight)
}

/// Loss of a network bundle and its gradient with respect to every
/// parameter block. Shards run independently and are reduced in order.
pub fn loss_and_gradient(
    bundle: &NetworkBundle,
    problem: &Problem,
    batch: &CollocationBatch,
    cfg: &LossConfig,
    eps: f64,
) -> Result<(LossBreakdown, Vec<Array2<f64>>)> {
    cfg.validate()?;
    let q = problem.kernel.q_weight;
    let shards = par::map_range(cfg.shards, |s| -> Result<(Vec<[f64; 11]>, Vec<Option<Array2<f64>>>)> {
        let sub = batch.shard(s, cfg.shards);
        let mut tape = Tape::new();
        let vars = bundle.register(&mut tape);
        let mut eval = |tape: &mut Tape, i: usize, t: &[f64], x: &Array2<f64>| {
            Ok(bundle.fields_on_tape(tape, &vars, problem, i, t, x))
        };
        let terms = loss_terms(&mut tape, problem, &sub, cfg, eps, &mut eval)?;
        let mut total: Option<Var> = None;
        for (i, row) in terms.iter().enumerate() {
            let mut sum = row[0];
            for t in &row[1..] {
                sum = tape.add(sum, *t);
            }
            let w = tape.scale(sum, mode_weight(i + 1, q));
            total = Some(match total {
                None => w,
                Some(acc) => tape.add(acc, w),
            });
        }
        let total = total.expect("at least one mode");
        let vals = values(&tape, &terms);
        let grads = tape.gradients(total, bundle.params.len());
        Ok((vals, grads))
    });
    let mut parts = vec![[0.0; 11]; problem.modes()];
    let mut grads: Vec<Array2<f64>> = bundle.params.iter().map(|p| Array2::zeros(p.dim())).collect();
    for s in shards {
        let (v, g) = s?;
        LossBreakdown::add_shard(&mut parts, &v);
        for (acc, gi) in grads.iter_mut().zip(g) {
            if let Some(gi) = gi {
                *acc += &gi;
            }
        }
    }
    if grads.iter().any(|g| g.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFiniteOutput);
    }
    Ok((LossBreakdown::from_parts(parts, q)?, grads))
}

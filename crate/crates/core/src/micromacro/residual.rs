use std::io::Write;
use std::sync::Arc;

use ndarray::Array2;

use super::ops::{CollisionOps, VelocityOperators};
use crate::error::{Error, Result};

/// Linear operations the residuals are built from. Implemented for plain
/// arrays and for the differentiation tape, so every residual formula exists
/// exactly once.
pub trait Algebra {
    type T: Clone;
    fn add(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn sub(&mut self, a: &Self::T, b: &Self::T) -> Self::T;
    fn scale(&mut self, a: &Self::T, c: f64) -> Self::T;
    /// `a * m` with a constant matrix.
    fn mat(&mut self, a: &Self::T, m: &Arc<Array2<f64>>) -> Self::T;
}

/// Plain dense arithmetic.
#[derive(Debug, Default, Clone, Copy)]
pub struct Dense;

impl Algebra for Dense {
    type T = Array2<f64>;
    fn add(&mut self, a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        a + b
    }
    fn sub(&mut self, a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
        a - b
    }
    fn scale(&mut self, a: &Array2<f64>, c: f64) -> Array2<f64> {
        a * c
    }
    fn mat(&mut self, a: &Array2<f64>, m: &Arc<Array2<f64>>) -> Array2<f64> {
        a.dot(m.as_ref())
    }
}

/// Values and first derivatives of one gPC mode at a set of points.
///
/// Macro slots are `n x (d+2)`, micro slots `n x N_v`.
#[derive(Debug, Clone)]
pub struct FieldWithDerivatives<T> {
    pub m: T,
    pub m_t: T,
    pub m_x: Vec<T>,
    pub g: T,
    pub g_t: T,
    pub g_x: Vec<T>,
}

/// `d1 = dt m + div <v h~ phi M> + eps div <v g phi M>`.
pub fn macro_residual<A: Algebra>(
    alg: &mut A,
    ops: &VelocityOperators,
    f: &FieldWithDerivatives<A::T>,
    eps: f64,
) -> A::T {
    let mut d1 = f.m_t.clone();
    for a in 0..ops.dim {
        let fm = alg.mat(&f.m_x[a], &ops.flux_macro[a]);
        d1 = alg.add(&d1, &fm);
    }
    if eps != 0.0 {
        let mut micro: Option<A::T> = None;
        for a in 0..ops.dim {
            let fg = alg.mat(&f.g_x[a], &ops.flux_micro[a]);
            micro = Some(match micro {
                None => fg,
                Some(acc) => alg.add(&acc, &fg),
            });
        }
        if let Some(mf) = micro {
            let s = alg.scale(&mf, eps);
            d1 = alg.add(&d1, &s);
        }
    }
    d1
}

/// `d2 = eps dt g_i + (I - pi)(v.grad h~_i) + eps (I - pi)(v.grad g_i) - L_i(g)`.
pub fn micro_residual<A: Algebra>(
    alg: &mut A,
    ops: &VelocityOperators,
    coll: &CollisionOps,
    fields: &[FieldWithDerivatives<A::T>],
    i: usize,
    eps: f64,
) -> A::T {
    let f = &fields[i];
    let mut d2 = alg.mat(&f.m_x[0], &ops.transport_macro[0]);
    for a in 1..ops.dim {
        let t = alg.mat(&f.m_x[a], &ops.transport_macro[a]);
        d2 = alg.add(&d2, &t);
    }
    if eps != 0.0 {
        let mut eps_part = f.g_t.clone();
        for a in 0..ops.dim {
            let t = alg.mat(&f.g_x[a], &ops.transport_micro[a]);
            eps_part = alg.add(&eps_part, &t);
        }
        let s = alg.scale(&eps_part, eps);
        d2 = alg.add(&d2, &s);
    }
    for (k, fk) in fields.iter().enumerate() {
        if let Some(b) = coll.block_t(i, k) {
            let lg = alg.mat(&fk.g, b);
            d2 = alg.sub(&d2, &lg);
        }
    }
    d2
}

/// `h = m Phi + eps g` on the velocity grid.
pub fn assemble_h<A: Algebra>(alg: &mut A, ops: &VelocityOperators, m: &A::T, g: &A::T, eps: f64) -> A::T {
    let ht = alg.mat(m, &ops.phi);
    let eg = alg.scale(g, eps);
    alg.add(&ht, &eg)
}

/// Rejects micro fields with a fluid component above `tol` (max moment).
pub fn check_projection(ops: &VelocityOperators, g: &Array2<f64>, tol: f64) -> Result<()> {
    let mom = g.dot(ops.moment.as_ref());
    let norm = mom.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if norm > tol {
        return Err(Error::ProjectionNotApplied { norm, tol });
    }
    Ok(())
}

/// Dense micro residual after checking every mode is orthogonal to the
/// collision invariants.
pub fn micro_residual_checked(
    ops: &VelocityOperators,
    coll: &CollisionOps,
    fields: &[FieldWithDerivatives<Array2<f64>>],
    i: usize,
    eps: f64,
    tol: f64,
) -> Result<Array2<f64>> {
    for f in fields {
        check_projection(ops, &f.g, tol)?;
    }
    Ok(micro_residual(&mut Dense, ops, coll, fields, i, eps))
}

/// `A = -(d1 Phi + d2)`, the source that makes the assembled field solve
/// the kinetic equation.
pub fn recombine_residual(ops: &VelocityOperators, d1: &Array2<f64>, d2: &Array2<f64>) -> Array2<f64> {
    -(d1.dot(ops.phi.as_ref()) + d2)
}

/// `dt h_i + v.grad h_i - (1/eps) sum_k L_ik h_k` for `h = m Phi + eps g`.
pub fn full_residual(
    ops: &VelocityOperators,
    coll: &CollisionOps,
    fields: &[FieldWithDerivatives<Array2<f64>>],
    i: usize,
    eps: f64,
) -> Array2<f64> {
    let alg = &mut Dense;
    let f = &fields[i];
    let mut r = assemble_h(alg, ops, &f.m_t, &f.g_t, eps);
    for a in 0..ops.dim {
        let hx = assemble_h(alg, ops, &f.m_x[a], &f.g_x[a], eps);
        r = r + hx.dot(ops.velocity[a].as_ref());
    }
    for (k, fk) in fields.iter().enumerate() {
        if let Some(b) = coll.block_t(i, k) {
            let hk = assemble_h(alg, ops, &fk.m, &fk.g, eps);
            r = r - hk.dot(b.as_ref()) / eps;
        }
    }
    r
}

/// `h(0) - h_I`.
pub fn initial_residual(h0: &Array2<f64>, h_init: &Array2<f64>) -> Array2<f64> {
    h0 - h_init
}

/// Sum over axes of the squared mismatch between opposite faces,
/// `sum_a (h(x_a = pi) - h(x_a = -pi))^2`.
pub fn boundary_residual(pairs: &[(Array2<f64>, Array2<f64>)]) -> Array2<f64> {
    let mut out = Array2::zeros(pairs[0].0.dim());
    for (plus, minus) in pairs {
        let d = plus - minus;
        out = out + &d * &d;
    }
    out
}

/// Writes `t,x...,v...,mode,d1_0..d1_{d+1},d2` for every point and node.
#[allow(clippy::too_many_arguments)]
pub fn write_residual_csv<W: Write>(
    mut w: W,
    points: &[(f64, Vec<f64>)],
    nodes: &Array2<f64>,
    mode: usize,
    d1: &Array2<f64>,
    d2: &Array2<f64>,
) -> Result<()> {
    let d = nodes.ncols();
    if mode == 0 {
        let mut head = String::from("t");
        for a in 0..d {
            head.push_str(&format!(",x{a}"));
        }
        for a in 0..d {
            head.push_str(&format!(",v{a}"));
        }
        head.push_str(",mode");
        for k in 0..d1.ncols() {
            head.push_str(&format!(",d1_{k}"));
        }
        head.push_str(",d2");
        writeln!(w, "{head}")?;
    }
    for (p, (t, x)) in points.iter().enumerate() {
        for j in 0..nodes.nrows() {
            let mut line = format!("{t:e}");
            for c in x {
                line.push_str(&format!(",{c:e}"));
            }
            for c in nodes.row(j) {
                line.push_str(&format!(",{c:e}"));
            }
            line.push_str(&format!(",{}", mode + 1));
            for c in d1.row(p) {
                line.push_str(&format!(",{c:e}"));
            }
            line.push_str(&format!(",{:e}", d2[[p, j]]));
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}

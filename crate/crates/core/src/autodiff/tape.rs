use std::sync::Arc;

use ndarray::{Array2, Axis};

use crate::micromacro::Algebra;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    MatConst(Var, Arc<Array2<f64>>),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    AddBias(Var, Var),
    Tanh(Var),
    OneMinusSq(Var),
    Mul(Var, Var),
    MulConst(Var, Arc<Array2<f64>>),
    Reshape(Var),
    WeightedSumSq(Var, Arc<Array2<f64>>),
    SliceRows(Var, usize),
}

#[derive(Debug, Clone)]
struct Node {
    value: Array2<f64>,
    op: Op,
}

/// Arena of matrix-valued nodes recorded in evaluation order; one reverse
/// sweep yields gradients with respect to every parameter leaf.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[[0, 0]]
    }

    /// Constant input.
    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Trainable leaf tagged with its parameter-block index.
    pub fn param(&mut self, index: usize, value: Array2<f64>) -> Var {
        self.push(value, Op::Param(index))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).dot(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn mat_const(&mut self, a: Var, m: &Arc<Array2<f64>>) -> Var {
        let v = self.value(a).dot(m.as_ref());
        self.push(v, Op::MatConst(a, m.clone()))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(v, Op::Sub(a, b))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a) * c;
        self.push(v, Op::Scale(a, c))
    }

    /// Adds a `1 x n` row to every row of `a`.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let v = self.value(a) + self.value(bias);
        self.push(v, Op::AddBias(a, bias))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    /// `1 - a^2`, the derivative of tanh expressed through its output.
    pub fn one_minus_sq(&mut self, a: Var) -> Var {
        let v = self.value(a).mapv(|x| 1.0 - x * x);
        self.push(v, Op::OneMinusSq(a))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::Mul(a, b))
    }

    /// Elementwise product with a constant, broadcast like ndarray.
    pub fn mul_const(&mut self, a: Var, c: &Arc<Array2<f64>>) -> Var {
        let v = self.value(a) * c.as_ref();
        self.push(v, Op::MulConst(a, c.clone()))
    }

    /// Row-major reshape.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let src = self.value(a);
        let flat: Vec<f64> = src.iter().cloned().collect();
        let v = Array2::from_shape_vec((rows, cols), flat).expect("reshape preserves size");
        self.push(v, Op::Reshape(a))
    }

    /// `sum w .* a.^2` as a `1 x 1` node; `w` broadcasts against `a`.
    pub fn weighted_sum_sq(&mut self, a: Var, w: &Arc<Array2<f64>>) -> Var {
        let x = self.value(a);
        let s = (x * x * w.as_ref()).sum();
        self.push(Array2::from_elem((1, 1), s), Op::WeightedSumSq(a, w.clone()))
    }

    /// Rows `start .. start + len`.
    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a).slice(ndarray::s![start..start + len, ..]).to_owned();
        self.push(v, Op::SliceRows(a, start))
    }

    /// Gradients of the scalar `out` with respect to each parameter leaf,
    /// returned as `(parameter index, gradient)` accumulated per index.
    pub fn gradients(&self, out: Var, n_params: usize) -> Vec<Option<Array2<f64>>> {
        let mut adj: Vec<Option<Array2<f64>>> = vec![None; out.0 + 1];
        adj[out.0] = Some(Array2::ones(self.value(out).dim()));
        let mut result: Vec<Option<Array2<f64>>> = vec![None; n_params];
        fn acc(adj: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
            match &mut adj[v.0] {
                Some(a) => *a += &g,
                slot => *slot = Some(g),
            }
        }
        for idx in (0..=out.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Param(p) => match &mut result[*p] {
                    Some(r) => *r += &g,
                    slot => *slot = Some(g),
                },
                Op::MatMul(a, b) => {
                    let ga = g.dot(&self.value(*b).t());
                    let gb = self.value(*a).t().dot(&g);
                    acc(&mut adj, *a, ga);
                    acc(&mut adj, *b, gb);
                }
                Op::MatConst(a, m) => acc(&mut adj, *a, g.dot(&m.t())),
                Op::Add(a, b) => {
                    acc(&mut adj, *b, g.clone());
                    acc(&mut adj, *a, g);
                }
                Op::Sub(a, b) => {
                    acc(&mut adj, *b, -&g);
                    acc(&mut adj, *a, g);
                }
                Op::Scale(a, c) => acc(&mut adj, *a, g * *c),
                Op::AddBias(a, b) => {
                    let gb = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(&mut adj, *b, gb);
                    acc(&mut adj, *a, g);
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    acc(&mut adj, *a, &g * &y.mapv(|t| 1.0 - t * t));
                }
                Op::OneMinusSq(a) => {
                    let x = self.value(*a);
                    acc(&mut adj, *a, &g * &x.mapv(|t| -2.0 * t));
                }
                Op::Mul(a, b) => {
                    let ga = &g * self.value(*b);
                    let gb = &g * self.value(*a);
                    acc(&mut adj, *a, ga);
                    acc(&mut adj, *b, gb);
                }
                Op::MulConst(a, c) => {
                    let full = &g * c.as_ref();
                    acc(&mut adj, *a, reduce_to(full, self.value(*a).dim()));
                }
                Op::Reshape(a) => {
                    let (r, c) = self.value(*a).dim();
                    let flat: Vec<f64> = g.iter().cloned().collect();
                    acc(&mut adj, *a, Array2::from_shape_vec((r, c), flat).expect("same size"));
                }
                Op::WeightedSumSq(a, w) => {
                    let s = g[[0, 0]];
                    let x = self.value(*a);
                    let full = x * w.as_ref() * (2.0 * s);
                    acc(&mut adj, *a, full);
                }
                Op::SliceRows(a, start) => {
                    let mut full = Array2::zeros(self.value(*a).dim());
                    let len = g.nrows();
                    full.slice_mut(ndarray::s![*start..*start + len, ..]).assign(&g);
                    acc(&mut adj, *a, full);
                }
            }
        }
        result
    }
}

fn reduce_to(g: Array2<f64>, dim: (usize, usize)) -> Array2<f64> {
    let mut g = g;
    if g.nrows() != dim.0 {
        g = g.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
    if g.ncols() != dim.1 {
        g = g.sum_axis(Axis(1)).insert_axis(Axis(1));
    }
    g
}

impl Algebra for Tape {
    type T = Var;
    fn add(&mut self, a: &Var, b: &Var) -> Var {
        Tape::add(self, *a, *b)
    }
    fn sub(&mut self, a: &Var, b: &Var) -> Var {
        Tape::sub(self, *a, *b)
    }
    fn scale(&mut self, a: &Var, c: f64) -> Var {
        Tape::scale(self, *a, c)
    }
    fn mat(&mut self, a: &Var, m: &Arc<Array2<f64>>) -> Var {
        self.mat_const(*a, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matmul_gradient() {
        let mut t = Tape::new();
        let x = t.constant(array![[1.0, 2.0]]);
        let w = t.param(0, array![[3.0], [4.0]]);
        let y = t.matmul(x, w);
        let one = Arc::new(array![[1.0]]);
        let l = t.weighted_sum_sq(y, &one);
        assert_eq!(t.scalar(l), 121.0);
        let g = t.gradients(l, 1);
        // d/dw (x w)^2 = 2 (x w) x^T
        assert_eq!(g[0].as_ref().unwrap(), &array![[22.0], [44.0]]);
    }
}

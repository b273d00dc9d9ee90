use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::tape::{Tape, Var};

/// Fully connected tanh network with a linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    /// Index of the first parameter block of this network in the global store.
    pub offset: usize,
}

impl Mlp {
    pub fn new(sizes: Vec<usize>, offset: usize) -> Self {
        assert!(sizes.len() >= 2);
        Self { sizes, offset }
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Number of parameter blocks (weight and bias per layer).
    pub fn n_blocks(&self) -> usize {
        2 * self.n_layers()
    }

    pub fn n_params(&self) -> usize {
        (0..self.n_layers()).map(|l| (self.sizes[l] + 1) * self.sizes[l + 1]).sum()
    }

    /// Block shapes in order: `W_0, b_0, W_1, b_1, ...`.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let mut s = Vec::new();
        for l in 0..self.n_layers() {
            s.push((self.sizes[l], self.sizes[l + 1]));
            s.push((1, self.sizes[l + 1]));
        }
        s
    }

    /// Xavier-normal weights, zero biases.
    pub fn init<R: Rng>(&self, rng: &mut R) -> Vec<Array2<f64>> {
        self.shapes()
            .into_iter()
            .map(|(r, c)| {
                if r == 1 {
                    Array2::zeros((r, c))
                } else {
                    let std = (2.0 / (r + c) as f64).sqrt();
                    let n = Normal::new(0.0, std).expect("positive std");
                    Array2::from_shape_fn((r, c), |_| n.sample(rng))
                }
            })
            .collect()
    }

    /// Forward pass recording values and forward tangents of the inputs.
    ///
    /// `params` are the tape handles of this network's blocks. Returns the
    /// output and one output tangent per input tangent.
    pub fn forward(&self, tape: &mut Tape, params: &[Var], input: Var, tangents: &[Var]) -> (Var, Vec<Var>) {
        let mut a = input;
        let mut ta: Vec<Var> = tangents.to_vec();
        for l in 0..self.n_layers() {
            let w = params[2 * l];
            let b = params[2 * l + 1];
            let z = tape.matmul(a, w);
            let z = tape.add_bias(z, b);
            let tz: Vec<Var> = ta.iter().map(|&t| tape.matmul(t, w)).collect();
            if l + 1 == self.n_layers() {
                return (z, tz);
            }
            a = tape.tanh(z);
            let slope = tape.one_minus_sq(a);
            ta = tz.into_iter().map(|t| tape.mul(slope, t)).collect();
        }
        unreachable!("at least one layer")
    }
}

use ndarray::Array2;

use crate::error::Result;
use crate::micromacro::FieldWithDerivatives;
use crate::problem::Problem;

/// Anything that yields per-mode fields with `t` and `x` derivatives at
/// arbitrary points: trained networks, exact solutions, interpolants.
pub trait FieldModel: Sync {
    fn n_modes(&self) -> usize;

    /// Fields of mode `i` at `(t[p], x.row(p))`, on the velocity grid.
    fn fields(
        &self,
        problem: &Problem,
        i: usize,
        t: &[f64],
        x: &Array2<f64>,
    ) -> Result<FieldWithDerivatives<Array2<f64>>>;
}

/// The field that vanishes identically.
#[derive(Debug, Clone, Copy)]
pub struct ZeroModel {
    pub modes: usize,
}

impl FieldModel for ZeroModel {
    fn n_modes(&self) -> usize {
        self.modes
    }

    fn fields(
        &self,
        problem: &Problem,
        _i: usize,
        t: &[f64],
        _x: &Array2<f64>,
    ) -> Result<FieldWithDerivatives<Array2<f64>>> {
        let n = t.len();
        let nb = problem.n_moments();
        let nv = problem.n_v();
        let d = problem.dim();
        Ok(FieldWithDerivatives {
            m: Array2::zeros((n, nb)),
            m_t: Array2::zeros((n, nb)),
            m_x: vec![Array2::zeros((n, nb)); d],
            g: Array2::zeros((n, nv)),
            g_t: Array2::zeros((n, nv)),
            g_x: vec![Array2::zeros((n, nv)); d],
        })
    }
}

use std::io::Write;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::micromacro::VelocityOperators;
use crate::phase_space::{GridFunction, H1Field, PhaseGrid, SpatialGrid, VelocityGrid};

/// Stored snapshots of `(m_i, g_i)` on a spatial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: SpatialGrid,
    pub eps: f64,
    pub times: Vec<f64>,
    /// `[snapshot][mode]`, each `N_x x (d+2)`.
    pub m: Vec<Vec<Array2<f64>>>,
    /// `[snapshot][mode]`, each `N_x x N_v`.
    pub g: Vec<Vec<Array2<f64>>>,
}

impl Trajectory {
    pub fn n_modes(&self) -> usize {
        self.m.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `h = m Phi + eps g` of mode `i` at snapshot `s`.
    pub fn h(&self, ops: &VelocityOperators, s: usize, i: usize) -> Array2<f64> {
        self.m[s][i].dot(ops.phi.as_ref()) + &self.g[s][i] * self.eps
    }

    /// Largest moment of any micro snapshot.
    pub fn max_projection(&self, ops: &VelocityOperators) -> f64 {
        self.g
            .iter()
            .flatten()
            .map(|g| g.dot(ops.moment.as_ref()).iter().fold(0.0f64, |a, x| a.max(x.abs())))
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry of any field, a cheap stability measure.
    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .chain(self.g.iter())
            .flatten()
            .flat_map(|a| a.iter())
            .fold(0.0f64, |a, x| a.max(x.abs()))
    }

    /// Mode fields of snapshot `s` with central-difference derivatives.
    pub fn h1_fields(&self, ops: &VelocityOperators, vgrid: &VelocityGrid, s: usize) -> Result<Vec<H1Field>> {
        let phase = Arc::new(PhaseGrid::new(self.grid.clone(), vgrid.clone())?);
        (0..self.n_modes())
            .map(|i| {
                let f = GridFunction::new(phase.clone(), self.h(ops, s, i))?;
                Ok(H1Field::from_differences(f))
            })
            .collect()
    }

    pub fn check_compatible(&self, k: usize, n_v: usize) -> Result<()> {
        if self.n_modes() != k {
            return Err(Error::GridMismatch(format!("{} trajectory modes vs {k}", self.n_modes())));
        }
        if let Some(g) = self.g.first().and_then(|s| s.first()) {
            if g.ncols() != n_v {
                return Err(Error::GridMismatch(format!("{} velocity nodes vs {n_v}", g.ncols())));
            }
        }
        Ok(())
    }

    /// One row per snapshot, mode and spatial node:
    /// `t,mode,x_0..,m_0..,g_0..`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.grid.dim();
        let nb = d + 2;
        let nv = self.g.first().and_then(|s| s.first()).map_or(0, |g| g.ncols());
        let mut header = vec!["t".to_string(), "mode".to_string()];
        header.extend((0..d).map(|a| format!("x{a}")));
        header.extend((0..nb).map(|b| format!("m{b}")));
        header.extend((0..nv).map(|j| format!("g{j}")));
        writeln!(w, "{}", header.join(","))?;
        for (s, &t) in self.times.iter().enumerate() {
            for i in 0..self.n_modes() {
                for p in 0..self.grid.len() {
                    let mut row = vec![format!("{t:.9e}"), format!("{}", i + 1)];
                    row.extend(self.grid.coords(p).iter().map(|x| format!("{x:.9e}")));
                    row.extend(self.m[s][i].row(p).iter().map(|x| format!("{x:.12e}")));
                    row.extend(self.g[s][i].row(p).iter().map(|x| format!("{x:.12e}")));
                    writeln!(w, "{}", row.join(","))?;
                }
            }
        }
        Ok(())
    }
}

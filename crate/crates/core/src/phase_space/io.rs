//! Serialization of grid functions: CSV triples and a flat little-endian
//! binary layout.

use std::io::{Read, Write};
use std::sync::Arc;

use ndarray::Array2;

use super::field::GridFunction;
use super::grid::PhaseGrid;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"APNNGF01";

/// Writes `x_index,v_index,value` lines with a header.
pub fn write_csv<W: Write>(h: &GridFunction, mut w: W) -> Result<()> {
    writeln!(w, "x_index,v_index,value")?;
    for (p, row) in h.values().outer_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            writeln!(w, "{p},{j},{v:e}")?;
        }
    }
    Ok(())
}

pub fn read_csv<R: Read>(grid: Arc<PhaseGrid>, mut r: R) -> Result<GridFunction> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    let mut values = Array2::zeros(grid.shape());
    for (ln, line) in s.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        let bad = || Error::ShapeMismatch(format!("malformed CSV line {}", ln + 1));
        if parts.len() != 3 {
            return Err(bad());
        }
        let p: usize = parts[0].trim().parse().map_err(|_| bad())?;
        let j: usize = parts[1].trim().parse().map_err(|_| bad())?;
        let v: f64 = parts[2].trim().parse().map_err(|_| bad())?;
        let cell = values.get_mut([p, j]).ok_or_else(bad)?;
        *cell = v;
    }
    GridFunction::new(grid, values)
}

/// Magic, `n_x_total`, `n_v_total` as u64, then row-major f64 values.
pub fn write_binary<W: Write>(h: &GridFunction, mut w: W) -> Result<()> {
    let (nx, nv) = h.values().dim();
    w.write_all(MAGIC)?;
    w.write_all(&(nx as u64).to_le_bytes())?;
    w.write_all(&(nv as u64).to_le_bytes())?;
    for v in h.values().iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(grid: Arc<PhaseGrid>, mut r: R) -> Result<GridFunction> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ShapeMismatch("not a grid-function file".into()));
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let nx = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let nv = u64::from_le_bytes(buf) as usize;
    let mut data = Vec::with_capacity(nx * nv);
    for _ in 0..nx * nv {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    let values = Array2::from_shape_vec((nx, nv), data)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    GridFunction::new(grid, values)
}

/// Dense matrix dump: magic, rows, cols, row-major f64.
pub fn write_matrix<W: Write>(m: &Array2<f64>, mut w: W) -> Result<()> {
    w.write_all(b"APNNMAT1")?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for v in m.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

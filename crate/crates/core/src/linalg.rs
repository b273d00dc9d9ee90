//! Thin bridges between `ndarray` storage and `nalgebra` factorizations.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigen-decomposition of the symmetric part of `a`, eigenvalues ascending.
/// Eigenvectors are the columns of the returned matrix.
pub fn sym_eig(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let m = to_na(a);
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let n = a.nrows();
    let mut vecs = Array2::zeros((n, order.len()));
    for (c, &i) in order.iter().enumerate() {
        for r in 0..n {
            vecs[[r, c]] = eig.eigenvectors[(r, i)];
        }
    }
    (vals, vecs)
}

/// Largest eigenvalue of the symmetric part of `a`.
pub fn lambda_max(a: &Array2<f64>) -> f64 {
    let (v, _) = sym_eig(a);
    v[v.len() - 1]
}

/// Smallest eigenvalue of the pencil `(a, b)` with `b` symmetric positive
/// definite.
pub fn generalized_min(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let (bv, bvec) = sym_eig(b);
    let n = b.nrows();
    // b^{-1/2}
    let mut inv_sqrt = Array2::zeros((n, n));
    for k in 0..n {
        let s = 1.0 / bv[k].max(f64::MIN_POSITIVE).sqrt();
        for i in 0..n {
            for j in 0..n {
                inv_sqrt[[i, j]] += bvec[[i, k]] * s * bvec[[j, k]];
            }
        }
    }
    let m = inv_sqrt.dot(a).dot(&inv_sqrt);
    sym_eig(&m).0[0]
}

/// Solves `a x = b` for square `a` by LU; `None` when singular.
pub fn solve(a: &Array2<f64>, b: &Array2<f64>) -> Option<Array2<f64>> {
    let lu = to_na(a).lu();
    lu.solve(&to_na(b)).map(|x| from_na(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn eig_sorted() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (v, _) = sym_eig(&a);
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_pencil() {
        let a = array![[2.0, 0.0], [0.0, 6.0]];
        let b = array![[1.0, 0.0], [0.0, 4.0]];
        assert!((generalized_min(&a, &b) - 1.5).abs() < 1e-14);
    }
}

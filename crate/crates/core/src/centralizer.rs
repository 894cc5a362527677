//! Centralizers in `GL_n`, decided at the Lie algebra level.
//!
//! The centralizer of any `g` in `GL_n` is the unit group of the matrix
//! algebra `{X : gX = Xg}`, hence connected, so comparing Lie algebras is
//! enough to compare the groups.

use crate::blocks::{BlockLayout, Partition};
use crate::linalg::{kernel, Tolerance};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Basis of `{X : gX = Xg}`.
pub fn centralizer_subalgebra<S: Scalar>(g: &Matrix<S>, tol: &Tolerance) -> Vec<Matrix<S>> {
    let n = g.n();
    // Row (i, j) of the operator X -> gX - Xg, column (a, b) for the unit E_ab.
    let op = Matrix::from_fn(n * n, n * n, |row, col| {
        let (i, j) = (row / n, row % n);
        let (a, b) = (col / n, col % n);
        let mut v = S::zero();
        if b == j {
            v = v + g[(i, a)].clone();
        }
        if a == i {
            v = v - g[(b, j)].clone();
        }
        v
    });
    kernel(&op, tol).into_iter().map(|v| Matrix::from_vec(n, n, v)).collect()
}

/// Whether the centralizer of `g` is exactly the Levi algebra of `layout`.
pub fn centralizer_equals_levi_layout<S: Scalar>(g: &Matrix<S>, layout: &BlockLayout, tol: &Tolerance) -> bool {
    let basis = centralizer_subalgebra(g, tol);
    basis.len() == layout.levi_dim() && basis.iter().all(|x| is_block_diagonal(x, layout, tol))
}

/// Whether the centralizer of `g` lies inside the Levi algebra of `layout`.
pub fn centralizer_contained_in_levi_layout<S: Scalar>(g: &Matrix<S>, layout: &BlockLayout, tol: &Tolerance) -> bool {
    centralizer_subalgebra(g, tol).iter().all(|x| is_block_diagonal(x, layout, tol))
}

pub fn centralizer_equals_levi<S: Scalar>(g: &Matrix<S>, pi: &Partition, tol: &Tolerance) -> bool {
    centralizer_equals_levi_layout(g, &pi.layout(), tol)
}

pub fn centralizer_contained_in_levi<S: Scalar>(g: &Matrix<S>, pi: &Partition, tol: &Tolerance) -> bool {
    centralizer_contained_in_levi_layout(g, &pi.layout(), tol)
}

fn is_block_diagonal<S: Scalar>(x: &Matrix<S>, layout: &BlockLayout, tol: &Tolerance) -> bool {
    let n = x.n();
    let threshold = tol.pivot * x.max_abs().max(1.0) * 1e3;
    (0..n).all(|i| (0..n).all(|j| layout.same_block(i, j) || x[(i, j)].negligible(threshold)))
}

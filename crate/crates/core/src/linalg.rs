//! Row reduction, kernels, rank, and consistent linear solves.

use crate::matrix::{pick_pivot, Matrix};
use crate::scalar::{Mode, Scalar};

/// Thresholds for float-mode decisions. Exact mode ignores them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative residual accepted as zero in identity checks.
    pub residual: f64,
    /// Relative pivot size below which a column counts as dependent.
    pub pivot: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { residual: 1e-9, pivot: 1e-10 }
    }
}

impl Tolerance {
    pub fn with_residual(residual: f64) -> Self {
        Tolerance { residual, ..Tolerance::default() }
    }
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref<S: Scalar>(a: &mut Matrix<S>, tol: &Tolerance) -> Vec<usize> {
    let cols = a.cols();
    rref_limited(a, cols, tol)
}

pub fn rank<S: Scalar>(a: &Matrix<S>, tol: &Tolerance) -> usize {
    let mut m = a.clone();
    rref(&mut m, tol).len()
}

/// Basis of `{x : A x = 0}`.
pub fn kernel<S: Scalar>(a: &Matrix<S>, tol: &Tolerance) -> Vec<Vec<S>> {
    let mut m = a.clone();
    let pivots = rref(&mut m, tol);
    let free: Vec<usize> = (0..a.cols()).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![S::zero(); a.cols()];
            v[f] = S::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[(row, f)].clone();
            }
            v
        })
        .collect()
}

/// Solves `A x = b` when the system is consistent; free variables are set to zero.
pub fn solve<S: Scalar>(a: &Matrix<S>, b: &[S], tol: &Tolerance) -> Option<Vec<S>> {
    assert_eq!(a.rows(), b.len());
    let cols = a.cols();
    let mut aug = Matrix::from_fn(a.rows(), cols + 1, |i, j| if j < cols { a[(i, j)].clone() } else { b[i].clone() });
    let scale = aug.max_abs().max(1.0);
    let pivots = rref_limited(&mut aug, cols, tol);
    for r in pivots.len()..a.rows() {
        if !aug[(r, cols)].negligible(tol.residual * scale) {
            return None;
        }
    }
    let mut x = vec![S::zero(); cols];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = aug[(row, cols)].clone();
    }
    Some(x)
}

/// Like [`rref`] but only pivots on the first `limit` columns.
fn rref_limited<S: Scalar>(a: &mut Matrix<S>, limit: usize, tol: &Tolerance) -> Vec<usize> {
    let threshold = tol.pivot * a.max_abs().max(1.0);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..limit {
        if row == a.rows() {
            break;
        }
        let Some(p) = pick_pivot(a, col, row) else { continue };
        if a[(p, col)].negligible(threshold) {
            if S::MODE == Mode::Float {
                for r in row..a.rows() {
                    a[(r, col)] = S::zero();
                }
            }
            continue;
        }
        a.swap_rows(p, row);
        let inv = S::one() / a[(row, col)].clone();
        a.scale_row(row, &inv);
        a[(row, col)] = S::one();
        for r in 0..a.rows() {
            if r == row {
                continue;
            }
            let f = a[(r, col)].clone();
            if f.is_exactly_zero() {
                continue;
            }
            a.sub_row_multiple(r, row, &f);
            a[(r, col)] = S::zero();
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Matrix whose columns are the given vectors.
pub fn columns_to_matrix<S: Scalar>(cols: &[Vec<S>], len: usize) -> Matrix<S> {
    Matrix::from_fn(len, cols.len(), |i, j| cols[j][i].clone())
}

/// Incrementally grown linearly independent set, kept in reduced echelon form.
#[derive(Debug, Clone)]
pub struct SpanBasis<S> {
    len: usize,
    /// Reduced rows with their pivot column.
    rows: Vec<(usize, Vec<S>)>,
    tol: Tolerance,
}

impl<S: Scalar> SpanBasis<S> {
    pub fn new(len: usize, tol: Tolerance) -> Self {
        SpanBasis { len, rows: Vec::new(), tol }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[S]) -> Vec<S> {
        let mut w = v.to_vec();
        for (pc, row) in &self.rows {
            let f = w[*pc].clone();
            if f.is_exactly_zero() {
                continue;
            }
            for (wi, ri) in w.iter_mut().zip(row) {
                if !ri.is_exactly_zero() {
                    *wi = wi.sub_ref(&f.mul_ref(ri));
                }
            }
            w[*pc] = S::zero();
        }
        w
    }

    fn threshold(v: &[S], tol: &Tolerance) -> f64 {
        tol.pivot * v.iter().map(Scalar::modulus).fold(1.0, f64::max)
    }

    pub fn contains(&self, v: &[S]) -> bool {
        let threshold = Self::threshold(v, &self.tol);
        self.reduce(v).iter().all(|x| x.negligible(threshold))
    }

    /// Adds `v` if independent; returns whether it was added.
    pub fn insert(&mut self, v: &[S]) -> bool {
        assert_eq!(v.len(), self.len);
        let threshold = Self::threshold(v, &self.tol);
        let mut w = self.reduce(v);
        let Some(pc) = pick_index(&w, threshold) else { return false };
        let inv = S::one() / w[pc].clone();
        for x in w.iter_mut() {
            *x = x.mul_ref(&inv);
        }
        w[pc] = S::one();
        // Keep earlier rows reduced against the new pivot.
        for (_, row) in self.rows.iter_mut() {
            let f = row[pc].clone();
            if f.is_exactly_zero() {
                continue;
            }
            for (ri, wi) in row.iter_mut().zip(&w) {
                if !wi.is_exactly_zero() {
                    *ri = ri.sub_ref(&f.mul_ref(wi));
                }
            }
            row[pc] = S::zero();
        }
        self.rows.push((pc, w));
        true
    }
}

fn pick_index<S: Scalar>(w: &[S], threshold: f64) -> Option<usize> {
    match S::MODE {
        Mode::Exact => w.iter().position(|x| !x.is_exactly_zero()),
        Mode::Float => {
            let (idx, best) = w
                .iter()
                .enumerate()
                .map(|(i, x)| (i, x.modulus()))
                .fold((0, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            (best > threshold).then_some(idx)
        }
    }
}

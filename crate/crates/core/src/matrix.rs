//! Dense matrices over a [`Scalar`], the trace form, and group/Lie element wrappers.

use std::fmt;
use std::ops::{Add, Deref, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Result, WcvError};
use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

/// Element of `gl_n`; also the shape used for tangents.
pub type LieElem<S> = Matrix<S>;

impl<S: Scalar> Matrix<S> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(WcvError::Dimension("ragged rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Builds a square matrix from small integers, row-major.
    pub fn from_i64(n: usize, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), n * n);
        Matrix::from_fn(n, n, |i, j| S::from_i64(entries[i * n + j]))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::from_fn(rows, cols, |_, _| S::zero())
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    /// Matrix unit `E_ij` (0-based indices).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        m[(i, j)] = S::one();
        m
    }

    pub fn diag(entries: &[S]) -> Self {
        let n = entries.len();
        Matrix::from_fn(n, n, |i, j| if i == j { entries[i].clone() } else { S::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length of a square matrix.
    pub fn n(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<S> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn scale(&self, c: &S) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.mul_ref(c)).collect() }
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(WcvError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let (r, k, c) = (self.rows, self.cols, other.cols);
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                let mut acc = S::zero();
                for l in 0..k {
                    let a = &self.data[i * k + l];
                    if a.is_exactly_zero() {
                        continue;
                    }
                    let b = &other.data[l * c + j];
                    if b.is_exactly_zero() {
                        continue;
                    }
                    acc = acc.add_ref(&a.mul_ref(b));
                }
                data.push(acc);
            }
        }
        Matrix { rows: r, cols: c, data }
    }

    /// Largest entry modulus (0 for the empty matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Scalar::modulus).fold(0.0, f64::max)
    }

    pub fn is_zero_within(&self, tol: f64) -> bool {
        self.data.iter().all(|x| x.negligible(tol))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_exactly_zero()))
    }

    /// Inverse by Gauss–Jordan elimination (partial pivoting in float mode).
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(WcvError::Dimension("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = pick_pivot(&a, col, col).ok_or_else(|| WcvError::Singular("inverse".into()))?;
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let p = a[(col, col)].clone();
            if p.is_exactly_zero() {
                return Err(WcvError::Singular("inverse".into()));
            }
            let p_inv = S::one() / p;
            a.scale_row(col, &p_inv);
            inv.scale_row(col, &p_inv);
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)].clone();
                if f.is_exactly_zero() {
                    continue;
                }
                a.sub_row_multiple(r, col, &f);
                inv.sub_row_multiple(r, col, &f);
            }
        }
        Ok(inv)
    }

    pub fn det(&self) -> S {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = S::one();
        for col in 0..n {
            let Some(pivot) = pick_pivot(&a, col, col) else {
                return S::zero();
            };
            if pivot != col {
                a.swap_rows(pivot, col);
                det = -det;
            }
            let p = a[(col, col)].clone();
            if p.is_exactly_zero() {
                return S::zero();
            }
            det = det * p.clone();
            let p_inv = S::one() / p;
            for r in col + 1..n {
                let f = a[(r, col)].mul_ref(&p_inv);
                if !f.is_exactly_zero() {
                    a.sub_row_multiple(r, col, &f);
                }
            }
        }
        det
    }

    /// Monic characteristic polynomial `det(x I - A)`, coefficients from constant term up.
    pub fn charpoly(&self) -> Vec<S> {
        // Faddeev–LeVerrier recursion; only divides by the integers 1..n.
        let n = self.n();
        let mut coeffs = vec![S::zero(); n + 1];
        coeffs[n] = S::one();
        let mut m = Matrix::<S>::zeros(n, n);
        for k in 1..=n {
            let mut next = self * &m;
            let c = coeffs[n - k + 1].clone();
            for i in 0..n {
                next[(i, i)] = next[(i, i)].add_ref(&c);
            }
            m = next;
            let am = self * &m;
            coeffs[n - k] = -(am.trace() / S::from_i64(k as i64));
        }
        coeffs
    }

    pub(crate) fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub(crate) fn scale_row(&mut self, r: usize, c: &S) {
        for j in 0..self.cols {
            let v = &mut self.data[r * self.cols + j];
            *v = v.mul_ref(c);
        }
    }

    /// `row[target] -= f * row[source]`
    pub(crate) fn sub_row_multiple(&mut self, target: usize, source: usize, f: &S) {
        for j in 0..self.cols {
            let s = &self.data[source * self.cols + j];
            if s.is_exactly_zero() {
                continue;
            }
            let delta = f.mul_ref(s);
            let t = &mut self.data[target * self.cols + j];
            *t = t.sub_ref(&delta);
        }
    }
}

/// Row index of the pivot for `col`, searching rows `from..`.
pub(crate) fn pick_pivot<S: Scalar>(a: &Matrix<S>, col: usize, from: usize) -> Option<usize> {
    match S::MODE {
        crate::scalar::Mode::Exact => (from..a.rows).find(|&r| !a[(r, col)].is_exactly_zero()),
        crate::scalar::Mode::Float => {
            let mut best = None;
            let mut best_val = 0.0;
            for r in from..a.rows {
                let v = a[(r, col)].modulus();
                if v > best_val {
                    best_val = v;
                    best = Some(r);
                }
            }
            best
        }
    }
}

/// The invariant form `(X, Y) = tr(XY)` on `gl_n`.
pub fn trace_form<S: Scalar>(x: &Matrix<S>, y: &Matrix<S>) -> Result<S> {
    if x.rows != y.cols || x.cols != y.rows {
        return Err(WcvError::Dimension("trace form of mismatched shapes".into()));
    }
    Ok(tr_mul(x, y))
}

/// `tr(XY)` without forming the product.
pub(crate) fn tr_mul<S: Scalar>(x: &Matrix<S>, y: &Matrix<S>) -> S {
    let mut acc = S::zero();
    for i in 0..x.rows {
        for j in 0..x.cols {
            let a = &x.data[i * x.cols + j];
            let b = &y.data[j * y.cols + i];
            if a.is_exactly_zero() || b.is_exactly_zero() {
                continue;
            }
            acc = acc.add_ref(&a.mul_ref(b));
        }
    }
    acc
}

/// Commutator `[X, Y] = XY - YX`.
pub fn bracket<S: Scalar>(x: &Matrix<S>, y: &Matrix<S>) -> Matrix<S> {
    &(x * y) - &(y * x)
}

/// Group commutator `A B A^{-1} B^{-1}`.
pub fn group_commutator<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>) -> Result<Matrix<S>> {
    Ok(&(&(a * b) * &a.inverse()?) * &b.inverse()?)
}

impl<S: Scalar> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S: Scalar> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: Scalar> Mul for &Matrix<S> {
    type Output = Matrix<S>;
    fn mul(self, rhs: &Matrix<S>) -> Matrix<S> {
        assert_eq!(self.cols, rhs.rows, "shape mismatch in product");
        self.mul_unchecked(rhs)
    }
}

impl<S: Scalar> Add for &Matrix<S> {
    type Output = Matrix<S>;
    fn add(self, rhs: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sum");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.add_ref(b)).collect(),
        }
    }
}

impl<S: Scalar> Sub for &Matrix<S> {
    type Output = Matrix<S>;
    fn sub(self, rhs: &Matrix<S>) -> Matrix<S> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in difference");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.sub_ref(b)).collect(),
        }
    }
}

impl<S: Scalar> Neg for &Matrix<S> {
    type Output = Matrix<S>;
    fn neg(self) -> Matrix<S> {
        self.map(|x| -x.clone())
    }
}

impl<S: Scalar> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                let (re, im) = self[(i, j)].format_parts();
                if im == "0" || im == "0.0" {
                    write!(f, "{re}")?;
                } else {
                    write!(f, "{re}{}{im}i", if im.starts_with('-') { "" } else { "+" })?;
                }
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// An invertible square matrix.
#[derive(Clone, PartialEq)]
pub struct GroupElem<S>(Matrix<S>);

impl<S: Scalar> GroupElem<S> {
    /// Checks invertibility: `det != 0` exactly, or `|det| > 1e-12 * scale` in float mode.
    pub fn new(m: Matrix<S>) -> Result<Self> {
        if !m.is_square() {
            return Err(WcvError::Dimension("group element must be square".into()));
        }
        if !is_invertible(&m) {
            return Err(WcvError::Singular("group element".into()));
        }
        Ok(GroupElem(m))
    }

    pub fn identity(n: usize) -> Self {
        GroupElem(Matrix::identity(n))
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<S> {
        self.0
    }
}

pub(crate) fn is_invertible<S: Scalar>(m: &Matrix<S>) -> bool {
    let d = m.det();
    match S::MODE {
        crate::scalar::Mode::Exact => !d.is_exactly_zero(),
        crate::scalar::Mode::Float => {
            // Hadamard bound: |det| <= product of row norms.
            let scale: f64 = (0..m.rows()).map(|i| m.row(i).iter().map(|z| z.modulus().powi(2)).sum::<f64>().sqrt()).product();
            d.modulus() > 1e-12 * scale
        }
    }
}

impl<S: Scalar> Deref for GroupElem<S> {
    type Target = Matrix<S>;
    fn deref(&self) -> &Matrix<S> {
        &self.0
    }
}

impl<S: Scalar> fmt::Debug for GroupElem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

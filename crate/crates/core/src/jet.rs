//! First-order jets of matrix-valued functions.
//!
//! A [`Jet`] carries a value `A` together with a directional derivative `dA`.
//! Products, inverses and conjugations propagate the derivative exactly:
//!
//! - `d(AB) = dA B + A dB`
//! - `d(A^{-1}) = -A^{-1} dA A^{-1}`
//!
//! Every pullback formula in the crate is evaluated by pushing slot jets
//! through the defining expressions, so one code path serves both exact and
//! float arithmetic.

use crate::error::Result;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S: Scalar> {
    pub value: Matrix<S>,
    pub deriv: Matrix<S>,
}

impl<S: Scalar> Jet<S> {
    pub fn new(value: Matrix<S>, deriv: Matrix<S>) -> Self {
        assert_eq!((value.rows(), value.cols()), (deriv.rows(), deriv.cols()));
        Jet { value, deriv }
    }

    pub fn constant(value: Matrix<S>) -> Self {
        let deriv = Matrix::zeros(value.rows(), value.cols());
        Jet { value, deriv }
    }

    pub fn identity(n: usize) -> Self {
        Jet::constant(Matrix::identity(n))
    }

    /// Jet of the curve `t -> exp(t xi) g` at `t = 0`, i.e. right-logarithmic tangent `xi`.
    pub fn from_right_tangent(g: &Matrix<S>, xi: &Matrix<S>) -> Self {
        Jet { value: g.clone(), deriv: xi * g }
    }

    /// Jet of `t -> exp(t xi)` at `t = 0`.
    pub fn exp_curve(xi: &Matrix<S>) -> Self {
        Jet { value: Matrix::identity(xi.n()), deriv: xi.clone() }
    }

    pub fn mul(&self, other: &Jet<S>) -> Jet<S> {
        let value = &self.value * &other.value;
        let deriv = &(&self.deriv * &other.value) + &(&self.value * &other.deriv);
        Jet { value, deriv }
    }

    /// Product of a sequence of jets, left to right; identity when empty.
    pub fn product<'a>(n: usize, jets: impl IntoIterator<Item = &'a Jet<S>>) -> Jet<S> {
        jets.into_iter().fold(Jet::identity(n), |acc, j| acc.mul(j))
    }

    pub fn inv(&self) -> Result<Jet<S>> {
        let vi = self.value.inverse()?;
        let deriv = -&(&(&vi * &self.deriv) * &vi);
        Ok(Jet { value: vi, deriv })
    }

    pub fn add(&self, other: &Jet<S>) -> Jet<S> {
        Jet { value: &self.value + &other.value, deriv: &self.deriv + &other.deriv }
    }

    pub fn sub(&self, other: &Jet<S>) -> Jet<S> {
        Jet { value: &self.value - &other.value, deriv: &self.deriv - &other.deriv }
    }

    pub fn scale(&self, c: &S) -> Jet<S> {
        Jet { value: self.value.scale(c), deriv: self.deriv.scale(c) }
    }

    /// `g X g^{-1}` for jets `g` and `X`.
    pub fn conj(&self, x: &Jet<S>) -> Result<Jet<S>> {
        Ok(self.mul(x).mul(&self.inv()?))
    }

    /// Right-logarithmic derivative `dA A^{-1}`.
    pub fn right_log(&self) -> Result<Matrix<S>> {
        Ok(&self.deriv * &self.value.inverse()?)
    }

    /// Left-logarithmic derivative `A^{-1} dA`.
    pub fn left_log(&self) -> Result<Matrix<S>> {
        Ok(&self.value.inverse()? * &self.deriv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    #[test]
    fn product_rule_matches_expansion() {
        let a = Jet::new(Matrix::<Exact>::from_i64(2, &[1, 2, 0, 1]), Matrix::from_i64(2, &[0, 1, 1, 0]));
        let b = Jet::new(Matrix::<Exact>::from_i64(2, &[3, 0, 1, 1]), Matrix::from_i64(2, &[1, 0, 0, 2]));
        let ab = a.mul(&b);
        let expected = &(&a.deriv * &b.value) + &(&a.value * &b.deriv);
        assert_eq!(ab.deriv, expected);
    }

    #[test]
    fn inverse_rule_cancels() {
        let a = Jet::new(Matrix::<Exact>::from_i64(2, &[2, 1, 1, 1]), Matrix::from_i64(2, &[0, 3, -1, 5]));
        let prod = a.mul(&a.inv().unwrap());
        assert_eq!(prod.value, Matrix::identity(2));
        assert_eq!(prod.deriv, Matrix::zeros(2, 2));
    }
}

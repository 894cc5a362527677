//! Two-forms assembled from matrix-valued one-forms.
//!
//! A two-form is stored as a list of one-form values `F_a` at one tangent
//! together with coefficients `c` for pairs `(a, b)`; the form is
//! `sum c [(F_a(X), F_b(Y)) - (F_a(Y), F_b(X))]`.

use crate::error::Result;
use crate::jet::Jet;
use crate::matrix::{tr_mul, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct FormTerms<S: Scalar> {
    pub forms: Vec<Matrix<S>>,
    pub pairs: Vec<(S, usize, usize)>,
}

impl<S: Scalar> FormTerms<S> {
    pub fn new() -> Self {
        FormTerms { forms: Vec::new(), pairs: Vec::new() }
    }

    pub fn push_form(&mut self, f: Matrix<S>) -> usize {
        self.forms.push(f);
        self.forms.len() - 1
    }

    pub fn pair(&mut self, c: S, a: usize, b: usize) {
        self.pairs.push((c, a, b));
    }

    /// Appends `other`, shifting its indices.
    pub fn extend(&mut self, other: FormTerms<S>) {
        let off = self.forms.len();
        self.forms.extend(other.forms);
        self.pairs.extend(other.pairs.into_iter().map(|(c, a, b)| (c, a + off, b + off)));
    }
}

impl<S: Scalar> Default for FormTerms<S> {
    fn default() -> Self {
        FormTerms::new()
    }
}

fn frob<S: Scalar>(m: &Matrix<S>) -> f64 {
    m.as_slice().iter().map(|z| z.modulus().powi(2)).sum::<f64>().sqrt()
}

/// Evaluates the form on `(X, Y)`; also returns the Cauchy-Schwarz bound on the term magnitudes for relative checks.
pub fn evaluate<S: Scalar>(x: &FormTerms<S>, y: &FormTerms<S>) -> (S, f64) {
    debug_assert_eq!(x.pairs.len(), y.pairs.len());
    let mut total = S::zero();
    let mut scale = 0.0;
    for (c, a, b) in &x.pairs {
        let t1 = tr_mul(&x.forms[*a], &y.forms[*b]);
        let t2 = tr_mul(&y.forms[*a], &x.forms[*b]);
        scale += c.modulus() * (frob(&x.forms[*a]) * frob(&y.forms[*b]) + frob(&y.forms[*a]) * frob(&x.forms[*b]));
        total = total + c.clone() * (t1 - t2);
    }
    (total, scale)
}

pub fn half<S: Scalar>() -> S {
    S::from_ratio(1, 2)
}

/// `(A, Ad_b A)` form pieces for `A = dC C^{-1}`.
pub fn adjoint_form<S: Scalar>(b: &Matrix<S>, a: &Matrix<S>) -> Result<Matrix<S>> {
    Ok(&(b * a) * &b.inverse()?)
}

/// The two-form of a fission-type space with slots `C`, `h` and unipotent
/// factors listed in the order they multiply, `b = h f_1 ... f_m`:
///
/// `2w = (A, Ad_b A) + (A, db b^{-1}) + (dC_0 C_0^{-1}, h^{-1}dh) - sum_j (C_j^{-1}dC_j, C_{j+1}^{-1}dC_{j+1})`
///
/// with `A = dC C^{-1}` and `C_j = f_{j+1} ... f_m C`.
pub fn chain_form<S: Scalar>(c: &Jet<S>, h: &Jet<S>, factors: &[&Jet<S>]) -> Result<FormTerms<S>> {
    let n = c.value.n();
    let m = factors.len();
    let mut t = FormTerms::new();
    let hf = half::<S>();

    let mut b = h.clone();
    for f in factors {
        b = b.mul(f);
    }
    let a_val = c.right_log()?;
    let a = t.push_form(a_val.clone());
    let ad = t.push_form(adjoint_form(&b.value, &a_val)?);
    let db = t.push_form(b.right_log()?);
    t.pair(hf.clone(), a, ad);
    t.pair(hf.clone(), a, db);

    // C_j for j = m down to 0.
    let mut cj = vec![Jet::identity(n); m + 1];
    cj[m] = c.clone();
    for j in (0..m).rev() {
        cj[j] = factors[j].mul(&cj[j + 1]);
    }
    let c0 = t.push_form(cj[0].right_log()?);
    let hl = t.push_form(h.left_log()?);
    t.pair(hf.clone(), c0, hl);
    let lefts: Vec<usize> = cj.iter().map(|j| j.left_log().map(|f| t.push_form(f))).collect::<Result<_>>()?;
    for j in 0..m {
        t.pair(-hf.clone(), lefts[j], lefts[j + 1]);
    }
    Ok(t)
}

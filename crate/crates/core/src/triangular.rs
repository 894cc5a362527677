//! Triangular decomposition of conjugacy classes.
//!
//! For `h` in a Levi subgroup `H` whose centralizer lies in `H`, every
//! `h u'` with `u'` in `U^+` is conjugate to `h` by a unique `u` in `U^+`:
//! `h u' = u^{-1} h u`. The map `tau(h, u, v) = v^{-1} h u v` then charts the
//! class of `h_0` by `H`-class times `U^+ x U^-`.

use crate::blocks::{BlockLayout, Partition, Subgroup};
use crate::centralizer::centralizer_contained_in_levi_layout;
use crate::error::{Result, WcvError};
use crate::jet::Jet;
use crate::linalg::{rank, solve, Tolerance};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::spaces::forms::{adjoint_form, evaluate, half, FormTerms};
use crate::spaces::{tangent_jets, Residual, SpaceModel};

/// Solves `X m - h X = rhs` for `X` strictly block-upper, one block level at a time.
///
/// `m` must be block-upper-triangular. Fails when the operator is singular on
/// some level, which happens exactly when `h` has a centralizer outside `H`.
pub fn solve_sylvester_upper<S: Scalar>(
    h: &Matrix<S>,
    m: &Matrix<S>,
    rhs: &Matrix<S>,
    layout: &BlockLayout,
    tol: &Tolerance,
) -> Result<Matrix<S>> {
    let n = layout.n();
    let mut x = Matrix::<S>::zeros(n, n);
    let depth = layout.block_count();
    for level in 1..depth as isize {
        let cells: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| layout.level(i, j) == level).collect();
        if cells.is_empty() {
            continue;
        }
        let idx = |i: usize, j: usize| cells.iter().position(|&c| c == (i, j));
        let mut a = Matrix::<S>::zeros(cells.len(), cells.len());
        let mut b = Vec::with_capacity(cells.len());
        for (row, &(i, j)) in cells.iter().enumerate() {
            let mut known = rhs[(i, j)].clone();
            for k in 0..n {
                // (X m)_ij = sum_k X_ik m_kj
                if !m[(k, j)].is_exactly_zero() && layout.level(i, k) > 0 {
                    match idx(i, k) {
                        Some(col) => a[(row, col)] = a[(row, col)].add_ref(&m[(k, j)]),
                        None => known = known.sub_ref(&x[(i, k)].mul_ref(&m[(k, j)])),
                    }
                }
                // -(h X)_ij = -sum_k h_ik X_kj
                if !h[(i, k)].is_exactly_zero() && layout.level(k, j) > 0 {
                    match idx(k, j) {
                        Some(col) => a[(row, col)] = a[(row, col)].sub_ref(&h[(i, k)]),
                        None => known = known.add_ref(&h[(i, k)].mul_ref(&x[(k, j)])),
                    }
                }
            }
            b.push(known);
        }
        if rank(&a, tol) < cells.len() {
            return Err(WcvError::Centralizer(format!("conjugation operator is singular on block level {level}")));
        }
        let sol = solve(&a, &b, tol)
            .ok_or_else(|| WcvError::Centralizer(format!("inconsistent system on block level {level}")))?;
        for (&(i, j), v) in cells.iter().zip(sol) {
            x[(i, j)] = v;
        }
    }
    Ok(x)
}

/// The unique `u` in `U^+` with `h u' = u^{-1} h u`.
pub fn solve_conj_unip_layout<S: Scalar>(
    h: &Matrix<S>,
    u_prime: &Matrix<S>,
    layout: &BlockLayout,
    tol: &Tolerance,
) -> Result<Matrix<S>> {
    Ok(solve_conj_unip_jet(&Jet::constant(h.clone()), &Jet::constant(u_prime.clone()), layout, tol)?.value)
}

pub fn solve_conj_unip<S: Scalar>(h: &Matrix<S>, u_prime: &Matrix<S>, pi: &Partition, tol: &Tolerance) -> Result<Matrix<S>> {
    solve_conj_unip_layout(h, u_prime, &pi.layout(), tol)
}

/// Jet of the solution along jets of `h` and `u'`.
///
/// With `u = I + X`, `u' = I + Y` the equation is `X (h u') - h X = -h Y`;
/// differentiating gives the same operator applied to `dX`.
pub fn solve_conj_unip_jet<S: Scalar>(h: &Jet<S>, u_prime: &Jet<S>, layout: &BlockLayout, tol: &Tolerance) -> Result<Jet<S>> {
    let n = layout.n();
    let threshold = tol.residual * h.value.max_abs().max(u_prime.value.max_abs()).max(1.0);
    Subgroup::Levi(layout.clone())
        .check(&h.value, threshold)
        .map_err(|e| WcvError::InvalidPoint(format!("h: {e}")))?;
    Subgroup::UpperUnipotent(layout.clone())
        .check(&u_prime.value, threshold)
        .map_err(|e| WcvError::InvalidPoint(format!("u': {e}")))?;
    let y = &u_prime.value - &Matrix::identity(n);
    let m = &h.value * &u_prime.value;
    let x = solve_sylvester_upper(&h.value, &m, &-&(&h.value * &y), layout, tol)?;
    // dX m - h dX = -dh Y - h dY - X d(hu') + dh X
    let dm = &(&h.deriv * &u_prime.value) + &(&h.value * &u_prime.deriv);
    let rhs = &(&(&(-&(&h.deriv * &y)) - &(&h.value * &u_prime.deriv)) - &(&x * &dm)) + &(&h.deriv * &x);
    let dx = solve_sylvester_upper(&h.value, &m, &rhs, layout, tol)?;
    Ok(Jet::new(&Matrix::identity(n) + &x, dx))
}

/// `(H, h_0)` with the centralizer of `h_0` inside `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularChart<S: Scalar> {
    layout: BlockLayout,
    h0: Matrix<S>,
}

impl<S: Scalar> TriangularChart<S> {
    pub fn new(layout: BlockLayout, h0: Matrix<S>, tol: &Tolerance) -> Result<Self> {
        Subgroup::Levi(layout.clone())
            .check(&h0, tol.residual * h0.max_abs().max(1.0))
            .map_err(|e| WcvError::InvalidPoint(format!("h0: {e}")))?;
        if !centralizer_contained_in_levi_layout(&h0, &layout, tol) {
            return Err(WcvError::Centralizer("centralizer of h0 is not contained in H".into()));
        }
        Ok(TriangularChart { layout, h0 })
    }

    pub fn from_partition(pi: &Partition, h0: Matrix<S>, tol: &Tolerance) -> Result<Self> {
        TriangularChart::new(pi.layout(), h0, tol)
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn h0(&self) -> &Matrix<S> {
        &self.h0
    }

    fn check_slots(&self, h: &Matrix<S>, u: &Matrix<S>, v: &Matrix<S>, tol: &Tolerance) -> Result<()> {
        let th = |m: &Matrix<S>| tol.residual * m.max_abs().max(1.0);
        Subgroup::Levi(self.layout.clone()).check(h, th(h)).map_err(|e| WcvError::InvalidPoint(format!("h: {e}")))?;
        Subgroup::UpperUnipotent(self.layout.clone())
            .check(u, th(u))
            .map_err(|e| WcvError::InvalidPoint(format!("u: {e}")))?;
        Subgroup::LowerUnipotent(self.layout.clone())
            .check(v, th(v))
            .map_err(|e| WcvError::InvalidPoint(format!("v: {e}")))?;
        Ok(())
    }

    /// `v^{-1} (h u) v`.
    pub fn tau(&self, h: &Matrix<S>, u: &Matrix<S>, v: &Matrix<S>, tol: &Tolerance) -> Result<Matrix<S>> {
        self.check_slots(h, u, v, tol)?;
        Ok(&(&(&v.inverse()? * h) * u) * v)
    }

    /// `tau` at `h = k^{-1} h_0 k`.
    pub fn tau_at(&self, k: &Matrix<S>, u: &Matrix<S>, v: &Matrix<S>, tol: &Tolerance) -> Result<Matrix<S>> {
        let h = &(&k.inverse()? * &self.h0) * k;
        self.tau(&h, u, v, tol)
    }

    /// Difference between the class two-form pulled back by `tau` and
    /// `w_H + 1/2 (dv v^{-1}, (hu)^{-1}d(hu) + d(hu)(hu)^{-1} + Ad_{hu}(dv v^{-1}))`
    /// at the point `(k, u, v)`; tangents are right-logarithmic in each slot.
    pub fn tau_form_residual(
        &self,
        point: [&Matrix<S>; 3],
        x: [&Matrix<S>; 3],
        y: [&Matrix<S>; 3],
        tol: &Tolerance,
    ) -> Result<Residual<S>> {
        let (k, u, v) = (point[0], point[1], point[2]);
        let h = &(&k.inverse()? * &self.h0) * k;
        self.check_slots(&h, u, v, tol)?;
        let subgroups = [
            Subgroup::Levi(self.layout.clone()),
            Subgroup::UpperUnipotent(self.layout.clone()),
            Subgroup::LowerUnipotent(self.layout.clone()),
        ];
        for tangent in [&x, &y] {
            for (g, t) in subgroups.iter().zip(tangent.iter()) {
                if !g.lie_contains(*t, tol.residual * t.max_abs().max(1.0)) {
                    return Err(WcvError::InvalidTangent(format!("tangent leaves the Lie algebra of {}", g.name())));
                }
            }
        }
        let p = [k.clone(), u.clone(), v.clone()];
        let lhs_x = self.lhs_terms(&tangent_jets(&p, &x.map(Clone::clone)), tol)?;
        let lhs_y = self.lhs_terms(&tangent_jets(&p, &y.map(Clone::clone)), tol)?;
        let rhs_x = self.rhs_terms(&tangent_jets(&p, &x.map(Clone::clone)))?;
        let rhs_y = self.rhs_terms(&tangent_jets(&p, &y.map(Clone::clone)))?;
        let (l, ls) = evaluate(&lhs_x, &lhs_y);
        let (r, rs) = evaluate(&rhs_x, &rhs_y);
        Ok(Residual { value: l - r, scale: ls + rs })
    }

    /// Class form at the chart `C = k w v`, where `h u = w^{-1} h w`, so that `C^{-1} h_0 C = tau`.
    fn lhs_terms(&self, jets: &[Jet<S>], tol: &Tolerance) -> Result<FormTerms<S>> {
        let (k, u, v) = (&jets[0], &jets[1], &jets[2]);
        let h = k.inv()?.mul(&Jet::constant(self.h0.clone())).mul(k);
        let w = solve_conj_unip_jet(&h, u, &self.layout, tol)?;
        let c = k.mul(&w).mul(v);
        SpaceModel::conj_class(self.h0.clone()).form_terms(&[c])
    }

    fn rhs_terms(&self, jets: &[Jet<S>]) -> Result<FormTerms<S>> {
        let (k, u, v) = (&jets[0], &jets[1], &jets[2]);
        let mut t = SpaceModel::conj_class(self.h0.clone()).form_terms(std::slice::from_ref(k))?;
        let h = k.inv()?.mul(&Jet::constant(self.h0.clone())).mul(k);
        let hu = h.mul(u);
        let dv = v.right_log()?;
        let a = t.push_form(dv.clone());
        let b = t.push_form(&(&hu.left_log()? + &hu.right_log()?) + &adjoint_form(&hu.value, &dv)?);
        t.pair(half(), a, b);
        Ok(t)
    }
}

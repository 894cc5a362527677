//! Representation points of wild character varieties and their unfolding to
//! tame data.
//!
//! A point carries pairs `(A_l, B_l)` for the genus and, per marked point,
//! `(C, h, u_1, ..., u_{2r})` in the multi-fission slots of its chain. Its
//! local monodromy is `C^{-1} h u_1 ... u_{2r} C` and the relation reads
//! `prod [A_l, B_l] prod C_i^{-1} h_i u ... C_i = 1`.

use rayon::prelude::*;

use crate::blocks::{LeviChain, Subgroup};
use crate::error::{Result, WcvError};
use crate::irregular::{levi_chain, IrregularType};
use crate::linalg::{SpanBasis, Tolerance};
use crate::matrix::{group_commutator, Matrix};
use crate::scalar::Scalar;
use crate::spaces::SpaceModel;
use crate::unfolding::{unfold_full, UnfoldingParams};

#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPoint<S: Scalar> {
    pub q: IrregularType<S>,
    pub chain: LeviChain,
    pub params: Option<UnfoldingParams<S>>,
    /// Representative `h_0` of the formal monodromy class in `H_1`.
    pub class_rep: Matrix<S>,
}

impl<S: Scalar> MarkedPoint<S> {
    /// A tame point with local monodromy class of `class_rep`.
    pub fn tame(class_rep: Matrix<S>) -> Self {
        let n = class_rep.n();
        MarkedPoint { q: IrregularType::zero(n), chain: LeviChain::empty(n), params: None, class_rep }
    }

    pub fn is_tame(&self) -> bool {
        self.chain.r() == 0
    }

    pub fn model(&self) -> SpaceModel<S> {
        SpaceModel::multi_fission(self.chain.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrregularCurveData<S: Scalar> {
    pub n: usize,
    pub genus: usize,
    pub points: Vec<MarkedPoint<S>>,
}

/// Checks that every block structure of `chain` matches the one `q` prescribes.
pub fn chain_matches_type<S: Scalar>(q: &IrregularType<S>, chain: &LeviChain) -> bool {
    let own = levi_chain(q);
    if own.n() != chain.n() || own.r() != chain.r() {
        return false;
    }
    let n = chain.n();
    (0..chain.r()).all(|j| {
        let (a, b) = (own.layout(j), chain.layout(j));
        (0..n).all(|i| (0..n).all(|k| a.same_block(i, k) == b.same_block(i, k)))
    })
}

/// An irregular type whose Levi chain is `chain`: `Q_j` is `1 + rank` of each index's block in `H_j`.
pub fn irregular_type_for_chain<S: Scalar>(chain: &LeviChain) -> IrregularType<S> {
    let n = chain.n();
    let coeffs = (0..chain.r())
        .map(|j| (0..n).map(|i| S::from_i64(1 + chain.layout(j).rank_of(i) as i64)).collect())
        .collect();
    IrregularType::new(n, coeffs).expect("sizes agree")
}

impl<S: Scalar> IrregularCurveData<S> {
    pub fn new(n: usize, genus: usize, points: Vec<MarkedPoint<S>>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if p.q.n() != n || p.chain.n() != n || p.class_rep.rows() != n || !p.class_rep.is_square() {
                return Err(WcvError::Dimension(format!("marked point {} does not have size {n}", i + 1)));
            }
            if !chain_matches_type(&p.q, &p.chain) {
                return Err(WcvError::Partition(format!("chain of marked point {} does not match its irregular type", i + 1)));
            }
            if let Some(params) = &p.params {
                if params.chain() != &p.chain {
                    return Err(WcvError::Partition(format!("parameters of marked point {} use another chain", i + 1)));
                }
            }
        }
        Ok(IrregularCurveData { n, genus, points })
    }

    /// The same curve with one more tame point, reserved for [`complete_relation`].
    pub fn with_reserved_tame(&self) -> Self {
        let mut c = self.clone();
        c.points.push(MarkedPoint::tame(Matrix::identity(self.n)));
        c
    }

    /// Characteristic polynomials of the classes announced for the unfolded tame curve, in output order.
    pub fn unfolded_classes(&self) -> Result<Vec<Vec<S>>> {
        let mut out = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            if p.is_tame() {
                out.push(p.class_rep.charpoly());
                continue;
            }
            let params = p.params.as_ref().ok_or(WcvError::MissingParams(i + 1))?;
            out.push((&p.class_rep * &params.product().inverse()?).charpoly());
            out.extend(params.ts().iter().map(Matrix::charpoly));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSlots<S: Scalar> {
    pub c: Matrix<S>,
    pub h: Matrix<S>,
    pub us: Vec<Matrix<S>>,
}

impl<S: Scalar> LocalSlots<S> {
    pub fn tame(c: Matrix<S>, h: Matrix<S>) -> Self {
        LocalSlots { c, h, us: Vec::new() }
    }

    pub fn to_point(&self) -> Vec<Matrix<S>> {
        let mut v = vec![self.c.clone(), self.h.clone()];
        v.extend(self.us.iter().cloned());
        v
    }

    pub fn from_point(p: &[Matrix<S>]) -> Self {
        LocalSlots { c: p[0].clone(), h: p[1].clone(), us: p[2..].to_vec() }
    }

    /// `C^{-1} h u_1 ... u_k C`.
    pub fn monodromy(&self) -> Result<Matrix<S>> {
        let mut m = &self.c.inverse()? * &self.h;
        for u in &self.us {
            m = &m * u;
        }
        Ok(&m * &self.c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepPoint<S: Scalar> {
    pub ab: Vec<(Matrix<S>, Matrix<S>)>,
    pub locals: Vec<LocalSlots<S>>,
}

impl<S: Scalar> RepPoint<S> {
    pub fn validate(&self, curve: &IrregularCurveData<S>, tol: &Tolerance) -> Result<()> {
        if self.ab.len() != curve.genus || self.locals.len() != curve.points.len() {
            return Err(WcvError::InvalidPoint(format!(
                "expected {} handle pairs and {} marked points, found {} and {}",
                curve.genus,
                curve.points.len(),
                self.ab.len(),
                self.locals.len()
            )));
        }
        let g = Subgroup::General(curve.n);
        for (l, (a, b)) in self.ab.iter().enumerate() {
            for (name, m) in [("A", a), ("B", b)] {
                g.check(m, tol.residual).map_err(|e| WcvError::InvalidPoint(format!("{name}_{}: {e}", l + 1)))?;
            }
        }
        for (i, (loc, mp)) in self.locals.iter().zip(&curve.points).enumerate() {
            mp.model()
                .validate_point(&loc.to_point(), tol)
                .map_err(|e| WcvError::InvalidPoint(format!("marked point {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    /// Simultaneous conjugation `A -> g A g^{-1}`, `C -> C g^{-1}`.
    pub fn conjugate(&self, g: &Matrix<S>) -> Result<Self> {
        let gi = g.inverse()?;
        let conj = |m: &Matrix<S>| &(g * m) * &gi;
        Ok(RepPoint {
            ab: self.ab.iter().map(|(a, b)| (conj(a), conj(b))).collect(),
            locals: self.locals.iter().map(|l| LocalSlots { c: &l.c * &gi, h: l.h.clone(), us: l.us.clone() }).collect(),
        })
    }

    pub fn monodromies(&self) -> Result<Vec<Matrix<S>>> {
        self.locals.iter().map(LocalSlots::monodromy).collect()
    }
}

fn relation_product<S: Scalar>(n: usize, pt: &RepPoint<S>) -> Result<Matrix<S>> {
    let mut m = Matrix::identity(n);
    for (a, b) in &pt.ab {
        m = &m * &group_commutator(a, b)?;
    }
    for l in &pt.locals {
        m = &m * &l.monodromy()?;
    }
    Ok(m)
}

/// The product `prod [A_l, B_l] prod C_i^{-1} h_i u ... C_i`; it is `I` on the fiber.
pub fn moment_relation_residual<S: Scalar>(pt: &RepPoint<S>, curve: &IrregularCurveData<S>, tol: &Tolerance) -> Result<Matrix<S>> {
    pt.validate(curve, tol)?;
    relation_product(curve.n, pt)
}

/// Product of the factor sizes in the relation, the scale of its rounding error.
pub fn relation_scale<S: Scalar>(pt: &RepPoint<S>) -> Result<f64> {
    let size = |m: &Matrix<S>| m.max_abs().max(1.0);
    let mut s = 1.0;
    for (a, b) in &pt.ab {
        s *= size(a) * size(&a.inverse()?) * size(b) * size(&b.inverse()?);
    }
    for l in &pt.locals {
        s *= size(&l.c) * size(&l.c.inverse()?) * size(&l.h) * l.us.iter().map(size).product::<f64>();
    }
    Ok(s)
}

/// Whether the relation product equals `I`: exactly, or within the relative tolerance in float mode.
pub fn relation_holds<S: Scalar>(pt: &RepPoint<S>, prod: &Matrix<S>, tol: &Tolerance) -> Result<bool> {
    let diff = prod - &Matrix::identity(prod.n());
    Ok(match S::MODE {
        crate::scalar::Mode::Exact => diff.is_zero_within(0.0),
        crate::scalar::Mode::Float => diff.max_abs() <= tol.residual * relation_scale(pt)?,
    })
}

/// `prod det h_i = 1`; errors off the fiber.
pub fn det_condition_check<S: Scalar>(pt: &RepPoint<S>, curve: &IrregularCurveData<S>, tol: &Tolerance) -> Result<bool> {
    let prod = moment_relation_residual(pt, curve, tol)?;
    if !relation_holds(pt, &prod, tol)? {
        return Err(WcvError::OffFiber(format!("relation product is {:?}", prod.max_abs())));
    }
    let d = pt.locals.iter().fold(S::one(), |acc, l| acc * l.h.det());
    let scale: f64 = pt.locals.iter().map(|l| l.h.max_abs().max(1.0).powi(curve.n as i32)).product();
    Ok((d - S::one()).negligible(tol.residual * scale))
}

/// Burnside test: the unital algebra generated by `gens` is all of `M_n`.
pub fn generates_full_algebra<S: Scalar>(n: usize, gens: &[Matrix<S>], tol: &Tolerance) -> bool {
    let mut span = SpanBasis::new(n * n, *tol);
    let mut basis = vec![Matrix::<S>::identity(n)];
    span.insert(basis[0].as_slice());
    let mut frontier = basis.clone();
    while !frontier.is_empty() && span.dim() < n * n {
        let mut next = Vec::new();
        for w in &frontier {
            for g in gens {
                let p = w * g;
                if span.insert(p.as_slice()) {
                    next.push(p);
                }
            }
        }
        basis.extend(next.iter().cloned());
        frontier = next;
    }
    span.dim() == n * n
}

/// Matrices whose common invariant subspaces obstruct stability.
pub fn stability_test_set<S: Scalar>(pt: &RepPoint<S>, curve: &IrregularCurveData<S>) -> Result<Vec<Matrix<S>>> {
    let mut set = Vec::new();
    for (a, b) in &pt.ab {
        set.push(a.clone());
        set.push(b.clone());
    }
    for (l, mp) in pt.locals.iter().zip(&curve.points) {
        let ci = l.c.inverse()?;
        let conj = |m: &Matrix<S>| &(&ci * m) * &l.c;
        set.push(conj(&l.h));
        set.extend(l.us.iter().map(conj));
        if mp.is_tame() {
            set.push(Matrix::identity(curve.n));
        } else {
            set.extend(mp.chain.layout(0).block_projectors::<S>().iter().map(conj));
        }
    }
    Ok(set)
}

pub fn stability_check<S: Scalar>(pt: &RepPoint<S>, curve: &IrregularCurveData<S>, tol: &Tolerance) -> Result<bool> {
    pt.validate(curve, tol)?;
    Ok(generates_full_algebra(curve.n, &stability_test_set(pt, curve)?, tol))
}

/// Appends the reserved tame point `(I, P^{-1})` for the product `P` of all other data.
pub fn complete_relation<S: Scalar>(partial: &RepPoint<S>, n: usize) -> Result<RepPoint<S>> {
    let prod = relation_product(n, partial)?;
    let mut out = partial.clone();
    out.locals.push(LocalSlots::tame(Matrix::identity(n), prod.inverse()?));
    Ok(out)
}

/// The unfolded tame point and its curve: each irregular marked point becomes
/// `(I, C^{-1} p C), (I, M_1), ..., (I, M_r)`; tame points are kept as is.
pub fn unfold_wcv<S: Scalar>(
    pt: &RepPoint<S>,
    curve: &IrregularCurveData<S>,
    tol: &Tolerance,
) -> Result<(RepPoint<S>, IrregularCurveData<S>)> {
    let prod = moment_relation_residual(pt, curve, tol)?;
    if !relation_holds(pt, &prod, tol)? {
        return Err(WcvError::OffFiber(format!("relation product is {:?}", prod.max_abs())));
    }
    let n = curve.n;
    let pieces: Vec<Result<Vec<(LocalSlots<S>, MarkedPoint<S>)>>> = pt
        .locals
        .par_iter()
        .zip(curve.points.par_iter())
        .enumerate()
        .map(|(i, (loc, mp))| {
            if mp.is_tame() {
                return Ok(vec![(loc.clone(), mp.clone())]);
            }
            let params = mp.params.as_ref().ok_or(WcvError::MissingParams(i + 1))?;
            let res = unfold_full(params, &loc.to_point(), tol)?;
            let id = Matrix::identity(n);
            let first = &(&res.c.inverse()? * &res.p) * &res.c;
            let rep0 = &mp.class_rep * &params.product().inverse()?;
            let mut out = vec![(LocalSlots::tame(id.clone(), first), MarkedPoint::tame(rep0))];
            for (m, t) in res.ms.into_iter().zip(params.ts()) {
                out.push((LocalSlots::tame(id.clone(), m), MarkedPoint::tame(t.clone())));
            }
            Ok(out)
        })
        .collect();
    let mut locals = Vec::new();
    let mut points = Vec::new();
    for p in pieces {
        for (l, m) in p? {
            locals.push(l);
            points.push(m);
        }
    }
    let tame = IrregularCurveData { n, genus: curve.genus, points };
    Ok((RepPoint { ab: pt.ab.clone(), locals }, tame))
}

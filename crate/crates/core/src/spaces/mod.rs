//! Quasi-Hamiltonian space models: conjugacy classes, the double, fission and
//! multi-fission spaces, the Stokes model, the `M`-space and fusion products.
//!
//! Points are tuples of matrices (the slots), tangents are tuples of
//! right-logarithmic derivatives: for a slot `g` the tangent `xi` means
//! `dg = xi g`. Moment maps, two-forms and group actions are evaluated by
//! pushing slot jets through the defining formulas.

pub mod forms;

use crate::blocks::{BlockLayout, LeviChain, Partition, Subgroup};
use crate::error::{Result, WcvError};
use crate::irregular::{levi_chain, singular_directions, IrregularType, SingularDirection};
use crate::jet::Jet;
use crate::linalg::Tolerance;
use crate::matrix::{tr_mul, Matrix};
use crate::scalar::Scalar;
use forms::{adjoint_form, chain_form, evaluate, half, FormTerms};

pub type SpacePoint<S> = Vec<Matrix<S>>;
pub type Tangent<S> = Vec<Matrix<S>>;

/// A value on each acting factor: `g` for `G`, then one entry per `H`-factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Factors<T> {
    pub g: T,
    pub h: Vec<T>,
}

pub type Moment<S> = Factors<Matrix<S>>;

/// Residual of an identity with the magnitude of the terms that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual<S> {
    pub value: S,
    pub scale: f64,
}

impl<S: Scalar> Residual<S> {
    /// Exact zero in exact mode; `|value| <= tol * max(1, scale)` in float mode.
    pub fn passes(&self, tol: f64) -> bool {
        match S::MODE {
            crate::scalar::Mode::Exact => self.value.is_exactly_zero(),
            crate::scalar::Mode::Float => self.value.modulus() <= tol * self.scale.max(1.0),
        }
    }

    pub fn relative(&self) -> f64 {
        self.value.modulus() / self.scale.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceModel<S: Scalar> {
    /// The class of `base`, charted by `C -> C^{-1} base C`.
    ConjClass { base: Matrix<S> },
    /// The double `G x G` with slots `(C, h)`.
    Double { n: usize },
    /// The fission space `G x H x (U^+ x U^-)^r`.
    Fission { partition: Partition, r: usize },
    /// Multi-fission space of an increasing chain.
    MultiFission { chain: LeviChain },
    /// `G x H x prod_d Sto_d(Q)` with slots `(C, h, S_1, ..., S_s)`.
    Stokes { q: IrregularType<S>, directions: Vec<SingularDirection>, levi: BlockLayout },
    /// `(G x P^-)` representatives `(C, p)` of the `M`-space.
    MSpace { levi: BlockLayout },
    /// Left-nested fusion product over `G`.
    Fusion(Vec<SpaceModel<S>>),
}

impl<S: Scalar> SpaceModel<S> {
    pub fn conj_class(base: Matrix<S>) -> Self {
        SpaceModel::ConjClass { base }
    }

    pub fn double(n: usize) -> Self {
        SpaceModel::Double { n }
    }

    pub fn fission(partition: Partition, r: usize) -> Self {
        SpaceModel::Fission { partition, r }
    }

    pub fn multi_fission(chain: LeviChain) -> Self {
        SpaceModel::MultiFission { chain }
    }

    pub fn stokes(q: IrregularType<S>) -> Self {
        let chain = levi_chain(&q);
        let levi = if chain.r() == 0 { Partition::trivial(q.n()).layout() } else { chain.layout(0).clone() };
        let directions = singular_directions(&q);
        SpaceModel::Stokes { q, directions, levi }
    }

    pub fn mspace(levi: BlockLayout) -> Self {
        SpaceModel::MSpace { levi }
    }

    pub fn n(&self) -> usize {
        match self {
            SpaceModel::ConjClass { base } => base.n(),
            SpaceModel::Double { n } => *n,
            SpaceModel::Fission { partition, .. } => partition.n(),
            SpaceModel::MultiFission { chain } => chain.n(),
            SpaceModel::Stokes { q, .. } => q.n(),
            SpaceModel::MSpace { levi } => levi.n(),
            SpaceModel::Fusion(ms) => ms[0].n(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SpaceModel::ConjClass { .. } => "ConjClass".into(),
            SpaceModel::Double { .. } => "Double".into(),
            SpaceModel::Fission { r, .. } => format!("Fission(r={r})"),
            SpaceModel::MultiFission { chain } => format!("MultiFission(r={})", chain.r()),
            SpaceModel::Stokes { directions, .. } => format!("Stokes(s={})", directions.len()),
            SpaceModel::MSpace { .. } => "MSpace".into(),
            SpaceModel::Fusion(ms) => format!("Fusion[{}]", ms.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")),
        }
    }

    fn chain(&self) -> Option<LeviChain> {
        match self {
            SpaceModel::Fission { partition, r } => Some(LeviChain::constant(partition.clone(), *r)),
            SpaceModel::MultiFission { chain } => Some(chain.clone()),
            _ => None,
        }
    }

    fn fission_levi(chain: &LeviChain) -> Subgroup {
        if chain.r() == 0 {
            Subgroup::General(chain.n())
        } else {
            chain.levi(0)
        }
    }

    /// Subgroup of every slot, in slot order.
    pub fn slot_subgroups(&self) -> Vec<Subgroup> {
        let n = self.n();
        match self {
            SpaceModel::ConjClass { .. } => vec![Subgroup::General(n)],
            SpaceModel::Double { .. } => vec![Subgroup::General(n), Subgroup::General(n)],
            SpaceModel::Fission { .. } | SpaceModel::MultiFission { .. } => {
                let chain = self.chain().unwrap();
                let mut v = vec![Subgroup::General(n), Self::fission_levi(&chain)];
                v.extend(chain.unipotent_slots());
                v
            }
            SpaceModel::Stokes { directions, levi, .. } => {
                let mut v = vec![Subgroup::General(n), Subgroup::Levi(levi.clone())];
                v.extend(directions.iter().map(|d| Subgroup::Unipotent { n, support: d.roots.clone() }));
                v
            }
            SpaceModel::MSpace { levi } => vec![Subgroup::General(n), Subgroup::LowerParabolic(levi.clone())],
            SpaceModel::Fusion(ms) => ms.iter().flat_map(|m| m.slot_subgroups()).collect(),
        }
    }

    pub fn slot_names(&self) -> Vec<String> {
        match self {
            SpaceModel::ConjClass { .. } => vec!["C".into()],
            SpaceModel::Double { .. } => vec!["C".into(), "h".into()],
            SpaceModel::Fission { .. } | SpaceModel::MultiFission { .. } => {
                let r = self.chain().unwrap().r();
                let mut v = vec!["C".to_string(), "h".to_string()];
                v.extend((1..=2 * r).map(|i| format!("u_{i}")));
                v
            }
            SpaceModel::Stokes { directions, .. } => {
                let mut v = vec!["C".to_string(), "h".to_string()];
                v.extend((1..=directions.len()).map(|i| format!("S_{i}")));
                v
            }
            SpaceModel::MSpace { .. } => vec!["C".into(), "p".into()],
            SpaceModel::Fusion(ms) => ms
                .iter()
                .enumerate()
                .flat_map(|(i, m)| m.slot_names().into_iter().map(move |s| format!("{}.{s}", i + 1)))
                .collect(),
        }
    }

    pub fn slot_count(&self) -> usize {
        self.slot_subgroups().len()
    }

    /// Subgroups acting through the `H`-factors.
    pub fn h_factors(&self) -> Vec<Subgroup> {
        let n = self.n();
        match self {
            SpaceModel::ConjClass { .. } => vec![],
            SpaceModel::Double { .. } => vec![Subgroup::General(n)],
            SpaceModel::Fission { .. } | SpaceModel::MultiFission { .. } => {
                vec![Self::fission_levi(&self.chain().unwrap())]
            }
            SpaceModel::Stokes { levi, .. } | SpaceModel::MSpace { levi } => vec![Subgroup::Levi(levi.clone())],
            SpaceModel::Fusion(ms) => ms.iter().flat_map(|m| m.h_factors()).collect(),
        }
    }

    pub fn validate_point(&self, p: &[Matrix<S>], tol: &Tolerance) -> Result<()> {
        let groups = self.slot_subgroups();
        if p.len() != groups.len() {
            return Err(WcvError::InvalidPoint(format!("{} expects {} slots, got {}", self.name(), groups.len(), p.len())));
        }
        let names = self.slot_names();
        for ((g, m), name) in groups.iter().zip(p).zip(&names) {
            g.check(m, threshold(m, tol)).map_err(|e| WcvError::InvalidPoint(format!("slot {name}: {e}")))?;
        }
        Ok(())
    }

    pub fn validate_tangent(&self, p: &[Matrix<S>], x: &[Matrix<S>], tol: &Tolerance) -> Result<()> {
        let groups = self.slot_subgroups();
        if x.len() != groups.len() || p.len() != groups.len() {
            return Err(WcvError::InvalidTangent(format!("{} expects {} slots, got {}", self.name(), groups.len(), x.len())));
        }
        let names = self.slot_names();
        for ((g, xi), name) in groups.iter().zip(x).zip(&names) {
            if !g.lie_contains(xi, threshold(xi, tol)) {
                return Err(WcvError::InvalidTangent(format!("slot {name}: tangent leaves the Lie algebra of {}", g.name())));
            }
        }
        Ok(())
    }

    /// Moment map on slot jets.
    pub fn moment_jets(&self, jets: &[Jet<S>]) -> Result<Factors<Jet<S>>> {
        let n = self.n();
        match self {
            SpaceModel::ConjClass { base } => {
                let c = &jets[0];
                Ok(Factors { g: c.inv()?.mul(&Jet::constant(base.clone())).mul(c), h: vec![] })
            }
            SpaceModel::Double { .. } => {
                let (c, h) = (&jets[0], &jets[1]);
                Ok(Factors { g: c.inv()?.mul(h).mul(c), h: vec![h.inv()?] })
            }
            SpaceModel::Fission { .. } | SpaceModel::MultiFission { .. } => {
                let (c, h) = (&jets[0], &jets[1]);
                let b = h.mul(&Jet::product(n, &jets[2..]));
                Ok(Factors { g: c.inv()?.mul(&b).mul(c), h: vec![h.inv()?] })
            }
            SpaceModel::Stokes { .. } => {
                let (c, h) = (&jets[0], &jets[1]);
                let b = h.mul(&Jet::product(n, jets[2..].iter().rev()));
                Ok(Factors { g: c.inv()?.mul(&b).mul(c), h: vec![h.inv()?] })
            }
            SpaceModel::MSpace { levi } => {
                let (c, p) = (&jets[0], &jets[1]);
                let w = Jet::new(levi.block_diagonal_part(&p.value), levi.block_diagonal_part(&p.deriv));
                Ok(Factors { g: c.inv()?.mul(p).mul(c), h: vec![w.inv()?] })
            }
            SpaceModel::Fusion(ms) => {
                let mut g = Jet::identity(n);
                let mut h = Vec::new();
                for (m, js) in ms.iter().zip(split_slots(ms, jets)) {
                    let mu = m.moment_jets(js)?;
                    g = g.mul(&mu.g);
                    h.extend(mu.h);
                }
                Ok(Factors { g, h })
            }
        }
    }

    pub fn moment(&self, p: &[Matrix<S>]) -> Result<Moment<S>> {
        let jets: Vec<Jet<S>> = p.iter().cloned().map(Jet::constant).collect();
        let mu = self.moment_jets(&jets)?;
        Ok(Factors { g: mu.g.value, h: mu.h.into_iter().map(|j| j.value).collect() })
    }

    /// One-form values of the two-form at the tangent carried by `jets`.
    pub fn form_terms(&self, jets: &[Jet<S>]) -> Result<FormTerms<S>> {
        let hf = half::<S>();
        match self {
            SpaceModel::ConjClass { base } => {
                // w = 1/2 (dC C^{-1}, Ad_x0 dC C^{-1})
                let mut t = FormTerms::new();
                let a_val = jets[0].right_log()?;
                let a = t.push_form(a_val.clone());
                let ad = t.push_form(adjoint_form(base, &a_val)?);
                t.pair(hf, a, ad);
                Ok(t)
            }
            SpaceModel::Double { .. } => {
                let (c, h) = (&jets[0], &jets[1]);
                Ok(double_terms(c, h)?)
            }
            SpaceModel::MSpace { .. } => {
                let (c, p) = (&jets[0], &jets[1]);
                Ok(double_terms(c, p)?)
            }
            SpaceModel::Fission { .. } | SpaceModel::MultiFission { .. } => {
                let factors: Vec<&Jet<S>> = jets[2..].iter().collect();
                chain_form(&jets[0], &jets[1], &factors)
            }
            SpaceModel::Stokes { .. } => {
                let factors: Vec<&Jet<S>> = jets[2..].iter().rev().collect();
                chain_form(&jets[0], &jets[1], &factors)
            }
            SpaceModel::Fusion(ms) => {
                let n = self.n();
                let mut t = FormTerms::new();
                let mut prefix = Jet::identity(n);
                for (k, (m, js)) in ms.iter().zip(split_slots(ms, jets)).enumerate() {
                    t.extend(m.form_terms(js)?);
                    let mu = m.moment_jets(js)?.g;
                    if k > 0 {
                        // -1/2 (P^{-1} dP, d mu mu^{-1}) with P the product of earlier moments
                        let l = t.push_form(prefix.left_log()?);
                        let r = t.push_form(mu.right_log()?);
                        t.pair(-hf.clone(), l, r);
                    }
                    prefix = prefix.mul(&mu);
                }
                Ok(t)
            }
        }
    }

    pub fn two_form(&self, p: &[Matrix<S>], x: &[Matrix<S>], y: &[Matrix<S>]) -> Result<S> {
        Ok(self.two_form_scaled(p, x, y)?.0)
    }

    /// The two-form together with the magnitude of its terms.
    pub fn two_form_scaled(&self, p: &[Matrix<S>], x: &[Matrix<S>], y: &[Matrix<S>]) -> Result<(S, f64)> {
        let tx = self.form_terms(&tangent_jets(p, x))?;
        let ty = self.form_terms(&tangent_jets(p, y))?;
        Ok(evaluate(&tx, &ty))
    }

    /// Action of `(g, k_1, k_2, ...)` on slot jets.
    pub fn act_jets(&self, a: &Factors<Jet<S>>, jets: &[Jet<S>]) -> Result<Vec<Jet<S>>> {
        let g_inv = a.g.inv()?;
        match self {
            SpaceModel::ConjClass { .. } => Ok(vec![jets[0].mul(&g_inv)]),
            SpaceModel::Fusion(ms) => {
                let mut out = Vec::with_capacity(jets.len());
                let mut h_off = 0;
                for (m, js) in ms.iter().zip(split_slots(ms, jets)) {
                    let hc = m.h_factors().len();
                    let sub = Factors { g: a.g.clone(), h: a.h[h_off..h_off + hc].to_vec() };
                    h_off += hc;
                    out.extend(m.act_jets(&sub, js)?);
                }
                Ok(out)
            }
            _ => {
                // (C, h, x_1, ...) -> (k C g^{-1}, k h k^{-1}, k x_i k^{-1})
                let k = &a.h[0];
                let k_inv = k.inv()?;
                let mut out = vec![k.mul(&jets[0]).mul(&g_inv)];
                out.extend(jets[1..].iter().map(|j| k.mul(j).mul(&k_inv)));
                Ok(out)
            }
        }
    }

    /// `a . p`.
    pub fn act(&self, a: &Moment<S>, p: &[Matrix<S>]) -> Result<SpacePoint<S>> {
        let (pt, _) = self.act_tangent(a, p, &vec![Matrix::zeros(self.n(), self.n()); p.len()])?;
        Ok(pt)
    }

    /// `a . p` and the pushed-forward tangent.
    pub fn act_tangent(&self, a: &Moment<S>, p: &[Matrix<S>], x: &[Matrix<S>]) -> Result<(SpacePoint<S>, Tangent<S>)> {
        let aj = Factors { g: Jet::constant(a.g.clone()), h: a.h.iter().cloned().map(Jet::constant).collect() };
        let out = self.act_jets(&aj, &tangent_jets(p, x))?;
        let tangents = out.iter().map(Jet::right_log).collect::<Result<Vec<_>>>()?;
        Ok((out.into_iter().map(|j| j.value).collect(), tangents))
    }

    /// Fundamental vector field of `xi`: the derivative of `exp(-t xi) . p`.
    pub fn infinitesimal_action(&self, p: &[Matrix<S>], xi: &Factors<Matrix<S>>) -> Result<Tangent<S>> {
        let aj = Factors { g: Jet::exp_curve(&-&xi.g), h: xi.h.iter().map(|x| Jet::exp_curve(&-x)).collect() };
        let consts: Vec<Jet<S>> = p.iter().cloned().map(Jet::constant).collect();
        self.act_jets(&aj, &consts)?.iter().map(Jet::right_log).collect()
    }

    /// The target action on moment values: conjugation on every factor.
    pub fn act_on_moment(&self, a: &Moment<S>, mu: &Moment<S>) -> Result<Moment<S>> {
        let conj = |g: &Matrix<S>, x: &Matrix<S>| -> Result<Matrix<S>> { Ok(&(g * x) * &g.inverse()?) };
        Ok(Factors {
            g: conj(&a.g, &mu.g)?,
            h: a.h.iter().zip(&mu.h).map(|(k, m)| conj(k, m)).collect::<Result<_>>()?,
        })
    }
}

/// `w = 1/2 (A, Ad_h A) + 1/2 (A, h^{-1}dh + dh h^{-1})`, `A = dC C^{-1}`.
fn double_terms<S: Scalar>(c: &Jet<S>, h: &Jet<S>) -> Result<FormTerms<S>> {
    let hf = half::<S>();
    let mut t = FormTerms::new();
    let a_val = c.right_log()?;
    let a = t.push_form(a_val.clone());
    let ad = t.push_form(adjoint_form(&h.value, &a_val)?);
    let hl = t.push_form(&h.left_log()? + &h.right_log()?);
    t.pair(hf.clone(), a, ad);
    t.pair(hf, a, hl);
    Ok(t)
}

fn threshold<S: Scalar>(m: &Matrix<S>, tol: &Tolerance) -> f64 {
    tol.residual * m.max_abs().max(1.0)
}

fn split_slots<'a, S: Scalar>(ms: &[SpaceModel<S>], items: &'a [Jet<S>]) -> Vec<&'a [Jet<S>]> {
    let mut out = Vec::with_capacity(ms.len());
    let mut off = 0;
    for m in ms {
        let c = m.slot_count();
        out.push(&items[off..off + c]);
        off += c;
    }
    out
}

/// Slot jets `(g, xi g)` for a point and right-logarithmic tangent.
pub fn tangent_jets<S: Scalar>(p: &[Matrix<S>], x: &[Matrix<S>]) -> Vec<Jet<S>> {
    p.iter().zip(x).map(|(g, xi)| Jet::from_right_tangent(g, xi)).collect()
}

/// Fusion of models sharing `n`.
pub fn fuse<S: Scalar>(ms: Vec<SpaceModel<S>>) -> Result<SpaceModel<S>> {
    let Some(first) = ms.first() else {
        return Err(WcvError::Dimension("fusion of an empty list".into()));
    };
    let n = first.n();
    if let Some(m) = ms.iter().find(|m| m.n() != n) {
        return Err(WcvError::Dimension(format!("cannot fuse n={n} with n={}", m.n())));
    }
    Ok(SpaceModel::Fusion(ms))
}

/// `w(xi_M, Y) - 1/2 sum_f ((mu_f^{-1} d mu_f + d mu_f mu_f^{-1})(Y), xi_f)` over all acting factors.
pub fn qh2_residual<S: Scalar>(
    m: &SpaceModel<S>,
    p: &[Matrix<S>],
    xi: &Factors<Matrix<S>>,
    y: &[Matrix<S>],
) -> Result<Residual<S>> {
    let xm = m.infinitesimal_action(p, xi)?;
    let (lhs, scale) = m.two_form_scaled(p, &xm, y)?;
    let mu = m.moment_jets(&tangent_jets(p, y))?;
    let hf = half::<S>();
    let mut rhs = S::zero();
    let mut rscale = 0.0;
    for (mj, x) in std::iter::once((&mu.g, &xi.g)).chain(mu.h.iter().zip(&xi.h)) {
        let f = &mj.left_log()? + &mj.right_log()?;
        let v = tr_mul(&f, x);
        rscale += v.modulus();
        rhs = rhs + hf.clone() * v;
    }
    Ok(Residual { value: lhs - rhs, scale: scale + rscale })
}

/// Whether `(C', p') = (w C, w p w^{-1})` for some `w` in `U^-`.
pub fn mspace_equivalent<S: Scalar>(
    levi: &BlockLayout,
    a: (&Matrix<S>, &Matrix<S>),
    b: (&Matrix<S>, &Matrix<S>),
    tol: &Tolerance,
) -> bool {
    let Ok(c_inv) = a.0.inverse() else { return false };
    let w = b.0 * &c_inv;
    if Subgroup::LowerUnipotent(levi.clone()).check(&w, threshold(&w, tol)).is_err() {
        return false;
    }
    let Ok(w_inv) = w.inverse() else { return false };
    let moved = &(&w * a.1) * &w_inv;
    let diff = &moved - b.1;
    diff.is_zero_within(threshold(b.1, tol))
}

/// Tangent of the `U^-` orbit through `(C, p)` in direction `w`: `(w, w - Ad_p w)`.
pub fn mspace_orbit_tangent<S: Scalar>(p: &Matrix<S>, w: &Matrix<S>) -> Result<Tangent<S>> {
    let adp = adjoint_form(p, w)?;
    Ok(vec![w.clone(), w - &adp])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    fn m(n: usize, v: &[i64]) -> Matrix<Exact> {
        Matrix::from_i64(n, v)
    }

    #[test]
    fn conj_class_example_value() {
        let model = SpaceModel::conj_class(m(2, &[2, 0, 0, 1]));
        let p = vec![Matrix::identity(2)];
        let w = model.two_form(&p, &[Matrix::unit(2, 0, 1)], &[Matrix::unit(2, 1, 0)]).unwrap();
        assert_eq!(w, Exact::from_ratio(-3, 4));
        assert_eq!(model.moment(&p).unwrap().g, m(2, &[2, 0, 0, 1]));
    }

    #[test]
    fn double_example_value() {
        let model = SpaceModel::<Exact>::double(2);
        let p = vec![Matrix::identity(2), Matrix::identity(2)];
        let z = Matrix::zeros(2, 2);
        let e = Matrix::unit(2, 0, 0);
        let x = vec![e.clone(), z.clone()];
        let y = vec![z, e];
        assert_eq!(model.two_form(&p, &x, &y).unwrap(), Exact::one());
        assert_eq!(model.two_form(&p, &x, &x).unwrap(), Exact::zero());
        let h = m(2, &[3, 1, 0, 2]);
        let mu = model.moment(&[Matrix::identity(2), h.clone()]).unwrap();
        assert_eq!(mu.g, h);
        assert_eq!(mu.h[0], h.inverse().unwrap());
    }

    #[test]
    fn fission_moment_example() {
        let model = SpaceModel::<Exact>::fission(Partition::discrete(2), 1);
        let p = vec![Matrix::identity(2), m(2, &[3, 0, 0, 5]), m(2, &[1, 1, 0, 1]), m(2, &[1, 0, 1, 1])];
        model.validate_point(&p, &Tolerance::default()).unwrap();
        let mu = model.moment(&p).unwrap();
        assert_eq!(mu.g, m(2, &[6, 3, 5, 5]));
        assert_eq!(mu.h[0], Matrix::diag(&[Exact::from_ratio(1, 3), Exact::from_ratio(1, 5)]));
    }

    #[test]
    fn validation_errors() {
        let tol = Tolerance::default();
        let fission = SpaceModel::<Exact>::fission(Partition::discrete(2), 1);
        let bad = vec![Matrix::identity(2), Matrix::identity(2), m(2, &[1, 0, 1, 1]), m(2, &[1, 0, 1, 1])];
        let err = fission.validate_point(&bad, &tol).unwrap_err();
        assert!(matches!(err, WcvError::InvalidPoint(ref s) if s.contains("u_1")));
        let ms = SpaceModel::<Exact>::mspace(Partition::discrete(2).layout());
        assert!(ms.validate_point(&[Matrix::identity(2), m(2, &[1, 1, 0, 1])], &tol).is_err());
        assert!(SpaceModel::<Exact>::double(2).validate_point(&[Matrix::identity(2), Matrix::identity(2)], &tol).is_ok());
        assert!(fission.validate_point(&bad[..2], &tol).is_err());
    }

    #[test]
    fn fusion_of_one_matches_child() {
        let d = SpaceModel::<Exact>::double(2);
        let f = fuse(vec![d.clone()]).unwrap();
        let p = vec![m(2, &[1, 2, 0, 1]), m(2, &[2, 1, 1, 1])];
        let x = vec![m(2, &[0, 1, 2, 0]), m(2, &[1, 1, 0, 3])];
        let y = vec![m(2, &[1, 0, 0, -1]), m(2, &[0, 2, 1, 1])];
        assert_eq!(f.two_form(&p, &x, &y).unwrap(), d.two_form(&p, &x, &y).unwrap());
        assert_eq!(f.moment(&p).unwrap(), d.moment(&p).unwrap());
        assert!(fuse::<Exact>(vec![]).is_err());
        assert!(fuse(vec![d, SpaceModel::double(3)]).is_err());
    }

    #[test]
    fn conj_fusion_moment_is_product() {
        let a = m(2, &[2, 0, 0, 1]);
        let b = m(2, &[1, 1, 0, 3]);
        let f = fuse(vec![SpaceModel::conj_class(a.clone()), SpaceModel::conj_class(b.clone())]).unwrap();
        let c1 = m(2, &[1, 1, 1, 2]);
        let c2 = m(2, &[2, 1, 1, 1]);
        let expect = &(&(&c1.inverse().unwrap() * &a) * &c1) * &(&(&c2.inverse().unwrap() * &b) * &c2);
        assert_eq!(f.moment(&[c1, c2]).unwrap().g, expect);
    }

    #[test]
    fn qh2_zero_xi() {
        let model = SpaceModel::conj_class(m(2, &[2, 1, 0, 3]));
        let p = vec![m(2, &[1, 1, 1, 2])];
        let xi = Factors { g: Matrix::zeros(2, 2), h: vec![] };
        let r = qh2_residual(&model, &p, &xi, &[m(2, &[1, 2, 3, 4])]).unwrap();
        assert!(r.value.is_exactly_zero());
    }

    #[test]
    fn mspace_equivalence_basic() {
        let levi = Partition::discrete(2).layout();
        let tol = Tolerance::default();
        let c = m(2, &[1, 2, 0, 1]);
        let p = m(2, &[2, 0, 3, 1]);
        assert!(mspace_equivalent(&levi, (&c, &p), (&c, &p), &tol));
        let w = m(2, &[1, 0, 4, 1]);
        let p2 = &(&w * &p) * &w.inverse().unwrap();
        assert!(mspace_equivalent(&levi, (&c, &p), (&(&w * &c), &p2), &tol));
        let g = m(2, &[1, 1, 0, 1]);
        assert!(!mspace_equivalent(&levi, (&c, &p), (&(&g * &c), &p), &tol));
    }

    fn sample_models(rng: &mut crate::random::WcvRng, n: usize) -> Vec<SpaceModel<Exact>> {
        use crate::random;
        let base = random::invertible::<Exact>(rng, n);
        vec![
            SpaceModel::conj_class(base.clone()),
            SpaceModel::double(n),
            SpaceModel::fission(random::partition(rng, n), 2),
            SpaceModel::multi_fission(random::chain(rng, n, 2, true)),
            SpaceModel::stokes(random::irregular(rng, n, 2)),
            SpaceModel::mspace(random::partition(rng, n).layout()),
            fuse(vec![SpaceModel::conj_class(base), SpaceModel::double(n), SpaceModel::fission(Partition::discrete(n), 1)])
                .unwrap(),
        ]
    }

    #[test]
    fn qh2_holds_exactly_on_every_model() {
        use crate::random;
        let mut rng = random::rng(5);
        for n in [2, 3] {
            for model in sample_models(&mut rng, n) {
                let p = random::point(&mut rng, &model);
                let xi = random::action_algebra(&mut rng, &model);
                let y = random::tangent(&mut rng, &model);
                let r = qh2_residual(&model, &p, &xi, &y).unwrap();
                assert!(r.value.is_exactly_zero(), "{} residual {:?}", model.name(), r.value);
            }
        }
    }

    #[test]
    fn two_form_and_moment_are_equivariant() {
        use crate::random;
        let mut rng = random::rng(8);
        for model in sample_models(&mut rng, 2) {
            let p = random::point(&mut rng, &model);
            let x = random::tangent(&mut rng, &model);
            let y = random::tangent(&mut rng, &model);
            let a = random::action_group(&mut rng, &model);
            let (q, ax) = model.act_tangent(&a, &p, &x).unwrap();
            let (_, ay) = model.act_tangent(&a, &p, &y).unwrap();
            model.validate_point(&q, &Tolerance::default()).unwrap();
            assert_eq!(model.two_form(&p, &x, &y).unwrap(), model.two_form(&q, &ax, &ay).unwrap(), "{}", model.name());
            let expect = model.act_on_moment(&a, &model.moment(&p).unwrap()).unwrap();
            assert_eq!(model.moment(&q).unwrap(), expect, "{}", model.name());
        }
    }
}

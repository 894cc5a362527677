//! Irregular types, their singular directions and Stokes groups, and the
//! Levi chain they induce.

use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub use crate::blocks::LeviChain;
use crate::blocks::Partition;
use crate::error::{Result, WcvError};
use crate::matrix::Matrix;
use crate::scalar::{Exact, Scalar};

/// Angles closer than this are the same direction.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// `Q(z) = sum_{j=1}^r Q_j z^{-j}` with diagonal `Q_j`, stored as diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct IrregularType<S: Scalar> {
    n: usize,
    coeffs: Vec<Vec<S>>,
}

impl<S: Scalar> IrregularType<S> {
    /// Trailing zero coefficients are dropped, so `Q_r != 0` whenever `r >= 1`.
    pub fn new(n: usize, mut coeffs: Vec<Vec<S>>) -> Result<Self> {
        for (j, c) in coeffs.iter().enumerate() {
            if c.len() != n {
                return Err(WcvError::Dimension(format!("coefficient Q_{} has {} entries, expected {n}", j + 1, c.len())));
            }
        }
        while coeffs.last().is_some_and(|c| c.iter().all(Scalar::is_exactly_zero)) {
            coeffs.pop();
        }
        Ok(IrregularType { n, coeffs })
    }

    pub fn zero(n: usize) -> Self {
        IrregularType { n, coeffs: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Pole order.
    pub fn r(&self) -> usize {
        self.coeffs.len()
    }

    /// Diagonal entries of `Q_j` for `j = 1..=r`.
    pub fn coeff(&self, j: usize) -> &[S] {
        &self.coeffs[j - 1]
    }

    pub fn coeffs(&self) -> &[Vec<S>] {
        &self.coeffs
    }

    pub fn coeff_matrix(&self, j: usize) -> Matrix<S> {
        Matrix::diag(self.coeff(j))
    }

    /// All ordered roots `(k, l)`, `k != l`, 0-based.
    pub fn roots(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n).flat_map(|k| (0..n).filter(move |&l| l != k).map(move |l| (k, l))).collect()
    }
}

/// Coefficients `<alpha, Q_j> = (Q_j)_kk - (Q_j)_ll` for `j = 1..r`; indices 0-based.
pub fn q_alpha<S: Scalar>(q: &IrregularType<S>, root: (usize, usize)) -> Result<Vec<S>> {
    let (k, l) = root;
    if k == l || k >= q.n || l >= q.n {
        return Err(WcvError::InvalidRoot { k, l, n: q.n });
    }
    Ok(q.coeffs.iter().map(|c| c[k].clone() - c[l].clone()).collect())
}

/// Leading nonzero coefficient of `q_alpha` and its order.
fn leading<S: Scalar>(coeffs: &[S]) -> Option<(S, usize)> {
    coeffs.iter().enumerate().rev().find(|(_, c)| !c.is_exactly_zero()).map(|(j, c)| (c.clone(), j + 1))
}

/// Degree of `q_alpha` as a polynomial in `1/z`.
pub fn root_degree<S: Scalar>(q: &IrregularType<S>, root: (usize, usize)) -> Result<usize> {
    Ok(leading(&q_alpha(q, root)?).map_or(0, |(_, k)| k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularDirection {
    /// Angle in `[0, 2 pi)`.
    pub angle: f64,
    /// `e^{-i d}` when it is a Gaussian rational.
    pub unit: Option<Exact>,
    /// Supporting roots `(k, l)`, 0-based, sorted.
    pub roots: Vec<(usize, usize)>,
}

fn normalize_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if 2.0 * PI - t < ANGLE_TOLERANCE {
        0.0
    } else {
        t
    }
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let (p, q) = (r.numer(), r.denom());
    let (sp, sq) = (p.sqrt(), q.sqrt());
    (&sp * &sp == *p && &sq * &sq == *q).then(|| BigRational::new(sp, sq))
}

fn exact_pow(z: &Exact, k: usize) -> Exact {
    (0..k).fold(Exact::one(), |acc, _| acc * z.clone())
}

fn is_negative_real(z: &Exact) -> bool {
    z.im.is_zero() && z.re.is_negative()
}

/// Gaussian-rational candidates for `e^{-id}` solving `c e^{-ikd} < 0`.
fn exact_units(c: &Exact, k: usize) -> Vec<Exact> {
    let mut cands: Vec<Exact> = [(1, 0), (0, 1), (-1, 0), (0, -1)]
        .iter()
        .map(|&(a, b)| Exact::from_gaussian((a, 1), (b, 1)))
        .collect();
    if k == 1 {
        let norm2 = c.re.clone() * c.re.clone() + c.im.clone() * c.im.clone();
        if let Some(abs) = rational_sqrt(&norm2) {
            // zeta = -|c| / c
            let abs = Exact::new(abs, BigRational::zero());
            cands.push(-(abs / c.clone()));
        }
    }
    cands.retain(|z| is_negative_real(&(c.clone() * exact_pow(z, k))));
    cands
}

/// Angles `d` in `[0, 2 pi)` with `c e^{-ikd}` a negative real number.
fn supported_angles<S: Scalar>(c: &S, k: usize) -> Vec<(f64, Option<Exact>)> {
    let cf = c.to_c64();
    // c e^{-ikd} = -|c|  <=>  arg(c) - k d = pi (mod 2 pi)
    let base = (-cf).arg();
    let units = c.to_exact().map(|ce| exact_units(&ce, k)).unwrap_or_default();
    (0..k)
        .map(|m| {
            let d = normalize_angle((base + 2.0 * PI * m as f64) / k as f64);
            let unit = units
                .iter()
                .find(|z| {
                    let zf = z.to_c64();
                    (zf.re - d.cos()).abs() < 1e-9 && (zf.im + d.sin()).abs() < 1e-9
                })
                .cloned();
            (d, unit)
        })
        .collect()
}

/// Singular directions sorted by angle; roots sharing an angle are merged.
pub fn singular_directions<S: Scalar>(q: &IrregularType<S>) -> Vec<SingularDirection> {
    let mut dirs: Vec<SingularDirection> = Vec::new();
    for root in q.roots() {
        let coeffs = q_alpha(q, root).expect("roots are valid");
        let Some((c, k)) = leading(&coeffs) else { continue };
        for (angle, unit) in supported_angles(&c, k) {
            match dirs.iter_mut().find(|d| angle_distance(d.angle, angle) < ANGLE_TOLERANCE) {
                Some(d) => {
                    d.roots.push(root);
                    if d.unit.is_none() {
                        d.unit = unit;
                    }
                }
                None => dirs.push(SingularDirection { angle, unit, roots: vec![root] }),
            }
        }
    }
    for d in &mut dirs {
        d.roots.sort_unstable();
    }
    dirs.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    dirs
}

/// Basis `{E_kl}` of the Lie algebra of the Stokes group at `d`.
pub fn stokes_group_basis<S: Scalar>(q: &IrregularType<S>, d: &SingularDirection) -> Result<Vec<Matrix<S>>> {
    let dirs = singular_directions(q);
    let found = dirs
        .iter()
        .find(|e| angle_distance(e.angle, d.angle) < ANGLE_TOLERANCE)
        .ok_or(WcvError::NotSingular)?;
    if !support_is_nilpotent_subalgebra(q.n, &found.roots) {
        return Err(WcvError::Dimension(format!("support {:?} is not a nilpotent subalgebra", found.roots)));
    }
    Ok(found.roots.iter().map(|&(k, l)| Matrix::unit(q.n, k, l)).collect())
}

/// Closure of `span{E_kl}` under products and nilpotency (no cycles in the support graph).
pub fn support_is_nilpotent_subalgebra(n: usize, roots: &[(usize, usize)]) -> bool {
    let closed = roots
        .iter()
        .all(|&(a, b)| roots.iter().filter(|&&(c, _)| c == b).all(|&(_, d)| a != d && roots.contains(&(a, d))));
    // With closure, nilpotency reduces to having no pair (k,l), (l,k).
    closed && roots.iter().all(|&(k, l)| k < n && l < n && k != l && !roots.contains(&(l, k)))
}

/// Equality-pattern labels of the tuples `(Q_j, ..., Q_r)`: first index with the same tuple.
fn labels<S: Scalar>(q: &IrregularType<S>, j: usize) -> Vec<usize> {
    let n = q.n;
    let tuple = |i: usize| -> Vec<&S> { (j..=q.r()).map(|jj| &q.coeff(jj)[i]).collect() };
    (0..n).map(|i| (0..=i).find(|&i2| tuple(i2) == tuple(i)).unwrap()).collect()
}

/// The chain `H_j = Z_G(Q_j, ..., Q_r)`, made block-diagonal by one permutation.
pub fn levi_chain<S: Scalar>(q: &IrregularType<S>) -> LeviChain {
    let (n, r) = (q.n, q.r());
    if r == 0 {
        return LeviChain::empty(n);
    }
    let labs: Vec<Vec<usize>> = (1..=r).map(|j| labels(q, j)).collect();
    let key = |i: usize| -> Vec<usize> { labs.iter().rev().map(|l| l[i]).collect() };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| key(i));
    let partitions = labs
        .iter()
        .map(|l| {
            let mut sizes = Vec::new();
            let mut pos = 0;
            while pos < n {
                let start = pos;
                while pos < n && l[order[pos]] == l[order[start]] {
                    pos += 1;
                }
                sizes.push(pos - start);
            }
            Partition::from_sizes(&sizes).expect("nonempty blocks")
        })
        .collect();
    LeviChain::new(order, partitions).expect("equality patterns form a chain")
}

/// `(sum_alpha deg q_alpha, sum_j (dim U_j^+ + dim U_j^-))`; the two agree.
pub fn dimension_audit<S: Scalar>(q: &IrregularType<S>) -> (usize, usize) {
    let stokes = q.roots().into_iter().map(|a| root_degree(q, a).expect("valid root")).sum();
    let chain = levi_chain(q);
    let n2 = q.n * q.n;
    let unip = (0..chain.r()).map(|j| n2 - chain.layout(j).levi_dim()).sum();
    (stokes, unip)
}

/// Sum of Stokes group dimensions over the singular directions.
pub fn stokes_dimension_total<S: Scalar>(q: &IrregularType<S>) -> usize {
    singular_directions(q).iter().map(|d| d.roots.len()).sum()
}

/// Integer helper for JSON-free construction in tests and generators.
pub fn from_integer_diagonals(n: usize, coeffs: &[&[i64]]) -> Result<IrregularType<Exact>> {
    IrregularType::new(n, coeffs.iter().map(|c| c.iter().map(|&v| Exact::from_i64(v)).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(re: i64, im: i64) -> Exact {
        Exact::from_gaussian((re, 1), (im, 1))
    }

    #[test]
    fn q_alpha_examples() {
        let q = from_integer_diagonals(2, &[&[1, -1]]).unwrap();
        assert_eq!(q_alpha(&q, (0, 1)).unwrap(), vec![g(2, 0)]);
        let q2 = IrregularType::new(2, vec![vec![g(1, 0), g(0, 0)], vec![g(0, 1), g(0, -1)]]).unwrap();
        assert_eq!(q_alpha(&q2, (0, 1)).unwrap(), vec![g(1, 0), g(0, 2)]);
        assert!(q_alpha(&q2, (1, 1)).is_err());
        assert!(q_alpha(&q2, (0, 2)).is_err());
    }

    #[test]
    fn directions_of_simple_pole() {
        let q = from_integer_diagonals(2, &[&[1, -1]]).unwrap();
        let d = singular_directions(&q);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].angle, 0.0);
        assert_eq!(d[0].roots, vec![(1, 0)]);
        assert_eq!(d[0].unit, Some(g(1, 0)));
        assert!((d[1].angle - PI).abs() < 1e-12);
        assert_eq!(d[1].roots, vec![(0, 1)]);
        assert_eq!(stokes_group_basis(&q, &d[1]).unwrap(), vec![Matrix::unit(2, 0, 1)]);
    }

    #[test]
    fn directions_of_imaginary_pole() {
        let q = IrregularType::new(2, vec![vec![g(0, 1), g(0, -1)]]).unwrap();
        let d = singular_directions(&q);
        assert!((d[0].angle - PI / 2.0).abs() < 1e-12);
        assert_eq!(d[0].roots, vec![(1, 0)]);
        assert_eq!(d[0].unit, Some(g(0, -1)));
        assert!((d[1].angle - 1.5 * PI).abs() < 1e-12);
        assert_eq!(d[1].roots, vec![(0, 1)]);
    }

    #[test]
    fn double_pole_gives_four_directions() {
        let q = from_integer_diagonals(2, &[&[0, 0], &[1, -1]]).unwrap();
        let d = singular_directions(&q);
        let summary: Vec<_> = d.iter().map(|x| ((x.angle / (PI / 2.0)).round() as i32, x.roots.clone())).collect();
        assert_eq!(summary, vec![(0, vec![(1, 0)]), (1, vec![(0, 1)]), (2, vec![(1, 0)]), (3, vec![(0, 1)])]);
        assert_eq!(dimension_audit(&q), (4, 4));
    }

    #[test]
    fn non_singular_direction_is_rejected() {
        let q = from_integer_diagonals(2, &[&[1, -1]]).unwrap();
        let bogus = SingularDirection { angle: 1.0, unit: None, roots: vec![] };
        assert_eq!(stokes_group_basis(&q, &bogus), Err(WcvError::NotSingular));
    }

    #[test]
    fn chains() {
        let q = from_integer_diagonals(3, &[&[3, 4, 5], &[1, 1, 2]]).unwrap();
        let c = levi_chain(&q);
        assert_eq!(c.order(), &[0, 1, 2]);
        assert_eq!(c.partitions()[0], Partition::discrete(3));
        assert_eq!(c.partitions()[1], Partition::from_sizes(&[2, 1]).unwrap());

        let q = from_integer_diagonals(3, &[&[0, 0, 0], &[1, 2, 1]]).unwrap();
        let c = levi_chain(&q);
        assert_eq!(c.order(), &[0, 2, 1]);
        assert_eq!(c.partitions()[1], Partition::from_sizes(&[2, 1]).unwrap());
        assert!(c.layout(1).same_block(0, 2));
    }

    #[test]
    fn audits() {
        assert_eq!(dimension_audit(&from_integer_diagonals(2, &[&[1, -1]]).unwrap()), (2, 2));
        assert_eq!(dimension_audit(&from_integer_diagonals(2, &[&[0, 0]]).unwrap()), (0, 0));
    }

    #[test]
    fn exact_unit_for_pythagorean_coefficient() {
        // c = 3 + 4i has |c| = 5, so e^{-id} = -5 / (3 + 4i) is Gaussian rational.
        let q = IrregularType::new(2, vec![vec![Exact::from_gaussian((3, 2), (2, 1)), Exact::from_gaussian((-3, 2), (-2, 1))]]).unwrap();
        for d in singular_directions(&q) {
            let u = d.unit.expect("exact unit");
            let uf = u.to_c64();
            assert!((uf.re - d.angle.cos()).abs() < 1e-12 && (uf.im + d.angle.sin()).abs() < 1e-12);
        }
    }
}

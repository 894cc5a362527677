//! Seeded generators of test data: matrices in the block subgroups, points
//! and tangents of the space models, chains and irregular types.
//!
//! Exact mode draws small Gaussian rationals so that products stay cheap;
//! float mode draws uniform doubles.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::{LeviChain, Partition, Subgroup};
use crate::irregular::IrregularType;
use crate::matrix::Matrix;
use crate::scalar::{Mode, Scalar};
use crate::spaces::{Factors, SpaceModel, SpacePoint, Tangent};

pub type WcvRng = ChaCha8Rng;

pub fn rng(seed: u64) -> WcvRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent seed for trial `trial` of a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn scalar<S: Scalar>(rng: &mut impl Rng) -> S {
    match S::MODE {
        Mode::Exact => {
            let part = |rng: &mut dyn rand::RngCore| -> (i64, i64) {
                let den = if rng.gen_bool(0.7) { 1 } else { rng.gen_range(2..=3) };
                (rng.gen_range(-3..=3), den)
            };
            let re = part(rng);
            let im = if rng.gen_bool(0.5) { (0, 1) } else { part(rng) };
            S::from_gaussian(re, im)
        }
        Mode::Float => S::from_c64(num_complex::Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))),
    }
}

/// Nonzero scalar.
pub fn unit_scalar<S: Scalar>(rng: &mut impl Rng) -> S {
    loop {
        let s = scalar::<S>(rng);
        if s.modulus() > 0.25 {
            return s;
        }
    }
}

pub fn matrix<S: Scalar>(rng: &mut impl Rng, n: usize) -> Matrix<S> {
    Matrix::from_fn(n, n, |_, _| scalar(rng))
}

/// Random element of the Lie algebra of `g`.
pub fn lie<S: Scalar>(rng: &mut impl Rng, g: &Subgroup) -> Matrix<S> {
    let n = g.n();
    Matrix::from_fn(n, n, |i, j| if g.lie_allows(i, j) { scalar(rng) } else { S::zero() })
}

fn well_conditioned<S: Scalar>(m: &Matrix<S>) -> bool {
    let d = m.det();
    match S::MODE {
        Mode::Exact => !d.is_exactly_zero(),
        Mode::Float => {
            // Bounded condition number keeps rounding far below the residual tolerance.
            d.modulus() > 0.05 * m.max_abs().max(1.0).powi(m.n() as i32 - 1)
                && m.inverse().map(|inv| inv.max_abs() * m.max_abs() <= 50.0).unwrap_or(false)
        }
    }
}

/// Random element of `g`.
pub fn group_elem<S: Scalar>(rng: &mut impl Rng, g: &Subgroup) -> Matrix<S> {
    let n = g.n();
    match g {
        Subgroup::LowerParabolic(l) => {
            let h = group_elem(rng, &Subgroup::Levi(l.clone()));
            let v = group_elem(rng, &Subgroup::LowerUnipotent(l.clone()));
            &h * &v
        }
        _ if g.is_unipotent() => {
            let x = lie::<S>(rng, g);
            // Long float products of unipotents lose digits quickly; halve their entries.
            let x = match S::MODE {
                Mode::Exact => x,
                Mode::Float => x.scale(&S::from_ratio(1, 2)),
            };
            &Matrix::identity(n) + &x
        }
        _ => loop {
            let m = lie::<S>(rng, g);
            if well_conditioned(&m) {
                return m;
            }
        },
    }
}

pub fn invertible<S: Scalar>(rng: &mut impl Rng, n: usize) -> Matrix<S> {
    group_elem(rng, &Subgroup::General(n))
}

pub fn point<S: Scalar>(rng: &mut impl Rng, m: &SpaceModel<S>) -> SpacePoint<S> {
    m.slot_subgroups().iter().map(|g| group_elem(rng, g)).collect()
}

pub fn tangent<S: Scalar>(rng: &mut impl Rng, m: &SpaceModel<S>) -> Tangent<S> {
    m.slot_subgroups().iter().map(|g| lie(rng, g)).collect()
}

/// Random element of the Lie algebra of `G x H_1 x ...` acting on `m`.
pub fn action_algebra<S: Scalar>(rng: &mut impl Rng, m: &SpaceModel<S>) -> Factors<Matrix<S>> {
    let n = m.n();
    Factors { g: lie(rng, &Subgroup::General(n)), h: m.h_factors().iter().map(|h| lie(rng, h)).collect() }
}

pub fn action_group<S: Scalar>(rng: &mut impl Rng, m: &SpaceModel<S>) -> Factors<Matrix<S>> {
    let n = m.n();
    Factors { g: invertible(rng, n), h: m.h_factors().iter().map(|h| group_elem(rng, h)).collect() }
}

pub fn partition(rng: &mut impl Rng, n: usize) -> Partition {
    let mut sizes = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = rng.gen_range(1..=left);
        sizes.push(s);
        left -= s;
    }
    Partition::from_sizes(&sizes).expect("sizes are positive")
}

/// Merges random adjacent blocks of `p`.
pub fn coarsen(rng: &mut impl Rng, p: &Partition) -> Partition {
    let mut sizes = vec![];
    for s in p.sizes() {
        match sizes.last_mut() {
            Some(last) if rng.gen_bool(0.4) => *last += s,
            _ => sizes.push(s),
        }
    }
    Partition::from_sizes(&sizes).expect("sizes are positive")
}

/// Increasing chain of `r` partitions; `permute` also draws a random basis order.
pub fn chain(rng: &mut impl Rng, n: usize, r: usize, permute: bool) -> LeviChain {
    let mut parts = Vec::with_capacity(r);
    let mut p = partition(rng, n);
    for _ in 0..r {
        parts.push(p.clone());
        p = coarsen(rng, &p);
    }
    let mut order: Vec<usize> = (0..n).collect();
    if permute {
        order.shuffle(rng);
    }
    LeviChain::new(order, parts).expect("coarsening gives a chain")
}

/// Irregular type with integer-Gaussian diagonal entries from a small pool.
pub fn irregular<S: Scalar>(rng: &mut impl Rng, n: usize, r: usize) -> IrregularType<S> {
    let coeffs = (0..r)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re = rng.gen_range(-2..=2);
                    let im = if rng.gen_bool(0.3) { rng.gen_range(-2..=2) } else { 0 };
                    S::from_gaussian((re, 1), (im, 1))
                })
                .collect()
        })
        .collect();
    IrregularType::new(n, coeffs).expect("sizes agree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Tolerance;
    use crate::scalar::{Exact, Float};

    #[test]
    fn points_are_valid() {
        let mut r = rng(3);
        for _ in 0..20 {
            let c = chain(&mut r, 3, 2, true);
            let m = SpaceModel::<Exact>::multi_fission(c);
            m.validate_point(&point(&mut r, &m), &Tolerance::default()).unwrap();
            let mf = SpaceModel::<Float>::mspace(partition(&mut r, 3).layout());
            mf.validate_point(&point(&mut r, &mf), &Tolerance::default()).unwrap();
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        let a: Matrix<Exact> = matrix(&mut rng(11), 3);
        let b: Matrix<Exact> = matrix(&mut rng(11), 3);
        assert_eq!(a, b);
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
    }
}

//! Interval partitions and the block subgroups of `GL_n` they determine.
//!
//! A [`Partition`] of `{1..n}` into contiguous intervals describes a Levi
//! subgroup (block-diagonal matrices). A [`BlockLayout`] assigns every index
//! the rank of its block, which also allows partitions that are intervals only
//! after a reordering of the basis. Parabolic and unipotent subgroups are
//! block-triangular relative to the block order.

use std::fmt;
use std::ops::Range;

use crate::error::{Result, WcvError};
use crate::matrix::{is_invertible, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Range<usize>>,
}

impl Partition {
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.iter().any(|&s| s == 0) {
            return Err(WcvError::Partition("empty block".into()));
        }
        let mut start = 0;
        let blocks = sizes
            .iter()
            .map(|&s| {
                let r = start..start + s;
                start += s;
                r
            })
            .collect();
        Ok(Partition { n: start, blocks })
    }

    /// From 1-based index blocks such as `[[1, 2], [3]]`.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut next = 1;
        let mut sizes = Vec::new();
        for b in blocks {
            if b.is_empty() {
                return Err(WcvError::Partition("empty block".into()));
            }
            for (k, &i) in b.iter().enumerate() {
                if i != next + k {
                    return Err(WcvError::Partition(format!("blocks must be ascending contiguous intervals, got {blocks:?}")));
                }
            }
            next += b.len();
            sizes.push(b.len());
        }
        if next != n + 1 {
            return Err(WcvError::Partition(format!("blocks do not cover 1..{n}")));
        }
        Partition::from_sizes(&sizes)
    }

    pub fn trivial(n: usize) -> Self {
        Partition { n, blocks: vec![0..n] }
    }

    pub fn discrete(n: usize) -> Self {
        Partition { n, blocks: (0..n).map(|i| i..i + 1).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    /// 1-based index lists, the JSON form.
    pub fn to_blocks(&self) -> Vec<Vec<usize>> {
        self.blocks.iter().map(|b| b.clone().map(|i| i + 1).collect()).collect()
    }

    pub fn block_of(&self, i: usize) -> usize {
        self.blocks.iter().position(|b| b.contains(&i)).expect("index out of range")
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.n == coarser.n
            && self.blocks.iter().all(|b| coarser.blocks.iter().any(|c| c.start <= b.start && b.end <= c.end))
    }

    pub fn layout(&self) -> BlockLayout {
        BlockLayout::from_ranks((0..self.n).map(|i| self.block_of(i)).collect())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            let idx: Vec<String> = b.clone().map(|i| (i + 1).to_string()).collect();
            write!(f, "{{{}}}", idx.join(","))?;
        }
        Ok(())
    }
}

/// Block rank of every basis index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockLayout {
    rank: Vec<usize>,
    blocks: usize,
}

impl BlockLayout {
    pub fn from_ranks(rank: Vec<usize>) -> Self {
        let blocks = rank.iter().map(|&r| r + 1).max().unwrap_or(0);
        BlockLayout { rank, blocks }
    }

    /// Layout of `partition` read in the reordered basis `order`, where
    /// `order[pos]` is the original index placed at position `pos`.
    pub fn permuted(partition: &Partition, order: &[usize]) -> Self {
        let mut rank = vec![0; order.len()];
        for (pos, &orig) in order.iter().enumerate() {
            rank[orig] = partition.block_of(pos);
        }
        BlockLayout::from_ranks(rank)
    }

    pub fn n(&self) -> usize {
        self.rank.len()
    }

    pub fn block_count(&self) -> usize {
        self.blocks
    }

    pub fn rank_of(&self, i: usize) -> usize {
        self.rank[i]
    }

    /// Block-superdiagonal distance of entry `(i, j)`.
    pub fn level(&self, i: usize, j: usize) -> isize {
        self.rank[j] as isize - self.rank[i] as isize
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.rank[i] == self.rank[j]
    }

    /// Levi dimension `sum (block size)^2`.
    pub fn levi_dim(&self) -> usize {
        (0..self.blocks).map(|b| self.rank.iter().filter(|&&r| r == b).count().pow(2)).sum()
    }

    /// Dimension of each of `U^+`, `U^-`.
    pub fn unipotent_dim(&self) -> usize {
        (self.n() * self.n() - self.levi_dim()) / 2
    }

    /// Indicator matrices of the blocks; they span the center of the Levi algebra.
    pub fn block_projectors<S: Scalar>(&self) -> Vec<Matrix<S>> {
        (0..self.blocks)
            .map(|b| {
                Matrix::from_fn(self.n(), self.n(), |i, j| {
                    if i == j && self.rank[i] == b {
                        S::one()
                    } else {
                        S::zero()
                    }
                })
            })
            .collect()
    }

    /// Block-diagonal part of `m` (the projection `P^- -> H`).
    pub fn block_diagonal_part<S: Scalar>(&self, m: &Matrix<S>) -> Matrix<S> {
        Matrix::from_fn(m.rows(), m.cols(), |i, j| if self.same_block(i, j) { m[(i, j)].clone() } else { S::zero() })
    }

    /// Whether every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &BlockLayout) -> bool {
        let n = self.n();
        n == coarser.n()
            && (0..n).all(|i| (0..n).all(|j| !self.same_block(i, j) || coarser.same_block(i, j)))
    }
}

/// The subgroups of `GL_n` that slots of a space point live in.
#[derive(Debug, Clone, PartialEq)]
pub enum Subgroup {
    General(usize),
    /// Levi subgroup `H`: block-diagonal.
    Levi(BlockLayout),
    /// `U^+`: unipotent, strictly block-upper.
    UpperUnipotent(BlockLayout),
    /// `U^-`: unipotent, strictly block-lower.
    LowerUnipotent(BlockLayout),
    /// `P^- = H U^-`: block-lower-triangular.
    LowerParabolic(BlockLayout),
    /// Unipotent group `I + span{E_kl}` for the listed off-diagonal positions.
    Unipotent { n: usize, support: Vec<(usize, usize)> },
}

impl Subgroup {
    pub fn n(&self) -> usize {
        match self {
            Subgroup::General(n) => *n,
            Subgroup::Levi(l) | Subgroup::UpperUnipotent(l) | Subgroup::LowerUnipotent(l) | Subgroup::LowerParabolic(l) => {
                l.n()
            }
            Subgroup::Unipotent { n, .. } => *n,
        }
    }

    /// Whether entry `(i, j)` may be nonzero in the Lie algebra.
    pub fn lie_allows(&self, i: usize, j: usize) -> bool {
        match self {
            Subgroup::General(_) => true,
            Subgroup::Levi(l) => l.same_block(i, j),
            Subgroup::UpperUnipotent(l) => l.level(i, j) > 0,
            Subgroup::LowerUnipotent(l) => l.level(i, j) < 0,
            Subgroup::LowerParabolic(l) => l.level(i, j) <= 0,
            Subgroup::Unipotent { support, .. } => support.contains(&(i, j)),
        }
    }

    pub fn is_unipotent(&self) -> bool {
        matches!(self, Subgroup::UpperUnipotent(_) | Subgroup::LowerUnipotent(_) | Subgroup::Unipotent { .. })
    }

    pub fn lie_positions(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| self.lie_allows(i, j)).collect()
    }

    pub fn dim(&self) -> usize {
        self.lie_positions().len()
    }

    /// Basis of matrix units for the Lie algebra.
    pub fn lie_basis<S: Scalar>(&self) -> Vec<Matrix<S>> {
        let n = self.n();
        self.lie_positions().into_iter().map(|(i, j)| Matrix::unit(n, i, j)).collect()
    }

    pub fn lie_contains<S: Scalar>(&self, x: &Matrix<S>, tol: f64) -> bool {
        let n = self.n();
        x.rows() == n
            && x.cols() == n
            && (0..n).all(|i| (0..n).all(|j| self.lie_allows(i, j) || x[(i, j)].negligible(tol)))
    }

    /// Membership test; describes the first violation on failure.
    pub fn check<S: Scalar>(&self, g: &Matrix<S>, tol: f64) -> std::result::Result<(), String> {
        let n = self.n();
        if g.rows() != n || g.cols() != n {
            return Err(format!("expected {n}x{n}, got {}x{}", g.rows(), g.cols()));
        }
        if self.is_unipotent() {
            let x = g - &Matrix::identity(n);
            for i in 0..n {
                for j in 0..n {
                    if !self.lie_allows(i, j) && !x[(i, j)].negligible(tol) {
                        return Err(format!("entry ({}, {}) violates the unipotent pattern of {}", i + 1, j + 1, self.name()));
                    }
                }
            }
            return Ok(());
        }
        for i in 0..n {
            for j in 0..n {
                if !self.lie_allows(i, j) && !g[(i, j)].negligible(tol) {
                    return Err(format!("entry ({}, {}) must vanish in {}", i + 1, j + 1, self.name()));
                }
            }
        }
        if !is_invertible(g) {
            return Err("matrix is not invertible".into());
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Subgroup::General(_) => "GL_n",
            Subgroup::Levi(_) => "the Levi subgroup H",
            Subgroup::UpperUnipotent(_) => "U+",
            Subgroup::LowerUnipotent(_) => "U-",
            Subgroup::LowerParabolic(_) => "P-",
            Subgroup::Unipotent { .. } => "the Stokes group",
        }
    }
}

/// Increasing chain of Levi subgroups `H_1 ⊂ ... ⊂ H_r`, each block-diagonal
/// after reordering the basis by `order`.
///
/// `order[pos]` is the original index placed at position `pos`; every
/// partition is an interval partition of the reordered positions, and
/// `partitions[0]` (for `H_1`) is the finest.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LeviChain {
    order: Vec<usize>,
    partitions: Vec<Partition>,
    layouts: Vec<BlockLayout>,
}

impl LeviChain {
    pub fn new(order: Vec<usize>, partitions: Vec<Partition>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n || seen[i] {
                return Err(WcvError::Partition(format!("order {order:?} is not a permutation")));
            }
            seen[i] = true;
        }
        for (j, p) in partitions.iter().enumerate() {
            if p.n() != n {
                return Err(WcvError::Partition(format!("partition {} has size {}, expected {n}", j + 1, p.n())));
            }
        }
        for (j, w) in partitions.windows(2).enumerate() {
            if !w[0].refines(&w[1]) {
                return Err(WcvError::Partition(format!(
                    "partition {} = {} does not refine partition {} = {}",
                    j + 1,
                    w[0],
                    j + 2,
                    w[1]
                )));
            }
        }
        let layouts = partitions.iter().map(|p| BlockLayout::permuted(p, &order)).collect();
        Ok(LeviChain { order, partitions, layouts })
    }

    /// Chain in the standard basis order.
    pub fn standard(partitions: Vec<Partition>) -> Result<Self> {
        let n = partitions.first().map(Partition::n).unwrap_or(0);
        LeviChain::new((0..n).collect(), partitions)
    }

    /// The constant chain `P_1 = ... = P_r` of a fission space.
    pub fn constant(pi: Partition, r: usize) -> Self {
        LeviChain::standard(vec![pi; r]).expect("constant chain is valid")
    }

    /// Empty chain, used when the irregular type vanishes.
    pub fn empty(n: usize) -> Self {
        LeviChain { order: (0..n).collect(), partitions: Vec::new(), layouts: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    /// Number of levels `r`.
    pub fn r(&self) -> usize {
        self.partitions.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    /// Layout of level `j` (0-based, so `j = 0` is `H_1`) in the original basis.
    pub fn layout(&self, j: usize) -> &BlockLayout {
        &self.layouts[j]
    }

    pub fn levi(&self, j: usize) -> Subgroup {
        Subgroup::Levi(self.layouts[j].clone())
    }

    pub fn upper(&self, j: usize) -> Subgroup {
        Subgroup::UpperUnipotent(self.layouts[j].clone())
    }

    pub fn lower(&self, j: usize) -> Subgroup {
        Subgroup::LowerUnipotent(self.layouts[j].clone())
    }

    /// The chain of the first `r` levels.
    pub fn truncated(&self, r: usize) -> LeviChain {
        LeviChain {
            order: self.order.clone(),
            partitions: self.partitions[..r].to_vec(),
            layouts: self.layouts[..r].to_vec(),
        }
    }

    /// Subgroups of the `2r` unipotent slots `u_1, ..., u_{2r}`:
    /// `u_{2j-1} ∈ U_j^+` and `u_{2j} ∈ U_j^-`.
    pub fn unipotent_slots(&self) -> Vec<Subgroup> {
        (0..self.r()).flat_map(|j| [self.upper(j), self.lower(j)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    #[test]
    fn partition_validation() {
        assert!(Partition::from_blocks(3, &[vec![1, 2], vec![3]]).is_ok());
        assert!(Partition::from_blocks(3, &[vec![1, 3], vec![2]]).is_err());
        assert!(Partition::from_blocks(3, &[vec![1, 2]]).is_err());
        let p = Partition::from_sizes(&[2, 1]).unwrap();
        assert_eq!(p.to_string(), "{1,2}{3}");
        assert!(Partition::discrete(3).refines(&p));
        assert!(!p.refines(&Partition::discrete(3)));
    }

    #[test]
    fn permuted_layout() {
        // Blocks {1,2}{3} read in the order (1, 3, 2): original indices 1 and 3 share a block.
        let p = Partition::from_sizes(&[2, 1]).unwrap();
        let l = BlockLayout::permuted(&p, &[0, 2, 1]);
        assert!(l.same_block(0, 2));
        assert!(!l.same_block(0, 1));
        assert_eq!(l.levi_dim(), 5);
        assert_eq!(l.unipotent_dim(), 2);
    }

    #[test]
    fn chain_validation() {
        let fine = Partition::discrete(3);
        let coarse = Partition::from_sizes(&[2, 1]).unwrap();
        assert!(LeviChain::standard(vec![fine.clone(), coarse.clone()]).is_ok());
        assert!(LeviChain::standard(vec![coarse.clone(), fine.clone()]).is_err());
        assert!(LeviChain::new(vec![0, 0, 1], vec![fine]).is_err());
        let c = LeviChain::new(vec![0, 2, 1], vec![coarse]).unwrap();
        assert!(c.layout(0).same_block(0, 2));
        assert_eq!(c.unipotent_slots().len(), 2);
    }

    #[test]
    fn subgroup_membership() {
        let l = Partition::discrete(2).layout();
        let upper = Matrix::<Exact>::from_i64(2, &[1, 1, 0, 1]);
        let lower = upper.transpose();
        assert!(Subgroup::UpperUnipotent(l.clone()).check(&upper, 0.0).is_ok());
        assert!(Subgroup::UpperUnipotent(l.clone()).check(&lower, 0.0).is_err());
        assert!(Subgroup::LowerParabolic(l.clone()).check(&Matrix::<Exact>::from_i64(2, &[2, 0, 5, 1]), 0.0).is_ok());
        assert!(Subgroup::LowerParabolic(l).check(&upper, 0.0).is_err());
    }
}

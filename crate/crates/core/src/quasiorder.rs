//! Quasi-orders (reflexive, transitive relations) on `{0, .., n-1}`.
//!
//! A quasi-order is stored as an `n x n` boolean adjacency matrix with one
//! `u64` bitmask per row, so `n` is limited to 64. All indices in this module
//! are 0-based; the JSON loader in [`crate::io`] converts from the 1-based
//! convention used in files.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;

/// Largest `n` accepted by [`QuasiOrder::rank_one_density`].
pub const DENSITY_SCAN_LIMIT: usize = 24;

/// Largest `n` accepted by [`QuasiOrder::enumerate`].
pub const ENUMERATION_LIMIT: usize = 5;

#[inline]
fn bit(i: usize) -> u64 {
    1u64 << i
}

fn mask_to_vec(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        out.push(i);
        mask &= mask - 1;
    }
    out
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        bit(n) - 1
    }
}

/// A reflexive and transitive relation on `{0, .., n-1}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuasiOrder {
    n: usize,
    rows: Vec<u64>,
}

/// Result of closing a set of pairs: the quasi-order together with the pairs
/// that had to be added to make the input reflexive and transitive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    pub order: QuasiOrder,
    /// Pairs present in `order` but absent from the input, in lexicographic
    /// order. Diagonal pairs are included.
    pub added: Vec<(usize, usize)>,
}

impl Closure {
    /// True when the input was missing only diagonal pairs.
    pub fn was_transitive(&self) -> bool {
        self.added.iter().all(|&(i, j)| i == j)
    }
}

/// A set partition of `{0, .., n-1}`; blocks are sorted and ordered by their
/// smallest element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    fn from_labels(labels: &[usize]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; labels.len()];
        for (i, &l) in labels.iter().enumerate() {
            if slot[l] == usize::MAX {
                slot[l] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[slot[l]].push(i);
        }
        Partition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Index of the block containing `i`.
    pub fn block_of(&self, i: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&i))
    }
}

/// Verdict of condition (i): every off-diagonal pair `(i,j)` must have at
/// least three common neighbours in `ρ(i) ∪ ρ⁻¹(i)` and `ρ(j) ∪ ρ⁻¹(j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConditionI {
    pub holds: bool,
    /// First violating pair in lexicographic order.
    pub witness: Option<(usize, usize)>,
}

/// A permutation grouping the mutual classes of a quasi-order into
/// contiguous blocks ordered along a linear extension.
///
/// `perm[a]` is the original index placed at position `a`, so that
/// `R A R⁻¹` has entry `(a,b)` equal to `A[perm[a]][perm[b]]` where
/// `R = Σ_k E(k, perm[k])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockTriangular {
    pub perm: Vec<usize>,
    pub block_sizes: Vec<usize>,
}

impl BlockTriangular {
    /// Block index of every position `0..n`.
    pub fn block_index(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &k)| std::iter::repeat_n(b, k))
            .collect()
    }

    /// Half-open position ranges of the diagonal blocks.
    pub fn block_ranges(&self) -> Vec<(usize, usize)> {
        let mut lo = 0;
        self.block_sizes
            .iter()
            .map(|&k| {
                let r = (lo, lo + k);
                lo += k;
                r
            })
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(a, &p)| a == p)
    }
}

impl QuasiOrder {
    fn check_dim(n: usize) -> Result<()> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::Dimension(n));
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(())
    }

    /// The smallest quasi-order containing `pairs` (Warshall closure).
    pub fn closure<I>(n: usize, pairs: I) -> Result<Closure>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::check_dim(n)?;
        let mut input = vec![0u64; n];
        for (i, j) in pairs {
            for idx in [i, j] {
                if idx >= n {
                    return Err(Error::IndexOutOfRange { index: idx, n });
                }
            }
            input[i] |= bit(j);
        }
        let mut rows = input.clone();
        for (i, row) in rows.iter_mut().enumerate() {
            *row |= bit(i);
        }
        for k in 0..n {
            let row_k = rows[k];
            for row in rows.iter_mut() {
                if *row & bit(k) != 0 {
                    *row |= row_k;
                }
            }
        }
        let added = (0..n)
            .flat_map(|i| mask_to_vec(rows[i] & !input[i]).into_iter().map(move |j| (i, j)))
            .collect();
        Ok(Closure { order: QuasiOrder { n, rows }, added })
    }

    /// Convenience wrapper around [`QuasiOrder::closure`] discarding the
    /// list of added pairs.
    pub fn generated_by<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Ok(Self::closure(n, pairs)?.order)
    }

    /// The diagonal relation `Δ_n`.
    pub fn diagonal(n: usize) -> Result<Self> {
        Self::generated_by(n, std::iter::empty())
    }

    /// The full relation `[n]×[n]`.
    pub fn full(n: usize) -> Result<Self> {
        Self::check_dim(n)?;
        Ok(QuasiOrder { n, rows: vec![full_mask(n); n] })
    }

    /// The upper-triangular pattern `{(i,j) : i <= j}`.
    pub fn upper_triangular(n: usize) -> Result<Self> {
        Self::check_dim(n)?;
        let rows = (0..n).map(|i| full_mask(n) & !(bit(i) - 1)).collect();
        Ok(QuasiOrder { n, rows })
    }

    /// Block upper-triangular pattern with diagonal blocks of the given sizes.
    pub fn block_upper_triangular(sizes: &[usize]) -> Result<Self> {
        let n: usize = sizes.iter().sum();
        Self::check_dim(n)?;
        if sizes.contains(&0) {
            return Err(Error::Input("block sizes must be positive".into()));
        }
        let mut rows = Vec::with_capacity(n);
        let mut lo = 0;
        for &k in sizes {
            for _ in 0..k {
                rows.push(full_mask(n) & !(bit(lo) - 1));
            }
            lo += k;
        }
        Ok(QuasiOrder { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.rows[i] & bit(j) != 0
    }

    /// All pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| mask_to_vec(self.rows[i]).into_iter().map(move |j| (i, j)))
    }

    /// Pairs of `ρ^× = ρ ∖ Δ_n` in lexicographic order.
    pub fn off_diagonal_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs().filter(|&(i, j)| i != j)
    }

    pub fn len(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    /// A quasi-order is never empty (it is reflexive); provided for clippy.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_diagonal(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, &r)| r == bit(i))
    }

    pub(crate) fn image_mask(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub(crate) fn preimage_mask(&self, i: usize) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, &r)| r & bit(i) != 0)
            .fold(0, |m, (k, _)| m | bit(k))
    }

    fn neighbourhood_mask(&self, i: usize) -> u64 {
        self.image_mask(i) | self.preimage_mask(i)
    }

    /// `ρ(i) = {j : (i,j) ∈ ρ}`.
    pub fn image(&self, i: usize) -> Result<Vec<usize>> {
        self.check_index(i)?;
        Ok(mask_to_vec(self.image_mask(i)))
    }

    /// `ρ⁻¹(i) = {j : (j,i) ∈ ρ}`.
    pub fn preimage(&self, i: usize) -> Result<Vec<usize>> {
        self.check_index(i)?;
        Ok(mask_to_vec(self.preimage_mask(i)))
    }

    /// `ρ(i) ∪ ρ⁻¹(i)`.
    pub fn neighbourhood(&self, i: usize) -> Result<Vec<usize>> {
        self.check_index(i)?;
        Ok(mask_to_vec(self.neighbourhood_mask(i)))
    }

    /// Connected components of the symmetrised relation.
    pub fn components(&self) -> Partition {
        let mut label = vec![usize::MAX; self.n];
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = start;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for w in mask_to_vec(self.neighbourhood_mask(v)) {
                    if label[w] == usize::MAX {
                        label[w] = start;
                        stack.push(w);
                    }
                }
            }
        }
        Partition::from_labels(&label)
    }

    /// Classes of `i ~ j ⟺ (i,j) ∈ ρ ∧ (j,i) ∈ ρ`.
    pub fn mutual_classes(&self) -> Partition {
        let labels: Vec<usize> = (0..self.n)
            .map(|i| (self.image_mask(i) & self.preimage_mask(i)).trailing_zeros() as usize)
            .collect();
        Partition::from_labels(&labels)
    }

    /// No component has exactly two elements.
    pub fn is_two_free(&self) -> bool {
        self.components().blocks().iter().all(|b| b.len() != 2)
    }

    pub fn condition_i(&self) -> ConditionI {
        let witness = self.off_diagonal_pairs().find(|&(i, j)| {
            (self.neighbourhood_mask(i) & self.neighbourhood_mask(j)).count_ones() < 3
        });
        ConditionI { holds: witness.is_none(), witness }
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs().all(|(i, j)| self.contains(j, i))
    }

    /// The quasi-order `{(a,b) : (perm[a], perm[b]) ∈ ρ}`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: perm.len() });
        }
        let mut seen = 0u64;
        for &p in perm {
            self.check_index(p)?;
            if seen & bit(p) != 0 {
                return Err(Error::DuplicateIndex(p));
            }
            seen |= bit(p);
        }
        let rows = (0..self.n)
            .map(|a| {
                (0..self.n)
                    .filter(|&b| self.contains(perm[a], perm[b]))
                    .fold(0, |m, b| m | bit(b))
            })
            .collect();
        Ok(QuasiOrder { n: self.n, rows })
    }

    /// Groups the mutual classes contiguously along a linear extension of the
    /// induced partial order on classes (Kahn's algorithm, smallest original
    /// index first). The result is checked to satisfy
    /// `diag(M_k1..M_kp) ⊆ R A_ρ R⁻¹ ⊆ A_{k1..kp}`.
    pub fn block_triangular_permutation(&self) -> Result<BlockTriangular> {
        let classes = self.mutual_classes();
        let p = classes.len();
        let class_of: Vec<usize> = {
            let mut c = vec![0; self.n];
            for (b, block) in classes.blocks().iter().enumerate() {
                for &i in block {
                    c[i] = b;
                }
            }
            c
        };
        let mut succ = vec![BTreeSet::new(); p];
        let mut indegree = vec![0usize; p];
        for (i, j) in self.off_diagonal_pairs() {
            let (a, b) = (class_of[i], class_of[j]);
            if a != b && succ[a].insert(b) {
                indegree[b] += 1;
            }
        }
        // Blocks are ordered by smallest element, so the smallest available
        // block index is also the smallest original index.
        let mut ready: BTreeSet<usize> = (0..p).filter(|&b| indegree[b] == 0).collect();
        let mut order = Vec::with_capacity(p);
        while let Some(b) = ready.pop_first() {
            order.push(b);
            for &c in &succ[b] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() != p {
            return Err(Error::Internal("class relation has a cycle".into()));
        }
        let perm: Vec<usize> = order.iter().flat_map(|&b| classes.blocks()[b].clone()).collect();
        let block_sizes = order.iter().map(|&b| classes.blocks()[b].len()).collect();
        let bt = BlockTriangular { perm, block_sizes };
        if !self.sandwich_holds(&bt)? {
            return Err(Error::Internal("block-triangular sandwich check failed".into()));
        }
        Ok(bt)
    }

    /// Checks `diag(M_k1..M_kp) ⊆ R A_ρ R⁻¹ ⊆ A_{k1..kp}` by support containment.
    pub fn sandwich_holds(&self, bt: &BlockTriangular) -> Result<bool> {
        let q = self.permuted(&bt.perm)?;
        if bt.block_sizes.iter().sum::<usize>() != self.n {
            return Ok(false);
        }
        let block = bt.block_index();
        let lower_ok = (0..self.n)
            .all(|a| (0..self.n).all(|b| block[a] != block[b] || q.contains(a, b)));
        let upper_ok = q.pairs().all(|(a, b)| block[a] <= block[b]);
        Ok(lower_ok && upper_ok)
    }

    /// Returns the block structure when `R A_ρ R⁻¹` is exactly a block
    /// upper-triangular algebra for the canonical permutation, i.e. every
    /// earlier mutual class is related to every later one.
    pub fn block_upper_triangular_form(&self) -> Result<Option<BlockTriangular>> {
        let bt = self.block_triangular_permutation()?;
        let q = self.permuted(&bt.perm)?;
        let target = QuasiOrder::block_upper_triangular(&bt.block_sizes)?;
        Ok((q == target).then_some(bt))
    }

    /// Deletes the indices in `remove` and relabels the rest in increasing
    /// order. `remove` may be empty but must not cover every index.
    pub fn delete_indices(&self, remove: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &i in remove {
            self.check_index(i)?;
            if mask & bit(i) != 0 {
                return Err(Error::DuplicateIndex(i));
            }
            mask |= bit(i);
        }
        if mask == full_mask(self.n) {
            return Err(Error::DeleteAll(self.n));
        }
        let keep: Vec<usize> = (0..self.n).filter(|&i| mask & bit(i) == 0).collect();
        self.restrict(&keep)
    }

    /// The sub-quasi-order on the sorted, distinct indices in `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::DeleteAll(self.n));
        }
        for w in keep.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Input("restriction indices must be strictly increasing".into()));
            }
        }
        for &i in keep {
            self.check_index(i)?;
        }
        let rows = keep
            .iter()
            .map(|&i| {
                keep.iter()
                    .enumerate()
                    .filter(|&(_, &j)| self.contains(i, j))
                    .fold(0, |m, (b, _)| m | bit(b))
            })
            .collect();
        Ok(QuasiOrder { n: keep.len(), rows })
    }

    /// Whether rank-one non-nilpotent matrices are dense among the rank-one
    /// matrices of `A_ρ`.
    ///
    /// The defining condition quantifies over all nonempty `S, T` with
    /// `S × T ⊆ ρ`. For fixed `S` the admissible `T` are exactly the nonempty
    /// subsets of `T_max(S) = ∩_{i∈S} ρ(i)`, and any `k` covering `T_max(S)`
    /// covers its subsets too, so only `T = T_max(S)` needs checking: the
    /// condition becomes `T_max(S) = ∅ ∨ ∃k ∈ T_max(S) : T_max(S) ⊆ ρ(k)`.
    /// The sets `T_max(S)` are exactly the intersections of nonempty families
    /// of rows, which are enumerated directly instead of scanning all `S`.
    pub fn rank_one_density(&self) -> Result<bool> {
        if self.n > DENSITY_SCAN_LIMIT {
            return Err(Error::TooLarge { got: self.n, limit: DENSITY_SCAN_LIMIT });
        }
        let mut seen: BTreeSet<u64> = BTreeSet::new();
        for &row in &self.rows {
            let mut next: Vec<u64> = seen.iter().map(|&t| t & row).filter(|&t| t != 0).collect();
            next.push(row);
            seen.extend(next);
        }
        Ok(seen
            .iter()
            .all(|&t| mask_to_vec(t).into_iter().any(|k| t & !self.rows[k] == 0)))
    }

    /// Every quasi-order on `{0, .., n-1}`, in increasing order of the bitmask
    /// over off-diagonal pairs.
    pub fn enumerate(n: usize) -> Result<Vec<QuasiOrder>> {
        if n == 0 || n > ENUMERATION_LIMIT {
            return Err(Error::TooLarge { got: n, limit: ENUMERATION_LIMIT });
        }
        let slots: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << slots.len()) {
            let mut rows: Vec<u64> = (0..n).map(bit).collect();
            for (s, &(i, j)) in slots.iter().enumerate() {
                if mask & bit(s) != 0 {
                    rows[i] |= bit(j);
                }
            }
            let transitive = (0..n).all(|i| {
                mask_to_vec(rows[i]).into_iter().all(|j| rows[j] & !rows[i] == 0)
            });
            if transitive {
                out.push(QuasiOrder { n, rows });
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for QuasiOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let off: Vec<_> = self.off_diagonal_pairs().map(|(i, j)| (i + 1, j + 1)).collect();
        write!(f, "QuasiOrder(n={}, Δ ∪ {:?})", self.n, off)
    }
}

impl fmt::Display for QuasiOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: String =
                (0..self.n).map(|j| if self.contains(i, j) { '*' } else { '.' }).collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

/// Example quasi-orders that recur in tests, the CLI self-test and the docs.
/// Indices are 0-based.
pub mod examples {
    use super::QuasiOrder;

    /// `Δ₄ ∪ {(1,3),(1,4),(2,3),(2,4)}` (1-based): rank-one closure fails.
    pub fn corner_4() -> QuasiOrder {
        QuasiOrder::generated_by(4, [(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap()
    }

    /// `Δ₇ ∪ ([1,3]×[4,7]) ∪ {(1,3),(4,5),(6,7)}` (1-based): satisfies
    /// condition (i) and carries a nontrivial transitive map.
    pub fn seven_point() -> QuasiOrder {
        let mut pairs = vec![(0, 2), (3, 4), (5, 6)];
        for i in 0..3 {
            for j in 3..7 {
                pairs.push((i, j));
            }
        }
        QuasiOrder::generated_by(7, pairs).unwrap()
    }

    /// `([1,3]×[1,3]) ∪ ([4,6]×[4,6])`: the algebra `diag(M₃, M₃)`.
    pub fn two_blocks() -> QuasiOrder {
        let mut pairs = Vec::new();
        for base in [0, 3] {
            for i in base..base + 3 {
                for j in base..base + 3 {
                    pairs.push((i, j));
                }
            }
        }
        QuasiOrder::generated_by(6, pairs).unwrap()
    }

    /// `Δ₃ ∪ {(1,2),(2,1)}`: an `M₂` summand next to a point.
    pub fn m2_plus_point() -> QuasiOrder {
        QuasiOrder::generated_by(3, [(0, 1), (1, 0)]).unwrap()
    }
}

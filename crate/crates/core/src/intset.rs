//! Finite integer sets and arithmetic-progression primitives.
//!
//! A progression here is always non-trivial: positive common difference,
//! length at least 3, so its terms are distinct and ascending. Counting
//! functions count each progression once, identified by (start, diff).

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::Error;

/// Hard span cap for the bit-parallel counting kernel. Its cost grows with
/// span^2 independent of set size, so it additionally requires the set to
/// fill at least 1/32 of its span; sparse or wide sets take the pair scan.
const BIT_KERNEL_MAX_SPAN: i64 = 1 << 22;
const BIT_KERNEL_MAX_SPARSITY: i64 = 32;

/// A finite set of integers, stored strictly ascending. Negative elements
/// are allowed everywhere; only window counting is restricted to {1..N}.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<i64>", into = "Vec<i64>")]
pub struct IntSet {
    elems: Vec<i64>,
}

impl From<Vec<i64>> for IntSet {
    fn from(raw: Vec<i64>) -> Self {
        IntSet::new(raw)
    }
}

impl From<IntSet> for Vec<i64> {
    fn from(s: IntSet) -> Self {
        s.elems
    }
}

impl FromIterator<i64> for IntSet {
    fn from_iter<T: IntoIterator<Item = i64>>(iter: T) -> Self {
        IntSet::new(iter.into_iter().collect::<Vec<_>>())
    }
}

impl IntSet {
    /// Builds a set from arbitrary input: sorts and removes duplicates.
    pub fn new(mut raw: Vec<i64>) -> Self {
        raw.sort_unstable();
        raw.dedup();
        IntSet { elems: raw }
    }

    /// The interval {lo, lo+1, ..., hi}; empty when hi < lo.
    pub fn interval(lo: i64, hi: i64) -> Self {
        IntSet {
            elems: (lo..=hi).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, x: i64) -> bool {
        self.elems.binary_search(&x).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.elems.iter().copied()
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.elems
    }

    pub fn min(&self) -> Option<i64> {
        self.elems.first().copied()
    }

    pub fn max(&self) -> Option<i64> {
        self.elems.last().copied()
    }

    /// max - min; 0 for empty or singleton sets.
    pub fn span(&self) -> i64 {
        match (self.min(), self.max()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0,
        }
    }

    /// Is this set contained in the interval {lo..hi}?
    pub fn within(&self, lo: i64, hi: i64) -> bool {
        self.elems.iter().all(|&x| lo <= x && x <= hi)
    }

    pub fn is_subset_of(&self, other: &IntSet) -> bool {
        self.elems.iter().all(|&x| other.contains(x))
    }

    /// The image under x -> a*x + b. Requires a != 0 so the map is injective.
    pub fn affine(&self, a: i64, b: i64) -> IntSet {
        assert!(a != 0, "affine map must have nonzero slope");
        IntSet::new(self.elems.iter().map(|&x| a * x + b).collect())
    }

    pub fn translate(&self, b: i64) -> IntSet {
        // Translation preserves order, no re-sort needed.
        IntSet {
            elems: self.elems.iter().map(|&x| x + b).collect(),
        }
    }

    pub fn negate(&self) -> IntSet {
        IntSet {
            elems: self.elems.iter().rev().map(|&x| -x).collect(),
        }
    }

    /// Counts s-term progressions with positive difference lying in the set,
    /// each counted once.
    pub fn count_s_aps(&self, s: usize) -> u64 {
        assert!(s >= 3, "progression length must be at least 3, got {s}");
        if self.elems.len() < s {
            return 0;
        }
        let span = self.span();
        if span <= BIT_KERNEL_MAX_SPAN
            && span <= BIT_KERNEL_MAX_SPARSITY * self.elems.len() as i64
        {
            self.count_bit_kernel(s)
        } else {
            self.count_pair_kernel(s)
        }
    }

    /// Per-difference scan over a bit universe: start bits of d-spaced
    /// progressions survive ANDing s shifted copies of the set.
    fn count_bit_kernel(&self, s: usize) -> u64 {
        let lo = self.min().unwrap();
        let span = self.span() as usize;
        let bits = BitRow::from_offsets(self.elems.iter().map(|&x| (x - lo) as usize), span + 1);
        let mut acc = BitRow::zeros(bits.len_bits());
        let max_d = span / (s - 1);
        let mut total = 0u64;
        for d in 1..=max_d {
            acc.copy_from(&bits);
            let mut alive = true;
            for j in 1..s {
                if !acc.and_shifted_right(&bits, j * d) {
                    alive = false;
                    break;
                }
            }
            if alive {
                total += acc.count_ones();
            }
        }
        total
    }

    /// Pair scan: a progression is determined by its first two terms.
    fn count_pair_kernel(&self, s: usize) -> u64 {
        let members: HashSet<i64> = self.elems.iter().copied().collect();
        let max = self.max().unwrap();
        let mut total = 0u64;
        for (i, &a) in self.elems.iter().enumerate() {
            for &b in &self.elems[i + 1..] {
                let d = b - a;
                // Smallest possible tail already out of range: later b only grow.
                if a + (s as i64 - 1) * d > max {
                    break;
                }
                let mut t = b;
                let mut ok = true;
                for _ in 2..s {
                    t += d;
                    if !members.contains(&t) {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    total += 1;
                }
            }
        }
        total
    }

    /// All s-term progressions in the set, sorted by (diff, start).
    pub fn s_aps(&self, s: usize) -> Vec<Progression> {
        assert!(s >= 3, "progression length must be at least 3, got {s}");
        let mut found = Vec::new();
        if self.elems.len() < s {
            return found;
        }
        let members: HashSet<i64> = self.elems.iter().copied().collect();
        let max = self.max().unwrap();
        for (i, &a) in self.elems.iter().enumerate() {
            for &b in &self.elems[i + 1..] {
                let d = b - a;
                if a + (s as i64 - 1) * d > max {
                    break;
                }
                if (2..s).all(|j| members.contains(&(a + d * j as i64))) {
                    found.push(Progression::new(a, d, s).unwrap());
                }
            }
        }
        found.sort_by_key(|p| (p.diff(), p.start()));
        found
    }

    /// The first k-term progression in (diff, start) order, or None if the
    /// set is k-AP-free.
    pub fn ap_witness(&self, k: usize) -> Option<Progression> {
        assert!(k >= 3, "progression length must be at least 3, got {k}");
        if self.elems.len() < k {
            return None;
        }
        let span = self.span();
        let max_d = span / (k as i64 - 1);
        for d in 1..=max_d {
            for &a in &self.elems {
                if a + (k as i64 - 1) * d > self.max().unwrap() {
                    break;
                }
                if (1..k).all(|j| self.contains(a + d * j as i64)) {
                    return Some(Progression::new(a, d, k).unwrap());
                }
            }
        }
        None
    }

    pub fn is_ap_free(&self, k: usize) -> bool {
        self.ap_witness(k).is_none()
    }

    /// Pairwise sums {x + y : x in self, y in other}.
    pub fn sumset(&self, other: &IntSet) -> IntSet {
        let mut sums = Vec::with_capacity(self.len() * other.len());
        for &x in &self.elems {
            for &y in &other.elems {
                sums.push(x + y);
            }
        }
        IntSet::new(sums)
    }

    /// r-fold sum minus r'-fold sum of this set: rX - r'X. Requires
    /// r + r' >= 1; empty input yields an empty result.
    pub fn iterated_sumset(&self, r: u32, r_neg: u32) -> IntSet {
        assert!(r + r_neg >= 1, "iterated sumset needs r + r' >= 1");
        if self.is_empty() {
            return IntSet::default();
        }
        let mut acc = IntSet::new(vec![0]);
        for _ in 0..r {
            acc = acc.sumset(self);
        }
        let neg = self.negate();
        for _ in 0..r_neg {
            acc = acc.sumset(&neg);
        }
        acc
    }
}

/// A non-trivial arithmetic progression: positive difference, length >= 3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Progression {
    start: i64,
    diff: i64,
    len: usize,
}

impl Progression {
    pub fn new(start: i64, diff: i64, len: usize) -> Result<Self, Error> {
        if diff <= 0 {
            return Err(Error::contract(format!(
                "progression difference must be positive, got {diff}"
            )));
        }
        if len < 3 {
            return Err(Error::contract(format!(
                "progression length must be at least 3, got {len}"
            )));
        }
        Ok(Progression { start, diff, len })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn diff(&self) -> i64 {
        self.diff
    }

    pub fn len(&self) -> usize {
        self.len
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn terms(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len as i64).map(move |j| self.start + j * self.diff)
    }

    pub fn is_contained_in(&self, set: &IntSet) -> bool {
        self.terms().all(|t| set.contains(t))
    }
}

/// Exact number of s-term sequences a, a+d, ..., a+(s-1)d with every term in
/// {1..n} and d ranging over all integers including zero and negatives.
/// Computed by direct summation over d.
pub fn window_ap_count_exact(n: u64, s: u64) -> u64 {
    assert!(n >= 1, "window must be nonempty");
    assert!(s >= 3, "progression length must be at least 3, got {s}");
    let step = s - 1;
    let mut positive = 0u64;
    let mut d = 1u64;
    while step * d < n {
        positive += n - step * d;
        d += 1;
    }
    // d = 0 gives n sequences; each positive d mirrors to -d.
    n + 2 * positive
}

/// The closed-form window count n + 2 * sum_a floor((n-a)/s). Undercounts
/// the exact value (the divisor should be s-1); kept for comparison, and
/// still at least (1/s) * C(n,2).
pub fn window_ap_count_formula(n: u64, s: u64) -> u64 {
    assert!(n >= 1, "window must be nonempty");
    assert!(s >= 3, "progression length must be at least 3, got {s}");
    n + 2 * (1..n).map(|a| (n - a) / s).sum::<u64>()
}

/// Dense bit row used by the counting kernel.
struct BitRow {
    words: Vec<u64>,
    len_bits: usize,
}

impl BitRow {
    fn zeros(len_bits: usize) -> Self {
        BitRow {
            words: vec![0u64; len_bits.div_ceil(64)],
            len_bits,
        }
    }

    fn from_offsets(offsets: impl Iterator<Item = usize>, len_bits: usize) -> Self {
        let mut row = BitRow::zeros(len_bits);
        for o in offsets {
            debug_assert!(o < len_bits);
            row.words[o / 64] |= 1u64 << (o % 64);
        }
        row
    }

    fn len_bits(&self) -> usize {
        self.len_bits
    }

    fn copy_from(&mut self, other: &BitRow) {
        self.words.copy_from_slice(&other.words);
    }

    /// self &= (other >> shift); returns whether any bit survives.
    fn and_shifted_right(&mut self, other: &BitRow, shift: usize) -> bool {
        let q = shift / 64;
        let r = shift % 64;
        let n = self.words.len();
        let mut any = 0u64;
        for i in 0..n {
            let src = if i + q < n {
                let lo = other.words[i + q] >> r;
                let hi = if r > 0 && i + q + 1 < n {
                    other.words[i + q + 1] << (64 - r)
                } else {
                    0
                };
                lo | hi
            } else {
                0
            };
            self.words[i] &= src;
            any |= self.words[i];
        }
        any != 0
    }

    fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[i64]) -> IntSet {
        IntSet::new(v.to_vec())
    }

    #[test]
    fn normalize_sorts_and_dedups() {
        assert_eq!(set(&[3, 1, 1, -2]).as_slice(), &[-2, 1, 3]);
        assert!(IntSet::new(vec![]).is_empty());
    }

    #[test]
    fn count_examples() {
        assert_eq!(set(&[1, 2, 3, 4, 5]).count_s_aps(3), 4);
        assert_eq!(set(&[0, 1, 3, 4]).count_s_aps(3), 0);
        assert_eq!(set(&[3, 4, 5, 6]).count_s_aps(4), 1);
        assert_eq!(set(&[]).count_s_aps(3), 0);
        assert_eq!(set(&[5]).count_s_aps(3), 0);
    }

    #[test]
    fn count_handles_negatives_and_sparse_spans() {
        // {-9, -5, -1} is a single 3-AP with difference 4.
        assert_eq!(set(&[-9, -5, -1]).count_s_aps(3), 1);
        // Push the span beyond the bit-kernel cap to exercise the pair scan.
        // The set is a 4-term progression of difference 2^23, so it holds
        // two 3-term ones and one 4-term one.
        let wide = set(&[0, 1 << 23, 1 << 24, 3 << 23]);
        assert_eq!(wide.count_s_aps(3), 2);
        assert_eq!(wide.count_s_aps(4), 1);
    }

    #[test]
    fn kernels_agree() {
        let a = set(&[1, 2, 4, 5, 10, 11, 13, 14, 28, 30, 41, 44]);
        for s in 3..=5 {
            assert_eq!(a.count_bit_kernel(s), a.count_pair_kernel(s));
            assert_eq!(a.count_s_aps(s) as usize, a.s_aps(s).len());
        }
    }

    #[test]
    fn freeness_examples() {
        assert!(set(&[1, 2, 4, 8, 9]).is_ap_free(3));
        let w = set(&[1, 2, 3]).ap_witness(3).unwrap();
        assert_eq!((w.start(), w.diff(), w.len()), (1, 1, 3));
        // Witness order: smallest difference first, then smallest start.
        let w = set(&[1, 2, 3, 4]).ap_witness(3).unwrap();
        assert_eq!((w.start(), w.diff(), w.len()), (1, 1, 3));
        assert!(w.is_contained_in(&set(&[1, 2, 3, 4])));
    }

    #[test]
    fn progression_contract() {
        assert!(Progression::new(0, 0, 3).is_err());
        assert!(Progression::new(0, -2, 3).is_err());
        assert!(Progression::new(0, 1, 2).is_err());
        let p = Progression::new(2, 3, 4).unwrap();
        assert_eq!(p.terms().collect::<Vec<_>>(), vec![2, 5, 8, 11]);
    }

    #[test]
    fn window_counts() {
        assert_eq!(window_ap_count_exact(1, 3), 1);
        assert_eq!(window_ap_count_exact(2, 3), 2);
        // n=5: d=0 gives 5, d=+-1 gives 3+3, d=+-2 gives 1+1.
        assert_eq!(window_ap_count_exact(5, 3), 13);
        assert_eq!(window_ap_count_formula(5, 3), 9);
    }

    #[test]
    fn window_exact_matches_enumeration() {
        for n in 1..=40u64 {
            for s in 3..=5u64 {
                let mut count = 0u64;
                for a in 1..=n as i64 {
                    for d in -(n as i64)..=(n as i64) {
                        let last = a + (s as i64 - 1) * d;
                        let all_in = (0..s as i64)
                            .map(|j| a + j * d)
                            .all(|t| 1 <= t && t <= n as i64);
                        let _ = last;
                        if all_in {
                            count += 1;
                        }
                    }
                }
                assert_eq!(window_ap_count_exact(n, s), count, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn sumset_examples() {
        assert_eq!(
            set(&[0, 1]).sumset(&set(&[0, 1])).as_slice(),
            &[0, 1, 2]
        );
        assert_eq!(
            set(&[0, 1, 3]).iterated_sumset(1, 1).as_slice(),
            &[-3, -2, -1, 0, 1, 2, 3]
        );
        assert_eq!(set(&[0, 1]).iterated_sumset(2, 0).as_slice(), &[0, 1, 2]);
        assert!(set(&[]).iterated_sumset(1, 1).is_empty());
    }

    #[test]
    fn affine_and_translate() {
        assert_eq!(set(&[1, 2, 4]).affine(-2, 1).as_slice(), &[-7, -3, -1]);
        assert_eq!(set(&[1, 2, 4]).translate(-1).as_slice(), &[0, 1, 3]);
        assert_eq!(set(&[1, 2, 4]).negate().as_slice(), &[-4, -2, -1]);
    }
}

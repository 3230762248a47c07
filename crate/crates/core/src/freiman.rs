//! Freiman homomorphisms of finite integer sets and sumset growth checks.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::rational::BigRational;
use serde::Serialize;

use crate::error::Error;
use crate::intset::IntSet;

/// A bijection between two integer sets, tested for preserving r-term
/// additive relations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreimanMap {
    source: IntSet,
    image: Vec<i64>,
}

impl FreimanMap {
    /// Pairs the i-th smallest source element with image[i]. The image must
    /// consist of distinct values so the map is a bijection.
    pub fn new(source: IntSet, image: Vec<i64>) -> Result<Self, Error> {
        if source.len() != image.len() {
            return Err(Error::contract(format!(
                "map needs one image per element: {} sources, {} images",
                source.len(),
                image.len()
            )));
        }
        if source.is_empty() {
            return Err(Error::contract("map needs a nonempty source"));
        }
        let mut seen = image.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != image.len() {
            return Err(Error::contract("image values must be distinct"));
        }
        Ok(FreimanMap { source, image })
    }

    /// x -> a*x + b restricted to `source`. Affine maps preserve additive
    /// relations of every order.
    pub fn affine(source: IntSet, a: i64, b: i64) -> Result<Self, Error> {
        if a == 0 {
            return Err(Error::contract("affine map needs a nonzero slope"));
        }
        let image = source.iter().map(|x| a * x + b).collect();
        Self::new(source, image)
    }

    pub fn source(&self) -> &IntSet {
        &self.source
    }

    pub fn image(&self) -> &[i64] {
        &self.image
    }

    pub fn apply(&self, x: i64) -> Option<i64> {
        self.source
            .as_slice()
            .binary_search(&x)
            .ok()
            .map(|i| self.image[i])
    }

    /// True when every equation x_1+..+x_r = y_1+..+y_r between source
    /// elements also holds between their images, and conversely. Checked by
    /// comparing, for both directions, the multiset of r-fold sums grouped
    /// by which r-multisets of indices produce them.
    pub fn is_freiman_isomorphism(&self, r: u32) -> IsoReport {
        assert!(r >= 1, "order must be at least 1");
        let n = self.source.len();
        let src = self.source.as_slice();
        let img = &self.image;

        // Group index multisets by their source sum; within one group all
        // image sums must agree, and distinct groups must keep distinct
        // image sums (that is the converse direction).
        let mut by_src_sum: BTreeMap<i64, Vec<Vec<usize>>> = BTreeMap::new();
        let mut stack = vec![0usize; r as usize];
        enumerate_multisets(n, &mut stack, 0, 0, &mut |idx| {
            let s: i64 = idx.iter().map(|&i| src[i]).sum();
            by_src_sum.entry(s).or_default().push(idx.to_vec());
        });

        let mut img_sum_owner: BTreeMap<i64, i64> = BTreeMap::new();
        for (&s, groups) in &by_src_sum {
            let first = &groups[0];
            let is0: i64 = first.iter().map(|&i| img[i]).sum();
            for idx in groups {
                let is: i64 = idx.iter().map(|&i| img[i]).sum();
                if is != is0 {
                    return IsoReport::violation(
                        r,
                        first.iter().map(|&i| src[i]).collect(),
                        idx.iter().map(|&i| src[i]).collect(),
                    );
                }
            }
            if let Some(&other_src) = img_sum_owner.get(&is0) {
                // Two distinct source sums collapsed onto one image sum.
                let witness = by_src_sum[&other_src][0]
                    .iter()
                    .map(|&i| src[i])
                    .collect();
                return IsoReport::violation(
                    r,
                    witness,
                    first.iter().map(|&i| src[i]).collect(),
                );
            }
            img_sum_owner.insert(is0, s);
        }
        IsoReport::clean(r)
    }
}

/// Calls f on every nondecreasing index vector of the given length.
fn enumerate_multisets(
    n: usize,
    stack: &mut Vec<usize>,
    depth: usize,
    min: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == stack.len() {
        f(stack);
        return;
    }
    for i in min..n {
        stack[depth] = i;
        enumerate_multisets(n, stack, depth + 1, i, f);
    }
}

/// Outcome of an isomorphism check; on failure carries two source-side
/// multisets with equal sums whose images sum differently (or conversely).
#[derive(Clone, Debug, Serialize)]
pub struct IsoReport {
    pub order: u32,
    pub is_isomorphism: bool,
    pub lhs: Vec<i64>,
    pub rhs: Vec<i64>,
}

impl IsoReport {
    fn clean(order: u32) -> Self {
        IsoReport {
            order,
            is_isomorphism: true,
            lhs: Vec::new(),
            rhs: Vec::new(),
        }
    }

    fn violation(order: u32, lhs: Vec<i64>, rhs: Vec<i64>) -> Self {
        IsoReport {
            order,
            is_isomorphism: false,
            lhs,
            rhs,
        }
    }
}

/// One sumset growth check: with doubling ratio alpha = |S+T|/|S|, iterated
/// sumsets obey |rT - r'T| <= alpha^(r+r') |S|. Comparison is exact:
/// actual * |S|^(r+r'-1) <= |S+T|^(r+r').
#[derive(Clone, Debug, Serialize)]
pub struct PlunneckeReport {
    pub r_plus: u32,
    pub r_minus: u32,
    pub s_len: u64,
    pub t_len: u64,
    pub sum_len: u64,
    pub iterated_len: u64,
    pub ratio: String,
    pub bound: String,
    pub bound_f64: f64,
    pub holds: bool,
}

pub fn plunnecke_check(
    s: &IntSet,
    t: &IntSet,
    r_plus: u32,
    r_minus: u32,
) -> Result<PlunneckeReport, Error> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::contract("growth check needs nonempty S and T"));
    }
    if r_plus + r_minus < 1 {
        return Err(Error::contract("need r + r' >= 1"));
    }
    let sum = s.sumset(t);
    let iterated = t.iterated_sumset(r_plus, r_minus);
    let e = r_plus + r_minus;

    let s_len = BigInt::from(s.len());
    let sum_len = BigInt::from(sum.len());
    let lhs = BigInt::from(iterated.len()) * s_len.pow(e - 1);
    let rhs = sum_len.pow(e);
    let ratio = BigRational::new(BigInt::from(sum.len()), BigInt::from(s.len()));
    let mut bound = BigRational::from(BigInt::from(s.len()));
    for _ in 0..e {
        bound *= &ratio;
    }
    Ok(PlunneckeReport {
        r_plus,
        r_minus,
        s_len: s.len() as u64,
        t_len: t.len() as u64,
        sum_len: sum.len() as u64,
        iterated_len: iterated.len() as u64,
        ratio: ratio.to_string(),
        bound: bound.to_string(),
        bound_f64: crate::construct::rational_to_f64(&bound),
        holds: lhs <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[i64]) -> IntSet {
        IntSet::new(v.to_vec())
    }

    #[test]
    fn affine_maps_are_isomorphisms() {
        let s = set(&[1, 2, 4, 8, 9]);
        for (a, b) in [(1, 0), (3, -5), (-2, 100)] {
            let m = FreimanMap::affine(s.clone(), a, b).unwrap();
            for r in 1..=4 {
                assert!(m.is_freiman_isomorphism(r).is_isomorphism, "a={a} b={b} r={r}");
            }
        }
    }

    #[test]
    fn order_pairing_counterexample() {
        // 0+2 = 1+1 on the source but 0+3 != 1+1 on the image.
        let m = FreimanMap::new(set(&[0, 1, 2]), vec![0, 1, 3]).unwrap();
        let r1 = m.is_freiman_isomorphism(1);
        assert!(r1.is_isomorphism);
        let r2 = m.is_freiman_isomorphism(2);
        assert!(!r2.is_isomorphism);
        let ls: i64 = r2.lhs.iter().sum();
        let rs: i64 = r2.rhs.iter().sum();
        let li: i64 = r2.lhs.iter().map(|&x| m.apply(x).unwrap()).sum();
        let ri: i64 = r2.rhs.iter().map(|&x| m.apply(x).unwrap()).sum();
        assert!((ls == rs) != (li == ri));
    }

    #[test]
    fn converse_direction_detects_collapses() {
        // Injective on elements, but 10+30 = 20+20 on the image while
        // 1+4 != 2+2 on the source.
        let m = FreimanMap::new(set(&[1, 2, 4, 8]), vec![10, 20, 30, 0]).unwrap();
        let r = m.is_freiman_isomorphism(2);
        assert!(!r.is_isomorphism);
    }

    #[test]
    fn map_validation() {
        assert!(FreimanMap::new(set(&[1, 2]), vec![5]).is_err());
        assert!(FreimanMap::new(set(&[1, 2]), vec![5, 5]).is_err());
        assert!(FreimanMap::new(set(&[]), vec![]).is_err());
        assert!(FreimanMap::affine(set(&[1]), 0, 3).is_err());
    }

    #[test]
    fn growth_interval_example() {
        let s = IntSet::interval(0, 9);
        let r = plunnecke_check(&s, &s, 1, 1).unwrap();
        assert_eq!(r.sum_len, 19);
        assert_eq!(r.iterated_len, 19); // T - T = {-9..9}
        assert!(r.holds);
    }

    #[test]
    fn growth_bound_never_fails_on_small_sets() {
        let sets = [
            set(&[0, 1, 3, 7]),
            set(&[1, 2, 4, 8, 16]),
            IntSet::interval(-3, 3),
            set(&[0, 100]),
        ];
        for s in &sets {
            for t in &sets {
                for (rp, rm) in [(1, 0), (0, 1), (1, 1), (2, 1), (2, 2)] {
                    let rep = plunnecke_check(s, t, rp, rm).unwrap();
                    assert!(rep.holds, "S={:?} T={:?} r={rp} r'={rm}", s.as_slice(), t.as_slice());
                }
            }
        }
    }

    #[test]
    fn growth_rejects_empty() {
        assert!(plunnecke_check(&set(&[]), &set(&[1]), 1, 1).is_err());
        assert!(plunnecke_check(&set(&[1]), &set(&[1]), 0, 0).is_err());
    }
}

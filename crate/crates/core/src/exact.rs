//! Certified branch-and-bound solvers over the universe {1..n}.
//!
//! Both searches walk elements in ascending order over a 128-bit universe
//! mask, maintaining a forbidden-completion mask: when an element joins the
//! chosen set, every element that would now complete a k-term progression
//! gets marked. Results carry a `certified` flag; budget exhaustion returns
//! the best bound found so far, never a wrong claim.

use serde::{Deserialize, Serialize};

use crate::cache::SolverCache;
use crate::error::Error;
use crate::intset::IntSet;

/// Largest universe the mask-based solvers accept.
pub const MAX_UNIVERSE: u32 = 128;

/// Default node allowance for a solver run.
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

/// Node allowance shared by all searches of one run.
#[derive(Clone, Debug)]
pub struct SearchBudget {
    remaining: u64,
}

impl SearchBudget {
    pub fn nodes(n: u64) -> Self {
        SearchBudget { remaining: n }
    }

    pub fn unlimited() -> Self {
        SearchBudget {
            remaining: u64::MAX,
        }
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    fn charge(&mut self) -> bool {
        if self.remaining == 0 {
            return false;
        }
        self.remaining -= 1;
        true
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget::nodes(DEFAULT_NODE_BUDGET)
    }
}

/// Result of a max-size k-AP-free search over {1..n}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverEntry {
    pub k: u32,
    pub n: u32,
    pub value: u32,
    pub certified: bool,
    pub witness: IntSet,
}

/// Result of maximizing the s-AP count over k-AP-free n-subsets of {1..window}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FskEntry {
    pub k: u32,
    pub s: u32,
    pub n: u32,
    pub window: u32,
    pub value: u64,
    pub certified: bool,
    pub witness: IntSet,
}

fn ones(m: u32) -> u128 {
    if m >= 128 {
        !0
    } else {
        (1u128 << m) - 1
    }
}

fn elem_bit(v: u32) -> u128 {
    1u128 << (v - 1)
}

fn range_mask(lo: u32, hi: u32) -> u128 {
    if lo > hi {
        0
    } else {
        ones(hi) & !ones(lo - 1)
    }
}

fn mask_to_set(mask: u128) -> IntSet {
    let mut elems = Vec::with_capacity(mask.count_ones() as usize);
    let mut m = mask;
    while m != 0 {
        let b = m.trailing_zeros();
        elems.push(b as i64 + 1);
        m &= m - 1;
    }
    IntSet::new(elems)
}

/// Marks every element whose later inclusion would complete a k-AP ending
/// there, given that x just joined the chosen set. Elements are only ever
/// added in ascending order, so a completion is always above x.
fn forbid_completions(k: u32, n: u32, chosen: u128, x: u32, forbidden: &mut u128) {
    let prefix = k - 2;
    let max_d = (x - 1) / prefix;
    for d in 1..=max_d {
        if x + d > n {
            // Larger d only lands further out.
            break;
        }
        let mut all = true;
        for j in 1..=prefix {
            if chosen & elem_bit(x - j * d) == 0 {
                all = false;
                break;
            }
        }
        if all {
            *forbidden |= elem_bit(x + d);
        }
    }
}

fn validate_universe(k: u32, n: u32) -> Result<(), Error> {
    if k < 3 {
        return Err(Error::contract(format!(
            "progression length k must be at least 3, got {k}"
        )));
    }
    if n < 1 || n > MAX_UNIVERSE {
        return Err(Error::contract(format!(
            "universe size must be in 1..={MAX_UNIVERSE}, got {n}"
        )));
    }
    Ok(())
}

/// Ascending greedy k-AP-free subset of {1..n}; used as the initial bound.
fn greedy_free(k: u32, n: u32) -> (u32, u128) {
    let mut chosen = 0u128;
    let mut forbidden = 0u128;
    let mut count = 0u32;
    for v in 1..=n {
        if forbidden & elem_bit(v) == 0 {
            forbid_completions(k, n, chosen, v, &mut forbidden);
            chosen |= elem_bit(v);
            count += 1;
        }
    }
    (count, chosen)
}

struct RkSearch<'a> {
    k: u32,
    n: u32,
    best: u32,
    best_mask: u128,
    budget: &'a mut SearchBudget,
    exhausted: bool,
}

impl RkSearch<'_> {
    fn dfs(&mut self, pos: u32, chosen: u128, forbidden: u128, count: u32) {
        if self.exhausted {
            return;
        }
        if !self.budget.charge() {
            self.exhausted = true;
            return;
        }
        let avail = !(chosen | forbidden) & range_mask(pos, self.n);
        if count + avail.count_ones() <= self.best {
            return;
        }
        let v = avail.trailing_zeros() + 1;
        let mut forb = forbidden;
        forbid_completions(self.k, self.n, chosen, v, &mut forb);
        let with_v = chosen | elem_bit(v);
        if count + 1 > self.best {
            self.best = count + 1;
            self.best_mask = with_v;
        }
        self.dfs(v + 1, with_v, forb, count + 1);
        self.dfs(v + 1, chosen, forbidden, count);
    }

    /// Include-first walk that stops at the first set of exactly `target`
    /// elements; with ascending candidates this is the lexicographically
    /// smallest witness.
    fn canonical(&mut self, pos: u32, chosen: u128, forbidden: u128, count: u32, target: u32) -> Option<u128> {
        if count == target {
            return Some(chosen);
        }
        if self.exhausted {
            return None;
        }
        if !self.budget.charge() {
            self.exhausted = true;
            return None;
        }
        let avail = !(chosen | forbidden) & range_mask(pos, self.n);
        if count + avail.count_ones() < target {
            return None;
        }
        let v = avail.trailing_zeros() + 1;
        let mut forb = forbidden;
        forbid_completions(self.k, self.n, chosen, v, &mut forb);
        if let Some(m) = self.canonical(v + 1, chosen | elem_bit(v), forb, count + 1, target) {
            return Some(m);
        }
        self.canonical(v + 1, chosen, forbidden, count, target)
    }
}

fn verify_rk_witness(entry: &SolverEntry) {
    assert!(entry.witness.len() as u32 == entry.value);
    assert!(entry.witness.within(1, entry.n as i64));
    assert!(entry.witness.is_ap_free(entry.k as usize));
}

/// Maximum size of a k-AP-free subset of {1..n}, with witness. Consults and
/// updates the cache; `canonical` forces the lexicographically smallest
/// witness (values are deterministic either way).
pub fn rk_exact(
    k: u32,
    n: u32,
    cache: &mut SolverCache,
    budget: &mut SearchBudget,
    canonical: bool,
) -> Result<SolverEntry, Error> {
    validate_universe(k, n)?;
    if let Some(hit) = cache.get_rk(k, n) {
        if hit.certified {
            let entry = SolverEntry {
                k,
                n,
                value: hit.value,
                certified: true,
                witness: hit.witness.clone(),
            };
            if !canonical {
                verify_rk_witness(&entry);
                return Ok(entry);
            }
            let mut s = RkSearch {
                k,
                n,
                best: 0,
                best_mask: 0,
                budget,
                exhausted: false,
            };
            let mask = s.canonical(1, 0, 0, 0, hit.value);
            return match mask {
                Some(m) => {
                    let entry = SolverEntry {
                        k,
                        n,
                        value: hit.value,
                        certified: true,
                        witness: mask_to_set(m),
                    };
                    verify_rk_witness(&entry);
                    Ok(entry)
                }
                None => Err(Error::BudgetExhausted(format!(
                    "canonical witness pass for k={k} n={n}"
                ))),
            };
        }
    }

    let (g_count, g_mask) = greedy_free(k, n);
    let mut s = RkSearch {
        k,
        n,
        best: g_count,
        best_mask: g_mask,
        budget,
        exhausted: false,
    };
    s.dfs(1, 0, 0, 0);
    let certified = !s.exhausted;
    let (value, mut mask) = (s.best, s.best_mask);
    if certified && canonical {
        s.exhausted = false;
        match s.canonical(1, 0, 0, 0, value) {
            Some(m) => mask = m,
            None => {
                return Err(Error::BudgetExhausted(format!(
                    "canonical witness pass for k={k} n={n}"
                )))
            }
        }
    }
    let entry = SolverEntry {
        k,
        n,
        value,
        certified,
        witness: mask_to_set(mask),
    };
    verify_rk_witness(&entry);
    cache.insert_rk(&entry);
    Ok(entry)
}

/// Convenience wrapper: certified value with default budget, no cache.
pub fn rk_value(k: u32, n: u32) -> Option<u32> {
    let mut cache = SolverCache::default();
    let mut budget = SearchBudget::default();
    rk_exact(k, n, &mut cache, &mut budget, false)
        .ok()
        .filter(|e| e.certified)
        .map(|e| e.value)
}

/// Least N with r_k(N) equal to `target`. Values step by at most one, so the
/// first N reaching the target is the answer.
pub fn find_n_for_value(
    k: u32,
    target: u32,
    cache: &mut SolverCache,
    budget: &mut SearchBudget,
) -> Result<u32, Error> {
    if target < 1 {
        return Err(Error::contract("target value must be at least 1"));
    }
    for n in 1..=MAX_UNIVERSE {
        let entry = rk_exact(k, n, cache, budget, false)?;
        if !entry.certified {
            return Err(Error::BudgetExhausted(format!(
                "search for least n with value {target} stalled at n={n}"
            )));
        }
        if entry.value == target {
            return Ok(n);
        }
        if entry.value > target {
            return Err(Error::Unsound(format!(
                "value jumped past target {target} at n={n}"
            )));
        }
    }
    Err(Error::contract(format!(
        "no n <= {MAX_UNIVERSE} attains value {target} for k={k}"
    )))
}

struct FskSearch<'a> {
    k: u32,
    s: u32,
    n: u32,
    m: u32,
    best: u64,
    best_mask: u128,
    have_leaf: bool,
    budget: &'a mut SearchBudget,
    exhausted: bool,
}

impl FskSearch<'_> {
    /// Count of s-APs ending at x inside chosen | {x}.
    fn gain(&self, chosen: u128, x: u32) -> u64 {
        let step = self.s - 1;
        let max_d = (x - 1) / step;
        let mut g = 0u64;
        for d in 1..=max_d {
            let mut all = true;
            for j in 1..=step {
                if chosen & elem_bit(x - j * d) == 0 {
                    all = false;
                    break;
                }
            }
            if all {
                g += 1;
            }
        }
        g
    }

    /// Upper bound on additional s-APs when growing from `count` to n
    /// elements: an AP is determined by its largest two terms, so the j-th
    /// element added can close at most j-1 of them.
    fn gain_bound(&self, count: u32) -> u64 {
        let lo = count as u64;
        let hi = self.n as u64 - 1;
        if hi < lo {
            return 0;
        }
        (lo + hi) * (hi - lo + 1) / 2
    }

    fn dfs(&mut self, pos: u32, chosen: u128, forbidden: u128, count: u32, fs: u64, gcd: u64) {
        if self.exhausted {
            return;
        }
        if count == self.n {
            // Sets whose gaps share a factor have an equivalent compressed
            // twin that is also enumerated; skip the duplicates.
            if gcd <= 1 && (fs > self.best || !self.have_leaf) {
                self.best = fs;
                self.best_mask = chosen;
                self.have_leaf = true;
            }
            return;
        }
        if !self.budget.charge() {
            self.exhausted = true;
            return;
        }
        let avail = !(chosen | forbidden) & range_mask(pos, self.m);
        if avail.count_ones() < self.n - count {
            return;
        }
        if self.have_leaf && fs + self.gain_bound(count) <= self.best {
            return;
        }
        let v = avail.trailing_zeros() + 1;
        let mut forb = forbidden;
        forbid_completions(self.k, self.m, chosen, v, &mut forb);
        let g = self.gain(chosen, v);
        let gcd2 = num::integer::gcd(gcd, (v - 1) as u64);
        self.dfs(v + 1, chosen | elem_bit(v), forb, count + 1, fs + g, gcd2);
        self.dfs(v + 1, chosen, forbidden, count, fs, gcd);
    }
}

/// Maximum number of s-term progressions over all k-AP-free n-element
/// subsets of {1..window}. Searches only sets containing 1 (translation
/// normalization) and ignores sets whose gap gcd exceeds 1; both are
/// value-preserving by affine invariance. Default window: 4n.
pub fn fsk_windowed_max(
    n: u32,
    k: u32,
    s: u32,
    window: Option<u32>,
    cache: &mut SolverCache,
    budget: &mut SearchBudget,
) -> Result<FskEntry, Error> {
    if s < 3 {
        return Err(Error::contract(format!(
            "progression length s must be at least 3, got {s}"
        )));
    }
    if k <= s {
        return Err(Error::contract(format!(
            "need k > s to leave room for s-APs, got k={k} s={s}"
        )));
    }
    if n < 1 {
        return Err(Error::contract("set size must be at least 1"));
    }
    let m = window.unwrap_or(4 * n);
    if m < n || m > MAX_UNIVERSE {
        return Err(Error::contract(format!(
            "window must be in {n}..={MAX_UNIVERSE}, got {m}"
        )));
    }
    if let Some(hit) = cache.get_fsk(k, s, n, m) {
        if hit.certified {
            return Ok(FskEntry {
                k,
                s,
                n,
                window: m,
                value: hit.value,
                certified: true,
                witness: hit.witness.clone(),
            });
        }
    }
    let mut search = FskSearch {
        k,
        s,
        n,
        m,
        best: 0,
        best_mask: 0,
        have_leaf: false,
        budget,
        exhausted: false,
    };
    // Normalize: every candidate contains 1.
    search.dfs(2, elem_bit(1), 0, 1, 0, 0);
    if !search.have_leaf {
        return if search.exhausted {
            Err(Error::BudgetExhausted(format!(
                "no witness found for n={n} k={k} s={s} window={m}"
            )))
        } else {
            Err(Error::contract(format!(
                "no k-AP-free {n}-subset of 1..={m} exists"
            )))
        };
    }
    let entry = FskEntry {
        k,
        s,
        n,
        window: m,
        value: search.best,
        certified: !search.exhausted,
        witness: mask_to_set(search.best_mask),
    };
    if entry.certified {
        assert_eq!(entry.witness.len(), n as usize);
        assert!(entry.witness.within(1, m as i64));
        assert!(entry.witness.is_ap_free(k as usize));
        assert_eq!(entry.witness.count_s_aps(s as usize), entry.value);
    }
    cache.insert_fsk(&entry);
    Ok(entry)
}

/// One row of the window-stability comparison: the same maximization run at
/// window 4n and 6n.
#[derive(Clone, Debug, Serialize)]
pub struct WindowStabilityRow {
    pub n: u32,
    pub window_small: u32,
    pub value_small: u64,
    pub window_large: u32,
    pub value_large: u64,
    pub certified: bool,
    pub stable: bool,
}

pub fn window_stability_report(
    k: u32,
    s: u32,
    n_max: u32,
    cache: &mut SolverCache,
    budget: &mut SearchBudget,
) -> Result<Vec<WindowStabilityRow>, Error> {
    let mut rows = Vec::new();
    for n in s..=n_max {
        let small = fsk_windowed_max(n, k, s, Some(4 * n), cache, budget)?;
        let large = fsk_windowed_max(n, k, s, Some(6 * n), cache, budget)?;
        rows.push(WindowStabilityRow {
            n,
            window_small: small.window,
            value_small: small.value,
            window_large: large.window,
            value_large: large.value,
            certified: small.certified && large.certified,
            stable: small.value == large.value,
        });
    }
    Ok(rows)
}

/// One inequality family checked over the certified table.
#[derive(Clone, Debug, Serialize)]
pub struct TableCheck {
    pub rule: String,
    pub pairs_checked: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableViolation {
    pub rule: String,
    pub k: u32,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub certified_entries: u64,
    pub checks: Vec<TableCheck>,
    pub violations: Vec<TableViolation>,
}

impl TableReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Cross-checks every certified r_k entry pair against the relations the
/// values must satisfy: monotonicity, unit steps, subadditivity, the halving
/// bound m*r(n) <= 2n*r(m) for m <= n, the product bound
/// r(2mn) >= r(m)*r(n), and the squaring bound 8*r(N)*n^2 >= N*r(n)^2 for
/// n^2 >= N. Any violation falsifies a solver result, not the relations.
pub fn verify_table_inequalities(cache: &SolverCache) -> TableReport {
    const RULES: [&str; 6] = [
        "monotonicity",
        "unit-step",
        "subadditivity",
        "halving",
        "product",
        "squaring",
    ];
    let by_k = cache.certified_rk_by_k();
    let mut checked = [0u64; 6];
    let mut failed = [0u64; 6];
    let mut violations = Vec::new();
    let mut certified = 0u64;
    for (&k, table) in &by_k {
        certified += table.len() as u64;
        let value_at = |n: u32| table.iter().find(|&&(m, _)| m == n).map(|&(_, v)| v);
        let mut fail = |idx: usize, detail: String| -> u64 {
            violations.push(TableViolation {
                rule: RULES[idx].to_string(),
                k,
                detail,
            });
            1
        };

        for w in table.windows(2) {
            let (n0, v0) = w[0];
            let (n1, v1) = w[1];
            checked[0] += 1;
            if v1 < v0 {
                failed[0] += fail(0, format!("r({n1})={v1} < r({n0})={v0}"));
            }
            if n1 == n0 + 1 {
                checked[1] += 1;
                if v1 > v0 + 1 {
                    failed[1] += fail(1, format!("r({n1})={v1} jumps from r({n0})={v0}"));
                }
            }
        }

        for (i, &(n1, v1)) in table.iter().enumerate() {
            for &(n2, v2) in &table[i..] {
                if let Some(vsum) = value_at(n1 + n2) {
                    checked[2] += 1;
                    if vsum > v1 + v2 {
                        failed[2] += fail(
                            2,
                            format!("r({})={vsum} > r({n1})+r({n2})={}", n1 + n2, v1 + v2),
                        );
                    }
                }
                if let Some(prod) = n1
                    .checked_mul(n2)
                    .and_then(|p| p.checked_mul(2))
                    .and_then(value_at)
                {
                    checked[4] += 1;
                    if (prod as u64) < v1 as u64 * v2 as u64 {
                        failed[4] += fail(
                            4,
                            format!(
                                "r({})={prod} < r({n1})*r({n2})={}",
                                2 * n1 * n2,
                                v1 as u64 * v2 as u64
                            ),
                        );
                    }
                }
            }
        }

        for &(m, vm) in table {
            for &(n, vn) in table {
                if m <= n {
                    checked[3] += 1;
                    if (m as u64) * (vn as u64) > 2 * (n as u64) * (vm as u64) {
                        failed[3] +=
                            fail(3, format!("r({n})/{n} too large next to r({m})/{m}"));
                    }
                }
                // Here m plays the small-n role of the squaring bound.
                if (m as u64) * (m as u64) >= n as u64 {
                    checked[5] += 1;
                    let lhs = 8 * vn as u64 * (m as u64) * (m as u64);
                    let rhs = (n as u64) * (vm as u64) * (vm as u64);
                    if lhs < rhs {
                        failed[5] += fail(5, format!("8*r({n})*{m}^2 < {n}*r({m})^2"));
                    }
                }
            }
        }
    }
    TableReport {
        certified_entries: certified,
        checks: RULES
            .iter()
            .zip(checked.iter().zip(failed.iter()))
            .map(|(rule, (&pairs_checked, &violations))| TableCheck {
                rule: rule.to_string(),
                pairs_checked,
                violations,
            })
            .collect(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(k: u32, n: u32) -> SolverEntry {
        let mut cache = SolverCache::default();
        let mut budget = SearchBudget::unlimited();
        rk_exact(k, n, &mut cache, &mut budget, false).unwrap()
    }

    #[test]
    fn rk_small_values() {
        assert_eq!(solve(3, 1).value, 1);
        assert_eq!(solve(3, 3).value, 2);
        assert_eq!(solve(3, 9).value, 5);
        assert_eq!(solve(4, 4).value, 3);
        assert!(solve(3, 9).certified);
    }

    #[test]
    fn rk_canonical_witness_is_lex_smallest() {
        let mut cache = SolverCache::default();
        let mut budget = SearchBudget::unlimited();
        let e = rk_exact(3, 9, &mut cache, &mut budget, true).unwrap();
        assert_eq!(e.witness.as_slice(), &[1, 2, 4, 8, 9]);
        // A second call hits the certified cache entry and must agree.
        let e2 = rk_exact(3, 9, &mut cache, &mut budget, true).unwrap();
        assert_eq!(e2.witness.as_slice(), &[1, 2, 4, 8, 9]);
    }

    #[test]
    fn rk_budget_exhaustion_is_flagged() {
        let mut cache = SolverCache::default();
        let mut budget = SearchBudget::nodes(3);
        let e = rk_exact(3, 20, &mut cache, &mut budget, false).unwrap();
        assert!(!e.certified);
        // The greedy bound is still a valid lower bound.
        assert!(e.value >= 1);
        assert!(e.witness.is_ap_free(3));
    }

    #[test]
    fn uncertified_then_certified_cache_upgrade() {
        let mut cache = SolverCache::default();
        let mut tight = SearchBudget::nodes(3);
        let first = rk_exact(3, 12, &mut cache, &mut tight, false).unwrap();
        assert!(!first.certified);
        let mut wide = SearchBudget::unlimited();
        let second = rk_exact(3, 12, &mut cache, &mut wide, false).unwrap();
        assert!(second.certified);
        assert_eq!(second.value, 6);
        assert!(cache.get_rk(3, 12).unwrap().certified);
    }

    #[test]
    fn find_n_examples() {
        let mut cache = SolverCache::default();
        let mut budget = SearchBudget::unlimited();
        assert_eq!(find_n_for_value(3, 3, &mut cache, &mut budget).unwrap(), 4);
        assert_eq!(find_n_for_value(3, 5, &mut cache, &mut budget).unwrap(), 9);
    }

    #[test]
    fn fsk_examples() {
        let mut cache = SolverCache::default();
        let mut budget = SearchBudget::unlimited();
        let e = fsk_windowed_max(3, 4, 3, None, &mut cache, &mut budget).unwrap();
        assert_eq!(e.value, 1);
        assert_eq!(e.witness.as_slice(), &[1, 2, 3]);
        let e = fsk_windowed_max(4, 4, 3, Some(8), &mut cache, &mut budget).unwrap();
        assert_eq!(e.value, 2);
        assert!(e.witness.count_s_aps(3) == 2);
        // n = s always admits at least one progression.
        for s in 3..=5 {
            let e = fsk_windowed_max(s, s + 1, s, None, &mut cache, &mut budget).unwrap();
            assert!(e.value >= 1, "s={s}");
        }
    }

    #[test]
    fn fsk_rejects_bad_params() {
        let mut cache = SolverCache::default();
        let mut budget = SearchBudget::unlimited();
        assert!(fsk_windowed_max(4, 3, 3, None, &mut cache, &mut budget).is_err());
        assert!(fsk_windowed_max(4, 4, 2, None, &mut cache, &mut budget).is_err());
        assert!(fsk_windowed_max(4, 4, 3, Some(3), &mut cache, &mut budget).is_err());
    }

    #[test]
    fn solver_rejects_bad_universe() {
        let mut cache = SolverCache::default();
        let mut budget = SearchBudget::unlimited();
        assert!(rk_exact(2, 5, &mut cache, &mut budget, false).is_err());
        assert!(rk_exact(3, 0, &mut cache, &mut budget, false).is_err());
        assert!(rk_exact(3, 129, &mut cache, &mut budget, false).is_err());
    }
}

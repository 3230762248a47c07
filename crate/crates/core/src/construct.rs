//! Constructions of k-AP-free sets: 3-AP-free seed sets, the product
//! doubling construction, and the randomized block construction together
//! with its expectation bounds.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::exact;
use crate::intset::IntSet;

/// Bounds up to which the seed sweep includes a certified exact search.
/// The sphere construction only wins for much larger bounds.
const SEED_EXACT_MAX: u64 = 40;
const SEED_EXACT_NODES: u64 = 5_000_000;

/// Largest 3-AP-free subset of {1..bound} this sweep can find.
///
/// Sweeps three deterministic strategies and keeps the largest output,
/// breaking ties toward the lexicographically smallest element sequence:
/// digit-sphere sets over odd bases (no-carry addition forces any midpoint
/// collision onto a sphere, which has no aligned triples), an ascending
/// greedy pass, and for small bounds a certified exact search.
pub fn threeapfree_seed(bound: u64) -> IntSet {
    assert!(bound >= 1, "seed bound must be at least 1");
    let mut best: Option<IntSet> = None;
    let mut offer = |candidate: IntSet| {
        debug_assert!(candidate.is_ap_free(3));
        debug_assert!(candidate.within(1, bound as i64));
        let better = match &best {
            None => true,
            Some(cur) => {
                candidate.len() > cur.len()
                    || (candidate.len() == cur.len() && candidate.as_slice() < cur.as_slice())
            }
        };
        if better {
            best = Some(candidate);
        }
    };

    if bound <= SEED_EXACT_MAX {
        let mut cache = crate::cache::SolverCache::default();
        let mut budget = exact::SearchBudget::nodes(SEED_EXACT_NODES);
        if let Ok(entry) = exact::rk_exact(3, bound as u32, &mut cache, &mut budget, true) {
            if entry.certified {
                offer(entry.witness);
            }
        }
    }

    for candidate in sphere_sweep(bound) {
        offer(candidate);
    }
    offer(greedy_threeapfree(bound));

    best.expect("greedy always yields at least {1}")
}

/// Greedy ascending 3-AP-free subset of {1..bound}.
fn greedy_threeapfree(bound: u64) -> IntSet {
    let mut chosen: Vec<i64> = Vec::new();
    for x in 1..=bound as i64 {
        let completes = chosen
            .iter()
            .any(|&b| (2 * b - x) < x && chosen.binary_search(&(2 * b - x)).is_ok());
        if !completes {
            chosen.push(x);
        }
    }
    IntSet::new(chosen)
}

/// All sphere sets fitting below `bound`: digits 0..d-1 in base 2d-1 across
/// dim coordinates, one set per squared norm.
fn sphere_sweep(bound: u64) -> Vec<IntSet> {
    let mut out = Vec::new();
    for d in 2u64..=32 {
        let base = 2 * d - 1;
        let mut dim = 1u32;
        loop {
            let Some(cap) = base.checked_pow(dim) else {
                break;
            };
            if cap > bound {
                break;
            }
            // Vector count d^dim <= base^dim = cap <= bound keeps this cheap.
            let mut by_norm: std::collections::BTreeMap<u64, Vec<i64>> =
                std::collections::BTreeMap::new();
            let mut digits = vec![0u64; dim as usize];
            loop {
                let norm: u64 = digits.iter().map(|&x| x * x).sum();
                if norm > 0 {
                    let value: u64 = digits
                        .iter()
                        .rev()
                        .fold(0u64, |acc, &x| acc * base + x);
                    by_norm.entry(norm).or_default().push(value as i64 + 1);
                }
                // Odometer step.
                let mut i = 0;
                loop {
                    if i == digits.len() {
                        break;
                    }
                    digits[i] += 1;
                    if digits[i] < d {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
                if i == digits.len() {
                    break;
                }
            }
            for (_, elems) in by_norm {
                out.push(IntSet::new(elems));
            }
            dim += 1;
        }
    }
    out
}

/// Which placement rule the product construction uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductVariant {
    /// 2u(n-1) + v: the stride can collide with the digit range, so
    /// freeness can break (see `product_construct` tests).
    Literal,
    /// 2n(u-1) + v: stride 2n strictly dominates the digit range, making
    /// (u, v) recoverable from the value and freeness provable.
    Corrected,
}

/// Combines U inside {1..m} and V inside {1..n} into a subset of {1..2mn}
/// of size |U|*|V|. With the corrected variant, if U and V are k-AP-free
/// the output is too.
pub fn product_construct(
    u: &IntSet,
    m: u64,
    v: &IntSet,
    n: u64,
    variant: ProductVariant,
) -> Result<IntSet, Error> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::contract("product construction needs nonempty U and V"));
    }
    if !u.within(1, m as i64) {
        return Err(Error::contract(format!("U must lie in 1..={m}")));
    }
    if !v.within(1, n as i64) {
        return Err(Error::contract(format!("V must lie in 1..={n}")));
    }
    let mut w = Vec::with_capacity(u.len() * v.len());
    for uu in u.iter() {
        for vv in v.iter() {
            let x = match variant {
                ProductVariant::Literal => 2 * uu * (n as i64 - 1) + vv,
                ProductVariant::Corrected => 2 * (n as i64) * (uu - 1) + vv,
            };
            w.push(x);
        }
    }
    Ok(IntSet::new(w))
}

/// Parameters of the block construction: s translated copies of a k-AP-free
/// seed inside {1..N}, block i shifted by 6(i-1)N - 1 + d_i with each offset
/// d_i in {1..2N}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockParams {
    window: u64,
    s: u32,
    k: u32,
    seed_set: IntSet,
    offsets: Vec<u64>,
}

impl BlockParams {
    pub fn new(
        seed_set: IntSet,
        window: u64,
        s: u32,
        k: u32,
        offsets: Vec<u64>,
    ) -> Result<Self, Error> {
        Self::validate_base(&seed_set, window, s, k)?;
        if offsets.len() != s as usize {
            return Err(Error::contract(format!(
                "need exactly s={s} offsets, got {}",
                offsets.len()
            )));
        }
        if let Some(&d) = offsets.iter().find(|&&d| d < 1 || d > 2 * window) {
            return Err(Error::contract(format!(
                "offset {d} outside 1..={}",
                2 * window
            )));
        }
        Ok(BlockParams {
            window,
            s,
            k,
            seed_set,
            offsets,
        })
    }

    /// Checks everything except the offsets, shared with the sampling paths.
    pub fn validate_base(seed_set: &IntSet, window: u64, s: u32, k: u32) -> Result<(), Error> {
        if s < 3 {
            return Err(Error::contract(format!("need s >= 3, got {s}")));
        }
        if k <= s {
            return Err(Error::contract(format!(
                "need k > s so progressions of length s survive, got k={k} s={s}"
            )));
        }
        if window < 1 {
            return Err(Error::contract("window must be at least 1"));
        }
        if !seed_set.within(1, window as i64) {
            return Err(Error::contract(format!(
                "seed set must lie in 1..={window}"
            )));
        }
        if let Some(p) = seed_set.ap_witness(k as usize) {
            return Err(Error::contract(format!(
                "seed set contains a {k}-AP starting at {} with difference {}",
                p.start(),
                p.diff()
            )));
        }
        Ok(())
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn seed_set(&self) -> &IntSet {
        &self.seed_set
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    /// Uniform offsets in {1..2N}, derived from (seed, trial) so trials are
    /// independent of evaluation order.
    pub fn sample_offsets(window: u64, s: u32, seed: u64, trial: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        (0..s).map(|_| rng.gen_range(1..=2 * window)).collect()
    }
}

/// The union of the s translated blocks. Always lands in {1..6sN}, has
/// exactly s*|S| elements, and is k-AP-free: a progression crossing blocks
/// must jump the 3N+1 wide gap between them, so its difference exceeds any
/// block's span and it meets each block at most once, capping its length
/// at s < k.
pub fn block_random_construct(p: &BlockParams) -> IntSet {
    let n = p.window as i64;
    let mut elems = Vec::with_capacity(p.s as usize * p.seed_set.len());
    for (i, &d) in p.offsets.iter().enumerate() {
        let shift = 6 * (i as i64) * n - 1 + d as i64;
        elems.extend(p.seed_set.iter().map(|x| x + shift));
    }
    let a = IntSet::new(elems);
    debug_assert_eq!(a.len(), p.s as usize * p.seed_set.len());
    debug_assert!(a.within(1, 6 * p.s as i64 * n));
    debug_assert!(a.is_ap_free(p.k as usize));
    a
}

fn big(x: u64) -> BigInt {
    BigInt::from(x)
}

/// Expected number of s-APs in the block construction, lower-bounded by
/// counting only the fully aligned ones: (1/s) * C(N,2) * (|S| / 2N)^s.
pub fn expected_sap_lower_bound(window: u64, s: u32, seed_size: u64) -> BigRational {
    assert!(window >= 1 && s >= 3);
    let pairs = BigRational::new(big(window) * big(window - 1), big(2));
    let hit = BigRational::new(big(seed_size), big(2 * window));
    let mut prob = BigRational::one();
    for _ in 0..s {
        prob *= &hit;
    }
    pairs * prob / BigRational::from(big(s as u64))
}

/// The density bound the block construction yields after tuning:
/// (n / (300 s N))^(s-2) * n^2.
pub fn final_lower_bound(n: u64, s: u32, window: u64) -> BigRational {
    assert!(n >= 1 && s >= 3 && window >= 1);
    let base = BigRational::new(big(n), big(300 * s as u64 * window));
    let mut out = BigRational::one();
    for _ in 0..s - 2 {
        out *= &base;
    }
    out * BigRational::from(big(n) * big(n))
}

/// Sample statistics from repeated draws of the block construction.
#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloReport {
    pub window: u64,
    pub s: u32,
    pub k: u32,
    pub seed_size: u64,
    pub trials: u64,
    pub seed: u64,
    pub mean: f64,
    pub variance: f64,
    pub min: u64,
    pub max: u64,
    pub mean_exact: String,
    pub bound: String,
    pub bound_f64: f64,
    pub mean_meets_bound: bool,
}

/// Draws `trials` offset vectors, builds each set, and reports statistics of
/// the s-AP count. Every sample is re-checked for k-AP-freeness; a failure
/// would mean the construction itself is broken and aborts the run.
pub fn monte_carlo_expected_saps(
    seed_set: &IntSet,
    window: u64,
    s: u32,
    k: u32,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<MonteCarloReport, Error> {
    BlockParams::validate_base(seed_set, window, s, k)?;
    if trials == 0 {
        return Err(Error::contract("trial count must be positive"));
    }
    let workers = threads.clamp(1, 256) as u64;
    let chunk = trials.div_ceil(workers);

    struct Partial {
        sum: u128,
        sum_sq: u128,
        min: u64,
        max: u64,
        unsound: Option<u64>,
    }

    let run_chunk = |lo: u64, hi: u64| -> Partial {
        let mut p = Partial {
            sum: 0,
            sum_sq: 0,
            min: u64::MAX,
            max: 0,
            unsound: None,
        };
        for t in lo..hi {
            let offsets = BlockParams::sample_offsets(window, s, seed, t);
            let params = BlockParams {
                window,
                s,
                k,
                seed_set: seed_set.clone(),
                offsets,
            };
            let a = block_random_construct(&params);
            if !a.is_ap_free(k as usize) {
                p.unsound = p.unsound.or(Some(t));
                continue;
            }
            let c = a.count_s_aps(s as usize);
            p.sum += c as u128;
            p.sum_sq += (c as u128) * (c as u128);
            p.min = p.min.min(c);
            p.max = p.max.max(c);
        }
        p
    };

    let mut partials: Vec<Partial> = Vec::new();
    if workers == 1 {
        partials.push(run_chunk(0, trials));
    } else {
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..workers {
                let lo = w * chunk;
                let hi = (lo + chunk).min(trials);
                if lo >= hi {
                    break;
                }
                handles.push(scope.spawn(move || run_chunk(lo, hi)));
            }
            for h in handles {
                partials.push(h.join().expect("worker panicked"));
            }
        });
    }

    let mut sum = 0u128;
    let mut sum_sq = 0u128;
    let mut min = u64::MAX;
    let mut max = 0u64;
    let mut unsound: Option<u64> = None;
    for p in partials {
        sum += p.sum;
        sum_sq += p.sum_sq;
        min = min.min(p.min);
        max = max.max(p.max);
        unsound = match (unsound, p.unsound) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    if let Some(t) = unsound {
        return Err(Error::Unsound(format!(
            "trial {t} produced a set with a {k}-term progression"
        )));
    }

    let mean = sum as f64 / trials as f64;
    let variance = (sum_sq as f64 - (sum as f64) * (sum as f64) / trials as f64) / trials as f64;
    let mean_exact = BigRational::new(BigInt::from(sum), BigInt::from(trials));
    let bound = expected_sap_lower_bound(window, s, seed_set.len() as u64);
    Ok(MonteCarloReport {
        window,
        s,
        k,
        seed_size: seed_set.len() as u64,
        trials,
        seed,
        mean,
        variance,
        min,
        max,
        mean_exact: mean_exact.to_string(),
        bound: bound.to_string(),
        bound_f64: rational_to_f64(&bound),
        mean_meets_bound: mean_exact >= bound,
    })
}

/// Exact expectation over all (2N)^s offset vectors.
#[derive(Clone, Debug, Serialize)]
pub struct ExhaustiveExpectation {
    pub window: u64,
    pub s: u32,
    pub k: u32,
    pub seed_size: u64,
    pub vectors: u64,
    pub mean_exact: String,
    pub mean_f64: f64,
    pub min: u64,
    pub max: u64,
    pub bound: String,
    pub bound_f64: f64,
    pub meets_bound: bool,
}

/// Enumerates every offset vector instead of sampling. The vector count
/// (2N)^s is capped to keep accidental blowups out.
pub fn exhaustive_offset_expectation(
    seed_set: &IntSet,
    window: u64,
    s: u32,
    k: u32,
) -> Result<ExhaustiveExpectation, Error> {
    const MAX_VECTORS: u64 = 100_000_000;
    BlockParams::validate_base(seed_set, window, s, k)?;
    let radix = 2 * window;
    let mut vectors = 1u64;
    for _ in 0..s {
        vectors = vectors
            .checked_mul(radix)
            .filter(|&v| v <= MAX_VECTORS)
            .ok_or_else(|| {
                Error::contract(format!(
                    "(2N)^s = {radix}^{s} exceeds the enumeration cap {MAX_VECTORS}"
                ))
            })?;
    }

    let mut offsets = vec![1u64; s as usize];
    let mut sum = 0u128;
    let mut min = u64::MAX;
    let mut max = 0u64;
    loop {
        let params = BlockParams {
            window,
            s,
            k,
            seed_set: seed_set.clone(),
            offsets: offsets.clone(),
        };
        let a = block_random_construct(&params);
        if a.len() != s as usize * seed_set.len() {
            return Err(Error::Unsound("blocks overlapped".into()));
        }
        if !a.is_ap_free(k as usize) {
            return Err(Error::Unsound(format!(
                "offsets {offsets:?} produced a set with a {k}-term progression"
            )));
        }
        let c = a.count_s_aps(s as usize);
        sum += c as u128;
        min = min.min(c);
        max = max.max(c);

        let mut i = 0;
        loop {
            if i == offsets.len() {
                break;
            }
            offsets[i] += 1;
            if offsets[i] <= radix {
                break;
            }
            offsets[i] = 1;
            i += 1;
        }
        if i == offsets.len() {
            break;
        }
    }

    let mean = BigRational::new(BigInt::from(sum), BigInt::from(vectors));
    let bound = expected_sap_lower_bound(window, s, seed_set.len() as u64);
    Ok(ExhaustiveExpectation {
        window,
        s,
        k,
        seed_size: seed_set.len() as u64,
        vectors,
        mean_exact: mean.to_string(),
        mean_f64: rational_to_f64(&mean),
        min,
        max,
        bound: bound.to_string(),
        bound_f64: rational_to_f64(&bound),
        meets_bound: mean >= bound,
    })
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Greedily appends elements above `start` that keep the set k-AP-free,
/// until it reaches `target` elements. Used with a start point far beyond
/// the existing span so new elements cannot disturb existing structure.
pub fn augment_to_cardinality(a: &IntSet, target: usize, k: u32, start: i64) -> IntSet {
    assert!(k >= 3);
    let mut elems: Vec<i64> = a.as_slice().to_vec();
    let mut x = start;
    while elems.len() < target {
        let completes = (1..)
            .take_while(|d| x - d * (k as i64 - 1) >= elems.first().copied().unwrap_or(x))
            .any(|d| (1..k as i64).all(|j| elems.binary_search(&(x - j * d)).is_ok()));
        if !completes {
            elems.push(x);
        }
        x += 1;
    }
    IntSet::new(elems)
}

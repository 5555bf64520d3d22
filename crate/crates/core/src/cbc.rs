//! Component-by-component search for reconstructing rank-1 lattices.
//!
//! For each candidate size `M` (primes by default, in increasing order) the
//! generating vector is fixed to `z_1 = 1` and then extended one coordinate
//! at a time: `z_s` is the smallest value in `0..M` for which the distinct
//! projections of the index set onto the first `s` coordinates have
//! pairwise distinct residues. If some coordinate admits no value the next
//! size is tried.

use std::cell::RefCell;

use rayon::prelude::*;
use thiserror::Error;

use crate::index_sets::{FrequencyIndexSet, IndexSetSpec};
use crate::lattice::Rank1Lattice;

/// Largest lattice size the search will consider.
pub const MAX_CBC_SIZE: u64 = (1 << 31) - 1;

#[derive(Debug, Error, PartialEq)]
pub enum CbcError {
    #[error("index set is empty")]
    EmptySet,
    #[error("no reconstructing lattice with size <= {ceiling} ({tried} candidate sizes tried)")]
    CandidateExhausted { ceiling: u64, tried: usize },
    #[error("candidate window starts at {start}, above the ceiling {ceiling}")]
    EmptyWindow { start: u64, ceiling: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CbcConfig {
    /// Hard upper limit on `M`; when `None` the default ceiling for the
    /// index set scaled by `ceiling_multiplier` is used.
    pub ceiling: Option<u64>,
    pub ceiling_multiplier: f64,
    pub prime_only: bool,
}

impl Default for CbcConfig {
    fn default() -> Self {
        CbcConfig {
            ceiling: None,
            ceiling_multiplier: 1.0,
            prime_only: true,
        }
    }
}

impl CbcConfig {
    pub fn with_ceiling(ceiling: u64) -> Self {
        CbcConfig {
            ceiling: Some(ceiling),
            ..CbcConfig::default()
        }
    }

    pub fn resolved_ceiling(&self, set: &FrequencyIndexSet) -> u64 {
        let c = match self.ceiling {
            Some(c) => c,
            None => (default_ceiling(set) as f64 * self.ceiling_multiplier) as u64,
        };
        c.min(MAX_CBC_SIZE)
    }
}

/// Default search ceiling: `2^{2R+3}` for two-dimensional hyperbolic
/// crosses. Otherwise the ceiling is twice `n = max(|I|^2, 2 max|k_1|)`, so
/// it contains a prime `p > n`: such a `p` separates distinct first
/// components, and at every later step the at most `|I|^2/2` index pairs
/// forbid at most that many of the `p` values of `z_s`, so the greedy
/// search cannot fail there.
pub fn default_ceiling(set: &FrequencyIndexSet) -> u64 {
    match *set.spec() {
        IndexSetSpec::HyperbolicCross { d: 2, r, .. }
        | IndexSetSpec::DyadicCross { d: 2, r, .. }
            if r < 14.0 =>
        {
            2f64.powf(2.0 * r + 3.0).floor() as u64
        }
        _ => {
            let len = set.len() as u64;
            let first_span = set
                .iter()
                .map(|k| k[0].unsigned_abs())
                .max()
                .unwrap_or(0)
                .saturating_mul(2);
            len.saturating_mul(len)
                .max(first_span)
                .saturating_mul(2)
                .clamp(2, MAX_CBC_SIZE)
        }
    }
}

/// Lower bound on the size of any reconstructing lattice for a hyperbolic
/// cross of refinement `R`: `2^{2 floor(R) - 2}`. Other kinds get 1.
pub fn size_lower_bound(spec: &IndexSetSpec) -> u64 {
    match *spec {
        IndexSetSpec::HyperbolicCross { d, r, .. } | IndexSetSpec::DyadicCross { d, r, .. }
            if d >= 2 && r >= 1.0 =>
        {
            let e = 2 * (r.floor() as u32) - 2;
            1u64.checked_shl(e).unwrap_or(u64::MAX)
        }
        _ => 1,
    }
}

/// Every rank-1 lattice of size `M` has two aliasing frequencies inside
/// any two-dimensional axis cross of radius `floor(sqrt(M))`. If `I`
/// contains such a cross of radius `rho` (in some pair of coordinates),
/// a reconstructing lattice therefore needs `floor(sqrt(M)) > rho`, i.e.
/// `M >= (rho + 1)^2`.
pub fn axis_cross_lower_bound(set: &FrequencyIndexSet) -> u64 {
    let d = set.dim();
    if d < 2 || set.is_empty() {
        return 1;
    }
    let mut e = vec![0i64; d];
    let mut radii: Vec<u64> = (0..d)
        .map(|s| {
            let mut rho = 0u64;
            loop {
                let t = rho as i64 + 1;
                e[s] = t;
                let pos = set.contains(&e);
                e[s] = -t;
                let neg = set.contains(&e);
                e[s] = 0;
                if !(pos && neg) {
                    break;
                }
                rho += 1;
            }
            rho
        })
        .collect();
    if !set.contains(&e) {
        return 1;
    }
    radii.sort_unstable_by(|a, b| b.cmp(a));
    let rho = radii[1];
    (rho + 1).saturating_mul(rho + 1)
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, b);
            }
            b = mul(b, b);
            e >>= 1;
        }
        r
    };
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Increasing stream of candidate lattice sizes.
#[derive(Clone, Debug)]
pub struct CandidateSizes {
    next: u64,
    ceiling: u64,
    prime_only: bool,
}

impl CandidateSizes {
    pub fn start(&self) -> u64 {
        self.next
    }

    pub fn ceiling(&self) -> u64 {
        self.ceiling
    }
}

impl Iterator for CandidateSizes {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        while self.next <= self.ceiling {
            let m = self.next;
            self.next += 1;
            if !self.prime_only || is_prime(m) {
                return Some(m);
            }
        }
        None
    }
}

/// Candidate sizes for `set`, starting at the largest of `|I|`, the
/// hyperbolic-cross bound of [`size_lower_bound`] and the axis-cross bound
/// of [`axis_cross_lower_bound`].
pub fn candidate_sizes(set: &FrequencyIndexSet, config: &CbcConfig) -> CandidateSizes {
    let start = (set.len() as u64)
        .max(size_lower_bound(set.spec()))
        .max(axis_cross_lower_bound(set))
        .max(1);
    CandidateSizes {
        next: start,
        ceiling: config.resolved_ceiling(set),
        prime_only: config.prime_only,
    }
}

thread_local! {
    static STAMPS: RefCell<(Vec<u32>, u32)> = const { RefCell::new((Vec::new(), 0)) };
}

/// True iff `(prefix[i] + step[i] * z) mod m` are pairwise distinct.
fn distinct_residues(prefix: &[u64], step: &[u64], z: u64, m: u64) -> bool {
    STAMPS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (stamps, gen) = &mut *guard;
        if stamps.len() < m as usize {
            stamps.clear();
            stamps.resize(m as usize, 0);
            *gen = 0;
        }
        *gen = gen.wrapping_add(1);
        if *gen == 0 {
            stamps.iter_mut().for_each(|s| *s = 0);
            *gen = 1;
        }
        let g = *gen;
        for (&p, &k) in prefix.iter().zip(step) {
            // m < 2^31, so k * z < 2^62 and the sum cannot overflow
            let r = ((p + k * z) % m) as usize;
            if stamps[r] == g {
                return false;
            }
            stamps[r] = g;
        }
        true
    })
}

/// Smallest `z` in `0..m` with distinct residues by direct testing,
/// restricted to `0..limit`.
fn scan_component(prefix: &[u64], step: &[u64], m: u64, limit: u64) -> Option<u64> {
    let limit = limit.min(m);
    if prefix.len() < 4096 {
        return (0..limit).find(|&z| distinct_residues(prefix, step, z, m));
    }
    (0..limit)
        .into_par_iter()
        .find_first(|&z| distinct_residues(prefix, step, z, m))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `n` for `gcd(a, n) = 1`.
fn mod_inverse(a: u64, n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    let (mut old_r, mut r) = (a as i128, n as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    old_s.rem_euclid(n as i128) as u64
}

/// Forbidden-value bitmap over `0..m` that tracks how many values are set.
struct Forbidden {
    bits: Vec<u64>,
    count: u64,
    m: u64,
}

impl Forbidden {
    fn new(m: u64) -> Self {
        Self {
            bits: vec![0; (m as usize).div_ceil(64)],
            count: 0,
            m,
        }
    }

    fn mark(&mut self, z: u64) {
        let (w, b) = ((z / 64) as usize, z % 64);
        if self.bits[w] & (1 << b) == 0 {
            self.bits[w] |= 1 << b;
            self.count += 1;
        }
    }

    fn full(&self) -> bool {
        self.count == self.m
    }

    /// Marks every solution `z ∈ 0..m` of `delta·z ≡ rhs (mod m)` with
    /// `delta > 0`, using the precomputed `(g, inverse of delta/g mod m/g)`.
    fn mark_solutions(&mut self, (g, inv): (u64, u64), rhs: u64) {
        if rhs % g != 0 {
            return;
        }
        let n = self.m / g;
        let mut z = ((rhs / g) % n) * inv % n;
        while z < self.m {
            self.mark(z);
            z += n;
        }
    }

    fn first_free(&self) -> Option<u64> {
        self.bits.iter().enumerate().find_map(|(w, &word)| {
            let z = w as u64 * 64 + (!word).trailing_zeros() as u64;
            (word != u64::MAX && z < self.m).then_some(z)
        })
    }
}

/// `(gcd(δ, m), (δ/g)^{-1} mod m/g)` for `δ = 0..len`.
fn solution_table(len: usize, m: u64) -> Vec<(u64, u64)> {
    (0..len as u64)
        .map(|delta| {
            let r = delta % m;
            let g = if r == 0 { m } else { gcd(r, m) };
            (g, mod_inverse(r / g, m / g))
        })
        .collect()
}

/// Smallest valid `z` found by marking every `z` that makes some pair of
/// projections collide: `Δr + Δk·z ≡ 0 (mod m)` has `gcd(Δk, m)` solutions
/// when `gcd(Δk, m)` divides `Δr`, none otherwise.
fn forbidden_component(prefix: &[u64], kvals: &[i64], m: u64) -> Option<u64> {
    let kmax = kvals.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0);
    let table = solution_table(2 * kmax as usize + 1, m);
    let mut forbidden = Forbidden::new(m);
    for p in 0..prefix.len() {
        for q in p + 1..prefix.len() {
            let dk = kvals[p] - kvals[q];
            // Δr + Δk z ≡ 0  <=>  |Δk| z ≡ ∓Δr
            let rhs = if dk >= 0 {
                (prefix[q] + m - prefix[p]) % m
            } else {
                (prefix[p] + m - prefix[q]) % m
            };
            forbidden.mark_solutions(table[dk.unsigned_abs() as usize], rhs);
        }
        if forbidden.full() {
            return None;
        }
    }
    forbidden.first_free()
}

/// Largest bitmap, in bits, used to deduplicate difference vectors.
const DEDUP_BITMAP_LIMIT: u128 = 1 << 32;

/// Distinct differences of the projections of an index set onto its first
/// `width` coordinates, normalised so the last component is positive.
/// Differences whose last component vanishes are dropped: they join two
/// distinct shorter projections, which the previous coordinate already
/// separated.
#[derive(Clone, Debug)]
struct StepDifferences {
    width: usize,
    rows: Vec<i64>,
    last_max: u64,
    /// Largest absolute value among the leading components.
    head_max: u64,
}

impl StepDifferences {
    /// `None` when the difference box is too large to deduplicate.
    fn build(projections: &[&[i64]]) -> Option<Self> {
        let width = projections.first()?.len();
        let bound: Vec<i64> = (0..width)
            .map(|t| projections.iter().map(|k| k[t].abs()).max().unwrap_or(0) * 2)
            .collect();
        // mixed-radix box: components t < width-1 span [-2B, 2B], the last [1, 2B]
        let radix: Vec<u128> = (0..width)
            .map(|t| {
                if t + 1 == width {
                    bound[t] as u128
                } else {
                    2 * bound[t] as u128 + 1
                }
            })
            .collect();
        let volume = radix.iter().try_fold(1u128, |acc, &r| acc.checked_mul(r))?;
        if volume == 0 || volume > DEDUP_BITMAP_LIMIT {
            return (volume == 0).then(|| Self {
                width,
                rows: Vec::new(),
                last_max: 0,
                head_max: 0,
            });
        }
        let mut bitmap = vec![0u64; (volume as usize).div_ceil(64)];
        let key = |diff: &mut dyn Iterator<Item = i64>| {
            let mut idx = 0u128;
            for (t, v) in diff.enumerate() {
                let digit = if t + 1 == width { v - 1 } else { v + bound[t] };
                idx = idx * radix[t] + digit as u128;
            }
            idx as usize
        };
        for (p, a) in projections.iter().enumerate() {
            for b in &projections[p + 1..] {
                let last = b[width - 1] - a[width - 1];
                if last == 0 {
                    continue;
                }
                let sign = last.signum();
                let idx = key(&mut a.iter().zip(b.iter()).map(|(x, y)| sign * (y - x)));
                bitmap[idx / 64] |= 1 << (idx % 64);
            }
        }
        let mut rows = Vec::new();
        let mut digits = vec![0i64; width];
        for (w, &word) in bitmap.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let mut idx = (w * 64 + word.trailing_zeros() as usize) as u128;
                word &= word - 1;
                for t in (0..width).rev() {
                    let digit = (idx % radix[t]) as i64;
                    idx /= radix[t];
                    digits[t] = if t + 1 == width {
                        digit + 1
                    } else {
                        digit - bound[t]
                    };
                }
                rows.extend_from_slice(&digits);
            }
        }
        // short differences first: they exhaust failing sizes sooner
        let mut order: Vec<usize> = (0..rows.len() / width).collect();
        let norm = |i: &usize| {
            rows[i * width..(i + 1) * width]
                .iter()
                .map(|v| v.abs())
                .max()
                .unwrap_or(0)
        };
        order.sort_by_key(norm);
        let rows = order
            .iter()
            .flat_map(|&i| rows[i * width..(i + 1) * width].iter().copied())
            .collect();
        let head_max = bound[..width - 1].iter().copied().max().unwrap_or(0) as u64;
        Some(Self {
            width,
            rows,
            last_max: bound[width - 1] as u64,
            head_max,
        })
    }

    /// Smallest `z_s` with no difference satisfying `Δk·(z, z_s) ≡ 0 (mod m)`,
    /// where `z` holds the components chosen so far.
    fn smallest_valid(&self, z: &[i64], m: u64) -> Option<u64> {
        let table = solution_table(self.last_max as usize + 1, m);
        let mut forbidden = Forbidden::new(m);
        let head_max = self.head_max as u128;
        let fits_i64 = head_max * m as u128 * self.width as u128 <= i64::MAX as u128 / 2;
        for (i, row) in self.rows.chunks_exact(self.width).enumerate() {
            let (head, last) = row.split_at(self.width - 1);
            let rhs = if fits_i64 {
                let dr: i64 = head.iter().zip(z).map(|(&a, &b)| a * b).sum();
                (-dr).rem_euclid(m as i64) as u64
            } else {
                let dr: i128 = head
                    .iter()
                    .zip(z)
                    .map(|(&a, &b)| a as i128 * b as i128)
                    .sum();
                (-dr).rem_euclid(m as i128) as u64
            };
            let entry = table[last[0] as usize];
            if entry.0 == 1 {
                forbidden.mark(rhs * entry.1 % m);
            } else {
                forbidden.mark_solutions(entry, rhs);
            }
            if i % 1024 == 1023 && forbidden.full() {
                return None;
            }
        }
        forbidden.first_free()
    }
}

/// Smallest `z` in `0..m` for which `(prefix[i] + k_i z) mod m` are
/// pairwise distinct, choosing between direct scanning and pair marking.
fn smallest_valid_component(prefix: &[u64], kvals: &[i64], m: u64) -> Option<u64> {
    let mi = m as i64;
    let step: Vec<u64> = kvals.iter().map(|k| k.rem_euclid(mi) as u64).collect();
    let p = prefix.len() as u64;
    let pair_cost = p.saturating_mul(p) / 2;
    let scan_cost = m.saturating_mul(p.min(crate::index_sets::isqrt(m) + 1));
    if pair_cost <= scan_cost {
        forbidden_component(prefix, kvals, m)
    } else {
        scan_component(prefix, &step, m, m)
    }
}

/// Difference sets per coordinate, built on first use and shared by all
/// candidate sizes.
struct DifferenceCache<'a> {
    set: &'a FrequencyIndexSet,
    steps: Vec<Option<Option<StepDifferences>>>,
}

impl<'a> DifferenceCache<'a> {
    fn new(set: &'a FrequencyIndexSet) -> Self {
        Self {
            set,
            steps: vec![None; set.dim()],
        }
    }

    fn get(&mut self, s: usize) -> Option<&StepDifferences> {
        let set = self.set;
        self.steps[s]
            .get_or_insert_with(|| {
                let mut projections: Vec<&[i64]> = set.iter().map(|k| &k[..=s]).collect();
                projections.dedup();
                StepDifferences::build(&projections)
            })
            .as_ref()
    }
}

/// Runs the component-by-component extension for one lattice size.
/// Returns the generating vector if every coordinate succeeds.
pub fn cbc_for_size(set: &FrequencyIndexSet, m: u64) -> Option<Vec<i64>> {
    cbc_for_size_with(set, m, &mut DifferenceCache::new(set))
}

fn cbc_for_size_with(
    set: &FrequencyIndexSet,
    m: u64,
    cache: &mut DifferenceCache<'_>,
) -> Option<Vec<i64>> {
    assert!(
        m >= 1 && m <= MAX_CBC_SIZE,
        "lattice size {m} outside 1..=2^31-1"
    );
    let d = set.dim();
    let n = set.len();
    if n as u64 > m {
        return None;
    }
    let mi = m as i64;
    // residue of each index's prefix, starting with z_1 = 1
    let mut res: Vec<u64> = set.iter().map(|k| k[0].rem_euclid(mi) as u64).collect();
    // distinct first components must already separate
    {
        let mut firsts: Vec<(i64, u64)> = set.iter().zip(&res).map(|(k, &r)| (k[0], r)).collect();
        firsts.dedup_by_key(|x| x.0);
        let prefix: Vec<u64> = firsts.iter().map(|x| x.1).collect();
        let zeros = vec![0u64; prefix.len()];
        if !distinct_residues(&prefix, &zeros, 0, m) {
            return None;
        }
    }
    let mut z = vec![1i64];
    for s in 1..d {
        // distinct projections onto coordinates 0..=s are contiguous runs
        let mut prefix = Vec::new();
        let mut kvals = Vec::new();
        for i in 0..n {
            let k = set.get(i);
            if i > 0 && set.get(i - 1)[..=s] == k[..=s] {
                continue;
            }
            prefix.push(res[i]);
            kvals.push(k[s]);
        }
        let step: Vec<u64> = kvals.iter().map(|k| k.rem_euclid(mi) as u64).collect();
        // a short direct scan settles sizes where a small component works
        let zs = match scan_component(&prefix, &step, m, PROBE_LENGTH) {
            Some(zs) => zs,
            None if PROBE_LENGTH >= m => return None,
            None => match cache.get(s) {
                Some(diffs) => diffs.smallest_valid(&z, m)?,
                None => smallest_valid_component(&prefix, &kvals, m)?,
            },
        };
        for (i, r) in res.iter_mut().enumerate() {
            let ks = set.get(i)[s].rem_euclid(mi) as u64;
            *r = (*r + ks * zs) % m;
        }
        z.push(zs as i64);
    }
    Some(z)
}

/// Number of leading components tried directly before marking differences.
const PROBE_LENGTH: u64 = 32;

/// Searches the candidate stream for the first size admitting a
/// component-by-component generating vector. The result is verified to be
/// reconstructing before it is returned.
pub fn cbc_construct(
    set: &FrequencyIndexSet,
    config: &CbcConfig,
) -> Result<Rank1Lattice, CbcError> {
    if set.is_empty() {
        return Err(CbcError::EmptySet);
    }
    let sizes = candidate_sizes(set, config);
    let (start, ceiling) = (sizes.start(), sizes.ceiling());
    if start > ceiling {
        return Err(CbcError::EmptyWindow { start, ceiling });
    }
    let mut cache = DifferenceCache::new(set);
    let mut tried = 0;
    for m in sizes {
        tried += 1;
        if let Some(z) = cbc_for_size_with(set, m, &mut cache) {
            let lattice = Rank1Lattice::new(z, m).expect("candidate sizes are positive");
            assert!(
                lattice.is_reconstructing(set).expect("dimensions agree"),
                "component-by-component result {lattice} fails reconstruction"
            );
            return Ok(lattice);
        }
    }
    Err(CbcError::CandidateExhausted { ceiling, tried })
}

//! Rank-1 lattices `Λ(z, M) = {(j z / M) mod 1 : j = 0, …, M-1}`.
//!
//! All modular arithmetic goes through [`Rank1Lattice::residue`], which
//! works in 128-bit integers so that `k · z mod M` is exact for
//! `|k_s| <= 2^31`, `M < 2^63` and `d <= 16`.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::index_sets::{difference_set, FrequencyIndex, FrequencyIndexSet};

/// Largest enumerable box for [`Rank1Lattice::dual_points_in_box`].
pub const DEFAULT_BOX_BUDGET: u64 = 10_000_000;

/// Largest Fibonacci index whose `b_n` fits the lattice size budget.
pub const MAX_FIBONACCI_INDEX: u32 = 90;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice size must be >= 1")]
    EmptyLattice,
    #[error("generating vector must have at least one component")]
    EmptyGenerator,
    #[error("dimension mismatch: lattice has d = {lattice}, argument has d = {other}")]
    DimensionMismatch { lattice: usize, other: usize },
    #[error("box with {points} integer points exceeds the enumeration budget {budget}")]
    BudgetExceeded { points: u128, budget: u64 },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("parse error: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rank1Lattice {
    z: Vec<i64>,
    m: u64,
}

impl Rank1Lattice {
    pub fn new(z: Vec<i64>, m: u64) -> Result<Self, LatticeError> {
        if m == 0 {
            return Err(LatticeError::EmptyLattice);
        }
        if m > i64::MAX as u64 {
            return Err(LatticeError::OutOfRange(format!(
                "M = {m} exceeds 2^63 - 1"
            )));
        }
        if z.is_empty() {
            return Err(LatticeError::EmptyGenerator);
        }
        if z.len() > 16 {
            return Err(LatticeError::OutOfRange(format!(
                "d = {} exceeds 16",
                z.len()
            )));
        }
        Ok(Rank1Lattice { z, m })
    }

    pub fn z(&self) -> &[i64] {
        &self.z
    }

    pub fn size(&self) -> u64 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    fn check_dim(&self, d: usize) -> Result<(), LatticeError> {
        if d != self.dim() {
            return Err(LatticeError::DimensionMismatch {
                lattice: self.dim(),
                other: d,
            });
        }
        Ok(())
    }

    /// `(k · z) mod M` in `[0, M)`. Panics on a dimension mismatch.
    pub fn residue(&self, k: &[i64]) -> u64 {
        assert_eq!(
            k.len(),
            self.z.len(),
            "frequency dimension does not match lattice"
        );
        let dot: i128 = k
            .iter()
            .zip(&self.z)
            .map(|(&a, &b)| a as i128 * b as i128)
            .sum();
        dot.rem_euclid(self.m as i128) as u64
    }

    /// Numerators `j z_s mod M` of node `j`; the node is these divided by `M`.
    pub fn node_numerators(&self, j: u64, out: &mut [u64]) {
        let m = self.m as i128;
        for (o, &zs) in out.iter_mut().zip(&self.z) {
            *o = (j as i128 * zs as i128).rem_euclid(m) as u64;
        }
    }

    /// Node `j`, componentwise in `[0, 1)`.
    pub fn node(&self, j: u64) -> Vec<f64> {
        let mut num = vec![0u64; self.dim()];
        self.node_numerators(j, &mut num);
        let m = self.m as f64;
        num.into_iter().map(|n| n as f64 / m).collect()
    }

    /// All `M` nodes in order `j = 0, …, M-1`.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.m).map(|j| self.node(j)).collect()
    }

    /// True iff `k ↦ k · z mod M` is injective on `set`.
    pub fn is_reconstructing(&self, set: &FrequencyIndexSet) -> Result<bool, LatticeError> {
        self.check_dim(set.dim())?;
        if set.len() as u64 > self.m {
            return Ok(false);
        }
        if self.m <= 1 << 32 {
            let mut seen = vec![0u64; (self.m as usize).div_ceil(64)];
            for k in set.iter() {
                let r = self.residue(k) as usize;
                let (w, b) = (r / 64, 1u64 << (r % 64));
                if seen[w] & b != 0 {
                    return Ok(false);
                }
                seen[w] |= b;
            }
            Ok(true)
        } else {
            let mut seen = HashSet::with_capacity(set.len());
            Ok(set.iter().all(|k| seen.insert(self.residue(k))))
        }
    }

    /// Reconstruction check through the difference set:
    /// `D(I) ∩ Λ⊥ = {0}`. Quadratic in `|I|`; used as a cross-check.
    pub fn is_reconstructing_by_difference_set(
        &self,
        set: &FrequencyIndexSet,
    ) -> Result<bool, LatticeError> {
        self.check_dim(set.dim())?;
        let diff = difference_set(set);
        Ok(diff
            .iter()
            .all(|h| h.iter().all(|&x| x == 0) || !self.dual_contains_unchecked(h)))
    }

    fn dual_contains_unchecked(&self, h: &[i64]) -> bool {
        self.residue(h) == 0
    }

    /// `h ∈ Λ⊥`, i.e. `h · z ≡ 0 (mod M)`.
    pub fn dual_contains(&self, h: &[i64]) -> Result<bool, LatticeError> {
        self.check_dim(h.len())?;
        Ok(self.dual_contains_unchecked(h))
    }

    /// Dual lattice points inside an axis-aligned integer box, in
    /// lexicographic order.
    pub fn dual_points_in_box(
        &self,
        bx: &IntegerBox,
        budget: u64,
    ) -> Result<Vec<FrequencyIndex>, LatticeError> {
        self.check_dim(bx.dim())?;
        let points = bx.count();
        if points > budget as u128 {
            return Err(LatticeError::BudgetExceeded { points, budget });
        }
        let d = self.dim();
        let m = self.m as i128;
        let mut out = Vec::new();
        let mut k = bx.lower.clone();
        // running residue, updated incrementally along the odometer
        let mut res: i128 = k
            .iter()
            .zip(&self.z)
            .map(|(&a, &b)| a as i128 * b as i128)
            .sum::<i128>()
            .rem_euclid(m);
        let zmod: Vec<i128> = self.z.iter().map(|&x| (x as i128).rem_euclid(m)).collect();
        loop {
            if res == 0 {
                out.push(FrequencyIndex(k.clone()));
            }
            // odometer with the last coordinate fastest
            let mut s = d;
            loop {
                if s == 0 {
                    return Ok(out);
                }
                s -= 1;
                if k[s] < bx.upper[s] {
                    k[s] += 1;
                    res = (res + zmod[s]).rem_euclid(m);
                    break;
                }
                let span = (bx.upper[s] - bx.lower[s]) as i128;
                res = (res - span * zmod[s]).rem_euclid(m);
                k[s] = bx.lower[s];
            }
        }
    }

    /// Text form `M<TAB>z_1;…;z_d`.
    pub fn to_line(&self) -> String {
        format!("{}\t{}", self.m, self.z_string())
    }

    /// Generating vector joined with `;`.
    pub fn z_string(&self) -> String {
        self.z
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_line(line: &str) -> Result<Self, LatticeError> {
        let (m, z) = line
            .trim()
            .split_once('\t')
            .ok_or_else(|| LatticeError::Parse(format!("expected `M<TAB>z`, got `{line}`")))?;
        let m: u64 = m
            .trim()
            .parse()
            .map_err(|e| LatticeError::Parse(format!("M: {e}")))?;
        let z = z
            .split(';')
            .map(|c| c.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| LatticeError::Parse(format!("z: {e}")))?;
        Rank1Lattice::new(z, m)
    }
}

impl fmt::Display for Rank1Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ(({}), {})", self.z_string().replace(';', ", "), self.m)
    }
}

/// Axis-aligned box `[lower_1, upper_1] × … × [lower_d, upper_d]` of
/// integer points (bounds inclusive).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerBox {
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

impl IntegerBox {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Result<Self, LatticeError> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(LatticeError::InvalidBox(
                "bounds must have equal, nonzero length".into(),
            ));
        }
        if lower.iter().zip(&upper).any(|(a, b)| a > b) {
            return Err(LatticeError::InvalidBox(format!(
                "lower {lower:?} exceeds upper {upper:?}"
            )));
        }
        Ok(IntegerBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Number of integer points.
    pub fn count(&self) -> u128 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (b - a) as u128 + 1)
            .product()
    }

    /// Volume as a continuous box, `∏ (upper_s - lower_s)`.
    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| (b - a) as f64)
            .product()
    }
}

/// Fibonacci numbers with `b_0 = b_1 = 1`; `None` past the `u64` range.
pub fn fibonacci_number(n: u32) -> Option<u64> {
    let (mut a, mut b) = (1u64, 1u64);
    for _ in 0..n {
        let next = a.checked_add(b)?;
        a = b;
        b = next;
    }
    Some(a)
}

/// Fibonacci lattice `F_n = Λ((1, b_{n-1}), b_n)`.
pub fn fibonacci_lattice(n: u32) -> Result<Rank1Lattice, LatticeError> {
    if !(2..=MAX_FIBONACCI_INDEX).contains(&n) {
        return Err(LatticeError::OutOfRange(format!(
            "Fibonacci index {n} outside 2..={MAX_FIBONACCI_INDEX}"
        )));
    }
    let m = fibonacci_number(n).expect("b_n fits for n <= 90");
    let prev = fibonacci_number(n - 1).expect("b_{n-1} fits for n <= 90");
    Rank1Lattice::new(vec![1, prev as i64], m)
}

fn ceil_div(a: u128, b: u128) -> u128 {
    a.div_ceil(b)
}

/// Korobov-type lattice `Λ((1, ⌈3·2^{R-2}⌉), ⌈(1 + 3·2^{R-2})·2^{R-1}⌉)`.
/// `R = 0` yields the single-point lattice.
pub fn korobov_lattice_2d(r: u32) -> Result<Rank1Lattice, LatticeError> {
    if r > 30 {
        return Err(LatticeError::OutOfRange(format!(
            "Korobov refinement {r} exceeds 30"
        )));
    }
    let p = 1u128 << r;
    // 3·2^{R-2} = 3p/4 and (1 + 3p/4)·p/2 = (4 + 3p)p/8
    let z2 = ceil_div(3 * p, 4);
    let m = ceil_div((4 + 3 * p) * p, 8);
    Rank1Lattice::new(vec![1, z2 as i64], m as u64)
}

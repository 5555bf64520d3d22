//! Frequency index sets: dyadic blocks, hyperbolic crosses and their
//! anisotropic and half-open variants, square grids, axis crosses and
//! difference sets.
//!
//! Every set is stored densely, sorted lexicographically and free of
//! duplicates. Indices are kept in one flat buffer with stride `dim`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Slack used when comparing real-valued membership conditions.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum IndexSetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A single frequency vector `k` in `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrequencyIndex(pub Vec<i64>);

impl FrequencyIndex {
    pub fn zero(dim: usize) -> Self {
        FrequencyIndex(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::ops::Deref for FrequencyIndex {
    type Target = [i64];

    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for FrequencyIndex {
    fn from(v: Vec<i64>) -> Self {
        FrequencyIndex(v)
    }
}

impl From<&[i64]> for FrequencyIndex {
    fn from(v: &[i64]) -> Self {
        FrequencyIndex(v.to_vec())
    }
}

/// Provenance of a generated index set.
#[derive(Clone, Debug, PartialEq)]
pub enum IndexSetSpec {
    /// `H_R^{d,T}`: union of symmetric blocks `Q_j` over
    /// `|j|_1 - T|j|_inf <= (1-T)R + d - 1`.
    HyperbolicCross {
        d: usize,
        t: f64,
        r: f64,
    },
    /// Union of half-open dyadic boxes `(-2^{j_s-1}, 2^{j_s-1}]` over
    /// `|j|_1 - T|j|_inf <= (1-T)R`. This is the cross the numerical
    /// experiments are run on.
    DyadicCross {
        d: usize,
        t: f64,
        r: f64,
    },
    /// `H_R^{d,alpha}`; `alpha` is kept in the caller's coordinate order.
    AnisotropicCross {
        alpha: Vec<f64>,
        r: f64,
    },
    LinfBall2D {
        n: u64,
    },
    TensorGrid2D {
        r: f64,
    },
    AxisCross {
        d: usize,
        m: u64,
    },
    Explicit,
}

fn fmt_real(x: f64) -> String {
    // shortest representation that parses back to the same f64
    format!("{x}")
}

impl fmt::Display for IndexSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSetSpec::HyperbolicCross { d, t, r } => {
                write!(f, "hc(d={d},T={},R={})", fmt_real(*t), fmt_real(*r))
            }
            IndexSetSpec::DyadicCross { d, t, r } => {
                write!(f, "dyadic(d={d},T={},R={})", fmt_real(*t), fmt_real(*r))
            }
            IndexSetSpec::AnisotropicCross { alpha, r } => {
                let a: Vec<String> = alpha.iter().map(|x| fmt_real(*x)).collect();
                write!(f, "aniso(alpha={},R={})", a.join(";"), fmt_real(*r))
            }
            IndexSetSpec::LinfBall2D { n } => write!(f, "linf(N={n})"),
            IndexSetSpec::TensorGrid2D { r } => write!(f, "grid(R={})", fmt_real(*r)),
            IndexSetSpec::AxisCross { d, m } => write!(f, "axis(d={d},M={m})"),
            IndexSetSpec::Explicit => write!(f, "explicit"),
        }
    }
}

impl FromStr for IndexSetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "explicit" {
            return Ok(IndexSetSpec::Explicit);
        }
        let open = s.find('(').ok_or_else(|| format!("malformed kind `{s}`"))?;
        if !s.ends_with(')') {
            return Err(format!("malformed kind `{s}`"));
        }
        let name = &s[..open];
        let body = &s[open + 1..s.len() - 1];
        let mut kv = std::collections::HashMap::new();
        for part in body.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("malformed parameter `{part}`"))?;
            kv.insert(k.trim(), v.trim());
        }
        let get = |key: &str| -> Result<&str, String> {
            kv.get(key)
                .copied()
                .ok_or_else(|| format!("missing `{key}` in `{s}`"))
        };
        let real = |key: &str| -> Result<f64, String> {
            get(key)?.parse::<f64>().map_err(|e| format!("{key}: {e}"))
        };
        let int = |key: &str| -> Result<u64, String> {
            get(key)?.parse::<u64>().map_err(|e| format!("{key}: {e}"))
        };
        match name {
            "hc" => Ok(IndexSetSpec::HyperbolicCross {
                d: int("d")? as usize,
                t: real("T")?,
                r: real("R")?,
            }),
            "dyadic" => Ok(IndexSetSpec::DyadicCross {
                d: int("d")? as usize,
                t: real("T")?,
                r: real("R")?,
            }),
            "aniso" => {
                let alpha = get("alpha")?
                    .split(';')
                    .map(|x| x.parse::<f64>().map_err(|e| format!("alpha: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(IndexSetSpec::AnisotropicCross {
                    alpha,
                    r: real("R")?,
                })
            }
            "linf" => Ok(IndexSetSpec::LinfBall2D { n: int("N")? }),
            "grid" => Ok(IndexSetSpec::TensorGrid2D { r: real("R")? }),
            "axis" => Ok(IndexSetSpec::AxisCross {
                d: int("d")? as usize,
                m: int("M")?,
            }),
            _ => Err(format!("unknown index set kind `{name}`")),
        }
    }
}

/// Finite, sorted, duplicate-free set of frequencies in `Z^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyIndexSet {
    dim: usize,
    data: Vec<i64>,
    spec: IndexSetSpec,
}

impl FrequencyIndexSet {
    /// Collects `indices`, sorting and removing duplicates.
    pub fn from_indices<I, K>(
        dim: usize,
        indices: I,
        spec: IndexSetSpec,
    ) -> Result<Self, IndexSetError>
    where
        I: IntoIterator<Item = K>,
        K: AsRef<[i64]>,
    {
        if dim == 0 {
            return Err(IndexSetError::InvalidParameter(
                "dimension must be >= 1".into(),
            ));
        }
        let mut rows: Vec<Vec<i64>> = Vec::new();
        for k in indices {
            let k = k.as_ref();
            if k.len() != dim {
                return Err(IndexSetError::DimensionMismatch {
                    expected: dim,
                    found: k.len(),
                });
            }
            rows.push(k.to_vec());
        }
        rows.sort_unstable();
        rows.dedup();
        let data = rows.into_iter().flatten().collect();
        Ok(FrequencyIndexSet { dim, data, spec })
    }

    fn from_sorted_rows(dim: usize, mut rows: Vec<Vec<i64>>, spec: IndexSetSpec) -> Self {
        rows.sort_unstable();
        rows.dedup();
        FrequencyIndexSet {
            dim,
            data: rows.into_iter().flatten().collect(),
            spec,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn spec(&self) -> &IndexSetSpec {
        &self.spec
    }

    pub fn with_spec(mut self, spec: IndexSetSpec) -> Self {
        self.spec = spec;
        self
    }

    pub fn get(&self, i: usize) -> &[i64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, i64> {
        self.data.chunks_exact(self.dim)
    }

    /// Position of `k` in the sorted order.
    pub fn position(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.get(mid).cmp(k) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.position(k).is_some()
    }

    pub fn is_subset_of(&self, other: &FrequencyIndexSet) -> bool {
        self.dim == other.dim && self.iter().all(|k| other.contains(k))
    }

    /// Largest absolute component over all indices.
    pub fn max_abs_component(&self) -> i64 {
        self.data.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// Text form: a `# dim=<d> kind=<spec>` header, then one tab-separated
    /// frequency per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("# dim={} kind={}\n", self.dim, self.spec);
        for k in self.iter() {
            let cols: Vec<String> = k.iter().map(|x| x.to_string()).collect();
            out.push_str(&cols.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, IndexSetError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(IndexSetError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let (dim, spec) =
            parse_header(header).map_err(|msg| IndexSetError::Parse { line: 1, msg })?;
        let mut rows = Vec::new();
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split('\t')
                .map(|c| c.trim().parse::<i64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| IndexSetError::Parse {
                    line: no + 1,
                    msg: e.to_string(),
                })?;
            if row.len() != dim {
                return Err(IndexSetError::Parse {
                    line: no + 1,
                    msg: format!("expected {dim} components, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        FrequencyIndexSet::from_indices(dim, rows, spec)
    }
}

/// Parses `# dim=<d> kind=<spec>`.
pub(crate) fn parse_header(line: &str) -> Result<(usize, IndexSetSpec), String> {
    let rest = line
        .strip_prefix('#')
        .ok_or_else(|| "header must start with `#`".to_string())?
        .trim();
    let rest = rest
        .strip_prefix("dim=")
        .ok_or_else(|| "header must contain `dim=`".to_string())?;
    let (dim, kind) = rest
        .split_once(' ')
        .ok_or_else(|| "header must contain `kind=`".to_string())?;
    let dim: usize = dim.parse().map_err(|e| format!("dim: {e}"))?;
    let kind = kind
        .trim()
        .strip_prefix("kind=")
        .ok_or_else(|| "header must contain `kind=`".to_string())?;
    Ok((dim, kind.parse()?))
}

/// Symmetric dyadic block `Q_j`: `{-1,0,1}` for `j = 0`, otherwise
/// `[-2^j, -2^{j-1}-1] ∪ [2^{j-1}+1, 2^j]`.
pub fn dyadic_block(j: u32) -> Vec<i64> {
    if j == 0 {
        return vec![-1, 0, 1];
    }
    let hi = 1i64 << j;
    let lo = (1i64 << (j - 1)) + 1;
    (-hi..=-lo).chain(lo..=hi).collect()
}

/// Half-open dyadic ring: `{0}` for `j = 0`, `{1}` for `j = 1`, otherwise
/// `(-2^{j-1}, -2^{j-2}] ∪ (2^{j-2}, 2^{j-1}]`. The rings for `j' <= j`
/// tile `(-2^{j-1}, 2^{j-1}]`.
pub fn half_open_block(j: u32) -> Vec<i64> {
    match j {
        0 => vec![0],
        1 => vec![1],
        _ => {
            let outer = 1i64 << (j - 1);
            let inner = 1i64 << (j - 2);
            (-outer + 1..=-inner).chain(inner + 1..=outer).collect()
        }
    }
}

/// All `j` in `N_0^d` with `level(j) <= budget`, where `level` must be
/// nondecreasing in every component. Components are capped at `jmax`.
fn enumerate_levels<F>(d: usize, jmax: u32, admissible: F) -> Vec<Vec<u32>>
where
    F: Fn(&[u32]) -> bool,
{
    let mut out = Vec::new();
    let mut j = vec![0u32; d];
    fn rec<F: Fn(&[u32]) -> bool>(
        s: usize,
        j: &mut Vec<u32>,
        jmax: u32,
        adm: &F,
        out: &mut Vec<Vec<u32>>,
    ) {
        if s == j.len() {
            out.push(j.clone());
            return;
        }
        for v in 0..=jmax {
            j[s] = v;
            // remaining components are zero here, so this is the smallest
            // level reachable below this prefix
            if !adm(j) {
                break;
            }
            rec(s + 1, j, jmax, adm, out);
        }
        j[s] = 0;
    }
    if admissible(&j) {
        rec(0, &mut j, jmax, &admissible, &mut out);
    }
    out
}

fn expand_blocks(levels: &[Vec<u32>], block: fn(u32) -> Vec<i64>) -> Vec<Vec<i64>> {
    let mut rows = Vec::new();
    for j in levels {
        let blocks: Vec<Vec<i64>> = j.iter().map(|&js| block(js)).collect();
        let mut cur = vec![0i64; j.len()];
        product_into(&blocks, 0, &mut cur, &mut rows);
    }
    rows
}

fn product_into(blocks: &[Vec<i64>], s: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if s == blocks.len() {
        out.push(cur.clone());
        return;
    }
    for &v in &blocks[s] {
        cur[s] = v;
        product_into(blocks, s + 1, cur, out);
    }
}

fn check_cross_params(d: usize, t: f64, r: f64) -> Result<(), IndexSetError> {
    if d == 0 {
        return Err(IndexSetError::InvalidParameter("d must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(IndexSetError::InvalidParameter(format!(
            "T = {t} is outside [0, 1)"
        )));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(IndexSetError::InvalidParameter(format!(
            "R = {r} must be finite and >= 0"
        )));
    }
    Ok(())
}

fn cross_levels(d: usize, t: f64, r: f64, offset: f64) -> Vec<Vec<u32>> {
    let budget = (1.0 - t) * r + offset;
    // (1-T)|j|_inf <= |j|_1 - T|j|_inf bounds every component
    let jmax = ((budget / (1.0 - t)) + MEMBERSHIP_TOL).floor().max(0.0) as u32;
    enumerate_levels(d, jmax, |j| {
        let l1: f64 = j.iter().map(|&x| x as f64).sum();
        let linf = j.iter().copied().max().unwrap_or(0) as f64;
        l1 - t * linf <= budget + MEMBERSHIP_TOL
    })
}

/// Generalized dyadic hyperbolic cross `H_R^{d,T}` built from the
/// symmetric blocks of [`dyadic_block`].
pub fn hyperbolic_cross(d: usize, t: f64, r: f64) -> Result<FrequencyIndexSet, IndexSetError> {
    check_cross_params(d, t, r)?;
    let levels = cross_levels(d, t, r, d as f64 - 1.0);
    let rows = expand_blocks(&levels, dyadic_block);
    Ok(FrequencyIndexSet::from_sorted_rows(
        d,
        rows,
        IndexSetSpec::HyperbolicCross { d, t, r },
    ))
}

/// Hyperbolic cross made of half-open dyadic boxes with no level offset:
/// the union of `(-2^{j_1-1}, 2^{j_1-1}] × … × (-2^{j_d-1}, 2^{j_d-1}]`
/// over `|j|_1 - T|j|_inf <= (1-T)R` (with `(-1/2, 1/2]` read as `{0}`).
pub fn dyadic_cross(d: usize, t: f64, r: f64) -> Result<FrequencyIndexSet, IndexSetError> {
    check_cross_params(d, t, r)?;
    let levels = cross_levels(d, t, r, 0.0);
    let rows = expand_blocks(&levels, half_open_block);
    Ok(FrequencyIndexSet::from_sorted_rows(
        d,
        rows,
        IndexSetSpec::DyadicCross { d, t, r },
    ))
}

/// Anisotropic hyperbolic cross `H_R^{d,alpha}` over
/// `(1/alpha_min) alpha·j <= R`.
pub fn anisotropic_cross(alpha: &[f64], r: f64) -> Result<FrequencyIndexSet, IndexSetError> {
    if alpha.is_empty() {
        return Err(IndexSetError::InvalidParameter(
            "alpha must be non-empty".into(),
        ));
    }
    if alpha.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return Err(IndexSetError::InvalidParameter(format!(
            "alpha components must be positive, got {alpha:?}"
        )));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(IndexSetError::InvalidParameter(format!(
            "R = {r} must be finite and >= 0"
        )));
    }
    let d = alpha.len();
    let amin = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    let jmax = (r + MEMBERSHIP_TOL).floor() as u32;
    let levels = enumerate_levels(d, jmax, |j| {
        let w: f64 = j.iter().zip(alpha).map(|(&js, &a)| a * js as f64).sum();
        w / amin <= r + MEMBERSHIP_TOL
    });
    let rows = expand_blocks(&levels, dyadic_block);
    Ok(FrequencyIndexSet::from_sorted_rows(
        d,
        rows,
        IndexSetSpec::AnisotropicCross {
            alpha: alpha.to_vec(),
            r,
        },
    ))
}

/// `ceil(a / 2)` for signed `a`.
fn ceil_half(a: i64) -> i64 {
    (a + 1).div_euclid(2)
}

/// Two-dimensional ℓ∞-ball `{-ceil((N-2)/2), …, ceil((N-1)/2)}^2`.
pub fn linf_ball_2d(n: u64) -> Result<FrequencyIndexSet, IndexSetError> {
    if n == 0 {
        return Err(IndexSetError::InvalidParameter("N must be >= 1".into()));
    }
    let n = n as i64;
    let lo = -ceil_half(n - 2);
    let hi = ceil_half(n - 1);
    let mut data = Vec::with_capacity((n * n * 2) as usize);
    for a in lo..=hi {
        for b in lo..=hi {
            data.push(a);
            data.push(b);
        }
    }
    Ok(FrequencyIndexSet {
        dim: 2,
        data,
        spec: IndexSetSpec::LinfBall2D { n: n as u64 },
    })
}

/// Tensor product grid `G_R^2 = (-2^{floor(R)-1}, 2^{floor(R)-1}]^2`.
pub fn tensor_grid_2d(r: f64) -> Result<FrequencyIndexSet, IndexSetError> {
    if !(r >= 1.0) || !r.is_finite() || r >= 62.0 {
        return Err(IndexSetError::InvalidParameter(format!(
            "R = {r} must lie in [1, 62)"
        )));
    }
    let half = 1i64 << (r.floor() as u32 - 1);
    let mut data = Vec::new();
    for a in -half + 1..=half {
        for b in -half + 1..=half {
            data.push(a);
            data.push(b);
        }
    }
    Ok(FrequencyIndexSet {
        dim: 2,
        data,
        spec: IndexSetSpec::TensorGrid2D { r },
    })
}

/// Integer square root.
pub fn isqrt(m: u64) -> u64 {
    let mut r = (m as f64).sqrt() as u64;
    while r * r > m {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|v| v <= m) {
        r += 1;
    }
    r
}

/// Two-dimensional axis cross of radius `floor(sqrt(M))`, embedded in the
/// first two coordinates of `Z^d`.
pub fn axis_cross(d: usize, m: u64) -> Result<FrequencyIndexSet, IndexSetError> {
    if d < 2 {
        return Err(IndexSetError::InvalidParameter(
            "axis cross needs d >= 2".into(),
        ));
    }
    if m == 0 {
        return Err(IndexSetError::InvalidParameter("M must be >= 1".into()));
    }
    let rad = isqrt(m) as i64;
    let mut rows = Vec::with_capacity(4 * rad as usize + 1);
    for t in -rad..=rad {
        let mut a = vec![0; d];
        a[0] = t;
        rows.push(a);
        if t != 0 {
            let mut b = vec![0; d];
            b[1] = t;
            rows.push(b);
        }
    }
    Ok(FrequencyIndexSet::from_sorted_rows(
        d,
        rows,
        IndexSetSpec::AxisCross { d, m },
    ))
}

/// Difference set `D(I) = {h1 - h2 : h1, h2 ∈ I}`.
pub fn difference_set(set: &FrequencyIndexSet) -> FrequencyIndexSet {
    let d = set.dim();
    let mut seen: HashSet<Vec<i64>> = HashSet::with_capacity(set.len() * 4);
    for a in set.iter() {
        for b in set.iter() {
            seen.insert(a.iter().zip(b).map(|(x, y)| x - y).collect());
        }
    }
    FrequencyIndexSet::from_sorted_rows(d, seen.into_iter().collect(), IndexSetSpec::Explicit)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent enumeration of `H_R^{d,T}`: scan every frequency in a
    /// bounding box and locate its level vector directly.
    fn level_of(k: i64) -> u32 {
        let a = k.unsigned_abs();
        if a <= 1 {
            0
        } else {
            // smallest j with a <= 2^j
            64 - (a - 1).leading_zeros()
        }
    }

    fn brute_hc(d: usize, t: f64, r: f64) -> Vec<Vec<i64>> {
        let bound = 1i64 << ((r + d as f64) as u32 + 1);
        let mut out = Vec::new();
        let mut k = vec![-bound; d];
        loop {
            let j: Vec<f64> = k.iter().map(|&x| level_of(x) as f64).collect();
            let l1: f64 = j.iter().sum();
            let linf = j.iter().cloned().fold(0.0, f64::max);
            if l1 - t * linf <= (1.0 - t) * r + d as f64 - 1.0 + 1e-12 {
                out.push(k.clone());
            }
            let mut s = 0;
            loop {
                if s == d {
                    break;
                }
                k[s] += 1;
                if k[s] <= bound {
                    break;
                }
                k[s] = -bound;
                s += 1;
            }
            if s == d {
                break;
            }
        }
        out.sort();
        out
    }

    #[test]
    fn dyadic_block_examples() {
        assert_eq!(dyadic_block(0), vec![-1, 0, 1]);
        assert_eq!(dyadic_block(1), vec![-2, 2]);
        assert_eq!(dyadic_block(2), vec![-4, -3, 3, 4]);
    }

    #[test]
    fn dyadic_blocks_partition_integers() {
        let limit = 1i64 << 16;
        let mut hits = vec![0u8; (2 * limit + 1) as usize];
        for j in 0..=16 {
            for v in dyadic_block(j) {
                if v.abs() <= limit {
                    hits[(v + limit) as usize] += 1;
                }
            }
        }
        assert!(hits.iter().all(|&h| h == 1));
    }

    #[test]
    fn half_open_blocks_tile_the_half_open_box() {
        for j in 0..12u32 {
            let mut all: Vec<i64> = (0..=j).flat_map(half_open_block).collect();
            all.sort();
            let half = if j == 0 { 0 } else { 1i64 << (j - 1) };
            let expected: Vec<i64> = if j == 0 {
                vec![0]
            } else {
                (-half + 1..=half).collect()
            };
            assert_eq!(all, expected, "j = {j}");
        }
    }

    #[test]
    fn hyperbolic_cross_small_cases() {
        let h = hyperbolic_cross(2, 0.0, 1.0).unwrap();
        assert_eq!(h.len(), 49);
        // with d = 1 the offset vanishes and only Q_0 is admitted at R = 0
        let h = hyperbolic_cross(1, 0.0, 0.0).unwrap();
        assert_eq!(h.iter().map(|k| k[0]).collect::<Vec<_>>(), vec![-1, 0, 1]);
        let h = hyperbolic_cross(1, 0.0, 1.0).unwrap();
        assert_eq!(
            h.iter().map(|k| k[0]).collect::<Vec<_>>(),
            vec![-2, -1, 0, 1, 2]
        );
    }

    #[test]
    fn hyperbolic_cross_matches_brute_force() {
        for (d, t, r) in [
            (2, 0.0, 0.0),
            (2, 0.0, 2.0),
            (2, 0.5, 3.0),
            (3, 0.0, 1.0),
            (3, 0.25, 1.5),
            (2, 0.0, 2.5),
        ] {
            let h = hyperbolic_cross(d, t, r).unwrap();
            let brute = brute_hc(d, t, r);
            let got: Vec<Vec<i64>> = h.iter().map(|k| k.to_vec()).collect();
            assert_eq!(got, brute, "d={d} T={t} R={r}");
        }
    }

    #[test]
    fn hyperbolic_cross_rejects_bad_parameters() {
        assert!(hyperbolic_cross(2, 1.0, 1.0).is_err());
        assert!(hyperbolic_cross(2, -0.1, 1.0).is_err());
        assert!(hyperbolic_cross(2, 0.0, -1.0).is_err());
        assert!(hyperbolic_cross(0, 0.0, 1.0).is_err());
    }

    #[test]
    fn hyperbolic_cross_cardinality_growth() {
        let ratios: Vec<f64> = (4..=14)
            .map(|r| {
                hyperbolic_cross(2, 0.0, r as f64).unwrap().len() as f64 / (2f64.powi(r) * r as f64)
            })
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 1.0 && hi < 16.0, "ratios {ratios:?}");
    }

    #[test]
    fn energy_crosses_are_nested_in_the_plain_cross() {
        for d in [2, 3] {
            for r in 0..=(if d == 2 { 8 } else { 5 }) {
                let r = r as f64;
                let base = dyadic_cross(d, 0.0, r).unwrap();
                for t in [0.1, 0.5, 0.9] {
                    assert!(
                        dyadic_cross(d, t, r).unwrap().is_subset_of(&base),
                        "d={d} R={r} T={t}"
                    );
                    // with the additive offset the T-cross reaches level R + (d-1)/(1-T)
                    // on the axes, so it only nests in a wider plain cross
                    if t > 0.5 || r + (d as f64 - 1.0) / (1.0 - t) > 9.0 {
                        continue;
                    }
                    let h = hyperbolic_cross(d, t, r).unwrap();
                    let widened =
                        hyperbolic_cross(d, 0.0, r + (d as f64 - 1.0) * t / (1.0 - t) + 1e-9)
                            .unwrap();
                    assert!(h.is_subset_of(&widened), "d={d} R={r} T={t}");
                }
            }
        }
        let axis = [1i64 << 2, 0];
        assert!(hyperbolic_cross(2, 0.5, 0.0).unwrap().contains(&axis));
        assert!(!hyperbolic_cross(2, 0.0, 0.0).unwrap().contains(&axis));
    }

    #[test]
    fn dyadic_cross_small_cases() {
        assert_eq!(dyadic_cross(2, 0.0, 0.0).unwrap().len(), 1);
        let h = dyadic_cross(2, 0.0, 1.0).unwrap();
        let got: Vec<Vec<i64>> = h.iter().map(|k| k.to_vec()).collect();
        assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(dyadic_cross(2, 0.0, 5.0).unwrap().len(), 112);
        assert_eq!(dyadic_cross(2, 0.0, 6.0).unwrap().len(), 256);
        assert_eq!(dyadic_cross(3, 0.0, 5.0).unwrap().len(), 272);
        assert_eq!(dyadic_cross(4, 0.0, 4.0).unwrap().len(), 192);
    }

    #[test]
    fn dyadic_cross_is_contained_in_its_bounding_box() {
        for r in 1..=8 {
            let h = dyadic_cross(2, 0.0, r as f64).unwrap();
            let half = 1i64 << (r - 1);
            assert!(h.iter().all(|k| k.iter().all(|&x| x > -half && x <= half)));
            assert!(h.contains(&[half, 0]) && h.contains(&[0, half]));
        }
    }

    #[test]
    fn anisotropic_examples() {
        let iso = anisotropic_cross(&[1.0, 1.0], 2.0).unwrap();
        assert_eq!(iso.len(), 49);
        let hc = hyperbolic_cross(2, 0.0, 1.0).unwrap();
        assert_eq!(
            iso.iter().collect::<Vec<_>>(),
            hc.iter().collect::<Vec<_>>()
        );
        assert_eq!(anisotropic_cross(&[1.0, 2.0], 2.0).unwrap().len(), 33);
        assert!(anisotropic_cross(&[1.0, 0.0], 2.0).is_err());
        assert!(anisotropic_cross(&[1.0, -2.0], 2.0).is_err());
    }

    #[test]
    fn anisotropic_cardinality_growth() {
        // mu = number of minimal alpha components = 2
        let ratios: Vec<f64> = (6..=12)
            .map(|r| {
                anisotropic_cross(&[1.0, 1.0, 2.0], r as f64).unwrap().len() as f64
                    / (2f64.powi(r) * r as f64)
            })
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.5 && hi < 32.0 && hi / lo < 4.0, "ratios {ratios:?}");
    }

    #[test]
    fn anisotropic_difference_set_embedding() {
        let alpha = [1.0, 2.0];
        for r in 1..=6 {
            let h = anisotropic_cross(&alpha, r as f64).unwrap();
            let big = anisotropic_cross(&alpha, 2.0 * r as f64 + 3.0).unwrap();
            assert!(difference_set(&h).is_subset_of(&big), "R = {r}");
        }
    }

    #[test]
    fn linf_ball_examples() {
        let one = linf_ball_2d(1).unwrap();
        assert_eq!(one.iter().collect::<Vec<_>>(), vec![&[0, 0][..]]);
        let two = linf_ball_2d(2).unwrap();
        assert_eq!(two.len(), 4);
        assert!(two.iter().all(|k| k.iter().all(|&x| x == 0 || x == 1)));
        let three = linf_ball_2d(3).unwrap();
        assert_eq!(three.len(), 9);
        assert!(three.iter().all(|k| k.iter().all(|&x| x.abs() <= 1)));
        for n in 1..40 {
            assert_eq!(linf_ball_2d(n).unwrap().len() as u64, n * n);
        }
        assert!(linf_ball_2d(0).is_err());
    }

    #[test]
    fn tensor_grid_examples() {
        let g = tensor_grid_2d(1.0).unwrap();
        assert_eq!(
            g.iter().collect::<Vec<_>>(),
            vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]
        );
        let g = tensor_grid_2d(2.0).unwrap();
        assert_eq!(g.len(), 16);
        assert!(g.iter().all(|k| k.iter().all(|&x| (-1..=2).contains(&x))));
        for r in 1..=10 {
            assert_eq!(tensor_grid_2d(r as f64 + 0.5).unwrap().len(), 1 << (2 * r));
        }
    }

    #[test]
    fn axis_cross_examples() {
        let a = axis_cross(2, 4).unwrap();
        assert_eq!(a.len(), 9);
        assert!(a.contains(&[-2, 0]) && a.contains(&[0, 2]) && !a.contains(&[1, 1]));
        let a = axis_cross(3, 1).unwrap();
        let got: Vec<Vec<i64>> = a.iter().map(|k| k.to_vec()).collect();
        assert_eq!(
            got,
            vec![
                vec![-1, 0, 0],
                vec![0, -1, 0],
                vec![0, 0, 0],
                vec![0, 1, 0],
                vec![1, 0, 0]
            ]
        );
        for m in 1..=100 {
            assert_eq!(axis_cross(2, m).unwrap().len() as u64, 4 * isqrt(m) + 1);
        }
    }

    #[test]
    fn difference_set_examples() {
        let zero = FrequencyIndexSet::from_indices(2, [[0i64, 0]], IndexSetSpec::Explicit).unwrap();
        assert_eq!(difference_set(&zero).len(), 1);
        let grid = tensor_grid_2d(1.0).unwrap();
        let dg = difference_set(&grid);
        assert_eq!(dg.len(), 9);
        assert!(dg.iter().all(|k| k.iter().all(|&x| x.abs() <= 1)));
    }

    #[test]
    fn from_indices_sorts_and_rejects_bad_dims() {
        let s =
            FrequencyIndexSet::from_indices(2, [[1i64, 0], [0, 0], [1, 0]], IndexSetSpec::Explicit)
                .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.get(0), &[0, 0]);
        let bad = FrequencyIndexSet::from_indices(2, vec![vec![1i64]], IndexSetSpec::Explicit);
        assert_eq!(
            bad,
            Err(IndexSetError::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn text_serialization_layout() {
        let g = tensor_grid_2d(1.0).unwrap();
        assert_eq!(
            g.to_text(),
            "# dim=2 kind=grid(R=1)\n0\t0\n0\t1\n1\t0\n1\t1\n"
        );
        let back = FrequencyIndexSet::parse_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
        assert!(FrequencyIndexSet::parse_text("").is_err());
        assert!(FrequencyIndexSet::parse_text("# dim=2 kind=explicit\n1\t2\t3\n").is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for spec in [
            IndexSetSpec::HyperbolicCross {
                d: 3,
                t: 0.25,
                r: 4.5,
            },
            IndexSetSpec::DyadicCross {
                d: 2,
                t: 0.0,
                r: 7.0,
            },
            IndexSetSpec::AnisotropicCross {
                alpha: vec![1.0, 1.5, 2.0],
                r: 3.0,
            },
            IndexSetSpec::LinfBall2D { n: 17 },
            IndexSetSpec::TensorGrid2D { r: 3.0 },
            IndexSetSpec::AxisCross { d: 4, m: 99 },
            IndexSetSpec::Explicit,
        ] {
            assert_eq!(spec.to_string().parse::<IndexSetSpec>().unwrap(), spec);
        }
    }
}

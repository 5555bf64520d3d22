//! Weighted norms, exact kink errors and lower-bound witnesses.
//!
//! The hybrid weight is
//! `ω^{α,β}(k)² = ∏_s (1 + |k_s|²)^α · (1 + ‖k‖₂²)^β`; `α` measures dominating
//! mixed smoothness and `β` isotropic smoothness.
//!
//! Any rank-1 lattice with `M` nodes has two distinct frequencies in the
//! two-dimensional axis cross of radius `⌊√M⌋` whose characters coincide on
//! all nodes (pigeonhole on the `(⌊√M⌋+1)² > M` grid points
//! `{0,…,⌊√M⌋}²`). Their normalised difference is a fooling function: it
//! vanishes at every node, so any algorithm using only these samples errs
//! by at least its norm in the target space.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::index_sets::{isqrt, FrequencyIndex, IndexSetSpec};
use crate::lattice::Rank1Lattice;
use crate::spectral::SpectralApproximation;
use crate::testfn::kink_coeff;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("parameters outside the admissible domain α > γ − β ≥ 0, α + β > 0 (α={alpha}, β={beta}, γ={gamma})")]
    ParameterDomain { alpha: f64, beta: f64, gamma: f64 },
    #[error("lattice must have dimension >= 2, got {0}")]
    Dimension(usize),
    #[error("squared error {0:e} is negative beyond rounding")]
    NegativeRadicand(f64),
}

/// Smoothness parameters `α`, `β` of the source space and `γ` of the target
/// space, with an optional per-coordinate vector for anisotropic crosses.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothnessParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub alpha_vector: Option<Vec<f64>>,
}

impl SmoothnessParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            alpha_vector: None,
        }
    }

    /// Checks `α > γ − β ≥ 0` and `α + β > 0`.
    pub fn check_lower_bound_domain(&self) -> Result<(), AnalysisError> {
        let (a, b, g) = (self.alpha, self.beta, self.gamma);
        if a > g - b && g - b >= 0.0 && a + b > 0.0 {
            Ok(())
        } else {
            Err(AnalysisError::ParameterDomain {
                alpha: a,
                beta: b,
                gamma: g,
            })
        }
    }
}

/// `ω^{α,β}(k) = sqrt(∏_s (1+|k_s|²)^α (1+‖k‖₂²)^β)`.
pub fn weight_omega(k: &[i64], alpha: f64, beta: f64) -> f64 {
    let sq = |v: i64| (v as f64) * (v as f64);
    let mixed: f64 = k.iter().map(|&ks| (1.0 + sq(ks)).ln()).sum();
    let iso = (1.0 + k.iter().map(|&ks| sq(ks)).sum::<f64>()).ln();
    (0.5 * (alpha * mixed + beta * iso)).exp()
}

/// `‖p | H^{α,β}‖ = sqrt(Σ_k |c_k|² ω^{α,β}(k)²)`.
pub fn hab_norm(p: &SpectralApproximation, alpha: f64, beta: f64) -> f64 {
    p.iter()
        .map(|(k, c)| c.norm_sqr() * weight_omega(k, alpha, beta).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Exact `L2(T^d)` distance between the kink function and the trigonometric
/// polynomial `approx`, via Parseval:
/// `Σ_{k∈I} |ĝ_k − c_k|² + (1 − Σ_{k∈I} ĝ_k²)` using `‖g‖ = 1`.
pub fn kink_l2_error(approx: &SpectralApproximation) -> Result<f64, AnalysisError> {
    let mut on_set = Vec::with_capacity(approx.index_set().len());
    let mut captured = Vec::with_capacity(approx.index_set().len());
    for (k, c) in approx.iter() {
        let g = kink_coeff(k);
        on_set.push((c - g).norm_sqr());
        captured.push(g * g);
    }
    let truncation = 1.0 - compensated_sum(captured.into_iter());
    let total = compensated_sum(on_set.into_iter()) + truncation;
    if total < -1e-12 {
        return Err(AnalysisError::NegativeRadicand(total));
    }
    Ok(total.max(0.0).sqrt())
}

/// Two distinct axis-cross frequencies with the same residue.
#[derive(Clone, Debug, PartialEq)]
pub struct AliasingPair {
    pub k1: FrequencyIndex,
    pub k2: FrequencyIndex,
    pub lattice: Rank1Lattice,
}

/// An aliasing pair together with the normalised fooling function built
/// from it.
#[derive(Clone, Debug, PartialEq)]
pub struct AliasingWitness {
    pub pair: AliasingPair,
    /// `‖g | H^{0,γ}‖` after normalising `g` to unit `H^{α,β}` norm.
    pub norm_ratio: f64,
    /// `max_j |g(x_j)|` over all lattice nodes.
    pub max_node_value: f64,
}

/// First collision in the row-major scan of `{0,…,⌊√M⌋}²` (placed in the
/// first two coordinates). With `h` the difference of the colliding points,
/// returns `k1 = (h_1, 0, …)` and `k2 = (0, −h_2, 0, …)`.
pub fn find_aliasing_pair(lattice: &Rank1Lattice) -> Result<AliasingPair, AnalysisError> {
    let d = lattice.dim();
    if d < 2 {
        return Err(AnalysisError::Dimension(d));
    }
    let m = lattice.size();
    let side = isqrt(m);
    let z = lattice.z();
    let (z1, z2) = (
        (z[0].rem_euclid(m as i64)) as u64,
        (z[1].rem_euclid(m as i64)) as u64,
    );
    let residue_of =
        |a: u64, b: u64| ((a as u128 * z1 as u128 + b as u128 * z2 as u128) % m as u128) as u64;

    // dense table for moderate M, hash map beyond
    let dense = m <= 1 << 26;
    let mut table: Vec<u32> = if dense {
        vec![u32::MAX; m as usize]
    } else {
        Vec::new()
    };
    let mut map: HashMap<u64, (u64, u64)> = HashMap::new();
    let mut collision = None;
    'scan: for a in 0..=side {
        for b in 0..=side {
            let r = residue_of(a, b);
            let seen = if dense {
                let slot = &mut table[r as usize];
                if *slot == u32::MAX {
                    *slot = (a * (side + 1) + b) as u32;
                    None
                } else {
                    Some(((*slot as u64) / (side + 1), (*slot as u64) % (side + 1)))
                }
            } else {
                match map.get(&r) {
                    Some(&p) => Some(p),
                    None => {
                        map.insert(r, (a, b));
                        None
                    }
                }
            };
            if let Some(p) = seen {
                collision = Some((p, (a, b)));
                break 'scan;
            }
        }
    }
    let ((a0, b0), (a1, b1)) = collision.expect("(⌊√M⌋+1)² > M grid points must collide");
    let h1 = a1 as i64 - a0 as i64;
    let h2 = b1 as i64 - b0 as i64;
    let mut k1 = vec![0i64; d];
    let mut k2 = vec![0i64; d];
    k1[0] = h1;
    k2[1] = -h2;
    assert_eq!(
        lattice.residue(&k1),
        lattice.residue(&k2),
        "aliasing pair must share a residue"
    );
    Ok(AliasingPair {
        k1: FrequencyIndex(k1),
        k2: FrequencyIndex(k2),
        lattice: lattice.clone(),
    })
}

/// Builds `g = (e^{2πi k¹·x} − e^{2πi k²·x}) / sqrt(ω(k¹)² + ω(k²)²)` from the
/// aliasing pair of `lattice`, reports its `H^{0,γ}` norm and its largest
/// magnitude over the lattice nodes.
pub fn fooling_function(
    lattice: &Rank1Lattice,
    params: &SmoothnessParams,
) -> Result<AliasingWitness, AnalysisError> {
    params.check_lower_bound_domain()?;
    let pair = find_aliasing_pair(lattice)?;
    let (a, b, g) = (params.alpha, params.beta, params.gamma);
    let source =
        (weight_omega(&pair.k1, a, b).powi(2) + weight_omega(&pair.k2, a, b).powi(2)).sqrt();
    let target =
        (weight_omega(&pair.k1, 0.0, g).powi(2) + weight_omega(&pair.k2, 0.0, g).powi(2)).sqrt();
    let max_node_value = max_difference_on_nodes(lattice, &pair.k1, &pair.k2) / source;
    Ok(AliasingWitness {
        pair,
        norm_ratio: target / source,
        max_node_value,
    })
}

/// `max_j |e^{2πi k¹·x_j} − e^{2πi k²·x_j}|`, with each character evaluated
/// at the exact node `x_j = (j z mod M)/M`.
fn max_difference_on_nodes(lattice: &Rank1Lattice, k1: &[i64], k2: &[i64]) -> f64 {
    let m = lattice.size();
    let mut num = vec![0u64; lattice.dim()];
    let angle = |k: &[i64], num: &[u64]| {
        let t: i128 = k
            .iter()
            .zip(num)
            .map(|(&ks, &n)| ks as i128 * n as i128)
            .sum();
        2.0 * PI * (t.rem_euclid(m as i128) as f64 / m as f64)
    };
    let mut worst: f64 = 0.0;
    for j in 0..m {
        lattice.node_numerators(j, &mut num);
        let diff = Complex64::from_polar(1.0, angle(k1, &num))
            - Complex64::from_polar(1.0, angle(k2, &num));
        worst = worst.max(diff.norm());
    }
    worst
}

/// `2^{−(α+β−γ+1)/2} M^{−(α+β−γ)/2}`.
pub fn lower_bound_value(m: u64, params: &SmoothnessParams) -> Result<f64, AnalysisError> {
    params.check_lower_bound_domain()?;
    let e = params.alpha + params.beta - params.gamma;
    Ok(2f64.powf(-(e + 1.0) / 2.0) * (m as f64).powf(-e / 2.0))
}

/// One experiment row.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub family: String,
    pub index_set_spec: IndexSetSpec,
    /// The refinement `R` or ℓ∞ size `N` as printed in the CSV.
    pub refinement: String,
    pub lattice: Rank1Lattice,
    pub l2_error: f64,
    pub err_scaled_main: f64,
    pub err_scaled_log: f64,
}

impl ErrorReport {
    pub fn m(&self) -> u64 {
        self.lattice.size()
    }

    pub fn d(&self) -> usize {
        self.lattice.dim()
    }
}

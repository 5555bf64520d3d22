//! Tensor-product kink test function.
//!
//! Each factor is the periodised truncated parabola
//! `h(x) = c · max{1/5 − (x − 1/2)², 0}` with `c = 5^{3/4}·15/(4√3)`, scaled so
//! that `‖h‖_{L2(T)} = 1`. The support is `|x − 1/2| ≤ a` with `a = 1/√5`,
//! where `h` has a kink, so the Fourier coefficients decay like `|k|^{-2}`.
//!
//! The coefficients have a closed form. Shifting by `1/2` and using the
//! evenness of the parabola,
//!
//! ```text
//! ĥ_k = (−1)^k c ∫_{−a}^{a} (a² − t²) cos(ωt) dt
//!     = (−1)^k c · 4 (sin ωa − ωa cos ωa) / ω³,      ω = 2π|k|,
//! ```
//!
//! and `ĥ_0 = c·4a³/3 = 5^{1/4}/√3`. For `k ≠ 0` we have `ωa ≥ 2π/√5 > 2.8`,
//! so `sin ωa − ωa cos ωa` never suffers the small-argument cancellation that
//! a Taylor expansion would be needed for.

use std::f64::consts::PI;

/// Scaling constant `c = 5^{3/4}·15/(4√3)`.
pub fn kink_scale() -> f64 {
    5f64.powf(0.75) * 15.0 / (4.0 * 3f64.sqrt())
}

/// Half-width `a = 1/√5` of the support around `1/2`.
pub fn kink_half_width() -> f64 {
    1.0 / 5f64.sqrt()
}

/// The `d`-variate kink function `g(x) = ∏_t h(x_t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KinkFunction {
    dim: usize,
}

impl KinkFunction {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "kink function needs d >= 1");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point has the wrong dimension");
        kink_value(x)
    }

    pub fn coefficient(&self, k: &[i64]) -> f64 {
        assert_eq!(k.len(), self.dim, "frequency has the wrong dimension");
        kink_coeff(k)
    }
}

/// One factor `h(x)`, extended 1-periodically.
pub fn kink_factor(x: f64) -> f64 {
    let t = x.rem_euclid(1.0) - 0.5;
    kink_scale() * (0.2 - t * t).max(0.0)
}

/// `g(x) = ∏_t h(x_t)`; the dimension is the length of `x`.
pub fn kink_value(x: &[f64]) -> f64 {
    x.iter().map(|&xt| kink_factor(xt)).product()
}

/// Fourier coefficient `ĥ_k` of one factor.
pub fn kink_coeff_1d(k: i64) -> f64 {
    if k == 0 {
        return 5f64.powf(0.25) / 3f64.sqrt();
    }
    let w = 2.0 * PI * k.unsigned_abs() as f64;
    let wa = w * kink_half_width();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * kink_scale() * 4.0 * (wa.sin() - wa * wa.cos()) / (w * w * w)
}

/// Fourier coefficient of the tensor product, `∏_t ĥ_{k_t}`.
pub fn kink_coeff(k: &[i64]) -> f64 {
    k.iter().map(|&kt| kink_coeff_1d(kt)).product()
}

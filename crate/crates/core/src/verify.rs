//! Invariant suites behind the `verify` command.
//!
//! Each suite runs a batch of independent checks and reports how many ran
//! and which failed. The machine-readable summary is
//! `SUITE <name> PASS|FAIL <n_checks>`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{fooling_function, lower_bound_value, SmoothnessParams};
use crate::cbc::{cbc_construct, CbcConfig};
use crate::index_sets::{dyadic_cross, hyperbolic_cross, FrequencyIndexSet};
use crate::lattice::{
    fibonacci_lattice, korobov_lattice_2d, IntegerBox, Rank1Lattice, DEFAULT_BOX_BUDGET,
};
use crate::spectral::{
    dft_1d, reconstruct_coefficients, Direction, SampleVector, SpectralApproximation,
};
use crate::testfn::{kink_coeff_1d, kink_factor, kink_half_width};

/// Seed shared by all suites so that reports are reproducible.
const SEED: u64 = 0x1a77_1ce5;

/// `(α, β, γ)` combinations used for lower-bound witnesses.
pub const SMOOTHNESS_GRID: [(f64, f64, f64); 12] = [
    (1.0, 0.0, 0.0),
    (1.5, 0.0, 0.0),
    (2.0, 0.0, 0.0),
    (1.0, -0.25, 0.0),
    (1.5, -0.25, 0.0),
    (2.0, -0.25, 0.0),
    (1.0, 0.0, 0.5),
    (1.5, 0.0, 0.5),
    (2.0, 0.0, 0.5),
    (1.0, -0.25, 0.5),
    (1.5, -0.25, 0.5),
    (2.0, -0.25, 0.5),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Reconstruction,
    LowerBound,
    Counting,
    Fft,
    Kink,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Reconstruction,
        Suite::LowerBound,
        Suite::Counting,
        Suite::Fft,
        Suite::Kink,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Reconstruction => "reconstruction",
            Suite::LowerBound => "lower-bound",
            Suite::Counting => "counting",
            Suite::Fft => "fft",
            Suite::Kink => "kink",
        }
    }

    pub fn run(self) -> SuiteReport {
        match self {
            Suite::Reconstruction => reconstruction_suite(),
            Suite::LowerBound => lower_bound_suite(),
            Suite::Counting => counting_suite(),
            Suite::Fft => fft_suite(),
            Suite::Kink => kink_suite(),
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected reconstruction, lower-bound, counting, fft or kink)"))
    }
}

/// Outcome of one suite.
#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    /// Records one check; `describe` is only called on failure.
    pub fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(describe());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary_line(&self) -> String {
        format!(
            "SUITE {} {} {}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks
        )
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for failure in &self.failures {
            writeln!(f, "  failed: {failure}")?;
        }
        write!(f, "{}", self.summary_line())
    }
}

/// Samples `Σ_k c_k e^{2πi k·x}` on the lattice by direct summation, with
/// every phase reduced exactly as `(j · (k·z mod M)) mod M`.
pub fn sample_trig_poly(lattice: &Rank1Lattice, p: &SpectralApproximation) -> SampleVector {
    let m = lattice.size();
    let terms: Vec<(u64, Complex64)> = p.iter().map(|(k, c)| (lattice.residue(k), c)).collect();
    let values = (0..m)
        .map(|j| {
            terms
                .iter()
                .map(|&(r, c)| {
                    let phase = ((j as u128 * r as u128) % m as u128) as f64 / m as f64;
                    c * Complex64::from_polar(1.0, 2.0 * PI * phase)
                })
                .sum()
        })
        .collect();
    SampleVector::new(values, lattice.clone()).expect("one value per node")
}

/// Trigonometric polynomial on `set` with coefficients uniform in the unit
/// square of the complex plane.
pub fn random_trig_poly(set: &FrequencyIndexSet, rng: &mut impl Rng) -> SpectralApproximation {
    let coefficients = (0..set.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SpectralApproximation::new(set.clone(), coefficients).expect("one coefficient per index")
}

/// Largest coefficient deviation after sampling `p` on the lattice and
/// reconstructing it.
pub fn recovery_error(lattice: &Rank1Lattice, p: &SpectralApproximation) -> f64 {
    let samples = sample_trig_poly(lattice, p);
    let back = reconstruct_coefficients(&samples, p.index_set()).expect("dimensions agree");
    p.coefficients()
        .iter()
        .zip(back.coefficients())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// `O(M²)` DFT with exactly reduced phases, the oracle for [`dft_1d`].
pub fn naive_dft(v: &[Complex64]) -> Vec<Complex64> {
    let m = v.len() as u128;
    (0..m)
        .map(|k| {
            v.iter()
                .enumerate()
                .map(|(j, &x)| {
                    x * Complex64::from_polar(
                        1.0,
                        -2.0 * PI * ((j as u128 * k) % m) as f64 / m as f64,
                    )
                })
                .sum()
        })
        .collect()
}

/// `max |a - b| / max |b|` (absolute when `b` vanishes).
pub fn relative_deviation(a: &[Complex64], b: &[Complex64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    let scale = b.iter().map(|y| y.norm()).fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Adaptive Simpson quadrature with Richardson extrapolation.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn refine(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    refine(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        (b - a) / 6.0 * (fa + 4.0 * fm + fb),
        tol,
        50,
    )
}

/// `∫_0^1 h(x) e^{-2πikx} dx` for one kink factor, as `(re, im)`, integrating
/// over the support in pieces shorter than a quarter oscillation.
pub fn kink_coeff_by_quadrature(k: i64) -> (f64, f64) {
    let a = kink_half_width();
    let (lo, hi) = (0.5 - a, 0.5 + a);
    let pieces = 4 * (k.unsigned_abs() as usize + 1);
    let w = 2.0 * PI * k as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for p in 0..pieces {
        let x0 = lo + (hi - lo) * p as f64 / pieces as f64;
        let x1 = lo + (hi - lo) * (p + 1) as f64 / pieces as f64;
        re += adaptive_simpson(&|x| kink_factor(x) * (w * x).cos(), x0, x1, 1e-15);
        im -= adaptive_simpson(&|x| kink_factor(x) * (w * x).sin(), x0, x1, 1e-15);
    }
    (re, im)
}

/// CBC lattice for the offset-free cross, or `None` when the search fails.
fn cbc_dyadic(d: usize, r: u32) -> Option<(Rank1Lattice, FrequencyIndexSet)> {
    let set = dyadic_cross(d, 0.0, r as f64).ok()?;
    let lattice = cbc_construct(&set, &CbcConfig::default()).ok()?;
    Some((lattice, set))
}

fn reconstruction_suite() -> SuiteReport {
    let mut report = SuiteReport::new(Suite::Reconstruction.name());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut cases: Vec<(String, Rank1Lattice, FrequencyIndexSet)> = Vec::new();
    for (d, max_r) in [(2, 7), (3, 5), (4, 3)] {
        for r in 1..=max_r {
            match cbc_dyadic(d, r) {
                Some((l, s)) => cases.push((format!("cbc dyadic d={d} R={r}"), l, s)),
                None => report.check(false, || format!("CBC failed for dyadic d={d} R={r}")),
            }
        }
    }
    for r in 3..=5 {
        let set = hyperbolic_cross(2, 0.0, r as f64).expect("valid cross");
        match cbc_construct(&set, &CbcConfig::default()) {
            Ok(l) => cases.push((format!("cbc hc d=2 R={r}"), l, set)),
            Err(e) => report.check(false, || format!("CBC failed for hc d=2 R={r}: {e}")),
        }
    }
    for n in [8, 10, 12, 14, 16] {
        let l = fibonacci_lattice(n).expect("small index");
        let r = (1..30)
            .take_while(|&r| {
                l.is_reconstructing(&dyadic_cross(2, 0.0, r as f64).unwrap())
                    .unwrap()
            })
            .last();
        if let Some(r) = r {
            cases.push((
                format!("fibonacci n={n} R={r}"),
                l,
                dyadic_cross(2, 0.0, r as f64).unwrap(),
            ));
        }
    }
    for r in 1..=7 {
        cases.push((
            format!("korobov R={r}"),
            korobov_lattice_2d(r).unwrap(),
            dyadic_cross(2, 0.0, r as f64).unwrap(),
        ));
    }

    for (label, lattice, set) in &cases {
        let by_residues = lattice.is_reconstructing(set).unwrap_or(false);
        report.check(by_residues, || {
            format!("{label}: {lattice} does not reconstruct")
        });
        if set.len() <= 600 {
            let by_differences = lattice
                .is_reconstructing_by_difference_set(set)
                .unwrap_or(false);
            report.check(by_residues == by_differences, || {
                format!("{label}: residue and difference-set tests disagree")
            });
        }
        for _ in 0..3 {
            let p = random_trig_poly(set, &mut rng);
            let err = recovery_error(lattice, &p);
            report.check(err <= 1e-12, || {
                format!("{label}: coefficient error {err:e}")
            });
        }
    }
    report
}

fn lower_bound_suite() -> SuiteReport {
    let mut report = SuiteReport::new(Suite::LowerBound.name());
    let mut lattices: Vec<Rank1Lattice> = (5..=25).map(|n| fibonacci_lattice(n).unwrap()).collect();
    lattices.extend((0..=12).map(|r| korobov_lattice_2d(r).unwrap()));
    lattices.extend((2..=7).filter_map(|r| cbc_dyadic(2, r)).map(|(l, _)| l));
    lattices.extend((2..=4).filter_map(|r| cbc_dyadic(3, r)).map(|(l, _)| l));
    for lattice in &lattices {
        for &(a, b, g) in &SMOOTHNESS_GRID {
            let params = SmoothnessParams::new(a, b, g);
            let bound =
                lower_bound_value(lattice.size(), &params).expect("grid lies in the domain");
            match fooling_function(lattice, &params) {
                Ok(w) => report.check(w.max_node_value <= 1e-12 && w.norm_ratio >= bound * (1.0 - 1e-12), || {
                    format!(
                        "{lattice} (α,β,γ)=({a},{b},{g}): max node value {:e}, ratio {:e} < bound {:e}",
                        w.max_node_value, w.norm_ratio, bound
                    )
                }),
                Err(e) => report.check(false, || format!("{lattice}: {e}")),
            }
        }
    }
    report
}

/// Random boxes with side lengths `>= 1` whose volumes straddle `2^{R-1}`;
/// half of them are anchored at the origin so that they contain a dual point.
pub fn random_boxes(d: usize, r: u32, m: u64, count: usize, rng: &mut impl Rng) -> Vec<IntegerBox> {
    let reach = m as i64;
    (0..count)
        .map(|i| {
            let log_vol = rng.gen_range(0.0..(r as f64 + 4.0));
            let mut shares: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let total: f64 = shares.iter().sum();
            shares.iter_mut().for_each(|s| *s *= log_vol / total);
            let sides: Vec<i64> = shares
                .iter()
                .map(|s| (2f64.powf(*s).floor() as i64).max(1))
                .collect();
            let lower: Vec<i64> = sides
                .iter()
                .map(|&b| {
                    if i % 2 == 0 {
                        -rng.gen_range(0..=b)
                    } else {
                        rng.gen_range(-reach..=reach)
                    }
                })
                .collect();
            let upper = lower.iter().zip(&sides).map(|(l, b)| l + b).collect();
            IntegerBox::new(lower, upper).expect("sides are positive")
        })
        .collect()
}

/// Checks the dual-lattice box count: at most one point when
/// `vol Ω <= 2^{R-1}`, otherwise at most `2^{d+1} vol Ω / 2^R`.
pub fn counting_bound_holds(
    lattice: &Rank1Lattice,
    r: u32,
    bx: &IntegerBox,
) -> Result<bool, String> {
    let points = lattice
        .dual_points_in_box(bx, DEFAULT_BOX_BUDGET)
        .map_err(|e| e.to_string())?
        .len() as f64;
    let vol = bx.volume();
    let half = 2f64.powi(r as i32 - 1);
    Ok(if vol <= half {
        points <= 1.0
    } else {
        points <= 2f64.powi(lattice.dim() as i32 + 1) * vol / 2f64.powi(r as i32)
    })
}

fn counting_suite() -> SuiteReport {
    let mut report = SuiteReport::new(Suite::Counting.name());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xc0);
    for d in [2usize, 3] {
        for r in 4..=8u32 {
            let Some((lattice, _)) = cbc_dyadic(d, r) else {
                report.check(false, || format!("CBC failed for dyadic d={d} R={r}"));
                continue;
            };
            for bx in random_boxes(d, r, lattice.size(), 100, &mut rng) {
                match counting_bound_holds(&lattice, r, &bx) {
                    Ok(ok) => report.check(ok, || {
                        format!(
                            "{lattice} R={r}: box {:?}..{:?} violates the bound",
                            bx.lower, bx.upper
                        )
                    }),
                    Err(e) => report.check(false, || e),
                }
            }
        }
    }
    report
}

/// Sizes at which the FFT is compared against the naive DFT.
pub fn fft_sizes() -> Vec<usize> {
    (1..=64).chain([97, 610, 10946]).collect()
}

fn fft_suite() -> SuiteReport {
    let mut report = SuiteReport::new(Suite::Fft.name());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0xff7);
    for m in fft_sizes() {
        let v: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let fast = dft_1d(&v, Direction::Forward);
        let dev = relative_deviation(&fast, &naive_dft(&v));
        report.check(dev <= 1e-10, || format!("M={m}: forward deviation {dev:e}"));
        let back = dft_1d(&fast, Direction::Inverse);
        let dev = relative_deviation(&back, &v);
        report.check(dev <= 1e-10, || {
            format!("M={m}: round trip deviation {dev:e}")
        });
    }
    report
}

fn kink_suite() -> SuiteReport {
    let mut report = SuiteReport::new(Suite::Kink.name());
    for k in -200..=200i64 {
        let (re, im) = kink_coeff_by_quadrature(k);
        let closed = kink_coeff_1d(k);
        report.check((re - closed).abs() <= 1e-10 && im.abs() <= 1e-10, || {
            format!("k={k}: closed form {closed:e}, quadrature {re:e}{im:+e}i")
        });
    }
    let parseval: f64 = (-10_000i64..=10_000)
        .map(|k| kink_coeff_1d(k).powi(2))
        .sum();
    report.check((parseval - 1.0).abs() <= 1e-6, || {
        format!("partial Parseval sum {parseval}")
    });
    report
}

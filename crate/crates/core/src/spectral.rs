//! Sampling on rank-1 lattices and single-FFT coefficient recovery.
//!
//! Sampling a function along the lattice `x_j = (j z / M) mod 1` turns the
//! multivariate lattice rule into a one-dimensional DFT: the approximate
//! Fourier coefficient of `k` is `â[k·z mod M] / M`, where `â` is the
//! length-`M` DFT of the sample vector. The transform itself is delegated to
//! `rustfft`, which handles arbitrary lengths (mixed radix, Rader and
//! Bluestein for large prime factors) in `O(M log M)`.

use std::f64::consts::PI;
use std::fmt::Display;

use num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::index_sets::{parse_header, FrequencyIndexSet, IndexSetError};
use crate::lattice::Rank1Lattice;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("dimension mismatch: lattice has d={lattice}, index set has d={set}")]
    DimensionMismatch { lattice: usize, set: usize },
    #[error("expected {expected} values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("evaluation failed at node {node}: {message}")]
    Evaluation { node: u64, message: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    IndexSet(#[from] IndexSetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `â_m = Σ_j v_j e^{-2πi jm/M}`, unnormalised.
    Forward,
    /// `v_j = (1/M) Σ_m â_m e^{2πi jm/M}`, so that it undoes [`Direction::Forward`].
    Inverse,
}

/// Discrete Fourier transform of arbitrary length.
pub fn dft_1d(v: &[Complex64], direction: Direction) -> Vec<Complex64> {
    let mut buf = v.to_vec();
    if buf.is_empty() {
        return buf;
    }
    let mut planner = FftPlanner::new();
    match direction {
        Direction::Forward => planner.plan_fft_forward(buf.len()).process(&mut buf),
        Direction::Inverse => {
            planner.plan_fft_inverse(buf.len()).process(&mut buf);
            let scale = 1.0 / buf.len() as f64;
            buf.iter_mut().for_each(|x| *x *= scale);
        }
    }
    buf
}

/// Function values at the nodes of a lattice, in node order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleVector {
    values: Vec<Complex64>,
    lattice: Rank1Lattice,
}

impl SampleVector {
    pub fn new(values: Vec<Complex64>, lattice: Rank1Lattice) -> Result<Self, SpectralError> {
        if values.len() as u64 != lattice.size() {
            return Err(SpectralError::LengthMismatch {
                expected: lattice.size() as usize,
                found: values.len(),
            });
        }
        Ok(Self { values, lattice })
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn lattice(&self) -> &Rank1Lattice {
        &self.lattice
    }
}

/// Evaluates `f` at every node. The first failing node aborts sampling and
/// is reported with its index.
pub fn try_sample_on_lattice<F, E>(
    lattice: &Rank1Lattice,
    mut f: F,
) -> Result<SampleVector, SpectralError>
where
    F: FnMut(&[f64]) -> Result<Complex64, E>,
    E: Display,
{
    let m = lattice.size();
    let mut num = vec![0u64; lattice.dim()];
    let mut x = vec![0.0; lattice.dim()];
    let mut values = Vec::with_capacity(m as usize);
    for j in 0..m {
        lattice.node_numerators(j, &mut num);
        for (xs, &n) in x.iter_mut().zip(&num) {
            *xs = n as f64 / m as f64;
        }
        let v = f(&x).map_err(|e| SpectralError::Evaluation {
            node: j,
            message: e.to_string(),
        })?;
        values.push(v);
    }
    SampleVector::new(values, lattice.clone())
}

/// Evaluates an infallible real or complex function at every node.
pub fn sample_on_lattice<F, T>(lattice: &Rank1Lattice, mut f: F) -> SampleVector
where
    F: FnMut(&[f64]) -> T,
    T: Into<Complex64>,
{
    try_sample_on_lattice(lattice, |x| Ok::<_, std::convert::Infallible>(f(x).into()))
        .expect("infallible sampling")
}

/// Complex coefficients attached to the frequencies of an index set.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralApproximation {
    index_set: FrequencyIndexSet,
    coefficients: Vec<Complex64>,
}

impl SpectralApproximation {
    pub fn new(
        index_set: FrequencyIndexSet,
        coefficients: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        if coefficients.len() != index_set.len() {
            return Err(SpectralError::LengthMismatch {
                expected: index_set.len(),
                found: coefficients.len(),
            });
        }
        Ok(Self {
            index_set,
            coefficients,
        })
    }

    /// All-zero coefficients on `index_set`.
    pub fn zeros(index_set: FrequencyIndexSet) -> Self {
        let coefficients = vec![Complex64::new(0.0, 0.0); index_set.len()];
        Self {
            index_set,
            coefficients,
        }
    }

    pub fn index_set(&self) -> &FrequencyIndexSet {
        &self.index_set
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficient(&self, k: &[i64]) -> Option<Complex64> {
        self.index_set.position(k).map(|i| self.coefficients[i])
    }

    /// Pairs of frequency and coefficient in index-set order.
    pub fn iter(&self) -> impl Iterator<Item = (&[i64], Complex64)> + '_ {
        self.index_set.iter().zip(self.coefficients.iter().copied())
    }

    /// Header line as for index sets, then `k_1;…;k_d <tab> re <tab> im`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# dim={} kind={}\n",
            self.index_set.dim(),
            self.index_set.spec()
        );
        for (k, c) in self.iter() {
            let ks: Vec<String> = k.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{}\t{:e}\t{:e}\n", ks.join(";"), c.re, c.im));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, SpectralError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(SpectralError::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let (dim, spec) =
            parse_header(header).map_err(|msg| SpectralError::Parse { line: 1, msg })?;
        let mut ks = Vec::new();
        let mut coefficients = Vec::new();
        for (no, line) in lines {
            let bad = |msg: &str| SpectralError::Parse {
                line: no + 1,
                msg: msg.to_string(),
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(bad("expected three tab-separated fields"));
            }
            let k = fields[0]
                .split(';')
                .map(|s| s.trim().parse::<i64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(&e.to_string()))?;
            if k.len() != dim {
                return Err(bad("frequency has the wrong dimension"));
            }
            let re: f64 = fields[1]
                .trim()
                .parse()
                .map_err(|_| bad("invalid real part"))?;
            let im: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| bad("invalid imaginary part"))?;
            ks.push(k);
            coefficients.push(Complex64::new(re, im));
        }
        // keep coefficients aligned with the sorted set regardless of file order
        let set = FrequencyIndexSet::from_indices(dim, ks.iter().cloned(), spec)?;
        if set.len() != ks.len() {
            return Err(SpectralError::Parse {
                line: 0,
                msg: "duplicate frequency".into(),
            });
        }
        let mut aligned = vec![Complex64::new(0.0, 0.0); set.len()];
        for (k, c) in ks.iter().zip(coefficients) {
            aligned[set.position(k).expect("frequency was inserted")] = c;
        }
        Self::new(set, aligned)
    }
}

/// Lattice-rule approximation of the Fourier coefficients on `index_set`:
/// `f̂_k ≈ â[k·z mod M] / M`. The lattice need not be reconstructing; in that
/// case aliased frequencies share a coefficient.
pub fn reconstruct_coefficients(
    samples: &SampleVector,
    index_set: &FrequencyIndexSet,
) -> Result<SpectralApproximation, SpectralError> {
    let lattice = samples.lattice();
    if lattice.dim() != index_set.dim() {
        return Err(SpectralError::DimensionMismatch {
            lattice: lattice.dim(),
            set: index_set.dim(),
        });
    }
    let hat = dft_1d(samples.values(), Direction::Forward);
    let scale = 1.0 / lattice.size() as f64;
    let coefficients = index_set
        .iter()
        .map(|k| hat[lattice.residue(k) as usize] * scale)
        .collect();
    SpectralApproximation::new(index_set.clone(), coefficients)
}

/// Direct evaluation of the lattice rule for a single frequency,
/// `(1/M) Σ_j f(x_j) e^{-2πi j (k·z)/M}`.
pub fn quadrature_coefficient(
    samples: &SampleVector,
    k: &[i64],
) -> Result<Complex64, SpectralError> {
    let lattice = samples.lattice();
    if lattice.dim() != k.len() {
        return Err(SpectralError::DimensionMismatch {
            lattice: lattice.dim(),
            set: k.len(),
        });
    }
    let m = lattice.size();
    let r = lattice.residue(k) as u128;
    let sum: Complex64 = samples
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            // reduce j·r modulo M exactly before forming the angle
            let phase = ((j as u128 * r) % m as u128) as f64 / m as f64;
            v * Complex64::from_polar(1.0, -2.0 * PI * phase)
        })
        .sum();
    Ok(sum / m as f64)
}

/// `Σ_k c_k e^{2πi k·x}` by direct summation.
pub fn evaluate_trig_poly(p: &SpectralApproximation, x: &[f64]) -> Complex64 {
    p.iter()
        .map(|(k, c)| {
            let t: f64 = k.iter().zip(x).map(|(&ks, &xs)| ks as f64 * xs).sum();
            c * Complex64::from_polar(1.0, 2.0 * PI * t.rem_euclid(1.0))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbc::{cbc_construct, CbcConfig};
    use crate::index_sets::{dyadic_cross, hyperbolic_cross, linf_ball_2d, IndexSetSpec};
    use crate::lattice::fibonacci_lattice;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_dft(v: &[Complex64]) -> Vec<Complex64> {
        let m = v.len();
        (0..m)
            .map(|k| {
                v.iter()
                    .enumerate()
                    .map(|(j, x)| {
                        x * Complex64::from_polar(1.0, -2.0 * PI * ((j * k) % m) as f64 / m as f64)
                    })
                    .sum()
            })
            .collect()
    }

    fn random_vec(rng: &mut ChaCha8Rng, m: usize) -> Vec<Complex64> {
        (0..m)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = b
            .iter()
            .map(|y| y.norm_sqr())
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        num / den
    }

    #[test]
    fn delta_and_constant() {
        let mut v = vec![Complex64::new(0.0, 0.0); 7];
        v[0] = Complex64::new(1.0, 0.0);
        assert!(dft_1d(&v, Direction::Forward)
            .iter()
            .all(|x| (x - 1.0).norm() < 1e-14));
        let c = Complex64::new(0.5, -2.0);
        let hat = dft_1d(&[c; 5], Direction::Forward);
        assert!((hat[0] - 5.0 * c).norm() < 1e-13);
        assert!(hat[1..].iter().all(|x| x.norm() < 1e-13));
    }

    #[test]
    fn matches_naive_dft_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in (1..=64).chain([97, 610]) {
            let v = random_vec(&mut rng, m);
            let hat = dft_1d(&v, Direction::Forward);
            assert!(rel_err(&hat, &naive_dft(&v)) < 1e-10, "M={m}");
            assert!(
                rel_err(&dft_1d(&hat, Direction::Inverse), &v) < 1e-10,
                "M={m}"
            );
        }
    }

    #[test]
    fn samples_of_a_character() {
        let lattice = Rank1Lattice::new(vec![1, 2], 5).unwrap();
        let k = [0i64, -1];
        let s = sample_on_lattice(&lattice, |x| {
            Complex64::from_polar(1.0, 2.0 * PI * (k[1] as f64 * x[1]))
        });
        let r = lattice.residue(&k);
        for (j, v) in s.values().iter().enumerate() {
            let expect = Complex64::from_polar(1.0, 2.0 * PI * ((j as u64 * r) % 5) as f64 / 5.0);
            assert!((v - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn sampling_error_reports_node() {
        let lattice = Rank1Lattice::new(vec![1, 2], 5).unwrap();
        let err = try_sample_on_lattice(&lattice, |x| {
            if x[0] > 0.5 {
                Err("outside")
            } else {
                Ok(Complex64::new(1.0, 0.0))
            }
        })
        .unwrap_err();
        assert_eq!(
            err,
            SpectralError::Evaluation {
                node: 3,
                message: "outside".into()
            }
        );
    }

    #[test]
    fn constant_function_and_quadrature() {
        let lattice = fibonacci_lattice(8).unwrap();
        let s = sample_on_lattice(&lattice, |_| 1.0);
        let set = linf_ball_2d(3).unwrap();
        let approx = reconstruct_coefficients(&s, &set).unwrap();
        assert!((approx.coefficient(&[0, 0]).unwrap() - 1.0).norm() < 1e-14);
        assert!((quadrature_coefficient(&s, &[0, 0]).unwrap() - 1.0).norm() < 1e-14);
        assert!(quadrature_coefficient(&s, &[1, 0]).unwrap().norm() < 1e-13);
    }

    #[test]
    fn fft_path_equals_quadrature() {
        let lattice = fibonacci_lattice(12).unwrap();
        let s = sample_on_lattice(&lattice, |x| crate::testfn::kink_value(x));
        let set = dyadic_cross(2, 0.0, 4.0).unwrap();
        let approx = reconstruct_coefficients(&s, &set).unwrap();
        for (k, c) in approx.iter() {
            assert!(
                (c - quadrature_coefficient(&s, k).unwrap()).norm() < 1e-12,
                "k={k:?}"
            );
        }
    }

    #[test]
    fn exact_reproduction_of_trig_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = hyperbolic_cross(2, 0.0, 3.0).unwrap();
        let lattice = cbc_construct(&set, &CbcConfig::default()).unwrap();
        let coeffs: Vec<Complex64> = random_vec(&mut rng, set.len());
        let p = SpectralApproximation::new(set.clone(), coeffs.clone()).unwrap();
        let s = sample_on_lattice(&lattice, |x| evaluate_trig_poly(&p, x));
        let rec = reconstruct_coefficients(&s, &set).unwrap();
        let err = rec
            .coefficients()
            .iter()
            .zip(&coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err={err}");
    }

    #[test]
    fn aliasing_moves_mass_to_residue_class() {
        let lattice = Rank1Lattice::new(vec![1, 3], 7).unwrap();
        let k = [1i64, 0];
        let h = [-3i64, 1]; // -3 + 3 = 0
        assert!(lattice.dual_contains(&h).unwrap());
        let kh = [k[0] + h[0], k[1] + h[1]];
        let s = sample_on_lattice(&lattice, |x| {
            Complex64::from_polar(1.0, 2.0 * PI * (kh[0] as f64 * x[0] + kh[1] as f64 * x[1]))
        });
        let set =
            FrequencyIndexSet::from_indices(2, [k.to_vec(), vec![0, 0]], IndexSetSpec::Explicit)
                .unwrap();
        let rec = reconstruct_coefficients(&s, &set).unwrap();
        assert!((rec.coefficient(&k).unwrap() - 1.0).norm() < 1e-12);
        assert!(rec.coefficient(&[0, 0]).unwrap().norm() < 1e-12);
    }

    #[test]
    fn linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lattice = fibonacci_lattice(10).unwrap();
        let set = dyadic_cross(2, 0.0, 3.0).unwrap();
        let f = random_vec(&mut rng, lattice.size() as usize);
        let g = random_vec(&mut rng, lattice.size() as usize);
        let (a, b) = (Complex64::new(0.3, 1.0), Complex64::new(-2.0, 0.5));
        let combo: Vec<Complex64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let rec = |v: Vec<Complex64>| {
            reconstruct_coefficients(&SampleVector::new(v, lattice.clone()).unwrap(), &set).unwrap()
        };
        let (rf, rg, rc) = (rec(f), rec(g), rec(combo));
        for i in 0..set.len() {
            let expect = a * rf.coefficients()[i] + b * rg.coefficients()[i];
            assert!((rc.coefficients()[i] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn trig_poly_evaluation() {
        let set = FrequencyIndexSet::from_indices(2, [vec![0, 0]], IndexSetSpec::Explicit).unwrap();
        let p = SpectralApproximation::new(set, vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!((evaluate_trig_poly(&p, &[0.3, 0.9]) - 1.0).norm() < 1e-15);
        let set = FrequencyIndexSet::from_indices(2, [vec![1, 0]], IndexSetSpec::Explicit).unwrap();
        let p = SpectralApproximation::new(set, vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!((evaluate_trig_poly(&p, &[0.25, 0.7]) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn text_round_trip() {
        let set = linf_ball_2d(3).unwrap();
        let coeffs = (0..set.len())
            .map(|i| Complex64::new(i as f64 * 0.1, -(i as f64)))
            .collect();
        let p = SpectralApproximation::new(set, coeffs).unwrap();
        assert_eq!(SpectralApproximation::parse_text(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn length_checks() {
        let lattice = Rank1Lattice::new(vec![1, 2], 5).unwrap();
        assert!(matches!(
            SampleVector::new(vec![Complex64::new(0.0, 0.0); 4], lattice),
            Err(SpectralError::LengthMismatch {
                expected: 5,
                found: 4
            })
        ));
    }
}

//! Kink-function error sweeps behind the `experiment` command.
//!
//! A sweep pairs lattices with index sets, samples the kink function on each
//! lattice, recovers the coefficients on the index set and records the exact
//! `L2` error together with two scaled versions,
//! `err·M^{3/4}` and `err·M^{3/4}·(ln M)^{-(d-2)·3/4-(d-1)/2}`.
//!
//! Lattice families:
//!
//! * `cbc`: component-by-component lattices, one per refinement;
//! * `fibonacci`: `F_n`, paired with the largest refinement it reconstructs;
//! * `korobov`: the closed-form two-dimensional lattices, paired with the
//!   cross of the same refinement.
//!
//! For ℓ∞-ball sets every lattice is paired with the largest `N` such that it
//! reconstructs `I_N^2`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{kink_l2_error, AnalysisError, ErrorReport};
use crate::cbc::{cbc_construct, CbcConfig, CbcError};
use crate::index_sets::{
    anisotropic_cross, dyadic_cross, hyperbolic_cross, isqrt, linf_ball_2d, tensor_grid_2d,
    FrequencyIndexSet, IndexSetError,
};
use crate::lattice::{
    fibonacci_lattice, fibonacci_number, korobov_lattice_2d, LatticeError, Rank1Lattice,
    MAX_FIBONACCI_INDEX,
};
use crate::spectral::{reconstruct_coefficients, sample_on_lattice, SpectralError};
use crate::testfn::kink_value;

/// Column header of the experiment CSV.
pub const CSV_HEADER: &str = "family,d,R_or_N,M,z,l2_error,err_scaled_main,err_scaled_log";

/// Default cap on the lattice size.
pub const DEFAULT_MAX_M: u64 = 1_000_000;

/// Smoothness used for the scaled columns (the kink function lies in
/// `H^{3/2-ε}_mix`).
const SCALING_ALPHA: f64 = 1.5;

/// Largest refinement tried when a sweep runs until the size cap.
const MAX_REFINEMENT: u32 = 30;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("lattice {lattice} does not reconstruct {set}")]
    NotReconstructing { lattice: String, set: String },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Cbc(#[from] CbcError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    IndexSet(#[from] IndexSetError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Cbc,
    Fibonacci,
    Korobov,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Cbc => "cbc",
            Family::Fibonacci => "fibonacci",
            Family::Korobov => "korobov",
        })
    }
}

impl FromStr for Family {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cbc" => Ok(Family::Cbc),
            "fibonacci" => Ok(Family::Fibonacci),
            "korobov" => Ok(Family::Korobov),
            other => Err(ExperimentError::InvalidSweep(format!(
                "unknown family `{other}`"
            ))),
        }
    }
}

/// Index-set families a sweep can use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    /// `H_R^{d,T}` with the additive `d-1` offset and symmetric blocks.
    Hc,
    /// Offset-free union of half-open dyadic boxes, the cross behind the
    /// published error curves.
    Dyadic,
    Linf,
    Grid,
    Aniso,
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SetKind::Hc => "hc",
            SetKind::Dyadic => "dyadic",
            SetKind::Linf => "linf",
            SetKind::Grid => "grid",
            SetKind::Aniso => "aniso",
        })
    }
}

impl FromStr for SetKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hc" => Ok(SetKind::Hc),
            "dyadic" => Ok(SetKind::Dyadic),
            "linf" => Ok(SetKind::Linf),
            "grid" => Ok(SetKind::Grid),
            "aniso" => Ok(SetKind::Aniso),
            other => Err(ExperimentError::InvalidSweep(format!(
                "unknown index-set kind `{other}`"
            ))),
        }
    }
}

/// Figure selectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig4a,
    Fig4b,
    Fig4c,
    Fig5a,
    Fig5b,
    Fig5c,
    Fig8,
    Fig9,
}

impl FromStr for Figure {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "fig4a" => Figure::Fig4a,
            "fig4b" => Figure::Fig4b,
            "fig4c" => Figure::Fig4c,
            "fig5a" => Figure::Fig5a,
            "fig5b" => Figure::Fig5b,
            "fig5c" => Figure::Fig5c,
            "fig8" => Figure::Fig8,
            "fig9" => Figure::Fig9,
            other => {
                return Err(ExperimentError::InvalidSweep(format!(
                    "unknown figure `{other}`"
                )))
            }
        })
    }
}

impl Figure {
    /// The sweeps whose rows make up the figure.
    pub fn sweeps(self, max_m: u64) -> Vec<Sweep> {
        let sweep = |family, set, d| Sweep {
            family,
            set,
            d,
            max_m,
            max_refinement: default_max_refinement(d),
            ..Sweep::default()
        };
        match self {
            Figure::Fig4a => [Family::Cbc, Family::Fibonacci, Family::Korobov]
                .into_iter()
                .map(|f| sweep(f, SetKind::Dyadic, 2))
                .collect(),
            Figure::Fig4b => vec![sweep(Family::Cbc, SetKind::Dyadic, 3)],
            Figure::Fig4c => vec![sweep(Family::Cbc, SetKind::Dyadic, 4)],
            Figure::Fig5a => vec![sweep(Family::Cbc, SetKind::Dyadic, 5)],
            Figure::Fig5b => vec![sweep(Family::Cbc, SetKind::Dyadic, 6)],
            Figure::Fig5c => vec![sweep(Family::Cbc, SetKind::Dyadic, 7)],
            // the scaled panel shows the same rows
            Figure::Fig8 | Figure::Fig9 => [Family::Cbc, Family::Fibonacci, Family::Korobov]
                .into_iter()
                .map(|f| sweep(f, SetKind::Linf, 2))
                .collect(),
        }
    }
}

/// Refinement cap of the figure sweeps in dimension `d`.
///
/// The component-by-component search tests every prime size from the lower
/// bound upward, and each refinement costs roughly ten times the previous
/// one in `d >= 3`; these caps keep every figure within a few minutes on one
/// core. `None` means the sweep stops only at the size cap.
pub fn default_max_refinement(d: usize) -> Option<u32> {
    match d {
        0..=2 => None,
        3 => Some(9),
        4 => Some(7),
        5 => Some(6),
        6 => Some(5),
        _ => Some(5),
    }
}

/// One family of lattices paired with one kind of index set.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub family: Family,
    pub set: SetKind,
    pub d: usize,
    pub t: f64,
    /// Refinements for `cbc` and `korobov`; all refinements up to the size
    /// cap when `None`. For `cbc` with ℓ∞ sets these are the `N` values.
    pub refinements: Option<Vec<f64>>,
    /// Fibonacci indices; all up to the size cap when `None`.
    pub fibonacci_indices: Option<Vec<u32>>,
    /// Largest refinement of an open-ended sweep (`refinements == None`).
    pub max_refinement: Option<u32>,
    /// Anisotropy vector for [`SetKind::Aniso`].
    pub alpha: Vec<f64>,
    /// For `cbc` with ℓ∞ sets: build the lattice for the cross of each
    /// refinement and pair it with the largest ℓ∞-ball (as in the published
    /// comparison) instead of running CBC on the ball itself.
    pub linf_from_cross: bool,
    pub max_m: u64,
    pub cbc: CbcConfig,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            family: Family::Cbc,
            set: SetKind::Dyadic,
            d: 2,
            t: 0.0,
            refinements: None,
            fibonacci_indices: None,
            max_refinement: None,
            alpha: Vec::new(),
            linf_from_cross: true,
            max_m: DEFAULT_MAX_M,
            cbc: CbcConfig::default(),
        }
    }
}

/// A lattice paired with an index set, before the error is evaluated.
#[derive(Clone, Debug)]
pub struct Pairing {
    pub family: Family,
    pub refinement: String,
    pub lattice: Rank1Lattice,
    pub set: FrequencyIndexSet,
}

impl Sweep {
    fn build_set(&self, r: f64) -> Result<FrequencyIndexSet, ExperimentError> {
        Ok(match self.set {
            SetKind::Hc => hyperbolic_cross(self.d, self.t, r)?,
            SetKind::Dyadic => dyadic_cross(self.d, self.t, r)?,
            SetKind::Grid => tensor_grid_2d(r)?,
            SetKind::Aniso => {
                if self.alpha.len() != self.d {
                    return Err(ExperimentError::InvalidSweep(format!(
                        "anisotropic sets need {} alpha components, got {}",
                        self.d,
                        self.alpha.len()
                    )));
                }
                anisotropic_cross(&self.alpha, r)?
            }
            SetKind::Linf => linf_ball_2d(r as u64)?,
        })
    }

    /// Set kind used to build lattices; ℓ∞ sweeps borrow the cross.
    fn lattice_sweep(&self) -> Sweep {
        let mut s = self.clone();
        if s.set == SetKind::Linf {
            s.set = SetKind::Dyadic;
        }
        s
    }

    fn check(&self) -> Result<(), ExperimentError> {
        if self.d == 0 {
            return Err(ExperimentError::InvalidSweep("d must be >= 1".into()));
        }
        let two_d = matches!(self.family, Family::Fibonacci | Family::Korobov)
            || matches!(self.set, SetKind::Linf | SetKind::Grid);
        if two_d && self.d != 2 {
            return Err(ExperimentError::InvalidSweep(format!(
                "{} lattices with {} sets need d = 2",
                self.family, self.set
            )));
        }
        Ok(())
    }

    /// Largest refinement whose set `lattice` reconstructs, scanning upward
    /// from `first`; `None` if even `first` fails.
    fn largest_refinement(
        &self,
        lattice: &Rank1Lattice,
        first: u32,
    ) -> Result<Option<u32>, ExperimentError> {
        let mut best = None;
        for r in first..=MAX_REFINEMENT {
            let set = self.build_set(r as f64)?;
            if set.len() as u64 > lattice.size() || !lattice.is_reconstructing(&set)? {
                break;
            }
            best = Some(r);
        }
        Ok(best)
    }

    /// Enumerates the (lattice, index set) pairs of the sweep in ascending
    /// refinement order.
    pub fn pairings(&self) -> Result<Vec<Pairing>, ExperimentError> {
        self.check()?;
        let lattices = self.lattices()?;
        let mut out = Vec::with_capacity(lattices.len());
        for (label, lattice, set) in lattices {
            let (label, set) = match self.set {
                SetKind::Linf => {
                    let n = largest_linf_ball(&lattice)?;
                    (n.to_string(), linf_ball_2d(n)?)
                }
                _ => (label, set.expect("cross sweeps carry their set")),
            };
            out.push(Pairing {
                family: self.family,
                refinement: label,
                lattice,
                set,
            });
        }
        Ok(out)
    }

    #[allow(clippy::type_complexity)]
    fn lattices(
        &self,
    ) -> Result<Vec<(String, Rank1Lattice, Option<FrequencyIndexSet>)>, ExperimentError> {
        let base = if self.set == SetKind::Linf {
            self.lattice_sweep()
        } else {
            self.clone()
        };
        let mut out = Vec::new();
        match self.family {
            Family::Cbc if self.set == SetKind::Linf && !self.linf_from_cross => {
                for n in self.refinement_list() {
                    let set = linf_ball_2d(n as u64)?;
                    match self.cbc_within_cap(&set)? {
                        Some(lattice) => out.push((fmt_refinement(n), lattice, Some(set))),
                        None => break,
                    }
                }
            }
            Family::Cbc => {
                for r in self.refinement_list() {
                    let set = base.build_set(r)?;
                    match self.cbc_within_cap(&set)? {
                        Some(lattice) => out.push((fmt_refinement(r), lattice, Some(set))),
                        None => break,
                    }
                }
            }
            Family::Fibonacci => {
                for n in self.fibonacci_list() {
                    let lattice = fibonacci_lattice(n)?;
                    if lattice.size() > self.max_m {
                        break;
                    }
                    let first = if base.set == SetKind::Grid { 1 } else { 0 };
                    match base.largest_refinement(&lattice, first)? {
                        Some(r) => {
                            let set = base.build_set(r as f64)?;
                            out.push((r.to_string(), lattice, Some(set)));
                        }
                        None if self.set == SetKind::Linf => {
                            out.push((String::new(), lattice, None))
                        }
                        None => {}
                    }
                }
            }
            Family::Korobov => {
                for r in self.refinement_list() {
                    if r.fract() != 0.0 || r < 0.0 {
                        return Err(ExperimentError::InvalidSweep(format!(
                            "Korobov refinements are integers, got {r}"
                        )));
                    }
                    let lattice = korobov_lattice_2d(r as u32)?;
                    if lattice.size() > self.max_m {
                        break;
                    }
                    let set = base.build_set(r)?;
                    if self.set != SetKind::Linf && !lattice.is_reconstructing(&set)? {
                        return Err(ExperimentError::NotReconstructing {
                            lattice: lattice.to_string(),
                            set: set.spec().to_string(),
                        });
                    }
                    out.push((fmt_refinement(r), lattice, Some(set)));
                }
            }
        }
        Ok(out)
    }

    fn refinement_list(&self) -> Vec<f64> {
        match &self.refinements {
            Some(list) => list.clone(),
            None => {
                let first = match (self.family, self.set) {
                    (_, SetKind::Grid) => 1,
                    (Family::Cbc, SetKind::Linf) if !self.linf_from_cross => 1,
                    _ => 0,
                };
                (first..=self.max_refinement.unwrap_or(MAX_REFINEMENT))
                    .map(f64::from)
                    .collect()
            }
        }
    }

    fn fibonacci_list(&self) -> Vec<u32> {
        match &self.fibonacci_indices {
            Some(list) => list.clone(),
            None => (2..=MAX_FIBONACCI_INDEX)
                .take_while(|&n| fibonacci_number(n).is_some_and(|b| b <= self.max_m))
                .collect(),
        }
    }

    /// CBC lattice with `M <= max_m`, or `None` when the cap is too small.
    fn cbc_within_cap(
        &self,
        set: &FrequencyIndexSet,
    ) -> Result<Option<Rank1Lattice>, ExperimentError> {
        let mut config = self.cbc.clone();
        let ceiling = config.resolved_ceiling(set).min(self.max_m);
        config.ceiling = Some(ceiling);
        match cbc_construct(set, &config) {
            Ok(l) => Ok(Some(l)),
            Err(CbcError::CandidateExhausted { .. } | CbcError::EmptyWindow { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Runs the sweep; rows are computed in parallel and returned in
    /// ascending refinement order.
    pub fn run(&self) -> Result<Vec<ErrorReport>, ExperimentError> {
        let pairings = self.pairings()?;
        pairings.par_iter().map(evaluate_pairing).collect()
    }
}

fn fmt_refinement(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// Largest `N` with `I_N^2` reconstructed by `lattice`, by binary search
/// (the balls are nested, so reconstruction is monotone in `N`).
pub fn largest_linf_ball(lattice: &Rank1Lattice) -> Result<u64, ExperimentError> {
    let reconstructs = |n: u64| -> Result<bool, ExperimentError> {
        Ok(lattice.is_reconstructing(&linf_ball_2d(n)?)?)
    };
    // N = 1 is the origin alone; N^2 <= M is necessary
    let (mut lo, mut hi) = (1u64, isqrt(lattice.size()).max(1));
    if !reconstructs(lo)? {
        return Ok(0);
    }
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if reconstructs(mid)? {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(lo)
}

/// Exact `L2` error of the single-FFT approximation of the kink function
/// from samples on `lattice`, truncated to `set`. Fails unless the lattice
/// reconstructs the set.
pub fn kink_error(lattice: &Rank1Lattice, set: &FrequencyIndexSet) -> Result<f64, ExperimentError> {
    if !lattice.is_reconstructing(set)? {
        return Err(ExperimentError::NotReconstructing {
            lattice: lattice.to_string(),
            set: set.spec().to_string(),
        });
    }
    let samples = sample_on_lattice(lattice, kink_value);
    let approx = reconstruct_coefficients(&samples, set)?;
    Ok(kink_l2_error(&approx)?)
}

/// `(err·M^{α/2}, err·M^{α/2}·(ln M)^{-(d-2)α/2-(d-1)/2})` with `α = 3/2`.
pub fn scaled_errors(err: f64, m: u64, d: usize) -> (f64, f64) {
    let m = m as f64;
    let main = err * m.powf(SCALING_ALPHA / 2.0);
    let log_exp = -(d as f64 - 2.0) * SCALING_ALPHA / 2.0 - (d as f64 - 1.0) / 2.0;
    (main, main * m.ln().powf(log_exp))
}

fn evaluate_pairing(p: &Pairing) -> Result<ErrorReport, ExperimentError> {
    let err = kink_error(&p.lattice, &p.set)?;
    let (main, log) = scaled_errors(err, p.lattice.size(), p.lattice.dim());
    Ok(ErrorReport {
        family: p.family.to_string(),
        index_set_spec: p.set.spec().clone(),
        refinement: p.refinement.clone(),
        lattice: p.lattice.clone(),
        l2_error: err,
        err_scaled_main: main,
        err_scaled_log: log,
    })
}

/// Runs several sweeps and orders the rows by family, then ascending `M`.
pub fn run_sweeps(sweeps: &[Sweep]) -> Result<Vec<ErrorReport>, ExperimentError> {
    let mut rows = Vec::new();
    for s in sweeps {
        rows.extend(s.run()?);
    }
    rows.sort_by(|a, b| {
        let fa: Family = a.family.parse().expect("family labels round-trip");
        let fb: Family = b.family.parse().expect("family labels round-trip");
        (fa, a.m()).cmp(&(fb, b.m()))
    });
    Ok(rows)
}

/// Formats like C's `%.6e`: six fractional digits and a signed exponent
/// of at least two digits.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let s = format!("{x:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// One CSV line, without the trailing newline.
pub fn csv_row(r: &ErrorReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        r.family,
        r.d(),
        r.refinement,
        r.m(),
        r.lattice.z_string(),
        format_sci(r.l2_error),
        format_sci(r.err_scaled_main),
        format_sci(r.err_scaled_log)
    )
}

/// Header plus one line per row.
pub fn to_csv(rows: &[ErrorReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_style_scientific() {
        assert_eq!(format_sci(0.01201), "1.201000e-02");
        assert_eq!(format_sci(12345.678), "1.234568e+04");
        assert_eq!(format_sci(1.0), "1.000000e+00");
        assert_eq!(format_sci(0.0), "0.000000e+00");
        assert_eq!(format_sci(-2.5e-120), "-2.500000e-120");
        assert_eq!(format_sci(f64::INFINITY), "inf");
    }

    #[test]
    fn scalings() {
        let (main, log) = scaled_errors(1e-2, 10_000, 2);
        assert!((main - 1e-2 * 1000.0).abs() < 1e-9);
        assert!((log - main / (10_000f64).ln().sqrt()).abs() < 1e-9);
        let (main3, log3) = scaled_errors(1.0, 100, 3);
        assert!((log3 - main3 * 100f64.ln().powf(-1.75)).abs() < 1e-12);
    }

    #[test]
    fn korobov_rows_match_published_points() {
        let sweep = Sweep {
            family: Family::Korobov,
            set: SetKind::Dyadic,
            refinements: Some(vec![5.0]),
            ..Sweep::default()
        };
        let rows = sweep.run().unwrap();
        assert_eq!(rows[0].m(), 400);
        assert!((rows[0].l2_error / 1.285e-2 - 1.0).abs() < 0.01);
    }

    #[test]
    fn fibonacci_pairing_takes_largest_refinement() {
        let sweep = Sweep {
            family: Family::Fibonacci,
            set: SetKind::Dyadic,
            fibonacci_indices: Some(vec![14]),
            ..Sweep::default()
        };
        let p = sweep.pairings().unwrap();
        assert_eq!(p[0].lattice.size(), 610);
        assert_eq!(p[0].refinement, "5");
        let next = dyadic_cross(2, 0.0, 6.0).unwrap();
        assert!(!p[0].lattice.is_reconstructing(&next).unwrap());
    }

    #[test]
    fn linf_search_is_maximal() {
        for r in 1..=8 {
            let l = korobov_lattice_2d(r).unwrap();
            let n = largest_linf_ball(&l).unwrap();
            assert!(l.is_reconstructing(&linf_ball_2d(n).unwrap()).unwrap());
            assert!(!l.is_reconstructing(&linf_ball_2d(n + 1).unwrap()).unwrap());
        }
    }

    #[test]
    fn rows_are_ordered_by_family_then_size() {
        let rows = run_sweeps(&Figure::Fig4a.sweeps(2_000)).unwrap();
        let keys: Vec<(String, u64)> = rows.iter().map(|r| (r.family.clone(), r.m())).collect();
        let mut sorted = keys.clone();
        sorted.sort_by_key(|(f, m)| (f.parse::<Family>().unwrap(), *m));
        assert_eq!(keys, sorted);
        assert!(rows.iter().all(|r| r.m() <= 2_000));
        let csv = to_csv(&rows);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }

    #[test]
    fn invalid_sweeps() {
        let s = Sweep {
            family: Family::Fibonacci,
            d: 3,
            ..Sweep::default()
        };
        assert!(matches!(s.run(), Err(ExperimentError::InvalidSweep(_))));
        assert!("fig7".parse::<Figure>().is_err());
        assert!("sobol".parse::<Family>().is_err());
    }
}

//! Command-line front end: `build`, `experiment` and `verify`.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use latsamp::cbc::{cbc_construct, CbcConfig, CbcError};
use latsamp::experiments::{run_sweeps, to_csv, Family, Figure, SetKind, Sweep, DEFAULT_MAX_M};
use latsamp::index_sets::{
    anisotropic_cross, dyadic_cross, hyperbolic_cross, linf_ball_2d, tensor_grid_2d,
    FrequencyIndexSet,
};
use latsamp::lattice::{fibonacci_lattice, korobov_lattice_2d, Rank1Lattice};
use latsamp::verify::Suite;

#[derive(Parser, Debug)]
#[command(
    name = "latsamp",
    version,
    about = "Rank-1 lattice sampling on hyperbolic crosses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Construct a reconstructing lattice and print M, |I| and M/|I|.
    Build(BuildArgs),
    /// Emit kink-function error sweeps as CSV.
    Experiment(ExperimentArgs),
    /// Run an invariant suite: reconstruction, lower-bound, counting, fft, kink or all.
    Verify { suite: String },
}

/// Shortcut forms take `key=value` pairs, e.g. `--hc d=2 T=0 R=4`.
#[derive(Args, Debug, Clone)]
struct BuildArgs {
    /// Hyperbolic cross with offset blocks: `d=… T=… R=…`.
    #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
    hc: Option<Vec<String>>,
    /// Offset-free dyadic cross: `d=… T=… R=…`.
    #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
    dyadic: Option<Vec<String>>,
    /// Two-dimensional ℓ∞-ball: `N=…`.
    #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
    linf: Option<Vec<String>>,
    /// Fibonacci lattice: `n=…`.
    #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
    fibonacci: Option<Vec<String>>,
    /// Korobov lattice: `R=…`.
    #[arg(long, num_args = 0.., value_name = "KEY=VALUE")]
    korobov: Option<Vec<String>>,

    #[arg(long)]
    family: Option<String>,
    /// Index-set kind: hc, dyadic, linf, grid or aniso.
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long = "N")]
    n_ball: Option<u64>,
    #[arg(long = "n")]
    n_fib: Option<u32>,
    /// Anisotropy vector for aniso sets, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long)]
    ceiling_multiplier: Option<f64>,
    #[arg(long)]
    ceiling: Option<u64>,
    /// Allow composite lattice sizes.
    #[arg(long)]
    no_prime_only: bool,
    /// Write the lattice line `M<TAB>z` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// fig4a, fig4b, fig4c, fig5a, fig5b, fig5c, fig8 or fig9.
    #[arg(long)]
    figure: Option<String>,
    #[arg(long)]
    family: Option<String>,
    /// Index-set kind: hc, dyadic, linf, grid or aniso.
    #[arg(long)]
    set: Option<String>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long = "T", default_value_t = 0.0)]
    t: f64,
    /// Refinements as a list `1,2,3` or an inclusive range `2..9`.
    #[arg(long = "R")]
    r: Option<String>,
    /// ℓ∞-ball sizes for CBC on the balls themselves.
    #[arg(long = "N")]
    n_ball: Option<String>,
    /// Fibonacci indices.
    #[arg(long = "n")]
    n_fib: Option<String>,
    #[arg(long, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    #[arg(long = "max-M", default_value_t = DEFAULT_MAX_M)]
    max_m: u64,
    /// Largest refinement of open-ended sweeps; figures use per-dimension defaults.
    #[arg(long = "max-R")]
    max_r: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => build(args),
        Command::Experiment(args) => experiment(args),
        Command::Verify { suite } => verify(&suite),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn pairs(values: &[String]) -> Result<Vec<(String, String)>, String> {
    values
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| format!("expected KEY=VALUE, got `{kv}`"))
        })
        .collect()
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("{key}={value}: {e}"))
}

/// Folds a shortcut form into the long flags.
fn apply_shortcut(args: &mut BuildArgs) -> Result<(), String> {
    let shortcuts = [
        ("hc", args.hc.take()),
        ("dyadic", args.dyadic.take()),
        ("linf", args.linf.take()),
        ("fibonacci", args.fibonacci.take()),
        ("korobov", args.korobov.take()),
    ];
    let given: Vec<_> = shortcuts
        .into_iter()
        .filter_map(|(name, v)| v.map(|v| (name, v)))
        .collect();
    if given.len() > 1 {
        return Err("give at most one of --hc, --dyadic, --linf, --fibonacci, --korobov".into());
    }
    let Some((name, values)) = given.into_iter().next() else {
        return Ok(());
    };
    match name {
        "fibonacci" | "korobov" => args.family = Some(name.to_string()),
        kind => args.set = Some(kind.to_string()),
    }
    for (key, value) in pairs(&values)? {
        match key.as_str() {
            "d" => args.d = Some(parse_value(&key, &value)?),
            "T" => args.t = Some(parse_value(&key, &value)?),
            "R" => args.r = Some(parse_value(&key, &value)?),
            "N" => args.n_ball = Some(parse_value(&key, &value)?),
            "n" => args.n_fib = Some(parse_value(&key, &value)?),
            "alpha" => {
                args.alpha = Some(
                    value
                        .split(',')
                        .map(|a| parse_value(&key, a))
                        .collect::<Result<_, _>>()?,
                );
            }
            other => return Err(format!("unknown key `{other}` for --{name}")),
        }
    }
    Ok(())
}

fn build_set(kind: SetKind, args: &BuildArgs) -> Result<FrequencyIndexSet, String> {
    let need_r = || {
        args.r
            .ok_or_else(|| format!("--R is required for {kind} sets"))
    };
    let d = args.d.unwrap_or(2);
    let t = args.t.unwrap_or(0.0);
    let set = match kind {
        SetKind::Hc => hyperbolic_cross(d, t, need_r()?),
        SetKind::Dyadic => dyadic_cross(d, t, need_r()?),
        SetKind::Grid => tensor_grid_2d(need_r()?),
        SetKind::Aniso => {
            let alpha = args
                .alpha
                .as_deref()
                .ok_or("--alpha is required for aniso sets")?;
            anisotropic_cross(alpha, need_r()?)
        }
        SetKind::Linf => linf_ball_2d(args.n_ball.ok_or("--N is required for linf sets")?),
    };
    set.map_err(|e| e.to_string())
}

/// Largest integer refinement whose set the lattice reconstructs.
fn largest_set(
    kind: SetKind,
    lattice: &Rank1Lattice,
    args: &BuildArgs,
) -> Result<Option<FrequencyIndexSet>, String> {
    if kind == SetKind::Linf {
        let n = latsamp::experiments::largest_linf_ball(lattice).map_err(|e| e.to_string())?;
        return Ok(if n == 0 {
            None
        } else {
            Some(linf_ball_2d(n).map_err(|e| e.to_string())?)
        });
    }
    let first = if kind == SetKind::Grid { 1 } else { 0 };
    let mut best = None;
    for r in first..=30 {
        let probe = BuildArgs {
            r: Some(r as f64),
            ..args.clone()
        };
        let set = build_set(kind, &probe)?;
        if set.len() as u64 > lattice.size()
            || !lattice.is_reconstructing(&set).map_err(|e| e.to_string())?
        {
            break;
        }
        best = Some(set);
    }
    Ok(best)
}

fn build(mut args: BuildArgs) -> Result<ExitCode, String> {
    apply_shortcut(&mut args)?;
    let family: Family = args
        .family
        .as_deref()
        .unwrap_or("cbc")
        .parse()
        .map_err(|e: latsamp::experiments::ExperimentError| e.to_string())?;
    let kind: SetKind = match args.set.as_deref() {
        Some(s) => s
            .parse()
            .map_err(|e: latsamp::experiments::ExperimentError| e.to_string())?,
        None => SetKind::Dyadic,
    };

    let (lattice, set) = match family {
        Family::Cbc => {
            let set = build_set(kind, &args)?;
            let config = CbcConfig {
                ceiling: args.ceiling,
                ceiling_multiplier: args.ceiling_multiplier.unwrap_or(1.0),
                prime_only: !args.no_prime_only,
            };
            match cbc_construct(&set, &config) {
                Ok(l) => (l, Some(set)),
                Err(e @ (CbcError::CandidateExhausted { .. } | CbcError::EmptyWindow { .. })) => {
                    return Err(format!("{e}; raise --ceiling or --ceiling-multiplier"))
                }
                Err(e) => return Err(e.to_string()),
            }
        }
        Family::Fibonacci => {
            let n = args.n_fib.ok_or("--n is required for Fibonacci lattices")?;
            let lattice = fibonacci_lattice(n).map_err(|e| e.to_string())?;
            let set = largest_set(kind, &lattice, &args)?;
            (lattice, set)
        }
        Family::Korobov => {
            let r = args.r.ok_or("--R is required for Korobov lattices")?;
            if r.fract() != 0.0 || r < 0.0 {
                return Err(format!(
                    "Korobov refinements are non-negative integers, got {r}"
                ));
            }
            let lattice = korobov_lattice_2d(r as u32).map_err(|e| e.to_string())?;
            let set = build_set(kind, &args)?;
            (lattice, Some(set))
        }
    };

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let m = lattice.size();
    writeln!(out, "lattice\t{}", lattice.to_line()).map_err(|e| e.to_string())?;
    writeln!(out, "M\t{m}").map_err(|e| e.to_string())?;
    match &set {
        Some(set) => {
            if !lattice.is_reconstructing(set).map_err(|e| e.to_string())? {
                return Err(format!("{lattice} does not reconstruct {}", set.spec()));
            }
            writeln!(out, "index_set\t{}", set.spec()).map_err(|e| e.to_string())?;
            writeln!(out, "|I|\t{}", set.len()).map_err(|e| e.to_string())?;
            writeln!(out, "M/|I|\t{:.4}", m as f64 / set.len() as f64)
                .map_err(|e| e.to_string())?;
            writeln!(out, "reconstructing\tyes").map_err(|e| e.to_string())?;
        }
        None => writeln!(out, "index_set\tnone reconstructed").map_err(|e| e.to_string())?,
    }
    if let Some(path) = &args.out {
        fs::write(path, format!("{}\n", lattice.to_line()))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

/// `a..b` (inclusive) or a comma-separated list.
fn parse_list<T>(text: &str) -> Result<Vec<T>, String>
where
    T: std::str::FromStr + Copy + Into<f64>,
    T::Err: std::fmt::Display,
{
    if let Some((a, b)) = text.split_once("..") {
        let a: i64 = a
            .trim()
            .parse()
            .map_err(|e| format!("range `{text}`: {e}"))?;
        let b: i64 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|e| format!("range `{text}`: {e}"))?;
        return (a..=b)
            .map(|v| parse_value::<T>("range", &v.to_string()))
            .collect();
    }
    text.split(',')
        .map(|v| parse_value::<T>("list", v.trim()))
        .collect()
}

fn experiment(args: ExperimentArgs) -> Result<ExitCode, String> {
    let sweeps = match &args.figure {
        Some(fig) => {
            if args.family.is_some()
                || args.r.is_some()
                || args.n_fib.is_some()
                || args.n_ball.is_some()
            {
                return Err("--figure cannot be combined with sweep flags".into());
            }
            let fig: Figure = fig
                .parse()
                .map_err(|e: latsamp::experiments::ExperimentError| e.to_string())?;
            let mut sweeps = fig.sweeps(args.max_m);
            if args.max_r.is_some() {
                sweeps
                    .iter_mut()
                    .for_each(|s| s.max_refinement = args.max_r);
            }
            sweeps
        }
        None => {
            let family: Family = args
                .family
                .as_deref()
                .ok_or("give --figure or --family")?
                .parse()
                .map_err(|e: latsamp::experiments::ExperimentError| e.to_string())?;
            let set: SetKind = match args.set.as_deref() {
                Some(s) => s
                    .parse()
                    .map_err(|e: latsamp::experiments::ExperimentError| e.to_string())?,
                None => SetKind::Dyadic,
            };
            let mut sweep = Sweep {
                family,
                set,
                d: args.d,
                t: args.t,
                alpha: args.alpha.clone().unwrap_or_default(),
                max_m: args.max_m,
                max_refinement: args.max_r,
                ..Sweep::default()
            };
            if let Some(r) = &args.r {
                sweep.refinements = Some(parse_list::<f64>(r)?);
            }
            if let Some(n) = &args.n_ball {
                sweep.refinements =
                    Some(parse_list::<u32>(n)?.into_iter().map(f64::from).collect());
                sweep.linf_from_cross = false;
            }
            if let Some(n) = &args.n_fib {
                sweep.fibonacci_indices = Some(parse_list::<u32>(n)?);
            }
            vec![sweep]
        }
    };
    let rows = run_sweeps(&sweeps).map_err(|e| e.to_string())?;
    let csv = to_csv(&rows);
    match &args.out {
        Some(path) => fs::write(path, csv).map_err(|e| format!("{}: {e}", path.display()))?,
        None => io::stdout()
            .lock()
            .write_all(csv.as_bytes())
            .map_err(|e| e.to_string())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(selector: &str) -> Result<ExitCode, String> {
    let suites: Vec<Suite> = if selector == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![selector.parse()?]
    };
    let mut ok = true;
    for suite in suites {
        let report = suite.run();
        println!("{report}");
        ok &= report.passed();
    }
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

//! Command-line front end: `simulate`, `estimate`, `selfcheck` and `coeffs`.
//!
//! [`run`] takes the argument list and output streams explicitly so that the whole interface
//! can be exercised in-process. Exit codes: 0 success, 1 usage error, 2 runtime or check
//! failure.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::benchmark::{self, EstimatorKind, ExperimentConfig};
use crate::distributions::{Distribution, Family, Histogram, SplitMode, SplitSample};
use crate::error::{Error, Result};
use crate::estimators::{
    derive_params, empirical, modified_empirical, AmplifiedEstimator, CoefficientTable,
    EstimatorParams, ParamChoice,
};
use crate::properties::{PropertyParams, PropertySpec};
use crate::selfcheck::{self, Fault, SelfcheckOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ampest",
    version,
    about = "Data-amplification estimators for additive distribution properties"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo MSE sweep over an n-grid; writes the results CSV.
    Simulate(SimulateArgs),
    /// Estimate a property from count files.
    Estimate(EstimateArgs),
    /// Run the numerical self-check suite.
    Selfcheck(SelfcheckArgs),
    /// Dump the coefficient table h_v * v! as CSV.
    Coeffs(CoeffsArgs),
}

#[derive(Debug, Args)]
struct PropertyFlags {
    /// entropy, support_size, coverage, power_sum, dist_to_uniform, l1_distance, kl_divergence
    #[arg(long)]
    property: String,
    /// Coverage horizon m.
    #[arg(long)]
    m: Option<f64>,
    /// Power-sum exponent a (> 1).
    #[arg(long)]
    a: Option<f64>,
    /// Reference distribution for L1 / KL: one probability per line.
    #[arg(long, value_name = "FILE", conflicts_with = "q")]
    q_file: Option<PathBuf>,
    /// Reference distribution shorthand; only `uniform` (over k symbols) is accepted.
    #[arg(long)]
    q: Option<String>,
}

#[derive(Debug, Args)]
struct ParamFlags {
    /// Use the tuned per-property t and s0 when available.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    preset: bool,
    /// Manual mode: t = ln^(1-alpha) n + 1.
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Manual mode: s0 = round(s0_mult * ln^0.2 n).
    #[arg(long, default_value_t = 4.0)]
    s0_mult: f64,
    /// Shrink t with the coefficient order.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    t_decay: bool,
}

impl ParamFlags {
    fn choice(&self) -> ParamChoice {
        ParamChoice {
            preset: self.preset,
            alpha: self.alpha,
            s0_mult: self.s0_mult,
            t_decay: self.t_decay,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    property: PropertyFlags,
    /// uniform, dirichlet, zipf, binomial, poisson, geometric
    #[arg(long)]
    dist: String,
    /// Overrides the family parameter (Dirichlet alpha, Zipf power, success probability, mean).
    #[arg(long)]
    dist_param: Option<f64>,
    /// Support size.
    #[arg(long)]
    k: usize,
    /// "1000,3162,10000" or "lo:hi:points" (log-spaced); defaults per property.
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = benchmark::DEFAULT_SEED)]
    seed: u64,
    /// Comma-separated subset of amplified, empirical, empirical_plus, empirical_plusplus,
    /// modified_empirical, or `all`.
    #[arg(long, default_value = "all")]
    estimators: String,
    /// two_stream, thinned or shared.
    #[arg(long, default_value = "two_stream")]
    split_mode: String,
    /// Draw exactly n samples for the plug-in estimators instead of Poi(n).
    #[arg(long)]
    fixed_size: bool,
    #[command(flatten)]
    params: ParamFlags,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    /// Output CSV; `-` or absent for stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the realized probability vector, one value per line.
    #[arg(long, value_name = "FILE")]
    dist_out: Option<PathBuf>,
    /// Exit with status 2 if any cell failed.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    property: PropertyFlags,
    /// Support size for support_size, dist_to_uniform and `--q uniform`.
    #[arg(long)]
    k: Option<u64>,
    /// First-stream counts, lines of `symbol,count`.
    #[arg(long, value_name = "FILE")]
    counts: PathBuf,
    /// Second-stream counts; absent means the first stream is reused (shared mode).
    #[arg(long, value_name = "FILE")]
    counts2: Option<PathBuf>,
    /// Per-stream Poisson rate n; required by amplified and modified_empirical.
    #[arg(long)]
    rate: Option<f64>,
    /// empirical, modified_empirical or amplified.
    #[arg(long, default_value = "amplified")]
    estimator: String,
    /// Explicit amplification (with --s0), overriding the preset / manual rule.
    #[arg(long, requires = "s0")]
    t: Option<f64>,
    #[arg(long, requires = "t")]
    s0: Option<u64>,
    #[command(flatten)]
    params: ParamFlags,
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    /// Extended grids and properties.
    #[arg(long)]
    deep: bool,
    /// Negative control: corrupt the checked quantities (none, flip-sign, skew-quadrature).
    #[arg(long, default_value = "none")]
    inject_fault: String,
}

#[derive(Debug, Args)]
struct CoeffsArgs {
    #[command(flatten)]
    property: PropertyFlags,
    #[arg(long)]
    k: Option<u64>,
    /// Per-stream Poisson rate n.
    #[arg(long)]
    rate: f64,
    #[arg(long, requires = "s0")]
    t: Option<f64>,
    #[arg(long, requires = "t")]
    s0: Option<u64>,
    #[arg(long)]
    v_max: Option<u64>,
    /// Symbol whose reference mass is used (L1 / KL only).
    #[arg(long, default_value_t = 0)]
    symbol: usize,
    #[command(flatten)]
    params: ParamFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::Malformed(_) | Error::DimensionMismatch { .. } => {
                EXIT_USAGE
            }
            _ => EXIT_FAILURE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_FAILURE,
            message: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: msg.into(),
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the chosen command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, out, err),
        Command::Estimate(a) => estimate(a, out, err),
        Command::Selfcheck(a) => run_selfcheck(a, out),
        Command::Coeffs(a) => coeffs(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_FAILURE,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

/// Opens `path` for writing, or stdout for `None` / `-`.
fn with_output<F>(
    path: Option<&Path>,
    out: &mut dyn Write,
    body: F,
) -> std::result::Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    match path {
        Some(p) if p != Path::new("-") => {
            let file = File::create(p).map_err(|e| Failure {
                code: EXIT_FAILURE,
                message: format!("cannot write {}: {e}", p.display()),
            })?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        _ => Ok(body(out)?),
    }
}

/// Parses `symbol,count` lines. A first line of `symbol,count` is a header; blank lines are
/// skipped; counts must be positive integers and symbols unique.
pub fn parse_counts(text: &str) -> Result<Vec<(String, u64)>> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if first && fields == ["symbol", "count"] {
            first = false;
            continue;
        }
        first = false;
        let bad = |why: &str| Error::Malformed(format!("line {}: {why}: {line:?}", i + 1));
        if fields.len() != 2 || fields[0].is_empty() {
            return Err(bad("expected `symbol,count`"));
        }
        let count: u64 = fields[1]
            .parse()
            .map_err(|_| bad("count is not a non-negative integer"))?;
        if count == 0 {
            return Err(bad("count must be positive"));
        }
        if seen.insert(fields[0].to_string(), i + 1).is_some() {
            return Err(bad("duplicate symbol"));
        }
        out.push((fields[0].to_string(), count));
    }
    Ok(out)
}

/// Parses a probability vector: one value per line (the last comma-separated field is used,
/// so `symbol,prob` also works); a non-numeric first line is a header.
pub fn parse_probabilities(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(_) => {
                return Err(Error::Malformed(format!(
                    "line {}: not a probability: {line:?}",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

/// `"a,b,c"` (strictly increasing) or `"lo:hi:points"` (log-spaced).
pub fn parse_grid(s: &str) -> Result<Vec<u64>> {
    let malformed = || Error::Malformed(format!("n-grid {s:?}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(malformed());
        }
        let lo = parts[0].trim().parse().map_err(|_| malformed())?;
        let hi = parts[1].trim().parse().map_err(|_| malformed())?;
        let points = parts[2].trim().parse().map_err(|_| malformed())?;
        return benchmark::log_grid(lo, hi, points).map_err(|_| malformed());
    }
    let grid: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse::<u64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| malformed())?;
    if grid.is_empty() || grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Malformed(format!(
            "n-grid {s:?} must be positive and strictly increasing"
        )));
    }
    Ok(grid)
}

fn parse_estimators(s: &str) -> std::result::Result<Vec<EstimatorKind>, Failure> {
    if s == "all" {
        return Ok(EstimatorKind::ALL.to_vec());
    }
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim) {
        let kind = EstimatorKind::from_name(name)
            .ok_or_else(|| usage(format!("unknown estimator {name:?}")))?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

fn parse_split(s: &str) -> std::result::Result<SplitMode, Failure> {
    SplitMode::from_name(s).ok_or_else(|| usage(format!("unknown split mode {s:?}")))
}

fn build_property(
    flags: &PropertyFlags,
    k: Option<u64>,
) -> std::result::Result<PropertySpec, Failure> {
    let q = match (&flags.q_file, flags.q.as_deref()) {
        (Some(path), _) => Some(parse_probabilities(&read_text(path)?)?),
        (None, Some("uniform")) => {
            let k = k.ok_or_else(|| usage("--q uniform needs --k"))?;
            if k == 0 {
                return Err(usage("--k must be positive"));
            }
            Some(vec![1.0 / k as f64; k as usize])
        }
        (None, Some(other)) => return Err(usage(format!("unknown --q shorthand {other:?}"))),
        (None, None) => None,
    };
    let params = PropertyParams {
        k,
        m: flags.m,
        a: flags.a,
        q,
    };
    Ok(PropertySpec::from_name(&flags.property, &params)?)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let spec = build_property(&a.property, Some(a.k as u64))?;
    let mut family = Family::default_for(&a.dist)
        .ok_or_else(|| usage(format!("unknown distribution {:?}", a.dist)))?;
    if let Some(p) = a.dist_param {
        family = family.with_param(p);
    }
    let mut cfg = ExperimentConfig::new(spec, family, a.k);
    if let Some(grid) = &a.n_grid {
        cfg.n_grid = parse_grid(grid)?;
    }
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.estimators = parse_estimators(&a.estimators)?;
    cfg.split = parse_split(&a.split_mode)?;
    cfg.poissonized = !a.fixed_size;
    cfg.params = a.params.choice();
    cfg.threads = a.threads;
    cfg.validate()?;

    let dist = Distribution::new(cfg.family, cfg.k, benchmark::distribution_seed(cfg.seed))?;
    if let Some(path) = &a.dist_out {
        with_output(Some(path), out, |w| dist.write_csv(w))?;
    }
    let rows = benchmark::run_experiment_on(&cfg, &dist)?;
    with_output(a.out.as_deref(), out, |w| benchmark::write_csv(&rows, w))?;

    let failed: Vec<_> = rows.iter().filter(|r| r.is_failed()).collect();
    for r in &failed {
        writeln!(
            err,
            "warning: n={} {} failed: {}",
            r.n,
            r.estimator.name(),
            r.failure.as_deref().unwrap_or("")
        )?;
    }
    for r in rows.iter().filter(|r| r.overflow > 0 || r.clamped > 0) {
        writeln!(
            err,
            "note: n={} {}: {} overflowed counts, {} clamped coefficients",
            r.n,
            r.estimator.name(),
            r.overflow,
            r.clamped
        )?;
    }
    Ok(if a.strict && !failed.is_empty() {
        EXIT_FAILURE
    } else {
        EXIT_OK
    })
}

// Symbol tokens mapped to indices. L1 / KL need numeric ids into the reference vector;
// otherwise ids are assigned in order of first appearance.
fn index_symbols(
    spec: &PropertySpec,
    streams: &[&[(String, u64)]],
) -> std::result::Result<Vec<Histogram>, Failure> {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut hists = Vec::new();
    for stream in streams {
        let mut pairs = Vec::with_capacity(stream.len());
        for (sym, c) in stream.iter() {
            let x = if spec.reference().is_some() {
                sym.parse::<usize>().map_err(|_| {
                    usage(format!(
                        "symbol {sym:?} must be an index into the reference distribution"
                    ))
                })?
            } else {
                let next = ids.len();
                *ids.entry(sym.as_str()).or_insert(next)
            };
            pairs.push((x, *c));
        }
        hists.push(Histogram::from_counts(pairs));
    }
    Ok(hists)
}

fn explicit_or_derived(
    t: Option<f64>,
    s0: Option<u64>,
    rate: f64,
    spec: &PropertySpec,
    flags: &ParamFlags,
) -> Result<EstimatorParams> {
    match (t, s0) {
        (Some(t), Some(s0)) => EstimatorParams::new(rate, t, s0, flags.t_decay),
        // per-stream rate equals the budget in the two-stream convention
        _ => derive_params(rate, spec, &flags.choice(), SplitMode::TwoStream),
    }
}

fn estimate(a: EstimateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let spec = build_property(&a.property, a.k)?;
    let first = parse_counts(&read_text(&a.counts)?)?;
    let second = match &a.counts2 {
        Some(p) => Some(parse_counts(&read_text(p)?)?),
        None => None,
    };
    let rate = a.rate;
    let need_rate = || {
        usage(format!(
            "--rate is required for the {} estimator",
            a.estimator
        ))
    };

    writeln!(out, "property={}", spec.name())?;
    writeln!(out, "estimator={}", a.estimator)?;
    match a.estimator.as_str() {
        "empirical" => {
            let hist = index_symbols(&spec, &[&first])?.remove(0);
            writeln!(out, "estimate={:.16e}", empirical(&hist, &spec)?)?;
        }
        "modified_empirical" => {
            let rate = rate.ok_or_else(need_rate)?;
            let hist = index_symbols(&spec, &[&first])?.remove(0);
            writeln!(
                out,
                "estimate={:.16e}",
                modified_empirical(&hist, rate, &spec)?
            )?;
        }
        "amplified" => {
            let rate = rate.ok_or_else(need_rate)?;
            let shared = second.is_none();
            if shared {
                writeln!(
                    err,
                    "warning: no --counts2 given; using the first stream for both (shared mode)"
                )?;
            }
            let second = second.unwrap_or_else(|| first.clone());
            let mut hists = index_symbols(&spec, &[&first, &second])?;
            let second_hist = hists.pop().expect("two streams");
            let first_hist = hists.pop().expect("two streams");
            let params = explicit_or_derived(a.t, a.s0, rate, &spec, &a.params)?;
            let estimator = AmplifiedEstimator::new(&spec, &params)?;
            let sample = SplitSample {
                first: first_hist,
                second: second_hist,
                rate,
            };
            let est = estimator.estimate(&sample)?;
            writeln!(out, "estimate={:.16e}", est.value)?;
            writeln!(out, "small_part={:.16e}", est.small)?;
            writeln!(out, "large_part={:.16e}", est.large)?;
            writeln!(out, "small_symbols={}", est.small_symbols)?;
            writeln!(out, "large_symbols={}", est.large_symbols)?;
            writeln!(out, "overflow={}", est.overflow)?;
            writeln!(out, "clamped={}", est.clamped)?;
            writeln!(
                out,
                "split={}",
                if shared { "shared" } else { "two_stream" }
            )?;
            writeln!(out, "rate={rate}")?;
            writeln!(out, "t={}", params.t)?;
            writeln!(out, "s0={}", params.s0)?;
            writeln!(out, "u_max={}", params.u_max)?;
            writeln!(out, "r={}", params.r)?;
            writeln!(out, "t_decay={}", params.t_decay)?;
        }
        other => return Err(usage(format!("unknown estimator {other:?}"))),
    }
    Ok(EXIT_OK)
}

fn run_selfcheck(a: SelfcheckArgs, out: &mut dyn Write) -> CmdResult {
    let fault = match a.inject_fault.as_str() {
        "none" => Fault::None,
        "flip-sign" => Fault::FlipCoefficientSign,
        "skew-quadrature" => Fault::SkewQuadrature,
        other => return Err(usage(format!("unknown fault {other:?}"))),
    };
    let results = selfcheck::run(&SelfcheckOptions {
        deep: a.deep,
        fault,
    });
    for r in &results {
        writeln!(out, "{r}")?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    writeln!(
        out,
        "{} of {} checks passed",
        results.len() - failed,
        results.len()
    )?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn coeffs(a: CoeffsArgs, out: &mut dyn Write) -> CmdResult {
    let spec = build_property(&a.property, a.k)?;
    let mut params = explicit_or_derived(a.t, a.s0, a.rate, &spec, &a.params)?;
    if let Some(v) = a.v_max {
        if v == 0 {
            return Err(usage("--v-max must be at least 1"));
        }
        params = params.with_v_max(v);
    }
    let q_x = match spec.reference() {
        Some(q) => Some(*q.get(a.symbol).ok_or_else(|| {
            usage(format!(
                "--symbol {} outside the reference support",
                a.symbol
            ))
        })?),
        None => None,
    };
    let table = CoefficientTable::new(&spec, q_x, &params)?;
    with_output(a.out.as_deref(), out, |w| table.write_csv(w))?;
    Ok(EXIT_OK)
}

//! Monte-Carlo MSE experiments over `n`-grids.
//!
//! Every trial draws fresh samples from its own ChaCha8 stream seeded by [`trial_seed`], so a
//! sweep is bit-reproducible for a fixed master seed at any degree of parallelism: trials may
//! run in any order, but their results are reduced in trial order.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::{sample_histogram, split_sample, Distribution, Family, SplitMode};
use crate::error::{invalid, Error, Result};
use crate::estimators::{
    derive_params, empirical, modified_empirical, AmplifiedEstimator, ParamChoice,
};
use crate::properties::PropertySpec;

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_190_519;

/// Header of the results CSV.
pub const CSV_HEADER: &str =
    "property,distribution,k,n,estimator,trials,mse,mean_estimate,true_value,seed";

/// The estimators a sweep can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Amplified,
    Empirical,
    /// Plug-in on `round(n sqrt(ln n))` samples.
    EmpiricalPlus,
    /// Plug-in on `round(n ln n)` samples.
    EmpiricalPlusPlus,
    ModifiedEmpirical,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Amplified,
        EstimatorKind::Empirical,
        EstimatorKind::EmpiricalPlus,
        EstimatorKind::EmpiricalPlusPlus,
        EstimatorKind::ModifiedEmpirical,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Amplified => "amplified",
            EstimatorKind::Empirical => "empirical",
            EstimatorKind::EmpiricalPlus => "empirical_plus",
            EstimatorKind::EmpiricalPlusPlus => "empirical_plusplus",
            EstimatorKind::ModifiedEmpirical => "modified_empirical",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|e| e.name() == s)
    }

    /// Stable identifier mixed into per-trial seeds.
    pub fn id(&self) -> u64 {
        match self {
            EstimatorKind::Amplified => 1,
            EstimatorKind::Empirical => 2,
            EstimatorKind::EmpiricalPlus => 3,
            EstimatorKind::EmpiricalPlusPlus => 4,
            EstimatorKind::ModifiedEmpirical => 5,
        }
    }

    /// Number of samples the estimator sees at grid point `n`.
    pub fn sample_size(&self, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            EstimatorKind::EmpiricalPlus => (nf * nf.ln().sqrt()).round(),
            EstimatorKind::EmpiricalPlusPlus => (nf * nf.ln()).round(),
            _ => nf,
        }
    }
}

/// One sweep: a property, a distribution, an `n`-grid and a set of estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: PropertySpec,
    pub family: Family,
    pub k: usize,
    pub n_grid: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub split: SplitMode,
    /// Poissonized sample sizes (default) or exactly `n` samples for the plug-in estimators.
    pub poissonized: bool,
    pub params: ParamChoice,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// A config with the default grid for `spec`, 100 trials and every estimator.
    pub fn new(spec: PropertySpec, family: Family, k: usize) -> Self {
        let n_grid = default_grid(&spec);
        ExperimentConfig {
            spec,
            family,
            k,
            n_grid,
            trials: 100,
            seed: DEFAULT_SEED,
            estimators: EstimatorKind::ALL.to_vec(),
            split: SplitMode::TwoStream,
            poissonized: true,
            params: ParamChoice::default(),
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if self.k == 0 {
            return Err(invalid("k must be positive"));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 {
            return Err(invalid("n-grid must be non-empty with positive entries"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n-grid must be strictly increasing"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("no estimators selected"));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be at least 1"));
        }
        Ok(())
    }
}

/// `points` log-spaced integers from `lo` to `hi` inclusive (duplicates after rounding dropped).
pub fn log_grid(lo: u64, hi: u64, points: usize) -> Result<Vec<u64>> {
    if lo == 0 || hi < lo || points == 0 {
        return Err(invalid(
            "log grid needs 0 < lo <= hi and at least one point",
        ));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi as f64 / lo as f64).ln();
    let mut out: Vec<u64> = (0..points)
        .map(|i| (lo as f64 * (ratio * i as f64 / (points - 1) as f64).exp()).round() as u64)
        .collect();
    out.dedup();
    Ok(out)
}

/// Ten log-spaced points from 1,000 to 100,000; coverage uses 1,000 to 3,000 in steps of 500.
pub fn default_grid(spec: &PropertySpec) -> Vec<u64> {
    match spec {
        PropertySpec::SupportCoverage { .. } => vec![1000, 1500, 2000, 2500, 3000],
        _ => log_grid(1000, 100_000, 10).expect("static grid"),
    }
}

/// Aggregated outcome of one `(n, estimator)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub property: String,
    pub distribution: String,
    pub k: usize,
    pub n: u64,
    pub estimator: EstimatorKind,
    pub trials: usize,
    pub mse: f64,
    pub mean_estimate: f64,
    pub true_value: f64,
    pub seed: u64,
    /// Why the cell failed; the numeric fields are NaN when set.
    pub failure: Option<String>,
    /// Amplified estimator only: small-branch symbols beyond `v_max`, summed over trials.
    pub overflow: usize,
    /// Amplified estimator only: clamped coefficients used, summed over trials.
    pub clamped: usize,
}

impl ResultRow {
    pub fn is_failed(&self) -> bool {
        self.failure.is_some()
    }

    /// The row as one CSV line (no newline).
    pub fn to_csv(&self) -> String {
        let num = |x: f64| {
            if self.is_failed() {
                "nan".to_string()
            } else {
                format!("{x:.16e}")
            }
        };
        format!(
            "{},{},{},{},{},{},{},{},{:.16e},{}",
            self.property,
            self.distribution,
            self.k,
            self.n,
            self.estimator.name(),
            self.trials,
            num(self.mse),
            num(self.mean_estimate),
            self.true_value,
            self.seed
        )
    }
}

/// Writes the header and one line per row, LF-terminated.
pub fn write_csv<W: Write>(rows: &[ResultRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv())?;
    }
    Ok(())
}

/// Mean of squared deviations from `truth`.
pub fn mse(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(invalid("mse of an empty list"));
    }
    let sum: f64 = estimates.iter().map(|e| (e - truth) * (e - truth)).sum();
    Ok(sum / estimates.len() as f64)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_4765_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed: a chain of SplitMix64 finalizers over the four coordinates.
///
/// The derivation is part of the output format (it determines every CSV value) and must not
/// change between releases.
pub fn trial_seed(master: u64, n: u64, estimator_id: u64, trial: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ n);
    h = splitmix64(h ^ estimator_id.rotate_left(32));
    splitmix64(h ^ trial)
}

/// Seed of the (once per experiment) distribution draw.
pub fn distribution_seed(master: u64) -> u64 {
    splitmix64(master ^ 0xD157_D157_D157_D157)
}

struct Trial {
    estimate: f64,
    overflow: usize,
    clamped: usize,
}

fn run_trial(
    cfg: &ExperimentConfig,
    dist: &Distribution,
    n: u64,
    kind: EstimatorKind,
    amplified: Option<&AmplifiedEstimator>,
    trial: usize,
) -> Result<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, n, kind.id(), trial as u64));
    let size = kind.sample_size(n);
    let plain = |estimate| Trial {
        estimate,
        overflow: 0,
        clamped: 0,
    };
    match kind {
        EstimatorKind::Amplified => {
            let est = amplified.expect("amplified estimator built for this cell");
            let sample = split_sample(dist, size, cfg.split, &mut rng);
            let out = est.estimate(&sample)?;
            Ok(Trial {
                estimate: out.value,
                overflow: out.overflow,
                clamped: out.clamped,
            })
        }
        EstimatorKind::ModifiedEmpirical => {
            let hist = sample_histogram(dist, size, cfg.poissonized, &mut rng);
            modified_empirical(&hist, size, &cfg.spec).map(plain)
        }
        EstimatorKind::Empirical
        | EstimatorKind::EmpiricalPlus
        | EstimatorKind::EmpiricalPlusPlus => {
            let hist = sample_histogram(dist, size, cfg.poissonized, &mut rng);
            empirical(&hist, &cfg.spec).map(plain)
        }
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    dist: &Distribution,
    truth: f64,
    n: u64,
    kind: EstimatorKind,
) -> ResultRow {
    let mut row = ResultRow {
        property: cfg.spec.name().to_string(),
        distribution: cfg.family.name().to_string(),
        k: cfg.k,
        n,
        estimator: kind,
        trials: cfg.trials,
        mse: f64::NAN,
        mean_estimate: f64::NAN,
        true_value: truth,
        seed: cfg.seed,
        failure: None,
        overflow: 0,
        clamped: 0,
    };
    let amplified = if kind == EstimatorKind::Amplified {
        let built = derive_params(n as f64, &cfg.spec, &cfg.params, cfg.split)
            .and_then(|p| AmplifiedEstimator::new(&cfg.spec, &p));
        match built {
            Ok(est) => Some(est),
            Err(e) => {
                row.failure = Some(e.to_string());
                return row;
            }
        }
    } else {
        None
    };

    let trials: Vec<Result<Trial>> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, dist, n, kind, amplified.as_ref(), i))
        .collect();

    let mut estimates = Vec::with_capacity(trials.len());
    for t in trials {
        match t {
            Ok(t) => {
                row.overflow += t.overflow;
                row.clamped += t.clamped;
                estimates.push(t.estimate);
            }
            Err(e) => {
                row.failure = Some(e.to_string());
                return row;
            }
        }
    }
    if let Some(bad) = estimates.iter().find(|e| !e.is_finite()) {
        row.failure = Some(format!("non-finite estimate {bad}"));
        return row;
    }
    row.mse = mse(&estimates, truth).expect("trials >= 1");
    row.mean_estimate = estimates.iter().sum::<f64>() / estimates.len() as f64;
    row
}

/// Runs every `(n, estimator)` cell of the sweep, in grid order then estimator order.
///
/// Cells whose parameters cannot be derived, or whose estimates fail, are returned with
/// [`ResultRow::failure`] set instead of aborting the sweep. Only an invalid configuration or
/// distribution is an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let dist = Distribution::new(cfg.family, cfg.k, distribution_seed(cfg.seed))?;
    run_experiment_on(cfg, &dist)
}

/// As [`run_experiment`], on an explicit distribution (its support size overrides `cfg.k`).
pub fn run_experiment_on(cfg: &ExperimentConfig, dist: &Distribution) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    cfg.k = dist.k();
    let truth = cfg.spec.exact_value(dist.probs())?;
    let body = || {
        let mut rows = Vec::new();
        for &n in &cfg.n_grid {
            for &kind in &cfg.estimators {
                rows.push(run_cell(&cfg, dist, truth, n, kind));
            }
        }
        rows
    };
    match cfg.threads {
        None => Ok(body()),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Io(e.to_string()))?;
            Ok(pool.install(body))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[3.0, 3.0, 3.0], 3.0).unwrap(), 0.0);
        assert_eq!(mse(&[2.0, 4.0], 3.0).unwrap(), 1.0);
        assert!((mse(&[0.5, 1.5, 1.0], 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(mse(&[], 1.0).is_err());
    }

    #[test]
    fn trial_seeds_are_stable_and_distinct() {
        let a = trial_seed(7, 1000, 2, 0);
        assert_eq!(a, trial_seed(7, 1000, 2, 0));
        assert_ne!(a, trial_seed(7, 1000, 2, 1));
        assert_ne!(a, trial_seed(7, 1000, 1, 0));
        assert_ne!(a, trial_seed(7, 1001, 2, 0));
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1000, 100_000, 10).unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 1000);
        assert_eq!(g[9], 100_000);
        assert_eq!(g[5], 12915);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_grid(5, 5, 1).unwrap(), vec![5]);
    }

    #[test]
    fn amplified_sample_sizes() {
        assert_eq!(EstimatorKind::EmpiricalPlus.sample_size(10_000), 30349.0);
        assert_eq!(EstimatorKind::EmpiricalPlusPlus.sample_size(1000), 6908.0);
        assert_eq!(EstimatorKind::Amplified.sample_size(1000), 1000.0);
    }

    #[test]
    fn point_mass_entropy_mse_is_the_squared_estimate() {
        let dist = Distribution::from_probs(vec![1.0, 0.0, 0.0]).unwrap();
        let mut cfg = ExperimentConfig::new(PropertySpec::Entropy, Family::Explicit, 3);
        cfg.n_grid = vec![200];
        cfg.trials = 1;
        cfg.estimators = vec![EstimatorKind::Empirical];
        let rows = run_experiment_on(&cfg, &dist).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].true_value, 0.0);
        assert_eq!(rows[0].mse, rows[0].mean_estimate.powi(2));
    }

    #[test]
    fn failed_cells_are_marked_not_fatal() {
        let mut cfg = ExperimentConfig::new(PropertySpec::Entropy, Family::Uniform, 10);
        cfg.n_grid = vec![100, 1000];
        cfg.trials = 2;
        cfg.estimators = vec![EstimatorKind::Amplified];
        let rows = run_experiment(&cfg).unwrap();
        // 100 < 150 samples: no parameters
        assert!(rows[0].is_failed());
        assert!(rows[0].to_csv().contains(",nan,nan,"));
        assert!(!rows[1].is_failed());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ExperimentConfig::new(PropertySpec::Entropy, Family::Uniform, 10);
        cfg.n_grid = vec![1000, 1000];
        assert!(run_experiment(&cfg).is_err());
        cfg.n_grid = vec![1000];
        cfg.trials = 0;
        assert!(run_experiment(&cfg).is_err());
    }
}

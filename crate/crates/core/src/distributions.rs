//! Synthetic distributions, count histograms and Poissonized sampling.

use std::fmt;
use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _, Gamma, Poisson};

use crate::error::{invalid, Result};
use crate::numerics::{ln_binomial, log_factorial, neumaier_sum};
use crate::properties::SUM_TOLERANCE;

/// Distribution family with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Uniform,
    /// Symmetric Dirichlet draw with the given concentration.
    Dirichlet {
        alpha: f64,
    },
    /// Mass `∝ rank^{-power}` over ranks `1..=k`.
    Zipf {
        power: f64,
    },
    /// `Binomial(k - 1, prob)` over `0..k`.
    Binomial {
        prob: f64,
    },
    /// `Poisson(mean)` restricted to `0..k`.
    Poisson {
        mean: f64,
    },
    /// `(1 - prob)^{x-1} prob` over `x = 1..=k`.
    Geometric {
        prob: f64,
    },
    /// A user-supplied probability vector.
    Explicit,
}

impl Family {
    /// Parameters used in the published experiments.
    pub fn default_for(name: &str) -> Option<Family> {
        Some(match name {
            "uniform" => Family::Uniform,
            "dirichlet" => Family::Dirichlet { alpha: 2.0 },
            "zipf" => Family::Zipf { power: 1.5 },
            "binomial" => Family::Binomial { prob: 0.3 },
            "poisson" => Family::Poisson { mean: 3000.0 },
            "geometric" => Family::Geometric { prob: 0.99 },
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Dirichlet { .. } => "dirichlet",
            Family::Zipf { .. } => "zipf",
            Family::Binomial { .. } => "binomial",
            Family::Poisson { .. } => "poisson",
            Family::Geometric { .. } => "geometric",
            Family::Explicit => "explicit",
        }
    }

    /// Replaces the family's single parameter.
    pub fn with_param(self, value: f64) -> Family {
        match self {
            Family::Dirichlet { .. } => Family::Dirichlet { alpha: value },
            Family::Zipf { .. } => Family::Zipf { power: value },
            Family::Binomial { .. } => Family::Binomial { prob: value },
            Family::Poisson { .. } => Family::Poisson { mean: value },
            Family::Geometric { .. } => Family::Geometric { prob: value },
            other => other,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::Uniform | Family::Explicit => true,
            Family::Dirichlet { alpha } => alpha > 0.0 && alpha.is_finite(),
            Family::Zipf { power } => power > 0.0 && power.is_finite(),
            Family::Binomial { prob } | Family::Geometric { prob } => prob > 0.0 && prob < 1.0,
            Family::Poisson { mean } => mean > 0.0 && mean.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid parameters for {self:?}")))
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A finite probability vector with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
    family: Family,
}

fn normalize_log_weights(log_w: Vec<f64>) -> Vec<f64> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    normalize(w)
}

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let total = neumaier_sum(&w);
    w.into_iter().map(|x| x / total).collect()
}

impl Distribution {
    /// Builds the `k`-symbol member of `family`. Only the Dirichlet family consumes `seed`.
    pub fn new(family: Family, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("support size k must be at least 1"));
        }
        family.validate()?;
        let probs = match family {
            Family::Uniform => vec![1.0 / k as f64; k],
            Family::Dirichlet { alpha } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let gamma = Gamma::new(alpha, 1.0).map_err(|e| invalid(e.to_string()))?;
                normalize((0..k).map(|_| gamma.sample(&mut rng)).collect())
            }
            Family::Zipf { power } => {
                normalize_log_weights((1..=k).map(|r| -power * (r as f64).ln()).collect())
            }
            Family::Binomial { prob } => {
                let trials = k as u64 - 1;
                normalize_log_weights(
                    (0..k as u64)
                        .map(|x| {
                            ln_binomial(trials, x)
                                + x as f64 * prob.ln()
                                + (trials - x) as f64 * (-prob).ln_1p()
                        })
                        .collect(),
                )
            }
            Family::Poisson { mean } => normalize_log_weights(
                (0..k as u64)
                    .map(|x| x as f64 * mean.ln() - log_factorial(x))
                    .collect(),
            ),
            Family::Geometric { prob } => {
                normalize_log_weights((0..k).map(|i| i as f64 * (-prob).ln_1p()).collect())
            }
            Family::Explicit => {
                return Err(invalid("use Distribution::from_probs for explicit vectors"))
            }
        };
        Ok(Distribution { probs, family })
    }

    /// Wraps an explicit probability vector.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("probability vector is empty"));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(invalid(
                "probability vector has a negative or non-finite entry",
            ));
        }
        let total = neumaier_sum(&probs);
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(invalid(format!(
                "probability vector sums to {total}, not 1"
            )));
        }
        Ok(Distribution {
            probs,
            family: Family::Explicit,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    /// Writes one probability per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.probs {
            writeln!(out, "{p:.16e}")?;
        }
        Ok(())
    }
}

/// Symbol counts from one sample stream. Zero counts are not stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Histogram {
    // sorted by symbol, counts > 0
    counts: Vec<(usize, u64)>,
    total: u64,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a histogram from `(symbol, count)` pairs; repeated symbols are merged and zero
    /// counts dropped.
    pub fn from_counts<I: IntoIterator<Item = (usize, u64)>>(pairs: I) -> Self {
        let mut counts: Vec<(usize, u64)> = pairs.into_iter().filter(|&(_, c)| c > 0).collect();
        counts.sort_unstable_by_key(|&(x, _)| x);
        counts.dedup_by(|later, earlier| {
            if later.0 == earlier.0 {
                earlier.1 += later.1;
                true
            } else {
                false
            }
        });
        let total = counts.iter().map(|&(_, c)| c).sum();
        Histogram { counts, total }
    }

    /// From a dense count vector indexed by symbol.
    pub fn from_dense(dense: &[u64]) -> Self {
        let counts: Vec<(usize, u64)> = dense
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(x, &c)| (x, c))
            .collect();
        let total = counts.iter().map(|&(_, c)| c).sum();
        Histogram { counts, total }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct observed symbols.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, x: usize) -> u64 {
        self.counts
            .binary_search_by_key(&x, |&(s, _)| s)
            .map(|i| self.counts[i].1)
            .unwrap_or(0)
    }

    /// `(symbol, count)` pairs in increasing symbol order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().copied()
    }
}

/// How a sample budget is turned into the two streams used by the amplified estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Two independent Poissonized draws, each of rate `budget`.
    TwoStream,
    /// One draw of rate `budget`, each sample routed to a stream by a fair coin; rate `budget / 2`.
    Thinned,
    /// One draw of rate `budget` used as both streams.
    Shared,
}

impl SplitMode {
    pub fn name(&self) -> &'static str {
        match self {
            SplitMode::TwoStream => "two_stream",
            SplitMode::Thinned => "thinned",
            SplitMode::Shared => "shared",
        }
    }

    pub fn from_name(s: &str) -> Option<SplitMode> {
        match s {
            "two_stream" | "two-stream" => Some(SplitMode::TwoStream),
            "thinned" => Some(SplitMode::Thinned),
            "shared" => Some(SplitMode::Shared),
            _ => None,
        }
    }

    /// Per-stream Poisson rate for a given total sample budget.
    pub fn stream_rate(&self, budget: f64) -> f64 {
        match self {
            SplitMode::Thinned => budget / 2.0,
            SplitMode::TwoStream | SplitMode::Shared => budget,
        }
    }
}

/// The two histograms consumed by the amplified estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSample {
    /// Counts `N_x`, used for the estimate itself.
    pub first: Histogram,
    /// Counts `N'_x`, used to classify symbols as small or large.
    pub second: Histogram,
    /// Per-stream Poisson rate `n`.
    pub rate: f64,
}

/// Draws a count histogram of (expected) size `n`.
///
/// Poissonized mode samples independent `N_x ~ Poi(n p_x)`, which has the same law as drawing
/// `N ~ Poi(n)` symbols. Fixed mode draws exactly `round(n)` symbols via conditional binomials.
pub fn sample_histogram<R: Rng + ?Sized>(
    dist: &Distribution,
    n: f64,
    poissonized: bool,
    rng: &mut R,
) -> Histogram {
    assert!(n > 0.0, "sample size must be positive");
    let mut counts = Vec::new();
    if poissonized {
        for (x, &p) in dist.probs.iter().enumerate() {
            let lambda = n * p;
            if lambda > 0.0 {
                let c = Poisson::new(lambda).expect("positive rate").sample(rng) as u64;
                if c > 0 {
                    counts.push((x, c));
                }
            }
        }
    } else {
        let mut remaining = n.round() as u64;
        let mut mass_left = 1.0f64;
        for (x, &p) in dist.probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            if p <= 0.0 {
                continue;
            }
            let share = if mass_left > 0.0 {
                (p / mass_left).min(1.0)
            } else {
                1.0
            };
            let c = if share >= 1.0 {
                remaining
            } else {
                Binomial::new(remaining, share)
                    .expect("valid share")
                    .sample(rng)
            };
            if c > 0 {
                counts.push((x, c));
            }
            remaining -= c;
            mass_left -= p;
        }
        if remaining > 0 {
            // rounding left some mass unassigned; give it to the last positive symbol
            if let Some(x) = dist.probs.iter().rposition(|&p| p > 0.0) {
                counts.push((x, remaining));
            }
        }
    }
    Histogram::from_counts(counts)
}

/// Draws the two streams for the amplified estimator.
pub fn split_sample<R: Rng + ?Sized>(
    dist: &Distribution,
    budget: f64,
    mode: SplitMode,
    rng: &mut R,
) -> SplitSample {
    assert!(budget > 0.0, "sample budget must be positive");
    match mode {
        SplitMode::TwoStream => {
            let first = sample_histogram(dist, budget, true, rng);
            let second = sample_histogram(dist, budget, true, rng);
            SplitSample {
                first,
                second,
                rate: budget,
            }
        }
        SplitMode::Thinned => {
            let all = sample_histogram(dist, budget, true, rng);
            let mut a = Vec::with_capacity(all.distinct());
            let mut b = Vec::with_capacity(all.distinct());
            for (x, c) in all.iter() {
                let heads = Binomial::new(c, 0.5).expect("valid").sample(rng);
                a.push((x, heads));
                b.push((x, c - heads));
            }
            SplitSample {
                first: Histogram::from_counts(a),
                second: Histogram::from_counts(b),
                rate: budget / 2.0,
            }
        }
        SplitMode::Shared => {
            let all = sample_histogram(dist, budget, true, rng);
            SplitSample {
                first: all.clone(),
                second: all,
                rate: budget,
            }
        }
    }
}

//! Estimators: the plug-in baselines and the amplified estimator.

mod coefficients;
mod oracle;
mod params;
mod precise;

use std::collections::HashMap;
use std::sync::Arc;

pub use coefficients::{
    coefficient, ln_envelope, CoefficientEntry, CoefficientTable, DEFAULT_CEILING,
};
pub use oracle::{smoothed_h_hat, smoothed_h_hat_quadrature, smoothed_h_hat_series};
pub use params::{
    derive_params, preset_row, EstimatorParams, ParamChoice, DECAY_FLOOR, DECAY_RATE,
    MIN_AMPLIFICATION, MIN_SAMPLES,
};

pub(crate) use precise::{
    coefficient_at as precise_coefficient_at, consts as big_consts, to_f64 as big_to_f64,
};

use crate::distributions::{Histogram, SplitSample};
use crate::error::{invalid, Error, Result};
use crate::numerics::neumaier_sum;
use crate::properties::PropertySpec;

fn check_symbol(spec: &PropertySpec, x: usize) -> Result<()> {
    if let PropertySpec::DistToUniform { k } = spec {
        if x as u64 >= *k {
            return Err(Error::DimensionMismatch {
                expected: *k as usize,
                got: x + 1,
            });
        }
    }
    Ok(())
}

fn plug_in(hist: &Histogram, denom: f64, spec: &PropertySpec) -> Result<f64> {
    let mut terms = Vec::with_capacity(hist.distinct());
    for (x, c) in hist.iter() {
        check_symbol(spec, x)?;
        terms.push(spec.eval_fx(x, c as f64 / denom)?);
    }
    Ok(neumaier_sum(&terms) + spec.report_offset())
}

/// Plug-in estimate `Σ_x f_x(N_x / N)`; an empty histogram reports only the offset.
pub fn empirical(hist: &Histogram, spec: &PropertySpec) -> Result<f64> {
    if hist.total() == 0 {
        return Ok(spec.report_offset());
    }
    plug_in(hist, hist.total() as f64, spec)
}

/// Plug-in estimate normalized by the Poisson rate, `Σ_x f_x(N_x / n)`.
pub fn modified_empirical(hist: &Histogram, rate: f64, spec: &PropertySpec) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(invalid("Poisson rate must be positive"));
    }
    plug_in(hist, rate, spec)
}

/// Breakdown of one amplified estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplifiedEstimate {
    /// Reported estimate, including the property's offset.
    pub value: f64,
    /// Contribution of the series branch.
    pub small: f64,
    /// Contribution of the plug-in branch.
    pub large: f64,
    /// Observed symbols routed to each branch.
    pub small_symbols: usize,
    pub large_symbols: usize,
    /// Small-branch symbols with `N_x > v_max`, which contribute zero.
    pub overflow: usize,
    /// Small-branch symbols whose coefficient hit the clamp.
    pub clamped: usize,
}

#[derive(Debug)]
enum Tables {
    Shared(CoefficientTable),
    PerMass {
        by_symbol: Vec<Option<usize>>,
        tables: Vec<CoefficientTable>,
    },
}

/// The amplified estimator for one property and one parameter set.
///
/// Coefficient tables are built once and filled lazily, so a single estimator can be reused
/// (and shared across threads) for every trial at the same sample size.
#[derive(Debug)]
pub struct AmplifiedEstimator {
    spec: PropertySpec,
    params: EstimatorParams,
    tables: Tables,
}

impl AmplifiedEstimator {
    pub fn new(spec: &PropertySpec, params: &EstimatorParams) -> Result<Self> {
        let tails = Arc::new(coefficients::tail_table(params));
        let tables = match spec.reference() {
            None => Tables::Shared(CoefficientTable::with_tails(spec, None, params, tails)?),
            Some(q) => {
                let undefined_at_zero = matches!(spec, PropertySpec::KlDivergence { .. });
                let mut index: HashMap<u64, usize> = HashMap::new();
                let mut tables = Vec::new();
                let mut by_symbol = Vec::with_capacity(q.len());
                for &q_x in q {
                    if undefined_at_zero && q_x == 0.0 {
                        by_symbol.push(None);
                        continue;
                    }
                    let slot = match index.get(&q_x.to_bits()) {
                        Some(&i) => i,
                        None => {
                            tables.push(CoefficientTable::with_tails(
                                spec,
                                Some(q_x),
                                params,
                                tails.clone(),
                            )?);
                            index.insert(q_x.to_bits(), tables.len() - 1);
                            tables.len() - 1
                        }
                    };
                    by_symbol.push(Some(slot));
                }
                Tables::PerMass { by_symbol, tables }
            }
        };
        Ok(AmplifiedEstimator {
            spec: spec.clone(),
            params: *params,
            tables,
        })
    }

    pub fn params(&self) -> &EstimatorParams {
        &self.params
    }

    pub fn spec(&self) -> &PropertySpec {
        &self.spec
    }

    /// Number of distinct coefficient tables (one per distinct reference mass for L1 / KL).
    pub fn table_count(&self) -> usize {
        match &self.tables {
            Tables::Shared(_) => 1,
            Tables::PerMass { tables, .. } => tables.len(),
        }
    }

    /// Table used for symbol `x`.
    pub fn table_for(&self, x: usize) -> Result<&CoefficientTable> {
        match &self.tables {
            Tables::Shared(t) => Ok(t),
            Tables::PerMass { by_symbol, tables } => match by_symbol.get(x) {
                None => Err(Error::DimensionMismatch {
                    expected: by_symbol.len(),
                    got: x + 1,
                }),
                Some(None) => Err(Error::UndefinedDivergence { symbol: x }),
                Some(Some(i)) => Ok(&tables[*i]),
            },
        }
    }

    /// Applies the estimator to a two-stream sample whose rate matches the parameters.
    pub fn estimate(&self, sample: &SplitSample) -> Result<AmplifiedEstimate> {
        let rate = self.params.rate;
        if (sample.rate - rate).abs() > 1e-9 * rate {
            return Err(invalid(format!(
                "sample rate {} does not match estimator rate {rate}",
                sample.rate
            )));
        }
        let mut small_terms = Vec::new();
        let mut large_terms = Vec::new();
        let mut out = AmplifiedEstimate {
            value: 0.0,
            small: 0.0,
            large: 0.0,
            small_symbols: 0,
            large_symbols: 0,
            overflow: 0,
            clamped: 0,
        };

        let mut first = sample.first.iter().peekable();
        let mut second = sample.second.iter().peekable();
        loop {
            // next symbol in either stream, with both counts
            let (x, n1, n2) = match (first.peek().copied(), second.peek().copied()) {
                (None, None) => break,
                (Some((a, c)), None) => {
                    first.next();
                    (a, c, 0)
                }
                (None, Some((b, d))) => {
                    second.next();
                    (b, 0, d)
                }
                (Some((a, c)), Some((b, d))) => {
                    if a == b {
                        first.next();
                        second.next();
                        (a, c, d)
                    } else if a < b {
                        first.next();
                        (a, c, 0)
                    } else {
                        second.next();
                        (b, 0, d)
                    }
                }
            };
            check_symbol(&self.spec, x)?;
            if n2 <= self.params.s0 {
                out.small_symbols += 1;
                if n1 == 0 {
                    continue;
                }
                let table = self.table_for(x)?;
                match table.get(n1) {
                    Some(e) => {
                        if e.clamped {
                            out.clamped += 1;
                        }
                        small_terms.push(e.value);
                    }
                    None => out.overflow += 1,
                }
            } else {
                out.large_symbols += 1;
                large_terms.push(self.spec.eval_fx(x, n1 as f64 / rate)?);
            }
        }
        out.small = neumaier_sum(&small_terms);
        out.large = neumaier_sum(&large_terms);
        out.value = out.small + out.large + self.spec.report_offset();
        Ok(out)
    }
}

/// One-shot amplified estimate; builds the coefficient tables on the fly.
pub fn amplified_estimate(
    sample: &SplitSample,
    spec: &PropertySpec,
    params: &EstimatorParams,
) -> Result<AmplifiedEstimate> {
    AmplifiedEstimator::new(spec, params)?.estimate(sample)
}

//! The smoothed-series coefficients `h_v · v!`.
//!
//! For a symbol seen `v` times in the first stream (and rarely in the second),
//!
//! ```text
//! h_v · v! = Σ_{u=1}^{min(u_max, v)} (-1)^{v-u} C(v, u) (t-1)^{v-u} t^u f_x(u / (n t)) P(Poi(r) > v + u)
//! ```
//!
//! Terms grow like `(2t - 1)^v` while the sum stays moderate, so every term is carried as a
//! signed logarithm and summed with [`alternating_sum`]. When the predicted relative error of
//! that double-precision route exceeds `1e-12`, the coefficient is recomputed with
//! arbitrary-precision arithmetic.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use super::params::EstimatorParams;
use super::precise::{precise_coefficient, PhiCache};
use crate::error::{invalid, Result};
use crate::numerics::{alternating_sum, ln_binomial, PoissonTailTable, SignedLogValue, SignedSum};
use crate::properties::PropertySpec;

/// Default cap on `|h_v · v!|`; far above anything the envelope produces in practice.
pub const DEFAULT_CEILING: f64 = 1e300;

const ROUTE_REL_TOLERANCE: f64 = 1e-12;
// Below e^-708 a double is subnormal or zero, so extra digits cannot be represented; a
// loose error bound suffices there.
const LN_SMALLEST_NORMAL: f64 = -708.0;
const UNDERFLOW_REL_TOLERANCE: f64 = 1e-6;

/// One computed coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientEntry {
    /// `h_v · v!` after clamping.
    pub value: f64,
    /// The value before clamping.
    pub raw: f64,
    pub clamped: bool,
    /// Computed with arbitrary precision.
    pub precise: bool,
    /// Nats lost to cancellation in the double-precision route.
    pub cancellation_nats: f64,
}

/// `ln` of the magnitude bound `ℓ_f(1/(n t)) · u_max/(n t) · e^{2 r (t-1)}` for the order-`v`
/// coefficient (with `t` the order's effective amplification).
pub fn ln_envelope(spec: &PropertySpec, v: u64, params: &EstimatorParams) -> f64 {
    let tv = params.effective_t(v);
    let h = (1.0 / (params.rate * tv)).min(1.0);
    spec.lipschitz(h).ln() + (params.u_max as f64 * h).ln() + 2.0 * params.r as f64 * (tv - 1.0)
}

/// Double-precision route: the signed terms and their cancellation-aware sum.
pub(crate) fn log_space_sum(
    spec: &PropertySpec,
    q_x: Option<f64>,
    v: u64,
    params: &EstimatorParams,
    tails: &PoissonTailTable,
) -> SignedSum {
    let tv = params.effective_t(v);
    let ln_tm1 = (tv - 1.0).ln();
    let ln_t = tv.ln();
    let rate_t = params.rate * tv;
    let top = params.u_max.min(v);
    let mut terms = Vec::with_capacity(top as usize);
    for u in 1..=top {
        let phi = spec
            .eval_with_mass(q_x, u as f64 / rate_t)
            .expect("reference mass checked when the table was built");
        let ln_tail = tails.ln_tail(v + u);
        if phi == 0.0 || ln_tail == f64::NEG_INFINITY {
            continue;
        }
        let ln_mag = ln_binomial(v, u)
            + (v - u) as f64 * ln_tm1
            + u as f64 * ln_t
            + phi.abs().ln()
            + ln_tail;
        let parity = if (v - u).is_multiple_of(2) { 1 } else { -1 };
        let sign = if phi > 0.0 { parity } else { -parity };
        terms.push(SignedLogValue::new(sign, ln_mag));
    }
    alternating_sum(&terms)
}

fn predicted_rel_error(sum: &SignedSum) -> f64 {
    if sum.max_log_magnitude == f64::NEG_INFINITY {
        return 0.0;
    }
    // each log-magnitude carries an absolute error of a few ulps of its own size
    let per_term = 4.0 * f64::EPSILON * (1.0 + sum.max_log_magnitude.abs());
    per_term * sum.cancellation_nats().min(700.0).exp()
}

fn needs_precise_route(sum: &SignedSum) -> bool {
    let err = predicted_rel_error(sum);
    let ln_result = sum.max_log_magnitude - sum.cancellation_nats();
    if ln_result < LN_SMALLEST_NORMAL {
        err > UNDERFLOW_REL_TOLERANCE
    } else {
        err > ROUTE_REL_TOLERANCE
    }
}

/// Lazily filled table of `h_v · v!` for `v = 1..=v_max` and one symbol class.
///
/// Each entry is computed at most once, on first use, and is safe to read from many threads.
#[derive(Debug)]
pub struct CoefficientTable {
    spec: PropertySpec,
    q_x: Option<f64>,
    params: EstimatorParams,
    tails: Arc<PoissonTailTable>,
    ln_ceiling: f64,
    entries: Vec<OnceLock<CoefficientEntry>>,
    phi_cache: PhiCache,
}

impl CoefficientTable {
    /// Table for a symmetric property, or for one reference mass `q_x` of L1 / KL.
    pub fn new(spec: &PropertySpec, q_x: Option<f64>, params: &EstimatorParams) -> Result<Self> {
        let tails = Arc::new(tail_table(params));
        Self::with_tails(spec, q_x, params, tails)
    }

    pub(crate) fn with_tails(
        spec: &PropertySpec,
        q_x: Option<f64>,
        params: &EstimatorParams,
        tails: Arc<PoissonTailTable>,
    ) -> Result<Self> {
        if spec.is_symmetric() != q_x.is_none() {
            return Err(invalid(
                "a reference mass is required exactly for L1 distance and KL divergence",
            ));
        }
        if matches!(spec, PropertySpec::KlDivergence { .. }) && q_x == Some(0.0) {
            return Err(invalid(
                "KL coefficients are undefined for reference mass 0",
            ));
        }
        if params.r == 0 || params.v_max == 0 {
            return Err(invalid("coefficient tables need r >= 1 and v_max >= 1"));
        }
        debug_assert!(tails.max_j() >= required_tail_len(params));
        Ok(CoefficientTable {
            spec: spec.clone(),
            q_x,
            params: *params,
            tails,
            ln_ceiling: DEFAULT_CEILING.ln(),
            entries: (0..params.v_max).map(|_| OnceLock::new()).collect(),
            phi_cache: PhiCache::default(),
        })
    }

    /// Replaces the hard cap on `|h_v · v!|`. Entries already computed keep their old cap.
    pub fn with_ceiling(mut self, ceiling: f64) -> Self {
        assert!(ceiling > 0.0);
        self.ln_ceiling = ceiling.ln();
        self
    }

    pub fn params(&self) -> &EstimatorParams {
        &self.params
    }

    pub fn v_max(&self) -> u64 {
        self.params.v_max
    }

    /// Coefficient of order `v`, or `None` past `v_max`. Order 0 is identically zero and has
    /// no entry.
    pub fn get(&self, v: u64) -> Option<&CoefficientEntry> {
        if v == 0 || v > self.params.v_max {
            return None;
        }
        Some(self.entries[(v - 1) as usize].get_or_init(|| self.compute(v)))
    }

    /// `h_v · v!`, with `0` for `v = 0` and `None` past `v_max`.
    pub fn value(&self, v: u64) -> Option<f64> {
        if v == 0 {
            return Some(0.0);
        }
        self.get(v).map(|e| e.value)
    }

    /// Computes every entry (in parallel) and returns them in order of `v`.
    pub fn materialize(&self) -> Vec<CoefficientEntry> {
        (1..=self.params.v_max)
            .into_par_iter()
            .map(|v| *self.get(v).expect("v within range"))
            .collect()
    }

    /// Number of entries computed so far that hit the clamp.
    pub fn clamped_count(&self) -> usize {
        self.entries
            .iter()
            .filter_map(OnceLock::get)
            .filter(|e| e.clamped)
            .count()
    }

    /// Writes `v,h_v_times_vfact,clamped` rows for every order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "v,h_v_times_vfact,clamped")?;
        for (i, e) in self.materialize().iter().enumerate() {
            writeln!(out, "{},{:.16e},{}", i + 1, e.value, u8::from(e.clamped))?;
        }
        Ok(())
    }

    fn compute(&self, v: u64) -> CoefficientEntry {
        let sum = log_space_sum(&self.spec, self.q_x, v, &self.params, &self.tails);
        let nats = sum.cancellation_nats();
        let (raw, precise) = if needs_precise_route(&sum) {
            let lost_bits =
                (nats.min(1e5) + (1.0 + sum.max_log_magnitude.abs()).ln()) / std::f64::consts::LN_2;
            let (value, _converged) = precise_coefficient(
                &self.spec,
                self.q_x,
                v,
                &self.params,
                128 + lost_bits as usize,
                &self.phi_cache,
            );
            (value, true)
        } else {
            (sum.value(), false)
        };
        let ln_bound = ln_envelope(&self.spec, v, &self.params).min(self.ln_ceiling);
        let clamped = raw.is_infinite() || (raw != 0.0 && raw.abs().ln() > ln_bound);
        let value = if clamped {
            raw.signum() * ln_bound.exp()
        } else {
            raw
        };
        CoefficientEntry {
            value,
            raw,
            clamped,
            precise,
            cancellation_nats: nats,
        }
    }
}

fn required_tail_len(params: &EstimatorParams) -> u64 {
    params.v_max + params.u_max.min(params.v_max)
}

pub(crate) fn tail_table(params: &EstimatorParams) -> PoissonTailTable {
    PoissonTailTable::new(params.r as f64, required_tail_len(params))
}

/// `h_v · v!` for a single order, without building a full table.
pub fn coefficient(
    spec: &PropertySpec,
    q_x: Option<f64>,
    v: u64,
    params: &EstimatorParams,
) -> Result<CoefficientEntry> {
    if v == 0 {
        return Ok(CoefficientEntry {
            value: 0.0,
            raw: 0.0,
            clamped: false,
            precise: false,
            cancellation_nats: 0.0,
        });
    }
    let single = params.with_v_max(v);
    let table = CoefficientTable::new(spec, q_x, &single)?;
    Ok(*table.get(v).expect("v = v_max"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::poisson_tail;

    fn small() -> EstimatorParams {
        EstimatorParams::new(150.0, 3.0, 1, false).unwrap()
    }

    #[test]
    fn first_order_closed_form() {
        let e = coefficient(&PropertySpec::Entropy, None, 1, &small()).unwrap();
        let p: f64 = 1.0 / 450.0;
        let expect = 3.0 * (-p * p.ln()) * poisson_tail(40.0, 2);
        assert!((e.value - expect).abs() < 1e-14 * expect);
        assert!(!e.clamped);
    }

    #[test]
    fn support_size_second_order_closed_form() {
        // u = 1: -C(2,1)(t-1) t/k T(3); u = 2: t^2/k T(4)
        let spec = PropertySpec::support_size(10).unwrap();
        let e = coefficient(&spec, None, 2, &small()).unwrap();
        let expect =
            (-2.0 * 2.0 * 3.0 * poisson_tail(40.0, 3) + 9.0 * poisson_tail(40.0, 4)) / 10.0;
        assert!((e.value - expect).abs() < 1e-13 * expect.abs());
    }

    #[test]
    fn table_and_single_agree() {
        let params = small();
        let table = CoefficientTable::new(&PropertySpec::Entropy, None, &params).unwrap();
        for v in [1, 2, 7, 8, 20, 64, 199] {
            let a = table.value(v).unwrap();
            let b = coefficient(&PropertySpec::Entropy, None, v, &params)
                .unwrap()
                .value;
            assert!(
                (a - b).abs() <= 1e-12 * a.abs().max(1e-300),
                "v={v}: {a} vs {b}"
            );
        }
        assert_eq!(table.value(0), Some(0.0));
        assert_eq!(table.value(params.v_max + 1), None);
    }

    #[test]
    fn heavy_cancellation_switches_to_precise_route() {
        let params = EstimatorParams::new(1e4, 12.0, 20, true).unwrap();
        let table = CoefficientTable::new(&PropertySpec::Entropy, None, &params).unwrap();
        let e = table.get(60).unwrap();
        assert!(e.precise);
        assert!(e.value.is_finite());
        let env = ln_envelope(&PropertySpec::Entropy, 60, &params);
        assert!(e.value.abs().ln() <= env);
    }

    #[test]
    fn low_ceiling_clamps_and_is_counted() {
        let params = small();
        let table = CoefficientTable::new(&PropertySpec::Entropy, None, &params)
            .unwrap()
            .with_ceiling(1e-6);
        let e = *table.get(3).unwrap();
        assert!(e.clamped);
        assert!((e.value.abs() - 1e-6).abs() < 1e-18);
        assert_eq!(table.clamped_count(), 1);
    }

    #[test]
    fn reference_mass_must_match_kind() {
        let params = small();
        assert!(CoefficientTable::new(&PropertySpec::Entropy, Some(0.5), &params).is_err());
        let kl = PropertySpec::kl_divergence(vec![0.0, 1.0]).unwrap();
        assert!(CoefficientTable::new(&kl, None, &params).is_err());
        assert!(CoefficientTable::new(&kl, Some(0.0), &params).is_err());
        assert!(CoefficientTable::new(&kl, Some(1.0), &params).is_ok());
    }

    #[test]
    fn csv_dump_has_one_row_per_order() {
        let params = small().with_v_max(5);
        let table = CoefficientTable::new(&PropertySpec::Entropy, None, &params).unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "v,h_v_times_vfact,clamped");
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("1,"));
    }
}

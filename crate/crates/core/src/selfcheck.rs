//! Numerical self-check suite: the identities the coefficient construction rests on.
//!
//! 1. Bessel-kernel identity `∫_0^∞ e^{-α} α^u J_{2u}(2 sqrt(α y)) dα = e^{-y} y^u`.
//! 2. Series and quadrature evaluations of `ĥ(λ)` agree.
//! 3. Poisson-weighted coefficients reproduce the truncated series (unbiasedness).
//! 4. Double-precision coefficients match an arbitrary-precision evaluation.
//! 5. Every coefficient lies inside its magnitude envelope.
//!
//! A [`Fault`] can be injected to confirm that the suite notices a broken build.

use std::fmt;

use crate::estimators::{
    big_consts, big_to_f64, ln_envelope, precise_coefficient_at, smoothed_h_hat_quadrature,
    CoefficientTable, EstimatorParams,
};
use crate::numerics::{integrate_exp_poly_bessel, ln_poisson_pmf, ln_poisson_tail, Upper};
use crate::properties::PropertySpec;

/// Deliberate corruption for negative-control runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Negates every odd-order coefficient seen by the checks.
    FlipCoefficientSign,
    /// Scales every quadrature value by `1 + 1e-3`.
    SkewQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SelfcheckOptions {
    /// Extended `u`, `y`, `λ` grids and more properties.
    pub deep: bool,
    pub fault: Fault,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// The worst case, for the report.
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} ({} cases; {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.detail
        )
    }
}

/// Small parameters used throughout: rate 150, t = 3, s0 = 1 (u_max = 7, r = 40), no t-decay.
pub fn small_params() -> EstimatorParams {
    EstimatorParams::new(150.0, 3.0, 1, false).expect("static parameters")
}

struct Probe {
    fault: Fault,
}

impl Probe {
    fn coefficient(&self, table: &CoefficientTable, v: u64) -> f64 {
        let c = table.value(v).expect("v within table");
        match self.fault {
            Fault::FlipCoefficientSign if v % 2 == 1 => -c,
            _ => c,
        }
    }

    fn quadrature(&self, value: f64) -> f64 {
        match self.fault {
            Fault::SkewQuadrature => value * (1.0 + 1e-3),
            _ => value,
        }
    }
}

fn properties(deep: bool) -> Vec<PropertySpec> {
    let mut out = vec![PropertySpec::Entropy];
    if deep {
        out.extend([
            PropertySpec::support_size(1000).expect("k > 0"),
            PropertySpec::coverage(5000.0).expect("m > 0"),
            PropertySpec::power_sum(2.0).expect("a > 1"),
            PropertySpec::dist_to_uniform(100).expect("k > 0"),
        ]);
    }
    out
}

fn quadrature_identity(opts: &SelfcheckOptions, probe: &Probe) -> CheckResult {
    let us: Vec<u32> = if opts.deep {
        (1..=10).collect()
    } else {
        (1..=5).collect()
    };
    let ys: &[f64] = if opts.deep {
        &[0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0]
    } else {
        &[0.1, 1.0, 5.0, 20.0]
    };
    let mut passed = true;
    let mut worst = (0.0f64, 0u32, 0.0f64);
    for &u in &us {
        for &y in ys {
            let expect = (u as f64 * y.ln() - y).exp();
            let (ok, err) = match integrate_exp_poly_bessel(u, y, Upper::Infinity) {
                Ok(q) => {
                    let err = (probe.quadrature(q.value) - expect).abs() / expect.max(1.0);
                    (err < 1e-6, err)
                }
                Err(_) => (false, f64::INFINITY),
            };
            passed &= ok;
            if err >= worst.0 {
                worst = (err, u, y);
            }
        }
    }
    CheckResult {
        name: "quadrature identity",
        passed,
        cases: us.len() * ys.len(),
        detail: format!(
            "worst scaled error {:.2e} at u={} y={}",
            worst.0, worst.1, worst.2
        ),
    }
}

fn lambdas(deep: bool) -> &'static [f64] {
    if deep {
        &[0.05, 0.1, 0.5, 1.0, 1.5, 2.0, 3.0]
    } else {
        &[0.1, 0.5, 1.0, 2.0]
    }
}

// Number of series orders after which the envelope bounds the remainder by 1e-13.
fn series_orders(spec: &PropertySpec, lambda: f64, params: &EstimatorParams) -> u64 {
    let ln_bound = ln_envelope(spec, 1, params);
    let mut top = 1u64;
    while ln_bound + ln_poisson_tail(lambda, top as i64) > 1e-13f64.ln() && top < params.v_max {
        top += 1;
    }
    top
}

fn series_vs_quadrature(opts: &SelfcheckOptions, probe: &Probe) -> CheckResult {
    let params = small_params();
    let mut passed = true;
    let mut cases = 0;
    let mut worst = (0.0f64, "", 0.0f64);
    for spec in properties(opts.deep) {
        let table = CoefficientTable::new(&spec, None, &params).expect("symmetric table");
        for &lambda in lambdas(opts.deep) {
            cases += 1;
            let top = series_orders(&spec, lambda, &params);
            // e^{-λ} λ^v / v! by recurrence
            let mut weight = (-lambda).exp();
            let mut series = 0.0;
            for v in 1..=top {
                weight *= lambda / v as f64;
                series += probe.coefficient(&table, v) * weight;
            }
            let diff = match smoothed_h_hat_quadrature(&spec, None, lambda, &params) {
                Ok(q) => (series - probe.quadrature(q)).abs(),
                Err(_) => f64::INFINITY,
            };
            passed &= diff < 1e-5;
            if diff >= worst.0 {
                worst = (diff, spec.name(), lambda);
            }
        }
    }
    CheckResult {
        name: "series vs quadrature",
        passed,
        cases,
        detail: format!(
            "worst |diff| {:.2e} ({}, lambda={})",
            worst.0, worst.1, worst.2
        ),
    }
}

fn unbiasedness(opts: &SelfcheckOptions, probe: &Probe) -> CheckResult {
    let params = small_params();
    let mut passed = true;
    let mut cases = 0;
    let mut worst = 0.0f64;
    for spec in properties(opts.deep) {
        let table = CoefficientTable::new(&spec, None, &params).expect("symmetric table");
        for &lambda in lambdas(opts.deep).iter().filter(|&&l| l <= 2.0) {
            cases += 1;
            let top = series_orders(&spec, lambda, &params);
            // Poisson-weighted expectation of the per-count contribution, with log-space weights
            let expectation: f64 = (1..=top)
                .map(|v| ln_poisson_pmf(lambda, v).exp() * probe.coefficient(&table, v))
                .sum();
            // the series e^{-λ} Σ h_v λ^v, with h_v = (h_v v!) / v! accumulated by recurrence
            let mut h_over = 1.0;
            let mut series = 0.0;
            let mut power = 1.0;
            for v in 1..=top {
                h_over /= v as f64;
                power *= lambda;
                series += table.value(v).expect("v within table") * h_over * power;
            }
            series *= (-lambda).exp();
            let rel = (expectation - series).abs() / series.abs().max(1e-300);
            passed &= rel < 1e-10;
            worst = worst.max(rel);
        }
    }
    CheckResult {
        name: "unbiasedness identity",
        passed,
        cases,
        detail: format!("worst relative gap {worst:.2e}"),
    }
}

fn coefficient_oracle(opts: &SelfcheckOptions, probe: &Probe) -> CheckResult {
    let params = small_params();
    let top = if opts.deep { 60 } else { 20 };
    let mut cc = big_consts();
    let mut passed = true;
    let mut cases = 0;
    let mut worst = (0.0f64, "", 0u64);
    for spec in properties(opts.deep) {
        let table = CoefficientTable::new(&spec, None, &params).expect("symmetric table");
        for v in 1..=top {
            cases += 1;
            let got = probe.coefficient(&table, v);
            let exact = big_to_f64(
                &precise_coefficient_at(&spec, None, v, &params, 256, &mut cc),
                &mut cc,
            );
            let both_tiny = got.abs() < 1e-12 && exact.abs() < 1e-12;
            let rel = (got - exact).abs() / exact.abs().max(1e-300);
            passed &= both_tiny || rel < 1e-8;
            if !both_tiny && rel >= worst.0 {
                worst = (rel, spec.name(), v);
            }
        }
    }
    CheckResult {
        name: "coefficients vs 256-bit evaluation",
        passed,
        cases,
        detail: format!(
            "worst relative error {:.2e} ({}, v={})",
            worst.0, worst.1, worst.2
        ),
    }
}

fn coefficient_bound(opts: &SelfcheckOptions, probe: &Probe) -> CheckResult {
    let mut sets = vec![small_params()];
    if opts.deep {
        sets.push(
            EstimatorParams::new(1e4, 6.0, 4, true)
                .expect("static")
                .with_v_max(120),
        );
    }
    let mut passed = true;
    let mut cases = 0;
    let mut tightest = f64::NEG_INFINITY;
    for params in &sets {
        for spec in properties(opts.deep) {
            let table = CoefficientTable::new(&spec, None, params).expect("symmetric table");
            for v in 1..=params.v_max {
                cases += 1;
                let c = probe.coefficient(&table, v);
                if c == 0.0 {
                    continue;
                }
                let margin = c.abs().ln() - ln_envelope(&spec, v, params);
                passed &= c.is_finite() && margin <= 1e-12;
                tightest = tightest.max(margin);
            }
        }
    }
    CheckResult {
        name: "coefficient envelope",
        passed,
        cases,
        detail: format!("largest log(|h_v v!| / envelope) {tightest:.1}"),
    }
}

/// Runs every check and returns the results in a fixed order.
pub fn run(opts: &SelfcheckOptions) -> Vec<CheckResult> {
    let probe = Probe { fault: opts.fault };
    vec![
        quadrature_identity(opts, &probe),
        series_vs_quadrature(opts, &probe),
        unbiasedness(opts, &probe),
        coefficient_oracle(opts, &probe),
        coefficient_bound(opts, &probe),
    ]
}

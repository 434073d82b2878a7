//! Two independent evaluations of the smoothed expectation `ĥ(λ) = e^{-λ} Σ_v h_v λ^v`.
//!
//! The series form sums the stored coefficients directly. The quadrature form swaps the sums
//! and writes each Poisson tail as an integral, which collapses the alternating inner series
//! into a Bessel kernel:
//!
//! ```text
//! ĥ(λ) = e^{-λ} Σ_{u=1}^{u_max} f_x(u/(n t)) (t/(t-1))^u / u! · ∫_0^r e^{-α} α^u J_{2u}(2 sqrt(α λ (t-1))) dα
//! ```
//!
//! Agreement of the two validates the coefficient construction end to end.

use super::coefficients::{ln_envelope, CoefficientTable};
use super::params::EstimatorParams;
use crate::error::{invalid, Result};
use crate::numerics::{integrate_exp_poly_bessel, ln_poisson_tail, log_factorial, Upper};
use crate::properties::PropertySpec;

// truncation target for the series form
const SERIES_TAIL: f64 = 1e-13;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda must be finite and non-negative"));
    }
    Ok(())
}

/// Series form, truncated where the coefficient envelope bounds the remainder by `1e-13`.
pub fn smoothed_h_hat_series(
    spec: &PropertySpec,
    q_x: Option<f64>,
    lambda: f64,
    params: &EstimatorParams,
) -> Result<f64> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    // envelope is largest at v = 1 (t is non-increasing in v)
    let ln_bound = ln_envelope(spec, 1, params);
    let mut top = 1u64;
    while ln_bound + ln_poisson_tail(lambda, top as i64) > SERIES_TAIL.ln() {
        top += 1;
        if top > params.v_max {
            return Err(invalid(format!(
                "series for lambda = {lambda} needs more than v_max = {} orders",
                params.v_max
            )));
        }
    }
    let table = CoefficientTable::new(spec, q_x, params)?;
    let ln_lambda = lambda.ln();
    let mut sum = 0.0;
    for v in 1..=top {
        let c = table.value(v).expect("v <= v_max");
        sum += c * (v as f64 * ln_lambda - log_factorial(v) - lambda).exp();
    }
    Ok(sum)
}

/// Quadrature form; requires a constant amplification (t-decay off).
pub fn smoothed_h_hat_quadrature(
    spec: &PropertySpec,
    q_x: Option<f64>,
    lambda: f64,
    params: &EstimatorParams,
) -> Result<f64> {
    check_lambda(lambda)?;
    if params.t_decay {
        return Err(invalid(
            "the quadrature form needs a constant t (t-decay off)",
        ));
    }
    if spec.is_symmetric() != q_x.is_none() {
        return Err(invalid("a reference mass is required exactly for L1 / KL"));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let t = params.t;
    let y = lambda * (t - 1.0);
    let ln_ratio = (t / (t - 1.0)).ln();
    let mut sum = 0.0;
    for u in 1..=params.u_max {
        let phi = spec
            .eval_with_mass(q_x, u as f64 / (params.rate * t))
            .ok_or_else(|| invalid("KL coefficients are undefined for reference mass 0"))?;
        if phi == 0.0 {
            continue;
        }
        let integral = integrate_exp_poly_bessel(u as u32, y, Upper::Finite(params.r as f64))?;
        let weight = (u as f64 * ln_ratio - log_factorial(u) - lambda).exp();
        sum += phi * weight * integral.value;
    }
    Ok(sum)
}

/// `(series, quadrature)` evaluations of `ĥ(λ)`.
pub fn smoothed_h_hat(
    spec: &PropertySpec,
    q_x: Option<f64>,
    lambda: f64,
    params: &EstimatorParams,
) -> Result<(f64, f64)> {
    Ok((
        smoothed_h_hat_series(spec, q_x, lambda, params)?,
        smoothed_h_hat_quadrature(spec, q_x, lambda, params)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms_agree_for_entropy() {
        let params = EstimatorParams::new(150.0, 3.0, 1, false).unwrap();
        for &lambda in &[0.1, 1.0, 2.0] {
            let (s, q) = smoothed_h_hat(&PropertySpec::Entropy, None, lambda, &params).unwrap();
            assert!((s - q).abs() < 1e-7, "lambda={lambda}: {s} vs {q}");
        }
    }

    #[test]
    fn zero_rate_is_zero() {
        let params = EstimatorParams::new(150.0, 3.0, 1, false).unwrap();
        assert_eq!(
            smoothed_h_hat(&PropertySpec::Entropy, None, 0.0, &params).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn quadrature_rejects_decay() {
        let params = EstimatorParams::new(150.0, 3.0, 1, true).unwrap();
        assert!(smoothed_h_hat_quadrature(&PropertySpec::Entropy, None, 1.0, &params).is_err());
    }
}

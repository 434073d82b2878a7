//! Additive properties `f(p) = Σ_x f_x(p_x)`.
//!
//! Every per-symbol function is stored in offset form so that `f_x(0) = 0`; the constant
//! removed by the offset is kept in [`PropertySpec::report_offset`] and added back when an
//! estimate or exact value is reported. Arguments above 1 (which arise from count ratios
//! `N_x / n`) are evaluated at 1.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::numerics::neumaier_sum;

/// Tolerance on `Σ q = 1` for reference distributions and on `Σ p = 1` for exact values.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// One of the supported additive properties with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertySpec {
    /// Shannon entropy in nats, `f_x(p) = p ln(1/p)`.
    Entropy,
    /// Normalized support size, `f_x(p) = 1{p > 0} / k`.
    SupportSize { k: u64 },
    /// Normalized support coverage, `f_x(p) = (1 - e^{-m p}) / m`.
    SupportCoverage { m: f64 },
    /// Power sum, `f_x(p) = p^a`.
    PowerSum { a: f64 },
    /// Distance to the uniform distribution over `k` symbols, offset form `|p - 1/k| - 1/k`.
    DistToUniform { k: u64 },
    /// L1 distance to `q`, offset form `|p - q_x| - q_x`.
    L1Distance { q: Arc<[f64]> },
    /// `KL(p || q)`, `f_x(p) = p ln(p / q_x)`.
    KlDivergence { q: Arc<[f64]> },
}

/// Property names accepted by [`PropertySpec::from_name`] and printed by `Display`.
pub const PROPERTY_NAMES: [&str; 7] = [
    "entropy", "support_size", "coverage", "power_sum", "dist_to_uniform", "l1_distance",
    "kl_divergence",
];

impl fmt::Display for PropertySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_reference(q: &[f64]) -> Result<()> {
    if q.is_empty() {
        return Err(invalid("reference distribution is empty"));
    }
    if q.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(invalid(
            "reference distribution has a negative or non-finite entry",
        ));
    }
    let total = neumaier_sum(q);
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(invalid(format!(
            "reference distribution sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// Parameters consulted by [`PropertySpec::from_name`]; each kind reads only its own.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropertyParams {
    /// Support size for `support_size` and `dist_to_uniform`.
    pub k: Option<u64>,
    /// Horizon for `coverage`.
    pub m: Option<f64>,
    /// Exponent for `power_sum`.
    pub a: Option<f64>,
    /// Reference distribution for `l1_distance` and `kl_divergence`.
    pub q: Option<Vec<f64>>,
}

impl PropertySpec {
    /// Builds a property from its name, pulling the parameters it needs from `params`.
    pub fn from_name(name: &str, params: &PropertyParams) -> Result<Self> {
        fn need<T: Clone>(v: &Option<T>, name: &str, what: &str) -> Result<T> {
            v.clone()
                .ok_or_else(|| invalid(format!("{name} needs {what}")))
        }
        match name {
            "entropy" => Ok(PropertySpec::Entropy),
            "support_size" => Self::support_size(need(&params.k, name, "k")?),
            "coverage" => Self::coverage(need(&params.m, name, "m")?),
            "power_sum" => Self::power_sum(need(&params.a, name, "a")?),
            "dist_to_uniform" => Self::dist_to_uniform(need(&params.k, name, "k")?),
            "l1_distance" => Self::l1_distance(need(&params.q, name, "a reference distribution")?),
            "kl_divergence" => {
                Self::kl_divergence(need(&params.q, name, "a reference distribution")?)
            }
            other => Err(invalid(format!(
                "unknown property {other:?}; expected one of {}",
                PROPERTY_NAMES.join(", ")
            ))),
        }
    }

    pub fn support_size(k: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("support size normalizer k must be positive"));
        }
        Ok(PropertySpec::SupportSize { k })
    }

    pub fn coverage(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(invalid("coverage horizon m must be positive"));
        }
        Ok(PropertySpec::SupportCoverage { m })
    }

    pub fn power_sum(a: f64) -> Result<Self> {
        if !(a > 1.0 && a.is_finite()) {
            return Err(invalid("power-sum exponent must exceed 1"));
        }
        Ok(PropertySpec::PowerSum { a })
    }

    pub fn dist_to_uniform(k: u64) -> Result<Self> {
        if k == 0 {
            return Err(invalid("uniformity support size k must be positive"));
        }
        Ok(PropertySpec::DistToUniform { k })
    }

    pub fn l1_distance(q: Vec<f64>) -> Result<Self> {
        check_reference(&q)?;
        Ok(PropertySpec::L1Distance { q: q.into() })
    }

    pub fn kl_divergence(q: Vec<f64>) -> Result<Self> {
        check_reference(&q)?;
        Ok(PropertySpec::KlDivergence { q: q.into() })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PropertySpec::Entropy => "entropy",
            PropertySpec::SupportSize { .. } => "support_size",
            PropertySpec::SupportCoverage { .. } => "coverage",
            PropertySpec::PowerSum { .. } => "power_sum",
            PropertySpec::DistToUniform { .. } => "dist_to_uniform",
            PropertySpec::L1Distance { .. } => "l1_distance",
            PropertySpec::KlDivergence { .. } => "kl_divergence",
        }
    }

    /// Whether `f_x` is the same function for every symbol.
    pub fn is_symmetric(&self) -> bool {
        !matches!(
            self,
            PropertySpec::L1Distance { .. } | PropertySpec::KlDivergence { .. }
        )
    }

    /// Reference distribution for L1 / KL.
    pub fn reference(&self) -> Option<&[f64]> {
        match self {
            PropertySpec::L1Distance { q } | PropertySpec::KlDivergence { q } => Some(q),
            _ => None,
        }
    }

    /// Constant added to the internal (offset) sum when reporting.
    pub fn report_offset(&self) -> f64 {
        match self {
            PropertySpec::DistToUniform { .. } | PropertySpec::L1Distance { .. } => 1.0,
            _ => 0.0,
        }
    }

    /// Reference mass `q_x`, or an error if `x` lies outside the reference support.
    pub(crate) fn reference_mass(&self, x: usize) -> Result<Option<f64>> {
        match self.reference() {
            Some(q) => q.get(x).copied().map(Some).ok_or(Error::DimensionMismatch {
                expected: q.len(),
                got: x + 1,
            }),
            None => Ok(None),
        }
    }

    /// `f_x(p)` in offset form, with `p > 1` evaluated at 1.
    pub fn eval_fx(&self, x: usize, p: f64) -> Result<f64> {
        if !(p >= 0.0) {
            return Err(invalid(format!(
                "probability argument must be >= 0, got {p}"
            )));
        }
        let q_x = self.reference_mass(x)?;
        self.eval_with_mass(q_x, p)
            .ok_or(Error::UndefinedDivergence { symbol: x })
    }

    /// `f_x(p)` given the symbol's reference mass (ignored by symmetric kinds).
    ///
    /// Returns `None` only for KL with `q_x = 0 < p`.
    pub(crate) fn eval_with_mass(&self, q_x: Option<f64>, p: f64) -> Option<f64> {
        let p = p.min(1.0);
        if p == 0.0 {
            return Some(0.0);
        }
        let v = match self {
            PropertySpec::Entropy => -p * p.ln(),
            PropertySpec::SupportSize { k } => 1.0 / *k as f64,
            PropertySpec::SupportCoverage { m } => -(-m * p).exp_m1() / m,
            PropertySpec::PowerSum { a } => p.powf(*a),
            PropertySpec::DistToUniform { k } => {
                let u = 1.0 / *k as f64;
                (p - u).abs() - u
            }
            PropertySpec::L1Distance { .. } => {
                let q = q_x.expect("L1 needs a reference mass");
                (p - q).abs() - q
            }
            PropertySpec::KlDivergence { .. } => {
                let q = q_x.expect("KL needs a reference mass");
                if q == 0.0 {
                    return None;
                }
                p * (p / q).ln()
            }
        };
        Some(v)
    }

    /// `Σ_x f_x(p_x)` plus the reporting offset.
    ///
    /// For the uniformity distance, `p` shorter than `k` is padded with zeros; L1 and KL need
    /// `p` and `q` of equal length.
    pub fn exact_value(&self, p: &[f64]) -> Result<f64> {
        let total = neumaier_sum(p);
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(invalid(format!(
                "probability vector sums to {total}, not 1"
            )));
        }
        if let Some(q) = self.reference() {
            if q.len() != p.len() {
                return Err(Error::DimensionMismatch {
                    expected: q.len(),
                    got: p.len(),
                });
            }
        }
        if let PropertySpec::DistToUniform { k } = self {
            if p.len() as u64 > *k {
                return Err(Error::DimensionMismatch {
                    expected: *k as usize,
                    got: p.len(),
                });
            }
        }
        let mut sum = 0.0;
        for (x, &px) in p.iter().enumerate() {
            sum += self.eval_fx(x, px)?;
        }
        Ok(sum + self.report_offset())
    }

    /// Smoothness parameter `ℓ_f(h)`: a bound on `|f_x(u) - f_x(v)| / |u - v|` over pairs
    /// with `max(u, v) ≥ h`. Used only to size the coefficient clamp.
    pub fn lipschitz(&self, h: f64) -> f64 {
        assert!(h > 0.0 && h <= 1.0, "lipschitz needs 0 < h <= 1");
        match self {
            PropertySpec::Entropy => -h.ln(),
            PropertySpec::KlDivergence { q } => {
                let q_min = q.iter().copied().filter(|&v| v > 0.0).fold(1.0, f64::min);
                -(h * q_min).ln()
            }
            // the jump at 0 has slope (1/k)/h
            PropertySpec::SupportSize { k } => 1.0 / (*k as f64 * h),
            PropertySpec::L1Distance { .. }
            | PropertySpec::PowerSum { .. }
            | PropertySpec::SupportCoverage { .. }
            | PropertySpec::DistToUniform { .. } => 1.0,
        }
    }

    /// Second-order smoothness constant `S_f`.
    pub fn s_f(&self) -> f64 {
        match self {
            PropertySpec::Entropy | PropertySpec::KlDivergence { .. } => std::f64::consts::LN_2,
            PropertySpec::PowerSum { a } => *a,
            _ => 1.0,
        }
    }
}

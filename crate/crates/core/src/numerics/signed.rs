//! Sign / log-magnitude values and a cancellation-aware signed sum.

use super::dd::DD;

/// A real number stored as `sign · exp(log_magnitude)`.
///
/// `sign == 0` iff the value is zero; `log_magnitude` is then `-inf` and ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    sign: i8,
    log_magnitude: f64,
}

impl SignedLogValue {
    pub const ZERO: SignedLogValue = SignedLogValue {
        sign: 0,
        log_magnitude: f64::NEG_INFINITY,
    };

    /// Builds `sign · e^{log_magnitude}`. A `-inf` magnitude or zero sign yields zero.
    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        debug_assert!(!log_magnitude.is_nan());
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            SignedLogValue {
                sign: sign.signum(),
                log_magnitude,
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            SignedLogValue {
                sign: if x > 0.0 { 1 } else { -1 },
                log_magnitude: x.abs().ln(),
            }
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn log_magnitude(&self) -> f64 {
        self.log_magnitude
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Converts to linear scale; saturates to `±inf` past `f64::MAX`.
    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_magnitude.exp(),
        }
    }

    pub fn mul(&self, other: &SignedLogValue) -> SignedLogValue {
        SignedLogValue::new(
            self.sign * other.sign,
            self.log_magnitude + other.log_magnitude,
        )
    }

    pub fn neg(&self) -> SignedLogValue {
        SignedLogValue {
            sign: -self.sign,
            log_magnitude: self.log_magnitude,
        }
    }
}

/// Outcome of [`alternating_sum`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedSum {
    /// The total, kept in log form so that huge intermediate sums cannot overflow.
    pub total: SignedLogValue,
    /// Largest `log|term|` seen, `-inf` for an empty or all-zero input.
    pub max_log_magnitude: f64,
    /// Set when `|total| < 1e-10 · max|term|`.
    pub cancellation: bool,
}

impl SignedSum {
    pub fn value(&self) -> f64 {
        self.total.to_f64()
    }

    /// `log(max|term| / |total|)`: the number of nats lost to cancellation.
    pub fn cancellation_nats(&self) -> f64 {
        if self.max_log_magnitude == f64::NEG_INFINITY {
            0.0
        } else if self.total.is_zero() {
            f64::INFINITY
        } else {
            self.max_log_magnitude - self.total.log_magnitude()
        }
    }
}

const CANCELLATION_RATIO: f64 = 1e-10;

/// Sums signed log-magnitude terms.
///
/// Positive and negative terms are accumulated separately, each scaled by the common largest
/// magnitude and summed in double-double arithmetic, then differenced once.
pub fn alternating_sum(terms: &[SignedLogValue]) -> SignedSum {
    let max_log = terms
        .iter()
        .filter(|t| !t.is_zero())
        .map(|t| t.log_magnitude)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_log == f64::NEG_INFINITY {
        return SignedSum {
            total: SignedLogValue::ZERO,
            max_log_magnitude: max_log,
            cancellation: false,
        };
    }

    let mut pos = DD::ZERO;
    let mut neg = DD::ZERO;
    for t in terms.iter().filter(|t| !t.is_zero()) {
        // log_magnitude - max_log in double-double: the difference of two doubles is exact
        // as a two-term expansion.
        let d = DD::from_f64(t.log_magnitude).sub(DD::from_f64(max_log));
        let scaled = d.exp();
        if t.sign > 0 {
            pos = pos.add(scaled);
        } else {
            neg = neg.add(scaled);
        }
    }
    let diff = pos.sub(neg).to_f64();
    let total = if diff == 0.0 {
        SignedLogValue::ZERO
    } else {
        SignedLogValue::new(if diff > 0.0 { 1 } else { -1 }, diff.abs().ln() + max_log)
    };
    let cancellation = total.is_zero() || diff.abs() < CANCELLATION_RATIO;
    SignedSum {
        total,
        max_log_magnitude: max_log,
        cancellation,
    }
}

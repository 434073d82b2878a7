use crate::distributions::SplitMode;
use crate::error::{invalid, Result};
use crate::properties::PropertySpec;

/// Smallest total sample size for which parameters are derived.
pub const MIN_SAMPLES: f64 = 150.0;
/// Amplification must strictly exceed this.
pub const MIN_AMPLIFICATION: f64 = 2.5;
/// Floor of the per-coefficient amplification under t-decay.
pub const DECAY_FLOOR: f64 = 1.5;
/// Per-order shrink factor of the amplification under t-decay.
pub const DECAY_RATE: f64 = 1.5;

/// Parameters of the amplified estimator.
///
/// Fields are public so that experiments can probe degenerate thresholds; [`EstimatorParams::new`]
/// is the validated constructor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorParams {
    /// Per-stream Poisson rate `n`.
    pub rate: f64,
    /// Amplification `t`.
    pub t: f64,
    /// Small/large threshold on the second-stream count.
    pub s0: u64,
    /// Highest order kept in the smoothed series.
    pub u_max: u64,
    /// Poisson-tail smoothing level.
    pub r: u64,
    /// Shrink `t` with the coefficient order.
    pub t_decay: bool,
    /// Largest first-stream count with a stored coefficient.
    pub v_max: u64,
}

fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor() as u64
}

impl EstimatorParams {
    /// Derives `u_max = 2 s0 t + 2 s0 - 1`, `r = 10 s0 t + 10 s0` (both rounded half-up) and
    /// the default `v_max = max(4 r, 200)`.
    pub fn new(rate: f64, t: f64, s0: u64, t_decay: bool) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid("Poisson rate must be positive"));
        }
        if !(t > MIN_AMPLIFICATION && t.is_finite()) {
            return Err(invalid(format!(
                "amplification t = {t} must exceed {MIN_AMPLIFICATION}"
            )));
        }
        if s0 == 0 {
            return Err(invalid("threshold s0 must be at least 1"));
        }
        let s = s0 as f64;
        let u_max = round_half_up(2.0 * s * t + 2.0 * s - 1.0);
        let r = round_half_up(10.0 * s * t + 10.0 * s);
        Ok(EstimatorParams {
            rate,
            t,
            s0,
            u_max,
            r,
            t_decay,
            v_max: (4 * r).max(200),
        })
    }

    pub fn with_v_max(mut self, v_max: u64) -> Self {
        assert!(v_max >= 1);
        self.v_max = v_max;
        self
    }

    /// Amplification used for the order-`v` coefficient: `t`, or `max(t / 1.5^{v-1}, 1.5)` under
    /// t-decay.
    pub fn effective_t(&self, v: u64) -> f64 {
        if self.t_decay {
            let shrink = DECAY_RATE.powf(v.saturating_sub(1) as f64);
            (self.t / shrink).max(DECAY_FLOOR)
        } else {
            self.t
        }
    }
}

/// How `t` and `s0` are chosen from the sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamChoice {
    /// Use the tuned per-property row when one exists.
    pub preset: bool,
    /// Manual mode: `t = log^{1-alpha}(n) + 1`.
    pub alpha: f64,
    /// Manual mode: `s0 = round(s0_mult · log^{0.2}(n))`.
    pub s0_mult: f64,
    pub t_decay: bool,
}

impl Default for ParamChoice {
    fn default() -> Self {
        ParamChoice {
            preset: true,
            alpha: 0.2,
            s0_mult: 4.0,
            t_decay: true,
        }
    }
}

/// Tuned row `(t_scale, t_exponent, s0_scale)`: `t = t_scale · log^{t_exponent} n + 1`,
/// `s0 = s0_scale · log^{0.2} n`.
pub fn preset_row(spec: &PropertySpec) -> Option<(f64, f64, f64)> {
    match spec {
        PropertySpec::Entropy => Some((2.0, 0.8, 16.0)),
        PropertySpec::SupportSize { .. } => Some((1.0, 0.7, 16.0)),
        PropertySpec::SupportCoverage { .. } => Some((1.0, 0.8, 8.0)),
        PropertySpec::PowerSum { .. } => Some((1.0, 1.0, 4.0)),
        PropertySpec::DistToUniform { .. } => Some((1.0, 0.7, 4.0)),
        PropertySpec::L1Distance { .. } | PropertySpec::KlDivergence { .. } => None,
    }
}

/// Chooses estimator parameters for a total sample budget `total_n`.
///
/// The stream rate follows the split mode (half the budget when thinned). Properties without a
/// tuned row fall back to the manual formula.
pub fn derive_params(
    total_n: f64,
    spec: &PropertySpec,
    choice: &ParamChoice,
    split: SplitMode,
) -> Result<EstimatorParams> {
    if !(total_n >= MIN_SAMPLES) {
        return Err(invalid(format!(
            "need at least {MIN_SAMPLES} samples to derive parameters, got {total_n}"
        )));
    }
    let log_n = total_n.ln();
    let (t, s0_real) = match preset_row(spec).filter(|_| choice.preset) {
        Some((scale, exp, s0_scale)) => (scale * log_n.powf(exp) + 1.0, s0_scale * log_n.powf(0.2)),
        None => {
            if !(0.0..=1.0).contains(&choice.alpha) {
                return Err(invalid("alpha must lie in [0, 1]"));
            }
            if !(choice.s0_mult > 0.0) {
                return Err(invalid("s0 multiplier must be positive"));
            }
            (
                log_n.powf(1.0 - choice.alpha) + 1.0,
                choice.s0_mult * log_n.powf(0.2),
            )
        }
    };
    let s0 = round_half_up(s0_real).max(1);
    EstimatorParams::new(split.stream_rate(total_n), t, s0, choice.t_decay)
}

//! Globally adaptive Gauss–Kronrod (7/15) quadrature and the Bessel-kernel integral.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::bessel::bessel_f;
use super::{ln_poisson_cdf, log_factorial};
use crate::error::{Error, Result};

// Kronrod 15-point abscissae (positive half) and weights, Gauss 7-point weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6, 0.949_107_912_342_758_5, 0.864_864_423_359_769_1,
    0.741_531_185_599_394_4, 0.586_087_235_467_691_1, 0.405_845_151_377_397_2,
    0.207_784_955_007_898_5, 0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22, 0.063_092_092_629_978_55, 0.104_790_010_322_250_2,
    0.140_653_259_715_525_9, 0.169_004_726_639_267_9, 0.190_350_578_064_785_4,
    0.204_432_940_075_298_9, 0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        // odd indices are the Gauss nodes
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]` until the summed panel error estimate is below `abs_tol`.
///
/// The panel with the largest error is bisected first; at most `max_panels` panels are used.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            panels: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    // start from a handful of panels so that oscillations are not missed
    let initial = 8;
    let width = (b - a) / initial as f64;
    for i in 0..initial {
        let lo = a + width * i as f64;
        let hi = if i + 1 == initial { b } else { lo + width };
        heap.push(gk15(&f, lo, hi));
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        if total_err <= abs_tol || heap.len() >= max_panels {
            // sum smallest-first for a deterministic, well-conditioned total
            let mut panels = heap.into_vec();
            panels.sort_by(|x, y| x.a.total_cmp(&y.a));
            let value = panels.iter().map(|p| p.value).sum();
            let panels_used = panels.len();
            if total_err > abs_tol {
                return Err(Error::QuadratureNotConverged {
                    tolerance: abs_tol,
                    estimate: total_err,
                });
            }
            return Ok(Integral {
                value,
                abs_error: total_err,
                panels: panels_used,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(gk15(&f, worst.a, mid));
        heap.push(gk15(&f, mid, worst.b));
    }
}

/// Upper limit of integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Finite(f64),
    Infinity,
}

pub const BESSEL_QUAD_TOL: f64 = 1e-9;
const MAX_PANELS: usize = 4000;

/// `∫_0^upper e^{-α} α^u f_u(α y) dα`.
///
/// An infinite upper limit is truncated at `u + y + 50`; the discarded tail is bounded by
/// `Γ(u+1, cutoff)` because `|f_u| ≤ 1`, and that bound is added to the error budget.
/// With `upper = ∞` the value equals `e^{-y} y^u`.
pub fn integrate_exp_poly_bessel(u: u32, y: f64, upper: Upper) -> Result<Integral> {
    assert!(u >= 1 && y >= 0.0);
    let cutoff = u as f64 + y + 50.0;
    let (b, tail) = match upper {
        Upper::Finite(b) => {
            assert!(b > 0.0);
            (b, 0.0)
        }
        Upper::Infinity => (
            cutoff,
            (ln_poisson_cdf(cutoff, u as i64) + log_factorial(u as u64)).exp(),
        ),
    };
    let uf = u as f64;
    let integrand = |a: f64| {
        if a == 0.0 {
            return 0.0;
        }
        (uf * a.ln() - a).exp() * bessel_f(u, a * y)
    };
    let budget = BESSEL_QUAD_TOL - tail;
    let mut out = integrate(
        integrand,
        0.0,
        b,
        budget.max(BESSEL_QUAD_TOL * 0.5),
        MAX_PANELS,
    )?;
    out.abs_error += tail;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 100).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integrand() {
        let r = integrate(|x| (10.0 * x).sin(), 0.0, std::f64::consts::PI, 1e-11, 500).unwrap();
        assert!(r.value.abs() < 1e-10);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err = integrate(|x| (1.0 / x).sin(), 1e-9, 1.0, 1e-15, 20).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged { .. }));
    }

    #[test]
    fn kernel_identity_at_zero() {
        let r = integrate_exp_poly_bessel(1, 0.0, Upper::Infinity).unwrap();
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn kernel_identity_recovers_poisson_weight() {
        let r = integrate_exp_poly_bessel(2, 1.5, Upper::Infinity).unwrap();
        let expect = (-1.5f64).exp() * 1.5 * 1.5;
        assert!((r.value - expect).abs() < 1e-9);
        assert!((r.value - 0.502_042_9).abs() < 1e-7);
    }
}

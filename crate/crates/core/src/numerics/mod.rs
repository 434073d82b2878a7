//! Numerically robust primitives: log-factorials, Poisson tails, signed log-space sums,
//! the Bessel kernel and adaptive quadrature.
//!
//! Everything here is a pure function of its arguments.

mod bessel;
pub(crate) mod dd;
mod quadrature;
mod signed;

pub use bessel::bessel_f;
pub use quadrature::{integrate, integrate_exp_poly_bessel, Integral, Upper, BESSEL_QUAD_TOL};
pub use signed::{alternating_sum, SignedLogValue, SignedSum};

const EXACT_FACTORIAL_LIMIT: u64 = 20;

/// `ln(v!)`.
///
/// Products are exact-ish up to `20!`; beyond that the Stirling series with four correction
/// terms is accurate to better than `1e-15` relative.
pub fn log_factorial(v: u64) -> f64 {
    if v <= EXACT_FACTORIAL_LIMIT {
        let mut p = 1.0f64;
        for i in 2..=v {
            p *= i as f64;
        }
        return p.ln();
    }
    let x = v as f64;
    let x2 = x * x;
    let correction =
        (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + correction
}

/// Compensated (Neumaier) sum.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    log_factorial(n) - log_factorial(k) - log_factorial(n - k)
}

/// `ln P(Poi(r) = i)`.
pub fn ln_poisson_pmf(r: f64, i: u64) -> f64 {
    if r == 0.0 {
        return if i == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -r + i as f64 * r.ln() - log_factorial(i)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

// Σ_{i=j+1}^∞ pmf(i) in log space, for j + 1 >= r where terms decrease monotonically.
fn ln_upper_sum(r: f64, j: u64) -> f64 {
    let mut i = j + 1;
    let first = ln_poisson_pmf(r, i);
    let mut acc = 0.0f64; // relative to `first`
    let mut term = 1.0f64;
    loop {
        i += 1;
        term *= r / i as f64;
        acc += term;
        if term < 1e-18 * (1.0 + acc) {
            break;
        }
    }
    first + acc.ln_1p()
}

// Σ_{i=0}^{j} pmf(i) in log space, for j < r where terms increase with i.
fn ln_lower_sum(r: f64, j: u64) -> f64 {
    let last = ln_poisson_pmf(r, j);
    let mut acc = 0.0f64;
    let mut term = 1.0f64;
    let mut i = j;
    while i > 0 {
        term *= i as f64 / r;
        acc += term;
        i -= 1;
        if term < 1e-18 * (1.0 + acc) {
            break;
        }
    }
    last + acc.ln_1p()
}

/// `ln P(Poi(r) ≤ j)`; `-inf` for `j < 0`.
pub fn ln_poisson_cdf(r: f64, j: i64) -> f64 {
    assert!(r >= 0.0);
    if j < 0 {
        return f64::NEG_INFINITY;
    }
    let j = j as u64;
    if r == 0.0 {
        return 0.0;
    }
    if (j as f64) < r {
        ln_lower_sum(r, j)
    } else {
        // 1 - upper, the upper tail is at most about one half here
        (-ln_upper_sum(r, j).exp()).ln_1p()
    }
}

/// `ln P(Poi(r) > j)`; `0` for `j < 0`.
pub fn ln_poisson_tail(r: f64, j: i64) -> f64 {
    assert!(r >= 0.0);
    if j < 0 {
        return 0.0;
    }
    let ju = j as u64;
    if r == 0.0 {
        return f64::NEG_INFINITY;
    }
    if (ju + 1) as f64 >= r {
        ln_upper_sum(r, ju)
    } else {
        (-ln_lower_sum(r, ju).exp()).ln_1p()
    }
}

/// `P(Poi(r) > j) = 1 - e^{-r} Σ_{i=0}^{j} r^i / i!`.
pub fn poisson_tail(r: f64, j: i64) -> f64 {
    ln_poisson_tail(r, j).exp()
}

/// `ln P(Poi(r) > j)` for every `j` in `0..=max_j`, computed in one pass.
#[derive(Debug, Clone)]
pub struct PoissonTailTable {
    ln_tail: Vec<f64>,
}

impl PoissonTailTable {
    pub fn new(r: f64, max_j: u64) -> Self {
        assert!(r > 0.0);
        let len = max_j as usize + 1;
        let mut ln_tail = vec![f64::NEG_INFINITY; len];
        // below the mode: 1 - cumulative lower sum, accumulated upward
        let split = (r.floor() as u64).min(max_j + 1);
        let mut ln_lower = f64::NEG_INFINITY;
        for j in 0..split {
            ln_lower = log_add(ln_lower, ln_poisson_pmf(r, j));
            ln_tail[j as usize] = (-ln_lower.exp()).ln_1p();
        }
        if split <= max_j {
            // at and above the mode: upper sums accumulated downward from far in the tail
            let mut ln_upper = ln_upper_sum(r, max_j);
            ln_tail[max_j as usize] = ln_upper;
            let mut j = max_j;
            while j > split {
                ln_upper = log_add(ln_upper, ln_poisson_pmf(r, j));
                j -= 1;
                ln_tail[j as usize] = ln_upper;
            }
        }
        PoissonTailTable { ln_tail }
    }

    /// `ln P(Poi(r) > j)`; panics past the table end.
    pub fn ln_tail(&self, j: u64) -> f64 {
        self.ln_tail[j as usize]
    }

    pub fn max_j(&self) -> u64 {
        self.ln_tail.len() as u64 - 1
    }
}

//! The kernel `f_u(y) = J_{2u}(2√y)`.

use super::log_factorial;

const SERIES_MAX_TERMS: usize = 500;
const SERIES_REL_CUTOFF: f64 = 1e-16;
// Beyond this y the alternating power series loses more than ~1e-13 to cancellation.
const SERIES_Y_LIMIT: f64 = 16.0;

/// `f_u(y) = J_{2u}(2√y) = Σ_{i≥0} (-1)^i y^{i+u} / (i! (i+2u)!)`.
///
/// Small `y` uses the power series directly. For larger `y` the series terms grow like
/// `e^{2√y}` before cancelling, so the value is obtained by Miller's backward recurrence
/// normalized with `J_0 + 2 Σ J_{2k} = 1`, which is accurate to about `1e-15` absolute.
pub fn bessel_f(u: u32, y: f64) -> f64 {
    assert!(u >= 1, "bessel_f needs u >= 1");
    assert!(y >= 0.0, "bessel_f needs y >= 0");
    if y == 0.0 {
        return 0.0;
    }
    if y <= SERIES_Y_LIMIT {
        series(u, y).0
    } else {
        bessel_j_miller(2 * u, 2.0 * y.sqrt())
    }
}

/// Power-series evaluation. The flag is set when the term cap was hit before convergence.
pub(crate) fn series(u: u32, y: f64) -> (f64, bool) {
    let u = u as u64;
    // a_0 = y^u / (2u)!
    let mut term = (u as f64 * y.ln() - log_factorial(2 * u)).exp();
    let mut sum = term;
    let mut running_max = term.abs();
    for i in 0..SERIES_MAX_TERMS as u64 {
        term *= -y / ((i + 1) as f64 * (i + 2 * u + 1) as f64);
        sum += term;
        running_max = running_max.max(term.abs());
        if term.abs() < SERIES_REL_CUTOFF * running_max && (i as f64) > y.sqrt() {
            return (sum, false);
        }
    }
    (sum, true)
}

/// `J_n(x)` for `x > 0` by downward recurrence from a high starting order.
pub(crate) fn bessel_j_miller(n: u32, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let top = n.max(x.ceil() as u32);
    // even starting order well past both n and x
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as u32;
    start += start % 2;

    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut result = 0.0;
    let mut k = start;
    while k > 0 {
        let j_prev = 2.0 * k as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        k -= 1;
        if k == n {
            result = j_cur;
        }
        if k.is_multiple_of(2) && k > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            result *= 1e-250;
        }
    }
    norm += j_cur; // J_0
    if n == 0 {
        result = j_cur;
    }
    result / norm
}

//! Arbitrary-precision evaluation of a single coefficient, used when the double-precision
//! route loses too many digits to cancellation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use super::params::EstimatorParams;
use crate::properties::PropertySpec;

const RM: RoundingMode = RoundingMode::ToEven;
const MAX_BITS: usize = 1 << 16;
// agreement required between two precisions: 2^-64 relative
const AGREEMENT_BITS: f64 = 64.0;

pub(crate) fn consts() -> Consts {
    Consts::new().expect("astro-float constant cache")
}

/// Rounds a big float to the nearest double (saturating to `±inf` / `0`).
pub(crate) fn to_f64(x: &BigFloat, cc: &mut Consts) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let s = x
        .format(Radix::Dec, RM, cc)
        .expect("decimal formatting of a finite big float");
    s.parse::<f64>()
        .unwrap_or_else(|_| panic!("unparseable big float rendering {s:?}"))
}

fn big(x: f64, p: usize) -> BigFloat {
    BigFloat::from_f64(x, p)
}

/// `f_x(p)` in offset form at precision `prec`; `p` must already be clamped to `[0, 1]`.
pub(crate) fn eval_big(
    spec: &PropertySpec,
    q_x: Option<f64>,
    p: &BigFloat,
    prec: usize,
    cc: &mut Consts,
) -> BigFloat {
    if p.is_zero() {
        return BigFloat::from_u8(0, prec);
    }
    match spec {
        PropertySpec::Entropy => p.mul(&p.ln(prec, RM, cc), prec, RM).neg(),
        PropertySpec::SupportSize { k } => {
            BigFloat::from_u8(1, prec).div(&BigFloat::from_u64(*k, prec), prec, RM)
        }
        PropertySpec::SupportCoverage { m } => {
            let m = big(*m, prec);
            let e = m.mul(p, prec, RM).neg().exp(prec, RM, cc);
            BigFloat::from_u8(1, prec)
                .sub(&e, prec, RM)
                .div(&m, prec, RM)
        }
        PropertySpec::PowerSum { a } => big(*a, prec)
            .mul(&p.ln(prec, RM, cc), prec, RM)
            .exp(prec, RM, cc),
        PropertySpec::DistToUniform { k } => {
            let u = BigFloat::from_u8(1, prec).div(&BigFloat::from_u64(*k, prec), prec, RM);
            p.sub(&u, prec, RM).abs().sub(&u, prec, RM)
        }
        PropertySpec::L1Distance { .. } => {
            let q = big(q_x.expect("L1 needs a reference mass"), prec);
            p.sub(&q, prec, RM).abs().sub(&q, prec, RM)
        }
        PropertySpec::KlDivergence { .. } => {
            let q = big(q_x.expect("KL needs a reference mass"), prec);
            let ratio = p.div(&q, prec, RM);
            p.mul(&ratio.ln(prec, RM, cc), prec, RM)
        }
    }
}

/// `P(Poi(r) > m)` for `m` in `lo..=hi`, at precision `prec`.
///
/// Below `r` the tail is `1 - Σ_{j≤m}` (no cancellation, the tail is at least about one
/// half); at and above `r` it is summed directly from the upper side.
pub(crate) fn big_tails(r: u64, lo: u64, hi: u64, prec: usize, cc: &mut Consts) -> Vec<BigFloat> {
    let rb = BigFloat::from_u64(r, prec);
    let one = BigFloat::from_u8(1, prec);
    let mut pmf = Vec::with_capacity(hi as usize + 2);
    pmf.push(rb.neg().exp(prec, RM, cc));
    for j in 1..=hi + 1 {
        let next =
            pmf[j as usize - 1]
                .mul(&rb, prec, RM)
                .div(&BigFloat::from_u64(j, prec), prec, RM);
        pmf.push(next);
    }
    let mut out = vec![BigFloat::from_u8(0, prec); (hi - lo + 1) as usize];

    let mut lower = BigFloat::from_u8(0, prec);
    for m in 0..=hi.min(r.saturating_sub(1)) {
        lower = lower.add(&pmf[m as usize], prec, RM);
        if m >= lo {
            out[(m - lo) as usize] = one.sub(&lower, prec, RM);
        }
    }
    if hi >= r {
        // Σ_{j>hi} pmf(j); terms decrease geometrically once j > r
        let mut upper = BigFloat::from_u8(0, prec);
        let mut term = pmf[hi as usize + 1].clone();
        let mut j = hi + 1;
        loop {
            upper = upper.add(&term, prec, RM);
            j += 1;
            term = term
                .mul(&rb, prec, RM)
                .div(&BigFloat::from_u64(j, prec), prec, RM);
            let neglible = match (term.exponent(), upper.exponent()) {
                (Some(et), Some(eu)) => (eu as i64 - et as i64) > prec as i64 + 8,
                _ => true,
            };
            if neglible {
                break;
            }
        }
        let mut m = hi;
        loop {
            if m >= lo {
                out[(m - lo) as usize] = upper.clone();
            }
            if m == r.max(lo) {
                break;
            }
            upper = upper.add(&pmf[m as usize], prec, RM);
            m -= 1;
        }
    }
    out
}

/// `f_x(min(u / (n t), 1))` for `u = 1..=u_max` at one precision.
fn phi_values(
    spec: &PropertySpec,
    q_x: Option<f64>,
    tv: f64,
    params: &EstimatorParams,
    prec: usize,
    cc: &mut Consts,
) -> Vec<BigFloat> {
    let rate_t = big(params.rate, prec).mul(&big(tv, prec), prec, RM);
    let one = BigFloat::from_u8(1, prec);
    (1..=params.u_max)
        .map(|u| {
            let mut arg = BigFloat::from_u64(u, prec).div(&rate_t, prec, RM);
            if arg.cmp(&one) == Some(1) {
                arg = one.clone();
            }
            eval_big(spec, q_x, &arg, prec, cc)
        })
        .collect()
}

/// Memoized [`phi_values`], keyed by effective amplification and precision. Past the decay
/// floor every order shares the same amplification, so one vector serves most of a table.
#[derive(Debug, Default)]
pub(crate) struct PhiCache {
    map: Mutex<HashMap<PhiKey, Arc<Vec<BigFloat>>>>,
}

/// `(t_v bits, precision)`.
type PhiKey = (u64, usize);

impl PhiCache {
    fn get(
        &self,
        spec: &PropertySpec,
        q_x: Option<f64>,
        tv: f64,
        params: &EstimatorParams,
        prec: usize,
        cc: &mut Consts,
    ) -> Arc<Vec<BigFloat>> {
        let key = (tv.to_bits(), prec);
        if let Some(hit) = self.map.lock().expect("cache lock").get(&key) {
            return hit.clone();
        }
        // computed outside the lock; a racing thread may duplicate the work, not corrupt it
        let fresh = Arc::new(phi_values(spec, q_x, tv, params, prec, cc));
        self.map
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert(fresh)
            .clone()
    }
}

fn alternating_big_sum(
    phis: &[BigFloat],
    v: u64,
    tv: f64,
    params: &EstimatorParams,
    prec: usize,
    cc: &mut Consts,
) -> BigFloat {
    let tv = big(tv, prec);
    let tm1 = tv.sub(&BigFloat::from_u8(1, prec), prec, RM);
    let top = params.u_max.min(v);
    let tails = big_tails(params.r, v + 1, v + top, prec, cc);

    let mut binom = BigFloat::from_u8(1, prec);
    let mut sum = BigFloat::from_u8(0, prec);
    for u in 1..=top {
        binom = binom
            .mul(&BigFloat::from_u64(v - u + 1, prec), prec, RM)
            .div(&BigFloat::from_u64(u, prec), prec, RM);
        let phi = &phis[(u - 1) as usize];
        if phi.is_zero() {
            continue;
        }
        let mut term = binom
            .mul(&tm1.powi((v - u) as usize, prec, RM), prec, RM)
            .mul(&tv.powi(u as usize, prec, RM), prec, RM)
            .mul(phi, prec, RM)
            .mul(&tails[(u - 1) as usize], prec, RM);
        if (v - u) % 2 == 1 {
            term = term.neg();
        }
        sum = sum.add(&term, prec, RM);
    }
    sum
}

/// `h_v · v!` at binary precision `prec`, without clamping.
pub(crate) fn coefficient_at(
    spec: &PropertySpec,
    q_x: Option<f64>,
    v: u64,
    params: &EstimatorParams,
    prec: usize,
    cc: &mut Consts,
) -> BigFloat {
    let tv = params.effective_t(v);
    let phis = phi_values(spec, q_x, tv, params, prec, cc);
    alternating_big_sum(&phis, v, tv, params, prec, cc)
}

fn agree(a: &BigFloat, b: &BigFloat, prec: usize) -> bool {
    if a.is_zero() && b.is_zero() {
        return true;
    }
    let diff = a.sub(b, prec, RM);
    if diff.is_zero() {
        return true;
    }
    match (diff.exponent(), b.exponent()) {
        (Some(ed), Some(eb)) => (eb as f64 - ed as f64) >= AGREEMENT_BITS,
        _ => false,
    }
}

// Precisions are multiples of 64 bits so that memoized values are shared between orders.
fn round_bits(bits: usize) -> usize {
    bits.div_ceil(64) * 64
}

/// Evaluates `h_v · v!` at increasing precision until two successive precisions agree to
/// 64 bits. Returns the rounded value and whether agreement was reached.
pub(crate) fn precise_coefficient(
    spec: &PropertySpec,
    q_x: Option<f64>,
    v: u64,
    params: &EstimatorParams,
    start_bits: usize,
    cache: &PhiCache,
) -> (f64, bool) {
    let mut cc = consts();
    let tv = params.effective_t(v);
    let eval = |prec: usize, cc: &mut Consts| {
        let phis = cache.get(spec, q_x, tv, params, prec, cc);
        alternating_big_sum(&phis, v, tv, params, prec, cc)
    };
    let mut prec = round_bits(start_bits.clamp(128, MAX_BITS));
    let mut prev = eval(prec, &mut cc);
    loop {
        let next_prec = round_bits((prec + prec / 2).max(prec + 64));
        let next = eval(next_prec, &mut cc);
        if agree(&prev, &next, next_prec) {
            return (to_f64(&next, &mut cc), true);
        }
        if next_prec >= MAX_BITS {
            return (to_f64(&next, &mut cc), false);
        }
        prev = next;
        prec = next_prec;
    }
}

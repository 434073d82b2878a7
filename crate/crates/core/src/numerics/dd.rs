//! Minimal double-double arithmetic (about 106 bits of mantissa).
//!
//! Only what the signed-sum accumulator needs: error-free sums and products,
//! compensated accumulation and `exp` on small arguments.

use std::f64::consts::LN_2;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct DD {
    pub hi: f64,
    pub lo: f64,
}

// ln 2 split as a double-double.
const LN2_LO: f64 = 2.319_046_813_846_299_6e-17;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }

    pub fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: DD) -> DD {
        self.add(o.neg())
    }

    pub fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> DD {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DD { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> DD {
        let q1 = self.hi / b;
        let r = self.sub(DD::from_f64(q1).mul_f64(b));
        let q2 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo }
    }

    /// `e^self`, accurate to roughly 1e-30 relative for |self| below a few hundred.
    pub fn exp(self) -> DD {
        if self.hi < -745.0 {
            return DD::ZERO;
        }
        // self = k ln2 + s, |s| <= ln2 / 2
        let k = (self.hi / LN_2).round();
        let s = self
            .sub(DD::from_f64(LN_2).mul_f64(k))
            .sub(DD::from_f64(LN2_LO).mul_f64(k));
        // further halve the argument 8 times, then square back
        let s = DD {
            hi: s.hi / 256.0,
            lo: s.lo / 256.0,
        };
        let mut term = DD::ONE;
        let mut sum = DD::ONE;
        for i in 1..=14 {
            term = term.mul(s).div_f64(i as f64);
            sum = sum.add(term);
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        for _ in 0..8 {
            sum = sum.mul(sum);
        }
        let scale = 2f64.powi(k as i32);
        DD {
            hi: sum.hi * scale,
            lo: sum.lo * scale,
        }
    }
}

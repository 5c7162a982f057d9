//! Double-double arithmetic: an unevaluated sum of two `f64`s giving roughly
//! 106 bits of significand.  Used by polynomial evaluation so that ratio
//! checks near region boundaries are not limited by `f64` rounding.
//!
//! The error-free transforms are the classic Dekker/Knuth ones; products use
//! fused multiply-add.

use crate::rational::Rat;
use num_traits::ToPrimitive;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

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
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    /// Machine epsilon of the format, roughly `2^-105`.
    pub const EPS: f64 = 2.465190328815662e-32;

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact value of a rational, correctly rounded to double-double.
    pub fn from_rat(r: &Rat) -> Dd {
        // Split the numerator into the leading f64 and an exact remainder so
        // that two conversions capture ~106 bits.
        let hi = r.to_f64().unwrap_or(0.0);
        if !hi.is_finite() {
            return Dd::from_f64(hi);
        }
        let hi_rat = match Rat::from_float(hi) {
            Some(h) => h,
            None => return Dd::from_f64(hi),
        };
        let rem = r - hi_rat;
        let lo = rem.to_f64().unwrap_or(0.0);
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from_f64(q1)));
        let q2 = r.hi / other.hi;
        let r2 = r.sub(other.mul(Dd::from_f64(q2)));
        let q3 = r2.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from_f64(q3))
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }

    /// Integer power by binary exponentiation.
    pub fn powi(self, mut e: u64) -> Dd {
        let mut acc = Dd::ONE;
        let mut base = self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(base);
            }
        }
        acc
    }

    /// `self^(1/n)` for positive `self`, via Newton refinement of the `f64`
    /// seed. Two corrections push the error to the format's epsilon.
    pub fn root_n(self, n: u64) -> Dd {
        assert!(n >= 1);
        if n == 1 {
            return self;
        }
        assert!(
            self.hi > 0.0,
            "root of a non-positive double-double is undefined here"
        );
        let seed = self.hi.powf(1.0 / n as f64);
        let mut t = Dd::from_f64(seed);
        let n_dd = Dd::from_f64(n as f64);
        for _ in 0..3 {
            // t <- t - (t^n - x) / (n t^(n-1))
            let tn1 = t.powi(n - 1);
            let tn = tn1.mul(t);
            let num = tn.sub(self);
            let den = n_dd.mul(tn1);
            t = t.sub(num.div(den));
        }
        t
    }

    /// `self^(p/q)` for nonnegative rational exponents. `self` must be
    /// positive unless the exponent is an integer (then sign is exact) or
    /// `self` is zero (then `0^0 = 1`, `0^e = 0`).
    pub fn pow_rat(self, exponent: &Rat) -> Option<Dd> {
        let p = exponent.numer().to_u64()?;
        let q = exponent.denom().to_u64()?;
        if self.hi == 0.0 && self.lo == 0.0 {
            return Some(if p == 0 { Dd::ONE } else { Dd::ZERO });
        }
        if q == 1 {
            if self.hi > 0.0 {
                return Some(self.powi(p));
            }
            let mag = self.abs().powi(p);
            return Some(if p % 2 == 1 { mag.neg() } else { mag });
        }
        if self.hi < 0.0 {
            return None;
        }
        Some(self.root_n(q).powi(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn add_mul_exactness() {
        let a = Dd::from_f64(1.0).div(Dd::from_f64(3.0));
        let three = Dd::from_f64(3.0);
        let one = a.mul(three);
        assert!((one.to_f64() - 1.0).abs() < 1e-30);
        assert!(one.sub(Dd::ONE).abs().to_f64() < 1e-31);
    }

    #[test]
    fn rational_conversion_is_tight() {
        let r = rat(1, 3);
        let d = Dd::from_rat(&r);
        // residual after subtracting both components is at the lo ulp level
        let back = Rat::from_float(d.hi).unwrap() + Rat::from_float(d.lo).unwrap();
        let resid = (&r - back).to_f64().unwrap_or(1.0).abs();
        assert!(resid < 1e-31, "resid = {resid}");
    }

    #[test]
    fn roots_and_rational_powers() {
        let x = Dd::from_f64(4.0);
        let r = x.pow_rat(&rat(3, 2)).unwrap();
        assert!((r.to_f64() - 8.0).abs() < 1e-28);

        let neg = Dd::from_f64(-2.0);
        assert!(neg.pow_rat(&rat(1, 2)).is_none());
        let cube = neg.pow_rat(&rat(3, 1)).unwrap();
        assert!((cube.to_f64() + 8.0).abs() < 1e-28);
    }
}

//! Arbitrary-precision rational scalars and small helpers shared across the
//! crate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// The exact scalar type used for coefficients, exponents and all polygon
/// geometry.
pub type Rat = BigRational;

/// `n` as a rational.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `num/den` as a reduced rational. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Nearest `f64` to an exact rational.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Out-of-range magnitudes saturate; sign is preserved.
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Canonical `"a/b"` form (plain `"a"` when the denominator is one).
pub fn rat_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"a"` or `"a/b"` with optional sign.
pub fn parse_rat(text: &str) -> Option<Rat> {
    let t = text.trim();
    match t.split_once('/') {
        Some((a, b)) => {
            let num: BigInt = a.trim().parse().ok()?;
            let den: BigInt = b.trim().parse().ok()?;
            if den.is_zero() {
                None
            } else {
                Some(Rat::new(num, den))
            }
        }
        None => {
            let num: BigInt = t.parse().ok()?;
            Some(Rat::from_integer(num))
        }
    }
}

/// True when `r` is an integer.
pub fn is_integer(r: &Rat) -> bool {
    r.denom().is_one()
}

/// `r` as `i64` when it is an integer in range.
pub fn to_i64(r: &Rat) -> Option<i64> {
    if is_integer(r) {
        r.numer().to_i64()
    } else {
        None
    }
}

/// Largest power of two `2^{-k}` (k >= 0) that is `<= x`, for positive `x <= 1`.
/// Used to round irrational neighborhood bounds down to a dyadic value.
pub fn dyadic_floor_pow2(x: f64) -> Rat {
    assert!(x > 0.0, "dyadic_floor_pow2 needs a positive bound");
    if x >= 1.0 {
        return Rat::one();
    }
    let k = (-x.log2()).ceil() as i64;
    let k = k.clamp(0, 4000);
    Rat::new(BigInt::one(), BigInt::from(2).pow(k as u32))
}

/// Exact comparison `a^p <=> b^q` for positive rationals and positive integer
/// exponents, without computing irrational powers.
pub fn cmp_pow(a: &Rat, p: u32, b: &Rat, q: u32) -> std::cmp::Ordering {
    let lhs = pow_rat(a, p);
    let rhs = pow_rat(b, q);
    lhs.cmp(&rhs)
}

/// `r^k` for a small nonnegative integer exponent.
pub fn pow_rat(r: &Rat, k: u32) -> Rat {
    let mut acc = Rat::one();
    let mut base = r.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["3", "-3", "1/2", "-7/3", "0"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(rat_string(&r), s.trim_start_matches('+'));
        }
        assert_eq!(rat_string(&parse_rat("2/4").unwrap()), "1/2");
        assert!(parse_rat("1/0").is_none());
        assert!(parse_rat("x").is_none());
    }

    #[test]
    fn dyadic_floor_stays_below() {
        for &x in &[0.9, 0.5, 0.3, 0.0625, 1e-6] {
            let d = rat_to_f64(&dyadic_floor_pow2(x));
            assert!(d <= x && d > 0.0);
        }
    }

    #[test]
    fn pow_cmp() {
        use std::cmp::Ordering::*;
        // (1/2)^3 = 1/8 < (3/4)^2 = 9/16
        assert_eq!(cmp_pow(&rat(1, 2), 3, &rat(3, 4), 2), Less);
        assert_eq!(cmp_pow(&rat(1, 4), 1, &rat(1, 2), 2), Equal);
    }
}

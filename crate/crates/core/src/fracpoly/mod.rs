//! Bivariate polynomials and fractional-power polynomials with exact
//! rational coefficients and exact nonnegative rational exponents.
//!
//! Exponents are kept exact because all Newton polygon geometry downstream
//! is exact; floating exponents would corrupt hulls and supporting lines.
//! Terms live in a `BTreeMap` keyed by the exponent pair, so every value is
//! canonical: no zero coefficients, no duplicate keys, deterministic order.

mod parse;

pub use parse::ParseError;

use crate::dd::Dd;
use crate::rational::{is_integer, rat_to_f64, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// One term `coeff * x^ex * y^ey`. Only materialized on demand; storage is
/// the map inside [`FracPoly`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: Rat,
    pub ex: Rat,
    pub ey: Rat,
}

/// The three coordinate frames in which the polygon geometry is read:
/// `(x, y)` itself, `(x, x+y)` and `(y, x+y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Frame {
    Xy,
    XXpy,
    YXpy,
}

impl Frame {
    pub const ALL: [Frame; 3] = [Frame::Xy, Frame::XXpy, Frame::YXpy];
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolyError {
    #[error("operation requires integer exponents, found {0}^{1}")]
    FractionalExponent(String, String),
    #[error("zero polynomial rejected")]
    ZeroPolynomial,
    #[error("input is not homogeneous")]
    NotHomogeneous,
    #[error("negative base {0} with fractional exponent")]
    NegativeBase(f64),
    #[error("{0}")]
    Parse(#[from] ParseError),
}

/// Finite sum of monomials with rational coefficients and nonnegative
/// rational exponents, always in canonical merged form.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FracPoly {
    terms: BTreeMap<(Rat, Rat), Rat>,
}

impl FracPoly {
    pub fn zero() -> FracPoly {
        FracPoly::default()
    }

    pub fn constant(c: Rat) -> FracPoly {
        FracPoly::monomial(c, Rat::zero(), Rat::zero())
    }

    pub fn monomial(coeff: Rat, ex: Rat, ey: Rat) -> FracPoly {
        assert!(!ex.is_negative() && !ey.is_negative(), "negative exponent");
        let mut p = FracPoly::zero();
        p.add_term(coeff, ex, ey);
        p
    }

    /// Variable `x`.
    pub fn var_x() -> FracPoly {
        FracPoly::monomial(Rat::one(), Rat::one(), Rat::zero())
    }

    /// Variable `y`.
    pub fn var_y() -> FracPoly {
        FracPoly::monomial(Rat::one(), Rat::zero(), Rat::one())
    }

    pub fn parse(text: &str) -> Result<FracPoly, PolyError> {
        parse::parse_poly(text).map_err(PolyError::from)
    }

    fn add_term(&mut self, coeff: Rat, ex: Rat, ey: Rat) {
        if coeff.is_zero() {
            return;
        }
        let key = (ex, ey);
        match self.terms.get_mut(&key) {
            Some(c) => {
                *c += coeff;
                if c.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, coeff);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Iterates terms in canonical (exponent-lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|((ex, ey), c)| Monomial {
            coeff: c.clone(),
            ex: ex.clone(),
            ey: ey.clone(),
        })
    }

    /// Exponent pairs of the nonzero terms.
    pub fn support(&self) -> Vec<(Rat, Rat)> {
        self.terms.keys().cloned().collect()
    }

    pub fn coeff_at(&self, ex: &Rat, ey: &Rat) -> Rat {
        self.terms
            .get(&(ex.clone(), ey.clone()))
            .cloned()
            .unwrap_or_else(Rat::zero)
    }

    pub fn has_integer_exponents(&self) -> bool {
        self.terms
            .keys()
            .all(|(ex, ey)| is_integer(ex) && is_integer(ey))
    }

    pub fn has_integer_y_exponents(&self) -> bool {
        self.terms.keys().all(|(_, ey)| is_integer(ey))
    }

    fn require_integer_exponents(&self, op: &str) -> Result<(), PolyError> {
        for (ex, ey) in self.terms.keys() {
            if !is_integer(ex) || !is_integer(ey) {
                return Err(PolyError::FractionalExponent(
                    op.to_string(),
                    format!("x^{} y^{}", ex, ey),
                ));
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &FracPoly) -> FracPoly {
        let mut out = self.clone();
        for ((ex, ey), c) in &other.terms {
            out.add_term(c.clone(), ex.clone(), ey.clone());
        }
        out
    }

    pub fn sub(&self, other: &FracPoly) -> FracPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FracPoly {
        let mut out = FracPoly::zero();
        for ((ex, ey), c) in &self.terms {
            out.terms.insert((ex.clone(), ey.clone()), -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> FracPoly {
        if k.is_zero() {
            return FracPoly::zero();
        }
        let mut out = FracPoly::zero();
        for ((ex, ey), c) in &self.terms {
            out.terms.insert((ex.clone(), ey.clone()), c * k);
        }
        out
    }

    pub fn mul(&self, other: &FracPoly) -> FracPoly {
        let mut out = FracPoly::zero();
        for ((ax, ay), ac) in &self.terms {
            for ((bx, by), bc) in &other.terms {
                out.add_term(ac * bc, ax + bx, ay + by);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> FracPoly {
        let mut acc = FracPoly::constant(Rat::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Partial derivative in `x`. Fractional exponents are differentiated
    /// exactly (`d/dx x^(5/2) = 5/2 x^(3/2)`).
    pub fn dx(&self) -> FracPoly {
        let mut out = FracPoly::zero();
        for ((ex, ey), c) in &self.terms {
            if ex.is_zero() {
                continue;
            }
            out.add_term(c * ex, ex - Rat::one(), ey.clone());
        }
        out
    }

    /// Partial derivative in `y`.
    pub fn dy(&self) -> FracPoly {
        let mut out = FracPoly::zero();
        for ((ex, ey), c) in &self.terms {
            if ey.is_zero() {
                continue;
            }
            out.add_term(c * ey, ex.clone(), ey - Rat::one());
        }
        out
    }

    /// Substitutes `x -> -x` exactly. Requires integer x-exponents.
    pub fn flip_x(&self) -> Result<FracPoly, PolyError> {
        let mut out = FracPoly::zero();
        for ((ex, ey), c) in &self.terms {
            let p = ex
                .to_integer()
                .to_i64()
                .filter(|_| is_integer(ex))
                .ok_or_else(|| {
                    PolyError::FractionalExponent("flip_x".into(), format!("x^{}", ex))
                })?;
            let coeff = if p % 2 == 0 { c.clone() } else { -c.clone() };
            out.add_term(coeff, ex.clone(), ey.clone());
        }
        Ok(out)
    }

    /// Substitutes `y -> -y` exactly. Requires integer y-exponents.
    pub fn flip_y(&self) -> Result<FracPoly, PolyError> {
        Ok(self.swap_xy().flip_x()?.swap_xy())
    }

    /// Swaps the roles of `x` and `y`.
    pub fn swap_xy(&self) -> FracPoly {
        let mut out = FracPoly::zero();
        for ((ex, ey), c) in &self.terms {
            out.terms.insert((ey.clone(), ex.clone()), c.clone());
        }
        out
    }

    /// The differential operator `d/dx d/dy (d/dx - d/dy)` applied exactly.
    /// It annihilates precisely the phases of the form
    /// `S1(x) + S2(y) + S3(x+y)`.
    pub fn apply_d(&self) -> Result<FracPoly, PolyError> {
        self.require_integer_exponents("apply_d")?;
        let step = self.dx().sub(&self.dy());
        Ok(step.dy().dx())
    }

    /// `P(x, x^m (r + y))`, expanded and canonicalized. `m` must be positive
    /// and the y-exponents must be integers (the binomial expansion needs
    /// them); x-exponents may already be fractional.
    pub fn substitute_branch(&self, r: &Rat, m: &Rat) -> Result<FracPoly, PolyError> {
        assert!(m.is_positive(), "substitute_branch requires m > 0");
        let mut out = FracPoly::zero();
        for ((ex, ey), c) in &self.terms {
            let q = ey
                .to_integer()
                .to_u32()
                .filter(|_| is_integer(ey))
                .ok_or_else(|| {
                    PolyError::FractionalExponent("substitute_branch".into(), format!("y^{}", ey))
                })?;
            // (r + y)^q via binomial expansion
            let base_x = ex + m * ey;
            let mut binom = BigInt::one();
            for k in 0..=q {
                // binom = C(q, k)
                let r_pow = crate::rational::pow_rat(r, q - k);
                let coeff = c * Rat::from_integer(binom.clone()) * r_pow;
                out.add_term(coeff, base_x.clone(), Rat::from_integer(BigInt::from(k)));
                if k < q {
                    binom = binom * BigInt::from(q - k) / BigInt::from(k + 1);
                }
            }
        }
        Ok(out)
    }

    /// Rewrites the polynomial in one of the three frames.
    /// `XXpy` returns `Q(u,v) = P(u, v-u)`; `YXpy` returns `Q(u,v) = P(v-u, u)`.
    pub fn reframe(&self, frame: Frame) -> Result<FracPoly, PolyError> {
        self.require_integer_exponents("reframe")?;
        match frame {
            Frame::Xy => Ok(self.clone()),
            Frame::XXpy => {
                let mut out = FracPoly::zero();
                for ((ex, ey), c) in &self.terms {
                    let q = ey.to_integer().to_u32().unwrap();
                    expand_v_minus_u(&mut out, c, ex, q, &Rat::zero());
                }
                Ok(out)
            }
            Frame::YXpy => {
                let mut out = FracPoly::zero();
                for ((ex, ey), c) in &self.terms {
                    let p = ex.to_integer().to_u32().unwrap();
                    expand_v_minus_u(&mut out, c, ey, p, &Rat::zero());
                }
                Ok(out)
            }
        }
    }

    /// Minimal total degree and the homogeneous part realizing it.
    pub fn lowest_part(&self) -> Result<(Rat, FracPoly), PolyError> {
        if self.is_zero() {
            return Err(PolyError::ZeroPolynomial);
        }
        let degree = self
            .terms
            .keys()
            .map(|(ex, ey)| ex + ey)
            .min()
            .expect("nonzero");
        let mut part = FracPoly::zero();
        for ((ex, ey), c) in &self.terms {
            if ex + ey == degree {
                part.terms.insert((ex.clone(), ey.clone()), c.clone());
            }
        }
        Ok((degree, part))
    }

    /// Maximal total degree over the support.
    pub fn max_total_degree(&self) -> Option<Rat> {
        self.terms.keys().map(|(ex, ey)| ex + ey).max()
    }

    /// Smallest y-exponent over the support.
    pub fn min_ey(&self) -> Option<Rat> {
        self.terms.keys().map(|(_, ey)| ey.clone()).min()
    }

    /// Smallest x-exponent over the support.
    pub fn min_ex(&self) -> Option<Rat> {
        self.terms.keys().map(|(ex, _)| ex.clone()).min()
    }

    /// Extended-precision evaluation. Term powers and the accumulation are
    /// carried in double-double, so results are accurate to roughly the
    /// 100-bit level relative to the largest intermediate term.
    pub fn eval_dd(&self, x: f64, y: f64) -> Result<Dd, PolyError> {
        self.eval_dd_points(Dd::from_f64(x), Dd::from_f64(y))
    }

    /// Extended-precision evaluation at double-double inputs.
    pub fn eval_dd_points(&self, x: Dd, y: Dd) -> Result<Dd, PolyError> {
        let mut acc = Dd::ZERO;
        for ((ex, ey), c) in &self.terms {
            let xp = x.pow_rat(ex).ok_or(PolyError::NegativeBase(x.to_f64()))?;
            let yp = y.pow_rat(ey).ok_or(PolyError::NegativeBase(y.to_f64()))?;
            acc = acc.add(Dd::from_rat(c).mul(xp).mul(yp));
        }
        Ok(acc)
    }

    /// `f64` evaluation through the extended-precision path.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, PolyError> {
        Ok(self.eval_dd(x, y)?.to_f64())
    }

    /// Fast `f64` evaluation without the double-double accumulation; used by
    /// bulk sampling where throughput matters and the 1-ulp-per-term error
    /// is irrelevant.
    pub fn eval_f64_fast(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for ((ex, ey), c) in &self.terms {
            acc += rat_to_f64(c) * pow_f64(x, ex) * pow_f64(y, ey);
        }
        acc
    }

    /// Sum of `|term|` magnitudes at a point, a scale reference for
    /// cancellation-aware comparisons.
    pub fn term_magnitude_sum(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for ((ex, ey), c) in &self.terms {
            acc += (rat_to_f64(c) * pow_f64(x, ex) * pow_f64(y, ey)).abs();
        }
        acc
    }
}

/// `x^e` for rational `e`, tolerating negative bases with integer exponents.
pub(crate) fn pow_f64(x: f64, e: &Rat) -> f64 {
    if e.is_zero() {
        return 1.0;
    }
    if is_integer(e) {
        let k = e.numer().to_i32().unwrap_or(i32::MAX);
        x.powi(k)
    } else {
        x.powf(rat_to_f64(e))
    }
}

/// Accumulates `c * u^base_u * (v - u)^q`, shifted by `extra_u` on the u
/// exponent.
fn expand_v_minus_u(out: &mut FracPoly, c: &Rat, base_u: &Rat, q: u32, extra_u: &Rat) {
    let mut binom = BigInt::one();
    for k in 0..=q {
        // term C(q,k) v^k (-u)^(q-k)
        let sign = if (q - k) % 2 == 0 {
            Rat::one()
        } else {
            -Rat::one()
        };
        let coeff = c * Rat::from_integer(binom.clone()) * sign;
        let eu = base_u + Rat::from_integer(BigInt::from(q - k)) + extra_u;
        out.add_term(coeff, eu, Rat::from_integer(BigInt::from(k)));
        if k < q {
            binom = binom * BigInt::from(q - k) / BigInt::from(k + 1);
        }
    }
}

impl fmt::Display for FracPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((ex, ey), c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() || (ex.is_zero() && ey.is_zero()) {
                parts.push(crate::rational::rat_string(&mag));
            }
            for (sym, e) in [("x", ex), ("y", ey)] {
                if e.is_zero() {
                    continue;
                }
                if e.is_one() {
                    parts.push(sym.to_string());
                } else {
                    parts.push(format!("{}^{}", sym, crate::rational::rat_string(e)));
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

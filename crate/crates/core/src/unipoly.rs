//! Univariate polynomials over the rationals: exact arithmetic, gcd,
//! Yun squarefree decomposition, Sturm sequences, real-root isolation and
//! rational-root extraction.
//!
//! Multiplicities are always derived from the gcd structure, never from
//! numeric root finding.

use crate::rational::{pow_rat, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Dense univariate polynomial, coefficients ascending, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniPoly {
    coeffs: Vec<Rat>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> UniPoly {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> UniPoly {
        UniPoly { coeffs: vec![] }
    }

    pub fn constant(c: Rat) -> UniPoly {
        UniPoly::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn leading(&self) -> Rat {
        self.coeffs.last().cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) + other.coeff(k));
        }
        UniPoly::new(out)
    }

    pub fn neg(&self) -> UniPoly {
        UniPoly {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    pub fn scale(&self, k: &Rat) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> UniPoly {
        if self.coeffs.len() <= 1 {
            return UniPoly::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            out.push(c * Rat::from_integer(BigInt::from(k)));
        }
        UniPoly::new(out)
    }

    /// Euclidean division; the divisor must be nonzero.
    pub fn div_rem(&self, divisor: &UniPoly) -> (UniPoly, UniPoly) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dlead = divisor.leading();
        let ddeg = divisor.degree().unwrap();
        let mut rem = self.coeffs.clone();
        if rem.len() < divisor.coeffs.len() {
            return (UniPoly::zero(), self.clone());
        }
        let mut quot = vec![Rat::zero(); rem.len() - ddeg];
        for k in (ddeg..rem.len()).rev() {
            let c = rem[k].clone();
            if c.is_zero() {
                continue;
            }
            let q = c / &dlead;
            quot[k - ddeg] = q.clone();
            for (j, d) in divisor.coeffs.iter().enumerate() {
                let idx = k - ddeg + j;
                rem[idx] = &rem[idx] - &(d * &q);
            }
        }
        (UniPoly::new(quot), UniPoly::new(rem))
    }

    /// Exact division; panics when the remainder is nonzero.
    pub fn div_exact(&self, divisor: &UniPoly) -> UniPoly {
        let (q, r) = self.div_rem(divisor);
        assert!(r.is_zero(), "inexact polynomial division");
        q
    }

    /// Monic normalization (leading coefficient one).
    pub fn monic(&self) -> UniPoly {
        if self.is_zero() {
            return UniPoly::zero();
        }
        let inv = Rat::one() / self.leading();
        self.scale(&inv)
    }

    /// Monic gcd by the Euclidean algorithm.
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Squarefree part `self / gcd(self, self')`, monic.
    pub fn squarefree_part(&self) -> UniPoly {
        if self.is_zero() {
            return UniPoly::zero();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            self.monic()
        } else {
            self.div_exact(&g).monic()
        }
    }

    /// Yun's squarefree decomposition: returns `(g_i, i)` pairs with each
    /// `g_i` monic squarefree of positive degree and
    /// `self = lc * prod g_i^i`.
    pub fn squarefree_decomposition(&self) -> Vec<(UniPoly, usize)> {
        let mut out = Vec::new();
        if self.degree().map_or(true, |d| d == 0) {
            return out;
        }
        let f = self.monic();
        let fp = f.derivative();
        let a = f.gcd(&fp);
        if a.degree() == Some(0) {
            out.push((f, 1));
            return out;
        }
        let mut b = f.div_exact(&a);
        let mut c = fp.div_exact(&a);
        let mut d = c.sub(&b.derivative());
        let mut i = 1;
        loop {
            let g = b.gcd(&d);
            if g.degree().map_or(false, |dg| dg > 0) {
                out.push((g.clone(), i));
            }
            b = b.div_exact(&g);
            if b.degree() == Some(0) {
                break;
            }
            c = d.div_exact(&g);
            d = c.sub(&b.derivative());
            i += 1;
        }
        out
    }

    /// Multiplicity of an exact rational root (0 when not a root).
    pub fn root_multiplicity(&self, r: &Rat) -> usize {
        let linear = UniPoly::new(vec![-r.clone(), Rat::one()]);
        let mut mult = 0;
        let mut cur = self.clone();
        while !cur.is_zero() {
            let (q, rem) = cur.div_rem(&linear);
            if !rem.is_zero() {
                break;
            }
            mult += 1;
            cur = q;
        }
        mult
    }

    /// Order of vanishing at zero (index of the first nonzero coefficient).
    pub fn order_at_zero(&self) -> usize {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .unwrap_or(0)
    }

    /// Divides out `x^k`.
    pub fn shift_down(&self, k: usize) -> UniPoly {
        UniPoly::new(self.coeffs.iter().skip(k).cloned().collect())
    }

    /// Cauchy bound: every complex root satisfies `|z| <= 1 + max |a_k/a_n|`.
    pub fn cauchy_root_bound(&self) -> Rat {
        let lead = self.leading();
        let mut m = Rat::zero();
        for c in &self.coeffs[..self.coeffs.len().saturating_sub(1)] {
            let v = (c / &lead).abs();
            if v > m {
                m = v;
            }
        }
        Rat::one() + m
    }

    /// Lower bound on `|z|` over nonzero roots:
    /// `|z| >= 1 / (1 + max |a_k/a_0|)` where `a_0` is the lowest nonzero
    /// coefficient after stripping the zero root.
    pub fn inverse_root_bound(&self) -> Rat {
        let stripped = self.shift_down(self.order_at_zero());
        let a0 = stripped.coeff(0);
        let mut m = Rat::zero();
        for c in &stripped.coeffs[1..] {
            let v = (c / &a0).abs();
            if v > m {
                m = v;
            }
        }
        Rat::one() / (Rat::one() + m)
    }
}

// ---------------------------------------------------------------------------
// Sturm sequences and real-root isolation
// ---------------------------------------------------------------------------

/// Sturm chain of a (preferably squarefree) polynomial.
pub struct SturmChain {
    chain: Vec<UniPoly>,
}

impl SturmChain {
    pub fn new(f: &UniPoly) -> SturmChain {
        let mut chain = vec![f.clone(), f.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(r.neg());
        }
        SturmChain { chain }
    }

    fn variations_at(&self, x: &Rat) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for p in &self.chain {
            let v = p.eval(x);
            let s = sign(&v);
            if s != 0 {
                if last != 0 && s != last {
                    count += 1;
                }
                last = s;
            }
        }
        count
    }

    fn variations_at_neg_inf(&self) -> usize {
        self.variations_limit(-1)
    }

    fn variations_at_pos_inf(&self) -> usize {
        self.variations_limit(1)
    }

    fn variations_limit(&self, dir: i8) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for p in &self.chain {
            let Some(d) = p.degree() else { continue };
            let mut s = sign(&p.leading());
            if dir < 0 && d % 2 == 1 {
                s = -s;
            }
            if s != 0 {
                if last != 0 && s != last {
                    count += 1;
                }
                last = s;
            }
        }
        count
    }

    /// Number of distinct real roots in the half-open interval `(a, b]`.
    pub fn count_roots_in(&self, a: &Rat, b: &Rat) -> usize {
        self.variations_at(a) - self.variations_at(b)
    }

    /// Number of distinct real roots on the whole line.
    pub fn count_real_roots(&self) -> usize {
        self.variations_at_neg_inf() - self.variations_at_pos_inf()
    }
}

fn sign(r: &Rat) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// True when the squarefree polynomial has at least one real root.
pub fn has_real_root(f: &UniPoly) -> bool {
    match f.degree() {
        None | Some(0) => false,
        Some(d) if d % 2 == 1 => true,
        _ => SturmChain::new(f).count_real_roots() > 0,
    }
}

/// Isolating intervals `(a, b]` with exact rational endpoints, one per
/// distinct real root of the squarefree input, pairwise disjoint, refined by
/// bisection until `b - a <= width`.
pub fn isolate_real_roots(f: &UniPoly, width: &Rat) -> Vec<(Rat, Rat)> {
    let Some(d) = f.degree() else { return vec![] };
    if d == 0 {
        return vec![];
    }
    let chain = SturmChain::new(f);
    let bound = f.cauchy_root_bound();
    let mut work = vec![(-bound.clone(), bound)];
    let mut done = Vec::new();
    while let Some((a, b)) = work.pop() {
        let count = chain.count_roots_in(&a, &b);
        if count == 0 {
            continue;
        }
        if count == 1 && (&b - &a) <= *width {
            done.push((a, b));
            continue;
        }
        let mid = (&a + &b) / Rat::from_integer(BigInt::from(2));
        work.push((a, mid.clone()));
        work.push((mid, b));
    }
    done.sort();
    done
}

/// Refines an isolating interval of `f` (squarefree) down to the requested
/// width by bisection.
pub fn refine_interval(f: &UniPoly, interval: (Rat, Rat), width: &Rat) -> (Rat, Rat) {
    let chain = SturmChain::new(f);
    let (mut a, mut b) = interval;
    let two = Rat::from_integer(BigInt::from(2));
    while (&b - &a) > *width {
        let mid = (&a + &b) / &two;
        if chain.count_roots_in(&a, &mid) == 1 {
            b = mid;
        } else {
            a = mid;
        }
    }
    (a, b)
}

// ---------------------------------------------------------------------------
// Rational roots
// ---------------------------------------------------------------------------

/// Divisor enumeration is skipped above this bound; callers then treat
/// unidentified real roots as non-rational.
const DIVISOR_ENUM_LIMIT: u64 = 10_000_000_000;

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.abs().to_u64()?;
    if n == 0 || n > DIVISOR_ENUM_LIMIT {
        return None;
    }
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            small.push(BigInt::from(d));
            if d != n / d {
                large.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    Some(small)
}

/// All rational roots of a squarefree polynomial, exact, sorted ascending.
/// Returns `None` when the coefficient bound makes the divisor enumeration
/// infeasible (roots may then still be rational but are not certified).
pub fn rational_roots_squarefree(f: &UniPoly) -> Option<Vec<Rat>> {
    let d = f.degree()?;
    if d == 0 {
        return Some(vec![]);
    }
    // Clear denominators to a primitive integer polynomial.
    let mut den = BigInt::one();
    for c in f.coeffs() {
        den = den.lcm(c.denom());
    }
    let ints: Vec<BigInt> = f
        .coeffs()
        .iter()
        .map(|c| c.numer() * (&den / c.denom()))
        .collect();
    let ord = ints.iter().position(|c| !c.is_zero()).unwrap();
    let trailing = &ints[ord];
    let leading = ints.last().unwrap();

    let mut roots = Vec::new();
    if ord > 0 {
        roots.push(Rat::zero());
    }
    let ps = divisors(trailing)?;
    let qs = divisors(leading)?;
    for p in &ps {
        for q in &qs {
            for sgn in [1, -1] {
                let cand = Rat::new(p * BigInt::from(sgn), q.clone());
                if f.eval(&cand).is_zero() && !roots.contains(&cand) {
                    roots.push(cand);
                }
            }
        }
    }
    roots.sort();
    Some(roots)
}

/// `(y - r)^s` expanded.
pub fn linear_power(r: &Rat, s: usize) -> UniPoly {
    let mut acc = UniPoly::constant(Rat::one());
    let lin = UniPoly::new(vec![-r.clone(), Rat::one()]);
    for _ in 0..s {
        acc = acc.mul(&lin);
    }
    acc
}

/// Checks whether `f = c (y - r)^s` for some nonzero `c` and `r`, returning
/// `(c, r)` on success. Used to detect stabilized branches.
pub fn as_pure_linear_power(f: &UniPoly) -> Option<(Rat, Rat)> {
    let s = f.degree()?;
    if s == 0 {
        return None;
    }
    let c = f.leading();
    // candidate from the subleading coefficient: f = c(y - r)^s has
    // coefficient -c*s*r at degree s-1
    let r = -(f.coeff(s - 1) / (&c * Rat::from_integer(BigInt::from(s))));
    let probe = linear_power(&r, s).scale(&c);
    if probe == *f {
        Some((c, r))
    } else {
        None
    }
}

/// `p^e` helper re-exported for callers combining bounds.
pub fn rat_pow(r: &Rat, e: u32) -> Rat {
    pow_rat(r, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn up(cs: &[i64]) -> UniPoly {
        UniPoly::new(cs.iter().map(|&c| rat_int(c)).collect())
    }

    #[test]
    fn division_and_gcd() {
        // (y^2 - 1) = (y - 1)(y + 1)
        let f = up(&[-1, 0, 1]);
        let g = up(&[-1, 1]);
        let (q, r) = f.div_rem(&g);
        assert!(r.is_zero());
        assert_eq!(q, up(&[1, 1]));
        assert_eq!(f.gcd(&up(&[1, 1])), up(&[1, 1]).monic());
    }

    #[test]
    fn yun_decomposition() {
        // y^2 (y-1) (y+1): factors y at mult 2, (y^2-1) at mult 1
        let f = up(&[0, 0, -1, 0, 1]);
        let dec = f.squarefree_decomposition();
        assert_eq!(dec.len(), 2);
        let (g1, m1) = &dec[0];
        let (g2, m2) = &dec[1];
        assert_eq!((*m1, *m2), (1, 2));
        assert_eq!(g1, &up(&[-1, 0, 1]).monic());
        assert_eq!(g2, &up(&[0, 1]));
    }

    #[test]
    fn multiplicities() {
        // (y-2)^3
        let f = linear_power(&rat_int(2), 3);
        assert_eq!(f.root_multiplicity(&rat_int(2)), 3);
        assert_eq!(f.root_multiplicity(&rat_int(1)), 0);
    }

    #[test]
    fn sturm_counts() {
        let f = up(&[-2, 0, 1]); // y^2 - 2
        let chain = SturmChain::new(&f);
        assert_eq!(chain.count_real_roots(), 2);
        assert_eq!(chain.count_roots_in(&rat_int(0), &rat_int(2)), 1);
        assert!(!has_real_root(&up(&[1, 0, 1]))); // y^2 + 1
        assert!(has_real_root(&up(&[-1, 3, 0, 1])));
    }

    #[test]
    fn isolation_and_refinement() {
        let f = up(&[-2, 0, 1]); // roots +-sqrt(2)
        let width = rat(1, 1 << 20);
        let roots = isolate_real_roots(&f, &width);
        assert_eq!(roots.len(), 2);
        for (a, b) in &roots {
            assert!((b - a) <= width);
            let sq2 = 2f64.sqrt();
            let lo = crate::rational::rat_to_f64(a);
            let hi = crate::rational::rat_to_f64(b);
            assert!((lo <= sq2 && sq2 <= hi) || (lo <= -sq2 && -sq2 <= hi));
        }
    }

    #[test]
    fn rational_root_extraction() {
        // 6y^3 - y^2 - 2y = y (2y+1)(3y-2)
        let f = up(&[0, -2, -1, 6]);
        let roots = rational_roots_squarefree(&f).unwrap();
        assert_eq!(roots, vec![rat(-1, 2), rat_int(0), rat(2, 3)]);
    }

    #[test]
    fn pure_power_detection() {
        let f = linear_power(&rat(1, 2), 3).scale(&rat_int(4));
        let (c, r) = as_pure_linear_power(&f).unwrap();
        assert_eq!((c, r), (rat_int(4), rat(1, 2)));
        assert!(as_pure_linear_power(&up(&[-1, 0, 1])).is_none());
        assert!(as_pure_linear_power(&up(&[5])).is_none());
    }

    #[test]
    fn root_bounds_bracket() {
        let f = up(&[-2, 1, 6]); // roots 1/2, -2/3
        let hi = f.cauchy_root_bound();
        let lo = f.inverse_root_bound();
        assert!(hi >= rat(2, 3));
        assert!(lo <= rat(1, 2) && lo > Rat::zero());
    }
}

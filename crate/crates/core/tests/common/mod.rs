//! Shared test fixtures: the phase catalog and independent brute-force
//! oracles (support-set polynomial arithmetic, staircase hulls by gift
//! wrapping, factor multiplicities by synthetic division, and an exact
//! grid-plus-Lipschitz prover for the absence of real roots).
//!
//! The oracles deliberately do not call into the crate's newton/invariants
//! code paths: they share only the rational scalar type.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use oscform::fracpoly::FracPoly;
use oscform::rational::{rat, rat_int, Rat};
use std::collections::BTreeMap;

/// Resolution catalog of the acceptance suite.
pub fn resolution_catalog() -> Vec<(&'static str, FracPoly)> {
    let parse = |s: &str| FracPoly::parse(s).unwrap();
    vec![
        ("monomial x^3*y^2", parse("x^3*y^2")),
        ("monomial x", parse("x")),
        ("y^2 - x^3", parse("y^2 - x^3")),
        ("(y-x)^2", parse("y^2 - 2*x*y + x^2")),
        (
            "(y-x^2)^2*(y+x^3)",
            parse("y^2 - 2*x^2*y + x^4").mul(&parse("y + x^3")),
        ),
        ("x^5*y - x^3*y^2 + x^2*y^4", parse("x^5*y - x^3*y^2 + x^2*y^4")),
    ]
}

/// The degenerate phase `x^3 + y^3 + (x+y)^3`.
pub fn degenerate_phase() -> FracPoly {
    FracPoly::parse("x^3 + y^3")
        .unwrap()
        .add(&FracPoly::parse("x + y").unwrap().pow(3))
}

// ---------------------------------------------------------------------------
// Independent polynomial arithmetic on integer-exponent support maps
// ---------------------------------------------------------------------------

/// Integer-exponent polynomial as a plain support map.
pub type IPoly = BTreeMap<(i64, i64), Rat>;

pub fn ipoly_from(p: &FracPoly) -> IPoly {
    let mut out = IPoly::new();
    for t in p.terms() {
        let px = t.ex.to_integer().try_into().unwrap();
        let qy = t.ey.to_integer().try_into().unwrap();
        ipoly_add_term(&mut out, (px, qy), t.coeff);
    }
    out
}

pub fn ipoly_add_term(p: &mut IPoly, key: (i64, i64), c: Rat) {
    if c.is_zero() {
        return;
    }
    let entry = p.entry(key).or_insert_with(Rat::zero);
    *entry += c;
    if entry.is_zero() {
        p.remove(&key);
    }
}

pub fn ipoly_equal_fracpoly(p: &IPoly, q: &FracPoly) -> bool {
    *p == ipoly_from(q)
}

/// `d/dx d/dy (d/dx - d/dy)` written out term by term, independent of the
/// library's derivative code.
pub fn oracle_apply_d(p: &IPoly) -> IPoly {
    // first dx - dy
    let mut step = IPoly::new();
    for (&(a, b), c) in p {
        if a >= 1 {
            ipoly_add_term(&mut step, (a - 1, b), c * rat_int(a));
        }
        if b >= 1 {
            ipoly_add_term(&mut step, (a, b - 1), -(c * rat_int(b)));
        }
    }
    // then dy, then dx
    let mut step2 = IPoly::new();
    for (&(a, b), c) in &step {
        if b >= 1 {
            ipoly_add_term(&mut step2, (a, b - 1), c * rat_int(b));
        }
    }
    let mut out = IPoly::new();
    for (&(a, b), c) in &step2 {
        if a >= 1 {
            ipoly_add_term(&mut out, (a - 1, b), c * rat_int(a));
        }
    }
    out
}

pub fn oracle_lowest_part(p: &IPoly) -> (i64, IPoly) {
    let d = p.keys().map(|&(a, b)| a + b).min().expect("nonzero");
    let mut out = IPoly::new();
    for (&(a, b), c) in p {
        if a + b == d {
            out.insert((a, b), c.clone());
        }
    }
    (d, out)
}

/// Pascal-triangle binomials.
fn binom_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for _ in 0..n {
        let mut next = vec![BigInt::one()];
        for w in row.windows(2) {
            next.push(&w[0] + &w[1]);
        }
        next.push(BigInt::one());
        row = next;
    }
    row
}

/// Frame substitutions, expanded independently: frame 0 is the identity,
/// frame 1 sends `(x, y) -> (u, v-u)`, frame 2 sends `(x, y) -> (v-u, u)`.
pub fn oracle_reframe(p: &IPoly, frame: usize) -> IPoly {
    if frame == 0 {
        return p.clone();
    }
    let mut out = IPoly::new();
    for (&(a, b), c) in p {
        // expand (v - u)^e, attach the other variable power to u
        let (e, other) = if frame == 1 {
            (b as usize, a)
        } else {
            (a as usize, b)
        };
        let row = binom_row(e);
        for (k, bin) in row.iter().enumerate() {
            // term C(e,k) v^k (-u)^(e-k)
            let sign = if (e - k) % 2 == 0 { Rat::one() } else { -Rat::one() };
            let coeff = c * Rat::from_integer(bin.clone()) * sign;
            ipoly_add_term(&mut out, (other + (e - k) as i64, k as i64), coeff);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Independent staircase hull (gift wrapping on integer points)
// ---------------------------------------------------------------------------

/// Lower-left hull vertices of the support, by staircase filtering followed
/// by gift wrapping with exact i128 cross products.
pub fn oracle_hull(support: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let minimal: Vec<(i64, i64)> = support
        .iter()
        .filter(|&&(p, q)| {
            !support
                .iter()
                .any(|&(p2, q2)| (p2, q2) != (p, q) && p2 <= p && q2 <= q)
        })
        .cloned()
        .collect();
    if minimal.is_empty() {
        return vec![];
    }
    let start = *minimal
        .iter()
        .min_by_key(|&&(p, q)| (p, q))
        .unwrap();
    let mut hull = vec![start];
    loop {
        let cur = *hull.last().unwrap();
        // candidates strictly to the right
        let mut best: Option<(i64, i64)> = None;
        for &cand in &minimal {
            if cand.0 <= cur.0 {
                continue;
            }
            best = match best {
                None => Some(cand),
                Some(b) => {
                    // pick the smaller slope magnitude (less steep), i.e.
                    // smallest m first means steepest descent first: the next
                    // hull vertex minimizes the supporting value m =
                    // (p2-p1)/(q1-q2); compare cross products
                    let c = cross(cur, b, cand);
                    if c < 0 || (c == 0 && further(cur, cand, b)) {
                        Some(cand)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        match best {
            None => break,
            Some(next) => hull.push(next),
        }
    }
    hull
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i128 {
    let (ox, oy) = (o.0 as i128, o.1 as i128);
    (a.0 as i128 - ox) * (b.1 as i128 - oy) - (a.1 as i128 - oy) * (b.0 as i128 - ox)
}

fn further(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> bool {
    (a.0 - o.0).abs() + (a.1 - o.1).abs() > (b.0 - o.0).abs() + (b.1 - o.1).abs()
}

// ---------------------------------------------------------------------------
// Univariate helpers: synthetic division, candidate roots, a no-real-root
// prover
// ---------------------------------------------------------------------------

/// Dense ascending coefficients.
pub type UPoly = Vec<Rat>;

pub fn upoly_trim(mut u: UPoly) -> UPoly {
    while u.last().map_or(false, |c| c.is_zero()) {
        u.pop();
    }
    u
}

pub fn upoly_eval(u: &[Rat], t: &Rat) -> Rat {
    let mut acc = Rat::zero();
    for c in u.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

/// Divides by `(t - r)`; returns the quotient when the remainder is zero.
pub fn upoly_divide_root(u: &[Rat], r: &Rat) -> Option<UPoly> {
    if u.is_empty() {
        return None;
    }
    let mut quot = vec![Rat::zero(); u.len() - 1];
    let mut carry = Rat::zero();
    for k in (0..u.len()).rev() {
        let v = &u[k] + &carry;
        if k == 0 {
            if v.is_zero() {
                return Some(upoly_trim(quot));
            }
            return None;
        }
        quot[k - 1] = v.clone();
        carry = v * r;
    }
    unreachable!()
}

/// Multiplicity of `r` by repeated synthetic division.
pub fn oracle_multiplicity(u: &[Rat], r: &Rat) -> usize {
    let mut cur = upoly_trim(u.to_vec());
    let mut mult = 0;
    while let Some(q) = upoly_divide_root(&cur, r) {
        mult += 1;
        cur = q;
        if cur.is_empty() {
            break;
        }
    }
    mult
}

/// Small rational candidate pool for hand-scale polynomials.
pub fn candidate_roots() -> Vec<Rat> {
    let mut out = Vec::new();
    for num in 1..=12i64 {
        for den in 1..=6i64 {
            for sign in [1, -1] {
                let r = rat(sign * num, den);
                if !out.contains(&r) {
                    out.push(r);
                }
            }
        }
    }
    out
}

/// Exact decision on real-root existence: `Some(true)` when a sign change
/// (or odd degree) proves a root, `Some(false)` when the grid-plus-
/// Lipschitz certificate on the Cauchy box excludes roots, `None` when the
/// oracle cannot tell.
pub fn oracle_real_root_existence(u: &[Rat]) -> Option<bool> {
    let u = upoly_trim(u.to_vec());
    match u.len() {
        0 => return Some(true),               // vanishes everywhere
        1 => return Some(false),              // nonzero constant
        n if n % 2 == 0 => return Some(true), // odd degree
        _ => {}
    }
    let lead = u.last().unwrap();
    let mut bound = Rat::zero();
    for c in &u[..u.len() - 1] {
        let v = (c / lead).abs();
        if v > bound {
            bound = v;
        }
    }
    let b = Rat::one() + bound;
    // Lipschitz constant on [-B, B]
    let mut lip = Rat::zero();
    let mut bpow = Rat::one();
    for (k, c) in u.iter().enumerate().skip(1) {
        lip += c.abs() * rat_int(k as i64) * &bpow;
        bpow *= &b;
    }
    let steps = 65536i64;
    let h = &b * rat(2, steps);
    let slack = &lip * &h / rat_int(2);
    let mut clear = true;
    let mut last_sign = 0i8;
    for k in 0..=steps {
        let t = -&b + &h * rat_int(k);
        let v = upoly_eval(&u, &t);
        let sign = if v.is_zero() {
            return Some(true);
        } else if v.is_positive() {
            1
        } else {
            -1
        };
        if last_sign != 0 && sign != last_sign {
            return Some(true); // exact sign change
        }
        last_sign = sign;
        if v.abs() <= slack {
            clear = false;
        }
    }
    if clear {
        Some(false)
    } else {
        None
    }
}

pub fn oracle_no_real_root(u: &[Rat]) -> bool {
    oracle_real_root_existence(u) == Some(false)
}

/// Max multiplicity among nonzero real roots of `u`, or `None` when the
/// oracle cannot certify the residual. Uses candidate rational roots plus
/// an independent Euclid gcd to certify the residual squarefree.
pub fn oracle_max_nonzero_real_mult(u: &[Rat], exclude: &[Rat]) -> Option<usize> {
    let mut cur = upoly_trim(u.to_vec());
    if cur.is_empty() {
        return None;
    }
    // strip the zero root
    while !cur.is_empty() && cur[0].is_zero() {
        cur.remove(0);
    }
    for r in exclude {
        while let Some(q) = upoly_divide_root(&cur, r) {
            cur = q;
        }
    }
    let mut best = 0usize;
    for r in candidate_roots() {
        let mut mult = 0usize;
        while let Some(q) = upoly_divide_root(&cur, &r) {
            mult += 1;
            cur = q;
        }
        best = best.max(mult);
    }
    // residual analysis: non-rational real roots contribute multiplicity 1
    // exactly when they exist and the residual is squarefree
    let cur = upoly_trim(cur);
    if cur.len() <= 1 {
        return Some(best);
    }
    match oracle_real_root_existence(&cur) {
        Some(false) => Some(best),
        Some(true) if upoly_gcd_degree(&cur) == 0 => Some(best.max(1)),
        _ => None,
    }
}

/// Degree of gcd(u, u'), via a plain Euclid loop.
fn upoly_gcd_degree(u: &[Rat]) -> usize {
    let mut a = upoly_trim(u.to_vec());
    let mut b: UPoly = upoly_trim(
        a.iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * rat_int(k as i64))
            .collect(),
    );
    while !b.is_empty() {
        // a mod b
        let mut r = a.clone();
        while r.len() >= b.len() && !r.is_empty() {
            let shift = r.len() - b.len();
            let factor = r.last().unwrap() / b.last().unwrap();
            for k in 0..b.len() {
                let v = &b[k] * &factor;
                r[k + shift] = &r[k + shift] - v;
            }
            r = upoly_trim(r);
            if r.len() < b.len() {
                break;
            }
        }
        a = b;
        b = r;
    }
    a.len().saturating_sub(1)
}

/// Edge polynomial of the segment `(left, right)` of the hull at `x = sign`,
/// as dense coefficients in `y` after dividing the common monomial.
pub fn oracle_edge_poly(p: &IPoly, left: (i64, i64), right: (i64, i64), sign: i64) -> UPoly {
    let deg = (left.1 - right.1) as usize;
    let mut coeffs = vec![Rat::zero(); deg + 1];
    let (dp, dq) = (right.0 - left.0, right.1 - left.1);
    for (&(a, b), c) in p {
        let on_line = (a - left.0) as i128 * dq as i128 == (b - left.1) as i128 * dp as i128;
        if on_line && a >= left.0 && a <= right.0 {
            let idx = (b - right.1) as usize;
            let v = if sign >= 0 || a % 2 == 0 {
                c.clone()
            } else {
                -c.clone()
            };
            coeffs[idx] = v;
        }
    }
    coeffs
}

/// Independent `d1`: maximal vanishing order over edges of supporting value
/// other than one, across the three frames.
pub fn oracle_d1(p: &IPoly) -> Option<usize> {
    let mut best = 0usize;
    for frame in 0..3 {
        let q = oracle_reframe(p, frame);
        let support: Vec<(i64, i64)> = q.keys().cloned().collect();
        let hull = oracle_hull(&support);
        for w in hull.windows(2) {
            let (l, r) = (w[0], w[1]);
            // m = (p_r - p_l) / (q_l - q_r); skip m == 1
            if r.0 - l.0 == l.1 - r.1 {
                continue;
            }
            for sign in [1i64, -1] {
                let edge = oracle_edge_poly(&q, l, r, sign);
                best = best.max(oracle_max_nonzero_real_mult(&edge, &[])?);
            }
        }
    }
    Some(best)
}

/// Independent `(alpha, beta, gamma, d0)` of a homogeneous support map.
pub fn oracle_linear_orders(h: &IPoly) -> Option<(usize, usize, usize, usize)> {
    let alpha = h.keys().map(|&(a, _)| a).min()? as usize;
    let beta = h.keys().map(|&(_, b)| b).min()? as usize;
    let deg = h.keys().map(|&(a, b)| a + b).max()? as usize;
    let mut coeffs = vec![Rat::zero(); deg + 1];
    for (&(_, b), c) in h {
        coeffs[b as usize] = c.clone();
    }
    let minus_one = -Rat::one();
    let gamma = oracle_multiplicity(&coeffs, &minus_one);
    let mut stripped = upoly_trim(coeffs);
    while !stripped.is_empty() && stripped[0].is_zero() {
        stripped.remove(0);
    }
    for _ in 0..gamma {
        stripped = upoly_divide_root(&stripped, &minus_one).unwrap();
    }
    let d0 = oracle_max_nonzero_real_mult_allow_zero_excluded(&stripped)?;
    Some((alpha, beta, gamma, d0))
}

fn oracle_max_nonzero_real_mult_allow_zero_excluded(u: &[Rat]) -> Option<usize> {
    oracle_max_nonzero_real_mult(u, &[])
}

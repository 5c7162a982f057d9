//! Newton polygon geometry: staircase hulls with exact rational vertices,
//! supporting-line values, face restrictions, the main face, and root
//! multiplicities of edge polynomials.
//!
//! The polygon of a nonzero polynomial is the convex hull of the union of
//! upper-right quadrants anchored at the exponent pairs of its nonzero
//! terms. Only the lower-left boundary is interesting: a chain of vertices
//! with strictly increasing first coordinate and strictly decreasing second
//! coordinate, joined by compact edges, plus a vertical and a horizontal
//! noncompact ray.

use crate::fracpoly::FracPoly;
use crate::rational::{is_integer, Rat};
use crate::unipoly::{
    has_real_root, isolate_real_roots, rational_roots_squarefree, SturmChain, UniPoly,
};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NewtonError {
    #[error("zero polynomial has no Newton polygon")]
    ZeroPolynomial,
    #[error("face does not belong to the polygon of this polynomial")]
    FaceNotOfPolygon,
    #[error("degenerate edge with equal endpoints")]
    DegenerateEdge,
    #[error("operation requires integer x-exponents")]
    FractionalExponent,
}

/// A compact edge of the polygon, endpoints in increasing-`p` order, with
/// its supporting-line value `m` (the negative reciprocal of the slope).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub left: (Rat, Rat),
    pub right: (Rat, Rat),
    pub m: Rat,
}

/// A face of the polygon: a vertex or a compact edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Face {
    Vertex((Rat, Rat)),
    Edge(Edge),
}

/// The face met by the bisecting line `p = q`. When the line only crosses a
/// noncompact ray there is no compact main face and the ray is reported.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MainFace {
    Vertex((Rat, Rat)),
    Edge(Edge),
    VerticalRay,
    HorizontalRay,
}

/// Lower-left staircase hull of the support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub vertices: Vec<(Rat, Rat)>,
    pub compact_edges: Vec<Edge>,
    pub has_vertical_ray: bool,
    pub has_horizontal_ray: bool,
}

/// `m = (p_r - p_l) / (q_l - q_r)`, exact; errors on a degenerate edge.
pub fn m_value(left: &(Rat, Rat), right: &(Rat, Rat)) -> Result<Rat, NewtonError> {
    if left == right {
        return Err(NewtonError::DegenerateEdge);
    }
    let dq = &left.1 - &right.1;
    if dq.is_zero() {
        return Err(NewtonError::DegenerateEdge);
    }
    Ok((&right.0 - &left.0) / dq)
}

/// Builds the polygon of a nonzero polynomial. Fractional exponents are
/// scaled by their common denominator to lattice points for the hull and
/// scaled back, so the geometry stays exact.
pub fn newton_polygon(poly: &FracPoly) -> Result<NewtonPolygon, NewtonError> {
    if poly.is_zero() {
        return Err(NewtonError::ZeroPolynomial);
    }
    let support = poly.support();
    // common denominator of all exponents
    let mut den = BigInt::from(1);
    for (ex, ey) in &support {
        den = den.lcm(ex.denom());
        den = den.lcm(ey.denom());
    }
    let scale = |r: &Rat| -> BigInt { r.numer() * (&den / r.denom()) };
    let mut pts: Vec<(BigInt, BigInt)> = support.iter().map(|(a, b)| (scale(a), scale(b))).collect();

    // staircase-minimal points: drop any point dominated by another
    pts.sort();
    pts.dedup();
    let minimal: Vec<(BigInt, BigInt)> = pts
        .iter()
        .filter(|(p, q)| {
            !pts.iter()
                .any(|(p2, q2)| (p2, q2) != (p, q) && p2 <= p && q2 <= q)
        })
        .cloned()
        .collect();

    // sorted by p ascending; q is then strictly descending
    let mut chain: Vec<(BigInt, BigInt)> = Vec::new();
    for pt in minimal {
        while chain.len() >= 2 {
            let a = &chain[chain.len() - 2];
            let b = &chain[chain.len() - 1];
            // keep b only if (a -> b -> pt) turns convex:
            // cross((b-a),(pt-b)) > 0
            let cross = (&b.0 - &a.0) * (&pt.1 - &b.1) - (&b.1 - &a.1) * (&pt.0 - &b.0);
            if cross <= BigInt::zero() {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(pt);
    }

    let unscale = |v: &BigInt| -> Rat { Rat::new(v.clone(), den.clone()) };
    let vertices: Vec<(Rat, Rat)> = chain
        .iter()
        .map(|(p, q)| (unscale(p), unscale(q)))
        .collect();
    let mut compact_edges = Vec::new();
    for w in vertices.windows(2) {
        let m = m_value(&w[0], &w[1])?;
        compact_edges.push(Edge {
            left: w[0].clone(),
            right: w[1].clone(),
            m,
        });
    }
    Ok(NewtonPolygon {
        vertices,
        compact_edges,
        has_vertical_ray: true,
        has_horizontal_ray: true,
    })
}

impl NewtonPolygon {
    /// Leftmost (highest) vertex.
    pub fn leftmost_vertex(&self) -> &(Rat, Rat) {
        &self.vertices[0]
    }

    /// The faces, vertices and edges interleaved left to right.
    pub fn faces(&self) -> Vec<Face> {
        let mut out = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            out.push(Face::Vertex(v.clone()));
            if i < self.compact_edges.len() {
                out.push(Face::Edge(self.compact_edges[i].clone()));
            }
        }
        out
    }

    /// Supporting-line window `(m_left, m_right)` of vertex `i`, where the
    /// left end is `0` for the leftmost vertex and the right end is `None`
    /// (infinity) for the rightmost.
    pub fn vertex_window(&self, i: usize) -> (Rat, Option<Rat>) {
        let left = if i == 0 {
            Rat::zero()
        } else {
            self.compact_edges[i - 1].m.clone()
        };
        let right = self.compact_edges.get(i).map(|e| e.m.clone());
        (left, right)
    }

    fn contains_vertex(&self, v: &(Rat, Rat)) -> bool {
        self.vertices.contains(v)
    }

    fn contains_edge(&self, e: &Edge) -> bool {
        self.compact_edges.contains(e)
    }
}

/// Sum of exactly the terms whose exponents lie on the face.
pub fn face_restriction(poly: &FracPoly, face: &Face) -> Result<FracPoly, NewtonError> {
    let polygon = newton_polygon(poly)?;
    match face {
        Face::Vertex(v) => {
            if !polygon.contains_vertex(v) {
                return Err(NewtonError::FaceNotOfPolygon);
            }
            Ok(FracPoly::monomial(
                poly.coeff_at(&v.0, &v.1),
                v.0.clone(),
                v.1.clone(),
            ))
        }
        Face::Edge(e) => {
            if !polygon.contains_edge(e) {
                return Err(NewtonError::FaceNotOfPolygon);
            }
            Ok(edge_terms(poly, e))
        }
    }
}

/// Terms on the supporting line of a compact edge, between its endpoints.
pub fn edge_terms(poly: &FracPoly, e: &Edge) -> FracPoly {
    // line through (p_l, q_l) with direction (dp, dq): a point (p, q) is on
    // it when (p - p_l) * dq == (q - q_l) * dp
    let dp = &e.right.0 - &e.left.0;
    let dq = &e.right.1 - &e.left.1;
    let mut out = FracPoly::zero();
    for t in poly.terms() {
        let on_line = (&t.ex - &e.left.0) * &dq == (&t.ey - &e.left.1) * &dp;
        let within = t.ex >= e.left.0 && t.ex <= e.right.0;
        if on_line && within {
            out = out.add(&FracPoly::monomial(t.coeff, t.ex, t.ey));
        }
    }
    out
}

/// The vertex on the bisecting line `p = q` if one exists, otherwise the
/// face (edge or noncompact ray) crossed by it.
pub fn main_face(polygon: &NewtonPolygon) -> MainFace {
    for v in &polygon.vertices {
        if v.0 == v.1 {
            return MainFace::Vertex(v.clone());
        }
    }
    for e in &polygon.compact_edges {
        // the diagonal crosses the open segment when p<q on the left end
        // and p>q on the right end
        if e.left.0 < e.left.1 && e.right.0 > e.right.1 {
            return MainFace::Edge(e.clone());
        }
    }
    // all vertices on one side of the diagonal
    let first = polygon.leftmost_vertex();
    if first.0 > first.1 {
        // polygon lies right of the diagonal; the vertical ray is crossed
        MainFace::VerticalRay
    } else {
        MainFace::HorizontalRay
    }
}

/// Exact roots and multiplicities of a univariate rational polynomial.
#[derive(Clone, Debug, PartialEq)]
pub enum RootValue {
    /// Exact rational root.
    Exact(Rat),
    /// Isolating interval `(a, b]` of a real root that is not rational (or
    /// not certified rational within the coefficient bound).
    Interval(Rat, Rat),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootEntry {
    pub value: RootValue,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootList {
    /// Nonzero real roots with multiplicities, sorted ascending.
    pub entries: Vec<RootEntry>,
    pub zero_root_multiplicity: usize,
    /// Degree carried by conjugate complex root pairs (with multiplicity).
    pub residual_degree: usize,
}

impl RootList {
    /// Largest multiplicity among the nonzero real roots; 0 when none.
    pub fn max_multiplicity(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).max().unwrap_or(0)
    }
}

/// Default isolating-interval width, `2^-64`, refinable on demand.
pub fn default_isolation_width() -> Rat {
    Rat::new(BigInt::from(1), BigInt::from(2).pow(64))
}

/// Squarefree-decomposition-based root analysis: rational roots exactly,
/// irrational real roots as isolating intervals, complex roots as a
/// residual degree. Multiplicities come from the gcd structure only.
pub fn roots_with_multiplicity(q: &UniPoly) -> RootList {
    roots_with_multiplicity_width(q, &default_isolation_width())
}

pub fn roots_with_multiplicity_width(q: &UniPoly, width: &Rat) -> RootList {
    assert!(!q.is_zero(), "root analysis of the zero polynomial");
    let zero_mult = q.order_at_zero();
    let stripped = q.shift_down(zero_mult);
    let mut entries: Vec<RootEntry> = Vec::new();
    let mut residual = 0usize;
    for (factor, mult) in stripped.squarefree_decomposition() {
        let deg = factor.degree().unwrap_or(0);
        let mut real_found = 0usize;
        let rational = rational_roots_squarefree(&factor);
        let mut known: Vec<Rat> = Vec::new();
        if let Some(roots) = &rational {
            for r in roots {
                if r.is_zero() {
                    continue; // zero was stripped above
                }
                entries.push(RootEntry {
                    value: RootValue::Exact(r.clone()),
                    multiplicity: mult,
                });
                known.push(r.clone());
                real_found += 1;
            }
        }
        // deflate certified rational roots, then isolate what remains
        let mut rest = factor.clone();
        for r in &known {
            rest = rest.div_exact(&crate::unipoly::linear_power(r, 1));
        }
        if has_real_root(&rest) {
            for (a, b) in isolate_real_roots(&rest, width) {
                if a <= Rat::zero() && b >= Rat::zero() && rest.eval(&Rat::zero()).is_zero() {
                    continue; // the zero root was stripped above
                }
                entries.push(RootEntry {
                    value: RootValue::Interval(a, b),
                    multiplicity: mult,
                });
                real_found += 1;
            }
        }
        residual += mult * (deg - real_found);
    }
    entries.sort_by(|a, b| root_key(a).partial_cmp(&root_key(b)).unwrap());
    RootList {
        entries,
        zero_root_multiplicity: zero_mult,
        residual_degree: residual,
    }
}

fn root_key(e: &RootEntry) -> f64 {
    match &e.value {
        RootValue::Exact(r) => crate::rational::rat_to_f64(r),
        RootValue::Interval(a, b) => {
            (crate::rational::rat_to_f64(a) + crate::rational::rat_to_f64(b)) / 2.0
        }
    }
}

/// Edge polynomial `P_E(sign·1, y)` reduced to a univariate polynomial in
/// `y` after dividing out the common monomial. Requires integer
/// y-exponents; for `sign = -1` the x-exponents must be integers as well.
pub fn edge_polynomial(poly: &FracPoly, e: &Edge, sign: i8) -> Result<UniPoly, NewtonError> {
    let restricted = edge_terms(poly, e);
    let qmin = e.right.1.clone(); // smallest y-exponent on the edge
    let qmax = e.left.1.clone();
    let deg = (&qmax - &qmin)
        .to_integer()
        .to_usize()
        .ok_or(NewtonError::FractionalExponent)?;
    let mut coeffs = vec![Rat::zero(); deg + 1];
    for t in restricted.terms() {
        let k = (&t.ey - &qmin)
            .to_integer()
            .to_usize()
            .ok_or(NewtonError::FractionalExponent)?;
        let c = if sign >= 0 {
            t.coeff
        } else {
            if !is_integer(&t.ex) {
                return Err(NewtonError::FractionalExponent);
            }
            if t.ex.to_integer().is_odd() {
                -t.coeff
            } else {
                t.coeff
            }
        };
        coeffs[k] = c;
    }
    Ok(UniPoly::new(coeffs))
}

/// Vanishing order of a compact edge: the maximal multiplicity among
/// nonzero REAL roots of the edge polynomial over the two half-planes
/// (`x = 1` and `x = -1`); 0 when neither has a nonzero real root.
pub fn edge_vanishing_order(poly: &FracPoly, e: &Edge) -> Result<usize, NewtonError> {
    let polygon = newton_polygon(poly)?;
    if !polygon.contains_edge(e) {
        return Err(NewtonError::FaceNotOfPolygon);
    }
    let mut best = 0usize;
    for sign in [1i8, -1] {
        let u = edge_polynomial(poly, e, sign)?;
        best = best.max(max_real_root_multiplicity(&u, true));
    }
    Ok(best)
}

/// Complex-counting variant kept for diagnostics: maximal multiplicity over
/// all nonzero roots, real or not.
pub fn edge_vanishing_order_complex(poly: &FracPoly, e: &Edge) -> Result<usize, NewtonError> {
    let polygon = newton_polygon(poly)?;
    if !polygon.contains_edge(e) {
        return Err(NewtonError::FaceNotOfPolygon);
    }
    let mut best = 0usize;
    for sign in [1i8, -1] {
        let u = edge_polynomial(poly, e, sign)?;
        let stripped = u.shift_down(u.order_at_zero());
        for (factor, mult) in stripped.squarefree_decomposition() {
            if factor.degree().unwrap_or(0) > 0 {
                best = best.max(mult);
            }
        }
    }
    Ok(best)
}

/// Maximal multiplicity of real roots of `u`, optionally restricted to
/// nonzero roots.
pub fn max_real_root_multiplicity(u: &UniPoly, nonzero_only: bool) -> usize {
    if u.is_zero() {
        return 0;
    }
    let base = if nonzero_only {
        u.shift_down(u.order_at_zero())
    } else {
        u.clone()
    };
    let mut best = 0usize;
    for (factor, mult) in base.squarefree_decomposition() {
        if mult <= best {
            continue;
        }
        let probe = if nonzero_only {
            factor.shift_down(factor.order_at_zero())
        } else {
            factor
        };
        if has_real_root(&probe) {
            best = mult;
        }
    }
    best
}

/// Number of distinct real roots of an arbitrary polynomial (via its
/// squarefree part).
pub fn count_distinct_real_roots(u: &UniPoly) -> usize {
    let sf = u.squarefree_part();
    match sf.degree() {
        None | Some(0) => 0,
        _ => SturmChain::new(&sf).count_real_roots(),
    }
}

//! Resolution of singularities for bivariate (fractional-power) polynomials
//! on a punctured half-neighborhood `(0, eps) x (-eps, eps)`.
//!
//! The decomposition follows the Newton polygon of the current polynomial.
//! Scales `|y| ~ x^m` between two edge values are dominated by the vertex
//! separating them; scales at an edge value are dominated by the edge
//! polynomial away from its nonzero real roots; a neighborhood of each root
//! is a bad region that is carried to the next stage by the substitution
//! `y = x^m (r + y')`. Every leaf is either good, with a monomial
//! certificate `(p_k, q_k)` in its local coordinates, or truncated with a
//! recorded reason (depth cap, stabilized fractional-power tail, or a
//! non-rational branch root, which exact recursion cannot follow).
//!
//! Neighborhood sizes are constructive rather than existential: band
//! constants come from Cauchy-type root bounds, root neighborhoods from
//! exact separation, and the global `eps` is halved until every good leaf
//! dominates its tail by a configured margin on a boundary grid.

mod check;

pub use check::{
    box_cover, chain_to_original, coverage_check, derivative_bound_check, monomial_check,
    monomial_check_at, verify_chain_identities, BoxSpec, CoverageStats, IdentityReport,
    RatioStats,
};

use crate::fracpoly::{pow_f64, FracPoly, PolyError};
use crate::newton::{edge_polynomial, newton_polygon, Edge, NewtonError, NewtonPolygon};
use crate::rational::{dyadic_floor_pow2, rat, rat_to_f64, Rat};
use crate::unipoly::{
    as_pure_linear_power, isolate_real_roots, rational_roots_squarefree, refine_interval, UniPoly,
};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Consecutive pure-power single-edge stages after which a branch is
/// declared a stabilized fractional-power tail and truncated (unless a
/// one-step lookahead shows the branch terminating right away). Two stages
/// keep the certificate constants of the kept prefix bounded; the tail
/// coefficients grow without bound beyond that.
const STABILIZATION_PURE_STAGES: usize = 2;

/// Cap on halvings of `eps` (and on band-constant adjustments) in the
/// margin loop.
const MAX_MARGIN_ITERS: usize = 40;

#[derive(Debug, thiserror::Error)]
pub enum ResolveError {
    #[error("zero polynomial cannot be resolved")]
    ZeroPolynomial,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Newton(#[from] NewtonError),
}

#[derive(Clone, Debug)]
pub struct ResolveOptions {
    pub max_depth: usize,
    pub epsilon0: Rat,
    pub margin: Rat,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        ResolveOptions {
            max_depth: 24,
            epsilon0: rat(1, 16),
            margin: rat(2, 1),
        }
    }
}

/// Which half-plane the tree covers; the west tree is built from
/// `P(-x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfPlane {
    East,
    West,
}

/// One substitution step `y_j = x^{m} (r + y_{j+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainStep {
    pub m: Rat,
    pub r: Rat,
}

/// A good region defined by a polygon vertex: the window of supporting-line
/// values strictly between the adjacent edges.
#[derive(Clone, Debug)]
pub struct VertexRegion {
    pub vertex: (Rat, Rat),
    /// Index into the owning triple's `bands` of the edge on the left
    /// (smaller `m`), if any.
    pub left_band: Option<usize>,
    /// Index of the edge on the right (larger `m`), if any.
    pub right_band: Option<usize>,
}

/// What happens inside a root neighborhood of an edge.
#[derive(Debug)]
pub enum ZoneAction {
    /// Recursion into the next stage.
    Branch(Box<TripleNode>),
    /// Honest dead end: the exact tree does not certify this neighborhood.
    Cut { reason: String },
}

/// Neighborhood `|r - center| < rho` of a real root of the edge polynomial.
#[derive(Debug)]
pub struct Zone {
    pub center: Rat,
    pub rho: Rat,
    pub mult: usize,
    pub action: ZoneAction,
}

/// The dyadic band `lo * x^m <= |y| <= hi * x^m` of one compact edge,
/// good outside its zones.
#[derive(Debug)]
pub struct EdgeBand {
    pub edge: Edge,
    pub m: Rat,
    /// Edge polynomial at `x = 1`, divided by the common monomial.
    pub upoly: UniPoly,
    pub lo: Rat,
    pub hi: Rat,
    pub zones: Vec<Zone>,
}

/// One stage of the iteration: a polynomial in local coordinates together
/// with the regions its polygon defines.
#[derive(Debug)]
pub struct TripleNode {
    pub depth: usize,
    pub poly: FracPoly,
    pub chain: Vec<ChainStep>,
    pub polygon: NewtonPolygon,
    pub vertex_regions: Vec<VertexRegion>,
    pub bands: Vec<EdgeBand>,
}

/// Finished decomposition of one half-plane.
#[derive(Debug)]
pub struct ResolutionTree {
    pub half_plane: HalfPlane,
    /// Global neighborhood size: all region guarantees hold for
    /// `0 < x < epsilon`.
    pub epsilon: Rat,
    /// Whether the margin loop converged within its iteration cap.
    pub margin_achieved: bool,
    pub margin: Rat,
    pub root: TripleNode,
}

/// Identifies a good leaf inside the tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafRef {
    /// `(band index, zone index)` pairs from the root triple down to the
    /// triple owning the leaf.
    pub path: Vec<(usize, usize)>,
    pub kind: LeafKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LeafKind {
    Vertex(usize),
    Edge(usize),
}

impl TripleNode {
    fn build(
        poly: FracPoly,
        chain: Vec<ChainStep>,
        depth: usize,
        max_depth: usize,
        pure_run: usize,
    ) -> Result<TripleNode, ResolveError> {
        let polygon = newton_polygon(&poly)?;
        let nvert = polygon.vertices.len();
        let nedge = polygon.compact_edges.len();

        // stabilization bookkeeping: a single compact edge whose edge
        // polynomial is a pure linear power
        let pure_here = if nedge == 1 {
            let u = edge_polynomial(&poly, &polygon.compact_edges[0], 1)?;
            as_pure_linear_power(&u).map(|(_, r)| (u.degree().unwrap(), r))
        } else {
            None
        };

        let mut vertex_regions = Vec::with_capacity(nvert);
        for (i, v) in polygon.vertices.iter().enumerate() {
            vertex_regions.push(VertexRegion {
                vertex: v.clone(),
                left_band: if i == 0 { None } else { Some(i - 1) },
                right_band: if i < nedge { Some(i) } else { None },
            });
        }

        let mut bands = Vec::with_capacity(nedge);
        for e in &polygon.compact_edges {
            let u = edge_polynomial(&poly, e, 1)?;
            let (lo, hi) = band_bounds(&u);
            let roots = real_roots_of(&u);
            let rho = zone_radius(&lo, &hi, &roots);
            let mut zones = Vec::new();
            // a truncated zone needs no room for children, so it is kept
            // narrow to shrink the uncertified area
            let rho_cut = &rho / rat(4, 1);
            for root in roots {
                match root {
                    RealRoot::Rational(r, mult) => {
                        // consecutive pure-power stages followed along this
                        // branch, including the current one
                        let run = match &pure_here {
                            Some((s, pr)) if *s == mult && *pr == r => pure_run + 1,
                            _ => 0,
                        };
                        if depth + 1 > max_depth {
                            zones.push(Zone {
                                center: r,
                                rho: rho_cut.clone(),
                                mult,
                                action: ZoneAction::Cut {
                                    reason: format!("max depth {} exceeded", max_depth),
                                },
                            });
                            continue;
                        }
                        let child_poly = poly.substitute_branch(&r, &e.m)?;
                        if run >= STABILIZATION_PURE_STAGES && !terminates_at_once(&child_poly)? {
                            zones.push(Zone {
                                center: r,
                                rho: rho_cut.clone(),
                                mult,
                                action: ZoneAction::Cut {
                                    reason: format!(
                                        "stabilized: pure-power edge persisted for {} stages; \
                                         fractional-power tail truncated at depth {}",
                                        run, depth
                                    ),
                                },
                            });
                            continue;
                        }
                        let mut child_chain = chain.clone();
                        child_chain.push(ChainStep {
                            m: e.m.clone(),
                            r: r.clone(),
                        });
                        let child = TripleNode::build(
                            child_poly,
                            child_chain,
                            depth + 1,
                            max_depth,
                            run,
                        )?;
                        zones.push(Zone {
                            center: r,
                            rho: rho.clone(),
                            mult,
                            action: ZoneAction::Branch(Box::new(child)),
                        });
                    }
                    RealRoot::Irrational(a, b, mult) => {
                        let mid = (&a + &b) / rat(2, 1);
                        zones.push(Zone {
                            center: mid,
                            rho: rho_cut.clone(),
                            mult,
                            action: ZoneAction::Cut {
                                reason: format!(
                                    "irrational root in ({}, {}]: exact recursion requires \
                                     rational substitution data",
                                    a, b
                                ),
                            },
                        });
                    }
                }
            }
            zones.sort_by(|z1, z2| z1.center.cmp(&z2.center));
            bands.push(EdgeBand {
                edge: e.clone(),
                m: e.m.clone(),
                upoly: u,
                lo,
                hi,
                zones,
            });
        }

        Ok(TripleNode {
            depth,
            poly,
            chain,
            polygon,
            vertex_regions,
            bands,
        })
    }

    pub(crate) fn triple_at(&self, path: &[(usize, usize)]) -> &TripleNode {
        let mut cur = self;
        for &(b, z) in path {
            match &cur.bands[b].zones[z].action {
                ZoneAction::Branch(child) => cur = child,
                ZoneAction::Cut { .. } => panic!("path passes through a truncated zone"),
            }
        }
        cur
    }

    fn triple_at_mut(&mut self, path: &[(usize, usize)]) -> &mut TripleNode {
        let mut cur = self;
        for &(b, z) in path {
            match &mut cur.bands[b].zones[z].action {
                ZoneAction::Branch(child) => cur = child,
                ZoneAction::Cut { .. } => panic!("path passes through a truncated zone"),
            }
        }
        cur
    }

    fn collect_leaves(&self, path: &mut Vec<(usize, usize)>, out: &mut Vec<LeafRef>) {
        for (i, _) in self.vertex_regions.iter().enumerate() {
            out.push(LeafRef {
                path: path.clone(),
                kind: LeafKind::Vertex(i),
            });
        }
        for (bi, band) in self.bands.iter().enumerate() {
            out.push(LeafRef {
                path: path.clone(),
                kind: LeafKind::Edge(bi),
            });
            for (zi, zone) in band.zones.iter().enumerate() {
                if let ZoneAction::Branch(child) = &zone.action {
                    path.push((bi, zi));
                    child.collect_leaves(path, out);
                    path.pop();
                }
            }
        }
    }

    fn has_truncated(&self) -> bool {
        self.bands.iter().any(|b| {
            b.zones.iter().any(|z| match &z.action {
                ZoneAction::Cut { .. } => true,
                ZoneAction::Branch(child) => child.has_truncated(),
            })
        })
    }
}

/// One-step lookahead at a stabilization candidate: true when the branch
/// polynomial needs no further recursion (no edge has a nonzero real root),
/// in which case the branch genuinely terminates and is not a tail.
fn terminates_at_once(poly: &FracPoly) -> Result<bool, ResolveError> {
    let polygon = newton_polygon(poly)?;
    for e in &polygon.compact_edges {
        let u = edge_polynomial(poly, e, 1)?;
        let stripped = u.shift_down(u.order_at_zero());
        if stripped.degree().map_or(false, |d| d > 0)
            && crate::unipoly::has_real_root(&stripped.squarefree_part())
        {
            return Ok(false);
        }
    }
    Ok(true)
}

enum RealRoot {
    Rational(Rat, usize),
    Irrational(Rat, Rat, usize),
}

/// All nonzero real roots of the (already monomial-stripped) edge
/// polynomial, with exact multiplicities from the squarefree structure.
fn real_roots_of(u: &UniPoly) -> Vec<RealRoot> {
    let mut out = Vec::new();
    let stripped = u.shift_down(u.order_at_zero());
    for (factor, mult) in stripped.squarefree_decomposition() {
        let mut rest = factor.clone();
        if let Some(roots) = rational_roots_squarefree(&factor) {
            for r in roots {
                if r.is_zero() {
                    continue;
                }
                rest = rest.div_exact(&crate::unipoly::linear_power(&r, 1));
                out.push(RealRoot::Rational(r, mult));
            }
        }
        if crate::unipoly::has_real_root(&rest) {
            let width = rat(1, 1 << 20);
            for (mut a, mut b) in isolate_real_roots(&rest, &width) {
                // the root is nonzero, so a small enough interval excludes 0
                let mut target = &b - &a;
                for _ in 0..200 {
                    if a.is_positive() || b.is_negative() {
                        break;
                    }
                    target = target / rat(4, 1);
                    let refined = refine_interval(&rest, (a, b), &target);
                    a = refined.0;
                    b = refined.1;
                }
                out.push(RealRoot::Irrational(a, b, mult));
            }
        }
    }
    out
}

fn root_bounds(root: &RealRoot) -> (Rat, Rat) {
    match root {
        RealRoot::Rational(r, _) => (r.clone(), r.clone()),
        RealRoot::Irrational(a, b, _) => (a.clone(), b.clone()),
    }
}

/// Band constants of an edge polynomial `u(y) = sum a_k y^k` (with
/// `a_0 != 0`): the largest dyadic-ish `lo` where the constant term
/// dominates the rest by a factor 5/2, and the smallest `hi` where the
/// leading term does. All roots of `u`, real or complex, have magnitude
/// strictly between the two, and the 5/2 headroom is what lets the
/// adjacent vertex windows meet the default dominance margin.
fn band_bounds(u: &UniPoly) -> (Rat, Rat) {
    let coeffs = u.coeffs();
    let s = coeffs.len() - 1;
    let a0 = coeffs[0].abs();
    let lead = coeffs[s].abs();
    let tail_low = |t: &Rat| -> bool {
        // sum_{k>=1} |a_k| t^k <= (2/5) |a_0|
        let mut acc = Rat::zero();
        let mut tp = Rat::one();
        for c in &coeffs[1..] {
            tp *= t;
            acc += c.abs() * &tp;
        }
        acc * rat(5, 2) <= a0
    };
    let head_high = |t: &Rat| -> bool {
        // |a_s| t^s >= (5/2) sum_{k<s} |a_k| t^k
        let mut acc = Rat::zero();
        let mut tp = Rat::one();
        for c in &coeffs[..s] {
            acc += c.abs() * &tp;
            tp *= t;
        }
        &lead * tp >= acc * rat(5, 2)
    };
    let mut lo = Rat::one();
    for _ in 0..400 {
        if tail_low(&lo) {
            break;
        }
        lo /= rat(2, 1);
    }
    let finer = &lo * rat(3, 2);
    if tail_low(&finer) {
        lo = finer;
    }
    let mut hi = Rat::one();
    for _ in 0..400 {
        if head_high(&hi) {
            break;
        }
        hi *= rat(2, 1);
    }
    let finer = &hi * rat(3, 4);
    if finer > lo && head_high(&finer) {
        hi = finer;
    }
    (lo, hi)
}

/// Root-neighborhood half-width: small enough that zones around distinct
/// roots are disjoint and stay strictly inside the band `[lo, hi]`.
fn zone_radius(lo: &Rat, hi: &Rat, roots: &[RealRoot]) -> Rat {
    let mut rho = rat(1, 2);
    let mut spans: Vec<(Rat, Rat)> = roots.iter().map(root_bounds).collect();
    spans.sort();
    for w in spans.windows(2) {
        let gap = &w[1].0 - &w[0].1;
        if gap.is_positive() {
            let half = gap / rat(2, 1);
            if half < rho {
                rho = half;
            }
        }
    }
    for (a, b) in &spans {
        let mag = a.abs().min(b.abs());
        // keep the zone inside the band on both sides
        for cap in [&mag - lo, hi - &mag] {
            if cap.is_positive() && cap < rho {
                rho = cap;
            }
        }
    }
    rho
}

/// Decomposes the east half-plane of `poly` (or the west one by the
/// substitution `x -> -x`).
pub fn resolve_half(
    poly: &FracPoly,
    opts: &ResolveOptions,
    half: HalfPlane,
) -> Result<ResolutionTree, ResolveError> {
    if poly.is_zero() {
        return Err(ResolveError::ZeroPolynomial);
    }
    assert!(opts.max_depth >= 1, "max_depth must be at least 1");
    let p = match half {
        HalfPlane::East => poly.clone(),
        HalfPlane::West => poly.flip_x()?,
    };
    let root = TripleNode::build(p, Vec::new(), 0, opts.max_depth, 0)?;
    let mut tree = ResolutionTree {
        half_plane: half,
        epsilon: dyadic_floor_pow2(rat_to_f64(&opts.epsilon0).min(1.0)),
        margin_achieved: false,
        margin: opts.margin.clone(),
        root,
    };
    tree.shrink_for_band_separation();
    tree.margin_achieved = tree.run_margin_loop();
    Ok(tree)
}

/// Default entry point: the east half-plane.
pub fn resolve(poly: &FracPoly, opts: &ResolveOptions) -> Result<ResolutionTree, ResolveError> {
    resolve_half(poly, opts, HalfPlane::East)
}

impl ResolutionTree {
    pub fn good_leaves(&self) -> Vec<LeafRef> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut Vec::new(), &mut out);
        out
    }

    pub fn has_truncated_leaves(&self) -> bool {
        self.root.has_truncated()
    }

    /// Chain of substitutions from the original coordinates down to the
    /// triple owning the leaf.
    pub fn chain_of(&self, leaf: &LeafRef) -> Vec<ChainStep> {
        self.root.triple_at(&leaf.path).chain.clone()
    }

    /// Local `|y_k|` bound of the triple at `path`: the zone radius of the
    /// inbound bad region, or `epsilon` at the root.
    pub fn ybound_at(&self, path: &[(usize, usize)]) -> Rat {
        if path.is_empty() {
            return self.epsilon.clone();
        }
        let parent = self.root.triple_at(&path[..path.len() - 1]);
        let (b, z) = path[path.len() - 1];
        parent.bands[b].zones[z].rho.clone()
    }

    /// Certificate vertex `(p_k, q_k)` of a good leaf.
    pub fn certificate_vertex(&self, leaf: &LeafRef) -> (Rat, Rat) {
        let triple = self.root.triple_at(&leaf.path);
        match leaf.kind {
            LeafKind::Vertex(i) => triple.vertex_regions[i].vertex.clone(),
            LeafKind::Edge(b) => triple.bands[b].edge.left.clone(),
        }
    }

    /// Enforces, exactly, that adjacent bands stay separated for all
    /// `0 < x < epsilon`: `hi_{j+1} x^{m_{j+1}} <= (lo_j / 2) x^{m_j}`.
    fn shrink_for_band_separation(&mut self) {
        for _ in 0..200 {
            if self.band_separation_ok(&self.root, &self.epsilon) {
                return;
            }
            self.epsilon = &self.epsilon / rat(2, 1);
        }
    }

    fn band_separation_ok(&self, triple: &TripleNode, eps: &Rat) -> bool {
        for w in triple.bands.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            // need hi_b * eps^(m_b) <= lo_a/2 * eps^(m_a), i.e.
            // 2 hi_b / lo_a <= (1/eps)^(m_b - m_a); compare by clearing
            // the rational exponent
            let d = &b.m - &a.m;
            let num = d.numer().to_u32().unwrap_or(u32::MAX);
            let den = d.denom().to_u32().unwrap_or(u32::MAX);
            if num == u32::MAX || den == u32::MAX {
                return false;
            }
            let lhs = crate::rational::pow_rat(&(rat(2, 1) * &b.hi / &a.lo), den);
            let rhs = crate::rational::pow_rat(&(Rat::one() / eps), num);
            if lhs > rhs {
                return false;
            }
        }
        for band in &triple.bands {
            for zone in &band.zones {
                if let ZoneAction::Branch(child) = &zone.action {
                    if !self.band_separation_ok(child, eps) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Halves `eps` (or a zone radius, or widens a band) until the dominant
    /// face of every good leaf exceeds the magnitude sum of its tail by the
    /// configured margin on a boundary grid. Returns convergence.
    fn run_margin_loop(&mut self) -> bool {
        for _ in 0..MAX_MARGIN_ITERS {
            let adjustments = self.margin_violations();
            if adjustments.is_empty() {
                return true;
            }
            let mut shrank_eps = false;
            for adj in adjustments {
                match adj {
                    Adjustment::HalveEps => {
                        if !shrank_eps {
                            self.epsilon = &self.epsilon / rat(2, 1);
                            shrank_eps = true;
                        }
                    }
                    Adjustment::HalveRho { path } => {
                        let (prefix, last) = path.split_at(path.len() - 1);
                        let triple = self.root.triple_at_mut(prefix);
                        let (b, z) = last[0];
                        let rho = &triple.bands[b].zones[z].rho;
                        triple.bands[b].zones[z].rho = rho * rat(3, 4);
                    }
                }
            }
            self.shrink_for_band_separation();
        }
        false
    }

    fn margin_violations(&self) -> Vec<Adjustment> {
        let mut out = Vec::new();
        let margin = rat_to_f64(&self.margin);
        let eps = rat_to_f64(&self.epsilon);
        for leaf in self.good_leaves() {
            let triple = self.root.triple_at(&leaf.path);
            let ybound = rat_to_f64(&self.ybound_at(&leaf.path));
            match leaf.kind {
                LeafKind::Vertex(i) => {
                    let region = &triple.vertex_regions[i];
                    let (p, q) = (&region.vertex.0, &region.vertex.1);
                    let face = FracPoly::monomial(
                        triple.poly.coeff_at(p, q),
                        p.clone(),
                        q.clone(),
                    );
                    let tail = triple.poly.sub(&face);
                    if tail.is_zero() {
                        continue;
                    }
                    for x in [eps * 0.9375, eps * 0.5] {
                        let upper = match region.left_band {
                            None => ybound * 0.875,
                            Some(b) => {
                                let band = &triple.bands[b];
                                rat_to_f64(&band.lo) * pow_f64(x, &band.m) * 0.9375
                            }
                        };
                        let lower = match region.right_band {
                            None => upper * 2f64.powi(-10),
                            Some(b) => {
                                let band = &triple.bands[b];
                                rat_to_f64(&band.hi) * pow_f64(x, &band.m) * 1.0625
                            }
                        };
                        if !(lower < upper) {
                            continue; // window empty at this x; nothing to test
                        }
                        for mag in [upper, (lower * upper).sqrt(), lower] {
                            for sign in [1.0, -1.0] {
                                let y = sign * mag;
                                let f = face.eval_f64_fast(x, y).abs();
                                let t = tail.term_magnitude_sum(x, y);
                                if f < margin * t {
                                    out.push(self.attribute_vertex_failure(
                                        &leaf, region, mag >= upper * 0.999,
                                    ));
                                }
                            }
                        }
                    }
                }
                LeafKind::Edge(b) => {
                    let band = &triple.bands[b];
                    let face = crate::newton::edge_terms(&triple.poly, &band.edge);
                    let tail = triple.poly.sub(&face);
                    if tail.is_zero() {
                        continue;
                    }
                    let mut rs: Vec<f64> = Vec::new();
                    let (lo, hi) = (rat_to_f64(&band.lo), rat_to_f64(&band.hi));
                    for base in [lo, (lo * hi).sqrt(), hi] {
                        rs.push(base);
                        rs.push(-base);
                    }
                    for zone in &band.zones {
                        let c = rat_to_f64(&zone.center);
                        let rho = rat_to_f64(&zone.rho);
                        rs.push(c - rho);
                        rs.push(c + rho);
                    }
                    for x in [eps * 0.9375, eps * 0.5] {
                        let scale = pow_f64(x, &band.m);
                        for &r in &rs {
                            if r.abs() < lo || r.abs() > hi {
                                continue;
                            }
                            if band.zones.iter().any(|z| {
                                (r - rat_to_f64(&z.center)).abs() < rat_to_f64(&z.rho) * 0.999
                            }) {
                                continue;
                            }
                            let y = r * scale;
                            let f = face.eval_f64_fast(x, y).abs();
                            let t = tail.term_magnitude_sum(x, y);
                            if f < margin * t {
                                out.push(Adjustment::HalveEps);
                            }
                        }
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn attribute_vertex_failure(
        &self,
        leaf: &LeafRef,
        region: &VertexRegion,
        at_upper: bool,
    ) -> Adjustment {
        // Failures at the ybound boundary of a top window are fixed by
        // shrinking the inbound root neighborhood; all other failures are
        // x-scale effects fixed by shrinking eps.
        if at_upper && region.left_band.is_none() && !leaf.path.is_empty() {
            Adjustment::HalveRho {
                path: leaf.path.clone(),
            }
        } else {
            Adjustment::HalveEps
        }
    }

    /// Serializes the tree in the documented JSON schema: nodes carry
    /// `kind`, `depth`, `vertex`, `m_window`, `chain`, `rho`, `children`,
    /// with exact fractions as `"a/b"` strings and `"inf"` for an unbounded
    /// window end.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        json!({
            "half_plane": self.half_plane,
            "epsilon": crate::rational::rat_string(&self.epsilon),
            "margin_achieved": self.margin_achieved,
            "regions": triple_regions_json(&self.root),
        })
    }
}

fn chain_json(chain: &[ChainStep]) -> serde_json::Value {
    serde_json::Value::Array(
        chain
            .iter()
            .map(|s| {
                serde_json::json!({
                    "m": crate::rational::rat_string(&s.m),
                    "r": crate::rational::rat_string(&s.r),
                })
            })
            .collect(),
    )
}

fn triple_regions_json(triple: &TripleNode) -> Vec<serde_json::Value> {
    use serde_json::json;
    let rs = crate::rational::rat_string;
    let mut out = Vec::new();
    for region in &triple.vertex_regions {
        let m_left = match region.left_band {
            None => "0".to_string(),
            Some(b) => rs(&triple.bands[b].m),
        };
        let m_right = match region.right_band {
            None => "inf".to_string(),
            Some(b) => rs(&triple.bands[b].m),
        };
        out.push(json!({
            "kind": "GoodVertex",
            "depth": triple.depth,
            "vertex": [rs(&region.vertex.0), rs(&region.vertex.1)],
            "m_window": [m_left, m_right],
            "chain": chain_json(&triple.chain),
        }));
    }
    for band in &triple.bands {
        out.push(json!({
            "kind": "GoodEdge",
            "depth": triple.depth,
            "vertex": [rs(&band.edge.left.0), rs(&band.edge.left.1)],
            "m_window": [rs(&band.m), rs(&band.m)],
            "chain": chain_json(&triple.chain),
            "band": [rs(&band.lo), rs(&band.hi)],
        }));
        for zone in &band.zones {
            match &zone.action {
                ZoneAction::Branch(child) => out.push(json!({
                    "kind": "Bad",
                    "depth": triple.depth,
                    "m_window": [rs(&band.m), rs(&band.m)],
                    "root": rs(&zone.center),
                    "multiplicity": zone.mult,
                    "rho": rs(&zone.rho),
                    "chain": chain_json(&triple.chain),
                    "children": triple_regions_json(child),
                })),
                ZoneAction::Cut { reason } => out.push(json!({
                    "kind": "Truncated",
                    "depth": triple.depth,
                    "m_window": [rs(&band.m), rs(&band.m)],
                    "root": rs(&zone.center),
                    "multiplicity": zone.mult,
                    "rho": rs(&zone.rho),
                    "chain": chain_json(&triple.chain),
                    "reason": reason,
                })),
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Adjustment {
    HalveEps,
    HalveRho { path: Vec<(usize, usize)> },
}

/// Window bounds of a good leaf at a given `x`: returns `(lower, upper)`
/// for `|y_k|`, where `upper` may come from the local ybound.
pub(crate) fn leaf_window(
    tree: &ResolutionTree,
    leaf: &LeafRef,
    x: f64,
) -> (f64, f64) {
    let triple = tree.root.triple_at(&leaf.path);
    match leaf.kind {
        LeafKind::Vertex(i) => {
            let region = &triple.vertex_regions[i];
            let upper = match region.left_band {
                None => rat_to_f64(&tree.ybound_at(&leaf.path)),
                Some(b) => {
                    let band = &triple.bands[b];
                    rat_to_f64(&band.lo) * pow_f64(x, &band.m)
                }
            };
            let lower = match region.right_band {
                None => 0.0,
                Some(b) => {
                    let band = &triple.bands[b];
                    rat_to_f64(&band.hi) * pow_f64(x, &band.m)
                }
            };
            (lower, upper)
        }
        LeafKind::Edge(b) => {
            let band = &triple.bands[b];
            let scale = pow_f64(x, &band.m);
            (rat_to_f64(&band.lo) * scale, rat_to_f64(&band.hi) * scale)
        }
    }
}

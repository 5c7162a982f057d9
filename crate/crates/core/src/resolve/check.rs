//! Verification companions to the resolution tree: the exact bookkeeping
//! identities along branches, sampled monomial-comparability statistics on
//! good leaves, Monte Carlo coverage/disjointness of the region partition,
//! and the dyadic box covers of good regions.

use super::{
    leaf_window, ChainStep, LeafKind, LeafRef, ResolutionTree, TripleNode, ZoneAction,
};
use crate::dd::Dd;
use crate::fracpoly::{pow_f64, FracPoly};
use crate::rational::{rat, rat_string, rat_to_f64, Rat};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("epsilon {0} exceeds the tree neighborhood {1}")]
    EpsilonTooLarge(String, String),
    #[error("empty region: window infeasible at the chosen epsilon")]
    EmptyRegion,
    #[error("sample ({0}, {1}) lies outside the leaf window")]
    OutsideWindow(f64, f64),
    #[error("sigma must be a power of two not exceeding the tree epsilon")]
    SigmaOutOfRange,
    #[error("rho outside the leaf's admissible dyadic range")]
    RhoOutOfRange,
    #[error("box dimensions are not rational for this sigma (exponent {0} times {1} is not an integer)")]
    NotRepresentable(String, String),
    #[error("subdivision constant K must be at least 1")]
    BadSubdivision,
    #[error(transparent)]
    Poly(#[from] crate::fracpoly::PolyError),
}

// ---------------------------------------------------------------------------
// Chain identities
// ---------------------------------------------------------------------------

/// Outcome of the exact bookkeeping checks; any entry in `violations`
/// is a test failure.
#[derive(Debug, Default)]
pub struct IdentityReport {
    pub checks: usize,
    pub violations: Vec<String>,
}

impl IdentityReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

struct BranchCtx {
    /// `p_0 + m_0 q_0` of the first step on this branch.
    base: Rat,
    /// Multiplicity of the first root.
    s0: Rat,
    /// `m_1 + ... + m_{k-1}` accumulated so far.
    msum: Rat,
}

/// Replays every substitution and checks, in exact arithmetic:
/// the child polynomial equals the parent polynomial composed with the
/// branch substitution; the child polygon's leftmost vertex is
/// `(p_j + q_j m_j, s_j)`; `s_j <= q_j`; the supporting-line comparison
/// with the parent's leftmost vertex; and at every good leaf of depth
/// `k >= 1` the inequality
/// `p_k + m_k q_k <= p_{k,l} + m_k q_{k,l} <= p_0 + m_0 q_0 + s_0 (m_1 + ... + m_k)`.
pub fn verify_chain_identities(tree: &ResolutionTree) -> IdentityReport {
    let mut report = IdentityReport::default();
    walk_triple(&tree.root, None, &mut report, &mut Vec::new());
    report
}

fn walk_triple(
    triple: &TripleNode,
    ctx: Option<&BranchCtx>,
    report: &mut IdentityReport,
    path: &mut Vec<(usize, usize)>,
) {
    // leaf-level supporting-line inequality
    if let Some(ctx) = ctx {
        let leftmost = triple.polygon.leftmost_vertex().clone();
        let mut leaf_supports: Vec<((Rat, Rat), Rat)> = Vec::new();
        for region in &triple.vertex_regions {
            let m = match region.left_band {
                None => Rat::zero(),
                Some(b) => triple.bands[b].m.clone(),
            };
            leaf_supports.push((region.vertex.clone(), m));
        }
        for band in &triple.bands {
            leaf_supports.push((band.edge.left.clone(), band.m.clone()));
        }
        for ((p, q), m) in leaf_supports {
            report.checks += 2;
            let lhs = &p + &m * &q;
            let mid = &leftmost.0 + &m * &leftmost.1;
            let rhs = &ctx.base + &ctx.s0 * (&ctx.msum + &m);
            if lhs > mid {
                report.violations.push(format!(
                    "path {:?}: vertex ({}, {}) lies below the supporting line of the \
                     leftmost vertex at m = {}",
                    path,
                    rat_string(&p),
                    rat_string(&q),
                    rat_string(&m),
                ));
            }
            if mid > rhs {
                report.violations.push(format!(
                    "path {:?}: supporting value {} at m = {} exceeds the branch bound {}",
                    path,
                    rat_string(&mid),
                    rat_string(&m),
                    rat_string(&rhs),
                ));
            }
        }
    }

    for (bi, band) in triple.bands.iter().enumerate() {
        let (p_j, q_j) = (band.edge.left.0.clone(), band.edge.left.1.clone());
        for (zi, zone) in band.zones.iter().enumerate() {
            let ZoneAction::Branch(child) = &zone.action else {
                continue;
            };
            path.push((bi, zi));
            let s_j = Rat::from_integer(BigInt::from(zone.mult));

            // replay the substitution
            report.checks += 1;
            match triple.poly.substitute_branch(&zone.center, &band.m) {
                Ok(replayed) => {
                    if replayed != child.poly {
                        report
                            .violations
                            .push(format!("path {:?}: substitution replay mismatch", path));
                    }
                }
                Err(e) => report
                    .violations
                    .push(format!("path {:?}: replay failed: {e}", path)),
            }

            // collapsed-edge identity: child leftmost vertex
            report.checks += 1;
            let expect = (&p_j + &band.m * &q_j, s_j.clone());
            let got = child.polygon.leftmost_vertex().clone();
            if got != expect {
                report.violations.push(format!(
                    "path {:?}: child leftmost vertex ({}, {}) differs from ({}, {})",
                    path,
                    rat_string(&got.0),
                    rat_string(&got.1),
                    rat_string(&expect.0),
                    rat_string(&expect.1),
                ));
            }

            // multiplicity never exceeds the edge's left vertex height
            report.checks += 1;
            if s_j > q_j {
                report.violations.push(format!(
                    "path {:?}: root multiplicity {} exceeds edge height {}",
                    path,
                    rat_string(&s_j),
                    rat_string(&q_j)
                ));
            }

            // the parent's leftmost vertex lies on or above this edge's
            // supporting line
            report.checks += 1;
            let leftmost = triple.polygon.leftmost_vertex();
            if &p_j + &band.m * &q_j > &leftmost.0 + &band.m * &leftmost.1 {
                report.violations.push(format!(
                    "path {:?}: edge support exceeds leftmost-vertex support",
                    path
                ));
            }

            let child_ctx = match ctx {
                None => BranchCtx {
                    base: &p_j + &band.m * &q_j,
                    s0: s_j,
                    msum: Rat::zero(),
                },
                Some(c) => BranchCtx {
                    base: c.base.clone(),
                    s0: c.s0.clone(),
                    msum: &c.msum + &band.m,
                },
            };
            walk_triple(child, Some(&child_ctx), report, path);
            path.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// Monomial comparability sampling
// ---------------------------------------------------------------------------

/// Min/max/median of the sampled ratios `|P(x,y)| / |x^p y_k^q|`.
#[derive(Clone, Debug)]
pub struct RatioStats {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub count: usize,
}

impl RatioStats {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// Maps leaf-local coordinates `(x, y_k)` back to the original `(x, y)`
/// through the substitution chain, in double-double precision.
pub fn chain_to_original(chain: &[ChainStep], x: f64, y_local: f64) -> Dd {
    let xd = Dd::from_f64(x);
    let mut y = Dd::from_f64(y_local);
    for step in chain.iter().rev() {
        let xm = xd.pow_rat(&step.m).expect("positive x");
        y = xm.mul(Dd::from_rat(&step.r).add(y));
    }
    y
}

/// Certificate ratio at one explicit local sample; errors when the sample
/// lies outside the leaf's window.
pub fn monomial_check_at(
    tree: &ResolutionTree,
    leaf: &LeafRef,
    x: f64,
    y_local: f64,
) -> Result<f64, CheckError> {
    let eps = rat_to_f64(&tree.epsilon);
    let (lower, upper) = leaf_window(tree, leaf, x);
    if !(x > 0.0 && x < eps) || !(y_local.abs() > lower && y_local.abs() < upper) {
        return Err(CheckError::OutsideWindow(x, y_local));
    }
    if let LeafKind::Edge(b) = leaf.kind {
        let triple = tree.root.triple_at(&leaf.path);
        let band = &triple.bands[b];
        let r = y_local / pow_f64(x, &band.m);
        for zone in &band.zones {
            if (r - rat_to_f64(&zone.center)).abs() < rat_to_f64(&zone.rho) {
                return Err(CheckError::OutsideWindow(x, y_local));
            }
        }
    }
    Ok(certificate_ratio(tree, leaf, x, y_local))
}

fn certificate_ratio(tree: &ResolutionTree, leaf: &LeafRef, x: f64, y_local: f64) -> f64 {
    let triple = tree.root.triple_at(&leaf.path);
    let (p, q) = tree.certificate_vertex(leaf);
    // |P(x, y)| at the chain image equals |P_k(x, y_k)| by the replay
    // identity, which verify_chain_identities establishes exactly. The
    // local form is evaluated here because the original expansion loses all
    // significant bits to cancellation on deep leaves (its terms exceed the
    // value by more than the double-double precision).
    let num = triple
        .poly
        .eval_dd(x, y_local)
        .expect("in-domain evaluation")
        .abs()
        .to_f64();
    let den = pow_f64(x, &p) * pow_f64(y_local.abs(), &q);
    num / den
}

/// Draws samples uniformly in the leaf's window `(0, epsilon) x
/// {m-window constraint}` and returns the ratio statistics of
/// `|P(x,y)|` against the certificate monomial `|x^{p_k} y_k^{q_k}|`.
pub fn monomial_check(
    tree: &ResolutionTree,
    leaf: &LeafRef,
    samples: usize,
    epsilon: &Rat,
    seed: u64,
) -> Result<RatioStats, CheckError> {
    if epsilon > &tree.epsilon {
        return Err(CheckError::EpsilonTooLarge(
            rat_string(epsilon),
            rat_string(&tree.epsilon),
        ));
    }
    let eps = rat_to_f64(epsilon);
    let triple = tree.root.triple_at(&leaf.path);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f6e6f);
    let mut ratios = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    while ratios.len() < samples {
        attempts += 1;
        if attempts > samples.saturating_mul(200) + 10_000 {
            return Err(CheckError::EmptyRegion);
        }
        let x = eps * rng.gen_range(1e-6..1.0);
        let (lower, upper) = leaf_window(tree, leaf, x);
        if !(lower < upper) {
            continue;
        }
        let mag = rng.gen_range(lower..upper);
        if mag == 0.0 {
            continue;
        }
        let y_local = if rng.gen_bool(0.5) { mag } else { -mag };
        if let LeafKind::Edge(b) = leaf.kind {
            let band = &triple.bands[b];
            let r = y_local / pow_f64(x, &band.m);
            if band
                .zones
                .iter()
                .any(|z| (r - rat_to_f64(&z.center)).abs() < rat_to_f64(&z.rho))
            {
                continue;
            }
        }
        ratios.push(certificate_ratio(tree, leaf, x, y_local));
    }
    Ok(stats_of(ratios))
}

fn stats_of(mut ratios: Vec<f64>) -> RatioStats {
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count = ratios.len();
    RatioStats {
        min: ratios[0],
        max: ratios[count - 1],
        median: ratios[count / 2],
        count,
    }
}

/// Sampled bound check for the local derivatives: for `a, b <= order`,
/// returns the maximal ratio
/// `|d^a_x d^b_y P_k| / min(1, |x^{p-a} y_k^{q-b}|)` over the samples.
///
/// An edge band is certified by either endpoint of its edge (both are
/// comparable to the band values), so the smaller of the two worst ratios
/// is reported there.
pub fn derivative_bound_check(
    tree: &ResolutionTree,
    leaf: &LeafRef,
    order: u32,
    samples: usize,
    epsilon: &Rat,
    seed: u64,
) -> Result<f64, CheckError> {
    let triple = tree.root.triple_at(&leaf.path);
    let certs: Vec<(Rat, Rat)> = match leaf.kind {
        LeafKind::Vertex(_) => vec![tree.certificate_vertex(leaf)],
        LeafKind::Edge(b) => vec![
            triple.bands[b].edge.left.clone(),
            triple.bands[b].edge.right.clone(),
        ],
    };
    let mut best = f64::INFINITY;
    for cert in certs {
        best = best.min(derivative_bound_with_cert(tree, leaf, &cert, order, samples, epsilon, seed)?);
    }
    Ok(best)
}

fn derivative_bound_with_cert(
    tree: &ResolutionTree,
    leaf: &LeafRef,
    cert: &(Rat, Rat),
    order: u32,
    samples: usize,
    epsilon: &Rat,
    seed: u64,
) -> Result<f64, CheckError> {
    if epsilon > &tree.epsilon {
        return Err(CheckError::EpsilonTooLarge(
            rat_string(epsilon),
            rat_string(&tree.epsilon),
        ));
    }
    let eps = rat_to_f64(epsilon);
    let triple = tree.root.triple_at(&leaf.path);
    let (p, q) = cert.clone();
    // precompute the derivative grid
    let mut derivs: Vec<Vec<FracPoly>> = Vec::new();
    for a in 0..=order {
        let mut row = Vec::new();
        let mut base = triple.poly.clone();
        for _ in 0..a {
            base = base.dx();
        }
        for b in 0..=order {
            row.push(base.clone());
            if b < order {
                base = base.dy();
            }
        }
        derivs.push(row);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x64657276);
    let mut worst: f64 = 0.0;
    let mut attempts = 0usize;
    let mut accepted = 0usize;
    while accepted < samples {
        attempts += 1;
        if attempts > samples.saturating_mul(200) + 10_000 {
            return Err(CheckError::EmptyRegion);
        }
        let x = eps * rng.gen_range(1e-6..1.0);
        let (lower, upper) = leaf_window(tree, leaf, x);
        if !(lower < upper) {
            continue;
        }
        let mag = rng.gen_range(lower..upper);
        if mag == 0.0 {
            continue;
        }
        let y_local = if rng.gen_bool(0.5) { mag } else { -mag };
        accepted += 1;
        for a in 0..=order {
            for b in 0..=order {
                let v = derivs[a as usize][b as usize]
                    .eval_f64_fast(x, y_local)
                    .abs();
                let pa = &p - rat(a as i64, 1);
                let qb = &q - rat(b as i64, 1);
                let bound = (pow_f64(x, &pa).abs() * pow_f64(y_local.abs(), &qb).abs()).min(1.0);
                if bound > 0.0 {
                    worst = worst.max(v / bound);
                }
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Coverage and disjointness
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default)]
pub struct CoverageStats {
    pub total: usize,
    pub claimed: usize,
    pub truncated: usize,
    pub unclaimed: usize,
    pub multi_claimed: usize,
}

impl CoverageStats {
    pub fn miss_fraction(&self) -> f64 {
        (self.truncated + self.unclaimed) as f64 / self.total.max(1) as f64
    }
}

enum Classified {
    Good,
    Truncated,
    Unclaimed,
}

fn classify(triple: &TripleNode, x: f64, y: f64) -> Classified {
    // edge bands first (they carry the zones), then vertex windows
    let ay = y.abs();
    let mut scales = Vec::with_capacity(triple.bands.len());
    for band in &triple.bands {
        scales.push(pow_f64(x, &band.m));
    }
    for (bi, band) in triple.bands.iter().enumerate() {
        let s = scales[bi];
        let lo = rat_to_f64(&band.lo) * s;
        let hi = rat_to_f64(&band.hi) * s;
        if ay >= lo && ay <= hi {
            let r = y / s;
            for zone in &band.zones {
                if (r - rat_to_f64(&zone.center)).abs() < rat_to_f64(&zone.rho) {
                    return match &zone.action {
                        ZoneAction::Branch(child) => {
                            classify(child, x, r - rat_to_f64(&zone.center))
                        }
                        ZoneAction::Cut { .. } => Classified::Truncated,
                    };
                }
            }
            return Classified::Good;
        }
    }
    for region in &triple.vertex_regions {
        let above_lower = match region.right_band {
            None => ay > 0.0,
            Some(b) => ay > rat_to_f64(&triple.bands[b].hi) * scales[b],
        };
        let below_upper = match region.left_band {
            None => true, // capped by the caller's ybound
            Some(b) => ay < rat_to_f64(&triple.bands[b].lo) * scales[b],
        };
        if above_lower && below_upper {
            return Classified::Good;
        }
    }
    Classified::Unclaimed
}

/// True when the (strictly interior) membership predicate of this leaf
/// claims the original-coordinate point.
fn leaf_claims(tree: &ResolutionTree, leaf: &LeafRef, x: f64, y: f64) -> bool {
    let mut triple = &tree.root;
    let mut y_cur = y;
    for &(b, z) in &leaf.path {
        let band = &triple.bands[b];
        let zone = &band.zones[z];
        let r = y_cur / pow_f64(x, &band.m);
        if !((r - rat_to_f64(&zone.center)).abs() < rat_to_f64(&zone.rho)) {
            return false;
        }
        y_cur = r - rat_to_f64(&zone.center);
        match &zone.action {
            ZoneAction::Branch(child) => triple = child,
            ZoneAction::Cut { .. } => return false,
        }
    }
    let ay = y_cur.abs();
    match leaf.kind {
        LeafKind::Vertex(i) => {
            let region = &triple.vertex_regions[i];
            let above = match region.right_band {
                None => ay > 0.0,
                Some(b) => {
                    let band = &triple.bands[b];
                    ay > rat_to_f64(&band.hi) * pow_f64(x, &band.m)
                }
            };
            let below = match region.left_band {
                None => {
                    let ybound = rat_to_f64(&tree.ybound_at(&leaf.path));
                    ay < ybound
                }
                Some(b) => {
                    let band = &triple.bands[b];
                    ay < rat_to_f64(&band.lo) * pow_f64(x, &band.m)
                }
            };
            above && below
        }
        LeafKind::Edge(b) => {
            let band = &triple.bands[b];
            let s = pow_f64(x, &band.m);
            let inside = ay > rat_to_f64(&band.lo) * s && ay < rat_to_f64(&band.hi) * s;
            let r = y_cur / s;
            inside
                && band
                    .zones
                    .iter()
                    .all(|z| (r - rat_to_f64(&z.center)).abs() > rat_to_f64(&z.rho))
        }
    }
}

/// Monte Carlo coverage of `(0, eps) x (-eps, eps)`: the fraction of points
/// assigned to no good leaf, plus a disjointness count over all per-leaf
/// strict membership predicates.
pub fn coverage_check(tree: &ResolutionTree, samples: usize, seed: u64) -> CoverageStats {
    let eps = rat_to_f64(&tree.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636f7665);
    let leaves = tree.good_leaves();
    let mut stats = CoverageStats {
        total: samples,
        ..Default::default()
    };
    for _ in 0..samples {
        let x = eps * rng.gen_range(f64::MIN_POSITIVE..1.0);
        let y = eps * rng.gen_range(-1.0..1.0);
        if y == 0.0 {
            stats.unclaimed += 1;
            continue;
        }
        match classify(&tree.root, x, y) {
            Classified::Good => stats.claimed += 1,
            Classified::Truncated => stats.truncated += 1,
            Classified::Unclaimed => stats.unclaimed += 1,
        }
        let claims = leaves
            .iter()
            .filter(|l| leaf_claims(tree, l, x, y))
            .count();
        if claims > 1 {
            stats.multi_claimed += 1;
        }
    }
    stats
}

// ---------------------------------------------------------------------------
// Box covers
// ---------------------------------------------------------------------------

/// Dyadic box layout covering one slab of a good region.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BoxSpec {
    pub sigma: String,
    pub rho: String,
    pub dx: String,
    pub dy: String,
    pub count_estimate: u64,
    pub k: u32,
    pub tau: String,
}

fn is_pow2_fraction(r: &Rat) -> Option<u32> {
    if !r.numer().is_one() || r.is_negative() || r.is_zero() {
        return None;
    }
    let den = r.denom();
    let bits = den.bits();
    if den == &(BigInt::one() << (bits - 1) as usize) {
        Some((bits - 1) as u32)
    } else {
        None
    }
}

fn is_dyadic(r: &Rat) -> bool {
    let den = r.denom();
    let bits = den.bits();
    den == &(BigInt::one() << (bits - 1) as usize)
}

/// `sigma^e` for `sigma = 2^-s`; errors unless `s * e` is an integer, which
/// is what makes the box dimensions exact dyadic rationals.
fn dyadic_power(s: u32, e: &Rat) -> Result<Rat, CheckError> {
    let prod = e * rat(s as i64, 1);
    if !prod.denom().is_one() {
        return Err(CheckError::NotRepresentable(
            format!("2^-{s}"),
            rat_string(e),
        ));
    }
    let k = prod.numer().to_i64().ok_or(CheckError::BadSubdivision)?;
    if k >= 0 {
        Ok(Rat::new(BigInt::one(), BigInt::from(2).pow(k as u32)))
    } else {
        Ok(Rat::from_integer(BigInt::from(2).pow((-k) as u32)))
    }
}

/// Covers one dyadic slab `x ~ sigma`, `|y_k| ~ rho x^m` of a good leaf by
/// axis-parallel boxes: returns the box dimensions and cardinality.
///
/// Edge-defined leaves fix `rho = 1`; vertex-defined leaves accept any
/// dyadic `rho` between `sigma^(m_right - m_left)` and 1.
pub fn box_cover(
    tree: &ResolutionTree,
    leaf: &LeafRef,
    sigma: &Rat,
    rho: &Rat,
    k: u32,
) -> Result<BoxSpec, CheckError> {
    if k == 0 {
        return Err(CheckError::BadSubdivision);
    }
    let s = is_pow2_fraction(sigma).ok_or(CheckError::SigmaOutOfRange)?;
    if sigma > &tree.epsilon {
        return Err(CheckError::SigmaOutOfRange);
    }
    if !is_dyadic(rho) || rho.is_zero() || rho.is_negative() || rho > &Rat::one() {
        return Err(CheckError::RhoOutOfRange);
    }
    let triple = tree.root.triple_at(&leaf.path);
    let chain_sum: Rat = triple
        .chain
        .iter()
        .fold(Rat::zero(), |acc, step| acc + &step.m);
    let first_m = triple.chain.first().map(|s| s.m.clone());

    let (dx, dy) = match leaf.kind {
        LeafKind::Edge(b) => {
            if !rho.is_one() {
                return Err(CheckError::RhoOutOfRange);
            }
            let band = &triple.bands[b];
            let total = &chain_sum + &band.m;
            let m0 = first_m.unwrap_or_else(|| band.m.clone());
            let dy = dyadic_power(s, &total)?;
            let dx = dyadic_power(s, &(&total + Rat::one() - &m0))? / rat(k as i64, 1);
            (dx, dy)
        }
        LeafKind::Vertex(i) => {
            let region = &triple.vertex_regions[i];
            let m_left = match region.left_band {
                None => Rat::zero(),
                Some(b) => triple.bands[b].m.clone(),
            };
            // admissible rho: sigma^(m_right - m_left) <= rho <= 1
            if let Some(rb) = region.right_band {
                let spread = &triple.bands[rb].m - &m_left;
                let prod = &spread * rat(s as i64, 1);
                // rho >= 2^(-s * spread) iff rho^den >= 2^(-num) exactly
                let num = prod.numer().clone();
                let den = prod.denom().to_u32().unwrap_or(1);
                let lhs = crate::rational::pow_rat(rho, den);
                let rhs = if num.is_negative() {
                    Rat::from_integer(BigInt::from(2).pow(num.abs().to_u32().unwrap_or(0)))
                } else {
                    Rat::new(BigInt::one(), BigInt::from(2).pow(num.to_u32().unwrap_or(0)))
                };
                if lhs < rhs {
                    return Err(CheckError::RhoOutOfRange);
                }
            }
            if triple.depth == 0 {
                let dx = sigma / rat(k as i64, 1);
                let dy = rho * dyadic_power(s, &m_left)?;
                (dx, dy)
            } else {
                let total = &chain_sum + &m_left;
                let m0 = first_m.expect("depth >= 1 has a chain");
                let dy = rho * dyadic_power(s, &total)?;
                let dx = rho * dyadic_power(s, &(&total + Rat::one() - &m0))? / rat(k as i64, 1);
                (dx, dy)
            }
        }
    };
    let count = (sigma / &dx).ceil();
    let count = count.numer().to_u64().unwrap_or(u64::MAX).max(1);
    let tau = Rat::one() + Rat::new(BigInt::one(), BigInt::from(4 * k as i64));
    Ok(BoxSpec {
        sigma: rat_string(sigma),
        rho: rat_string(rho),
        dx: rat_string(&dx),
        dy: rat_string(&dy),
        count_estimate: count,
        k,
        tau: rat_string(&tau),
    })
}

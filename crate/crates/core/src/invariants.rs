//! The decay invariants of a phase: relative multiplicity, the orders of
//! the linear factors of the lowest homogeneous part, the edge vanishing
//! orders across the three frames, and the resulting decay exponent and
//! logarithm power with an explicit case label.

use crate::fracpoly::{FracPoly, Frame, PolyError};
use crate::newton::{
    edge_vanishing_order, edge_vanishing_order_complex, max_real_root_multiplicity,
    newton_polygon, NewtonError,
};
use crate::rational::{rat_int, rat_string, Rat};
use crate::unipoly::UniPoly;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum InvariantError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Newton(#[from] NewtonError),
    #[error("input is not homogeneous")]
    NotHomogeneous,
    #[error("exponents must be nonnegative integers for invariant analysis")]
    FractionalExponent,
}

/// Emitted when the derivative of the phase vanishes identically: the phase
/// splits as `S1(x) + S2(y) + S3(x+y)` and no decay is possible.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegenerateReport {
    pub reason: String,
}

/// The invariant bundle of a nondegenerate phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseInvariants {
    /// Relative multiplicity, `3 +` the vanishing order of the derivative.
    pub n: u32,
    /// Order of `x` in the lowest homogeneous part of the derivative.
    pub alpha: u32,
    /// Order of `y`.
    pub beta: u32,
    /// Order of `x + y`.
    pub gamma: u32,
    /// Maximal order of other real linear factors.
    pub d0: u32,
    /// Maximal vanishing order of a polygon edge of slope other than -1,
    /// over the three frames.
    pub d1: u32,
    /// `max(alpha, beta, gamma, d0 + 1, d1 + 1)`.
    pub kappa: u32,
    /// Decay exponent `1 / max(4, kappa + 2, n/2)`, exact.
    pub delta: Rat,
    /// Power of the logarithmic correction.
    pub mu: u8,
    /// Whether the estimate is sharp.
    pub sharp: bool,
    /// Which clause of the exponent table fired.
    pub case_label: String,
    /// Diagnostics: `d0`/`d1` recomputed counting complex factors too.
    pub d0_with_complex: u32,
    pub d1_with_complex: u32,
}

impl Serialize for PhaseInvariants {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PhaseInvariants", 13)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("alpha", &self.alpha)?;
        st.serialize_field("beta", &self.beta)?;
        st.serialize_field("gamma", &self.gamma)?;
        st.serialize_field("d0", &self.d0)?;
        st.serialize_field("d1", &self.d1)?;
        st.serialize_field("kappa", &self.kappa)?;
        st.serialize_field("delta", &rat_string(&self.delta))?;
        st.serialize_field("mu", &self.mu)?;
        st.serialize_field("sharp", &self.sharp)?;
        st.serialize_field("case_label", &self.case_label)?;
        st.serialize_field("d0_with_complex", &self.d0_with_complex)?;
        st.serialize_field("d1_with_complex", &self.d1_with_complex)?;
        st.end()
    }
}

/// Outcome of the analysis pipeline.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AnalysisOutcome {
    Invariants(PhaseInvariants),
    Degenerate(DegenerateReport),
}

/// Relative multiplicity of a phase: `3 + d` where `d` is the minimal total
/// degree of the derivative, or a degenerate report when the derivative is
/// identically zero.
pub fn relative_multiplicity(phase: &FracPoly) -> Result<Result<u32, DegenerateReport>, InvariantError> {
    let ds = phase.apply_d()?;
    if ds.is_zero() {
        return Ok(Err(degenerate()));
    }
    let (deg, _) = ds.lowest_part()?;
    Ok(Ok(3 + rat_to_u32(&deg)?))
}

fn degenerate() -> DegenerateReport {
    DegenerateReport {
        reason: "derivative vanishes identically: the phase is a sum of single-variable \
                 functions of x, y and x+y, so no decay is expected"
            .into(),
    }
}

fn rat_to_u32(r: &Rat) -> Result<u32, InvariantError> {
    if !r.denom().is_one() || r.is_negative() {
        return Err(InvariantError::FractionalExponent);
    }
    r.numer()
        .to_u32()
        .ok_or(InvariantError::FractionalExponent)
}

/// Substitutes `x = 1` into a homogeneous polynomial, producing the
/// univariate polynomial in `t = y` (one term per y-exponent).
fn restrict_to_line(h: &FracPoly) -> Result<UniPoly, InvariantError> {
    let mut max_q = 0usize;
    for t in h.terms() {
        let q = t
            .ey
            .to_integer()
            .to_usize()
            .filter(|_| t.ey.denom().is_one())
            .ok_or(InvariantError::FractionalExponent)?;
        max_q = max_q.max(q);
    }
    let mut coeffs = vec![Rat::zero(); max_q + 1];
    for t in h.terms() {
        let q = t.ey.to_integer().to_usize().unwrap();
        coeffs[q] = t.coeff;
    }
    Ok(UniPoly::new(coeffs))
}

/// Orders `(alpha, beta, gamma, d0)` of the linear factors `x`, `y`, `x+y`
/// and the strongest remaining real linear factor of a homogeneous
/// polynomial, plus the complex-counting `d0` diagnostic.
pub fn linear_orders(h: &FracPoly) -> Result<(u32, u32, u32, u32, u32), InvariantError> {
    if h.is_zero() {
        return Err(InvariantError::Poly(PolyError::ZeroPolynomial));
    }
    let (_, low) = h.lowest_part()?;
    if low != *h {
        return Err(InvariantError::NotHomogeneous);
    }
    let alpha = rat_to_u32(&h.min_ex().unwrap())?;
    let beta = rat_to_u32(&h.min_ey().unwrap())?;
    // gamma and d0 are read off H(1, t)
    let u = restrict_to_line(h)?;
    let minus_one = -Rat::one();
    let gamma = u.root_multiplicity(&minus_one) as u32;

    // strip t^beta and (t+1)^gamma, then look for remaining real roots
    let mut w = u.shift_down(u.order_at_zero());
    for _ in 0..gamma {
        w = w.div_exact(&crate::unipoly::linear_power(&minus_one, 1));
    }
    let d0 = max_real_root_multiplicity(&w, false) as u32;
    let d0_complex = w
        .squarefree_decomposition()
        .iter()
        .filter(|(g, _)| g.degree().unwrap_or(0) > 0)
        .map(|(_, m)| *m)
        .max()
        .unwrap_or(0) as u32;
    Ok((alpha, beta, gamma, d0, d0_complex))
}

/// Maximal edge vanishing order over compact edges with supporting value
/// `m != 1` of the polygon of the polynomial, in each of the three frames.
pub fn compute_d1(poly: &FracPoly) -> Result<u32, InvariantError> {
    Ok(d1_pair(poly)?.0)
}

fn d1_pair(poly: &FracPoly) -> Result<(u32, u32), InvariantError> {
    if poly.is_zero() {
        return Err(InvariantError::Poly(PolyError::ZeroPolynomial));
    }
    let mut best = 0u32;
    let mut best_complex = 0u32;
    for frame in Frame::ALL {
        let q = poly.reframe(frame)?;
        let polygon = newton_polygon(&q)?;
        for e in &polygon.compact_edges {
            if e.m == Rat::one() {
                continue;
            }
            best = best.max(edge_vanishing_order(&q, e)? as u32);
            best_complex = best_complex.max(edge_vanishing_order_complex(&q, e)? as u32);
        }
    }
    Ok((best, best_complex))
}

/// Full pipeline: either from the phase itself (`as_ds = false`, the
/// derivative is applied first) or directly from the derivative.
pub fn decay_report(input: &FracPoly, as_ds: bool) -> Result<AnalysisOutcome, InvariantError> {
    let p = if as_ds {
        input.clone()
    } else {
        input.apply_d()?
    };
    if p.is_zero() {
        return Ok(AnalysisOutcome::Degenerate(degenerate()));
    }
    let (deg, lowest) = p.lowest_part()?;
    let n = 3 + rat_to_u32(&deg)?;
    let (alpha, beta, gamma, d0, d0_complex) = linear_orders(&lowest)?;
    let (d1, d1_complex) = d1_pair(&p)?;
    let kappa = [alpha, beta, gamma, d0 + 1, d1 + 1]
        .into_iter()
        .max()
        .unwrap();

    let half_n = Rat::new(BigInt::from(n), BigInt::from(2));
    let denominator = [rat_int(4), rat_int((kappa + 2) as i64), half_n.clone()]
        .into_iter()
        .max()
        .unwrap();
    let delta = Rat::one() / denominator;

    // exponent table; kappa = n/2 - 2 is possible only for even n
    let threshold = &half_n - rat_int(2);
    let kappa_rat = rat_int(kappa as i64);
    let (mu, sharp, case_label) = if n == 3 {
        (0u8, false, "2(a) n=3".to_string())
    } else if (4..=7).contains(&n) {
        (1, false, "2(b) 4<=n<=7".to_string())
    } else if n == 8 {
        (2, false, "2(c) n=8".to_string())
    } else if kappa_rat > threshold {
        (0, false, "2(a) kappa > n/2-2".to_string())
    } else if kappa_rat < threshold {
        (0, true, "1(a) kappa < n/2-2".to_string())
    } else {
        // kappa == n/2 - 2
        let linear_hit = alpha == kappa || beta == kappa || gamma == kappa || d0 + 1 == kappa;
        if linear_hit {
            (1, true, "1(b) kappa = n/2-2".to_string())
        } else {
            (0, true, "1(a) d1+1 = kappa = n/2-2".to_string())
        }
    };

    Ok(AnalysisOutcome::Invariants(PhaseInvariants {
        n,
        alpha,
        beta,
        gamma,
        d0,
        d1,
        kappa,
        delta,
        mu,
        sharp,
        case_label,
        d0_with_complex: d0_complex,
        d1_with_complex: d1_complex,
    }))
}

impl PhaseInvariants {
    /// Predicted decay exponent as `f64`.
    pub fn delta_f64(&self) -> f64 {
        crate::rational::rat_to_f64(&self.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn p(s: &str) -> FracPoly {
        FracPoly::parse(s).unwrap()
    }

    fn report(s: &str, as_ds: bool) -> PhaseInvariants {
        match decay_report(&p(s), as_ds).unwrap() {
            AnalysisOutcome::Invariants(inv) => inv,
            AnalysisOutcome::Degenerate(d) => panic!("unexpected degenerate: {}", d.reason),
        }
    }

    #[test]
    fn relative_multiplicity_oracles() {
        assert_eq!(relative_multiplicity(&p("x^2*y")).unwrap(), Ok(3));
        assert_eq!(relative_multiplicity(&p("x^2*y^2")).unwrap(), Ok(4));
        let degen = p("x^3 + y^3").add(&p("x + y").pow(3));
        assert!(relative_multiplicity(&degen).unwrap().is_err());
    }

    #[test]
    fn linear_order_oracles() {
        let (a, b, g, d0, _) = linear_orders(&p("-x^3*y^2")).unwrap();
        assert_eq!((a, b, g, d0), (3, 2, 0, 0));

        let (a, b, g, d0, _) = linear_orders(&p("4*y - 4*x")).unwrap();
        assert_eq!((a, b, g, d0), (0, 0, 0, 1));

        let xyxy = p("x").mul(&p("y")).mul(&p("x + y"));
        let (a, b, g, d0, _) = linear_orders(&xyxy).unwrap();
        assert_eq!((a, b, g, d0), (1, 1, 1, 0));

        assert_eq!(
            linear_orders(&p("x^2 + y")),
            Err(InvariantError::NotHomogeneous)
        );
    }

    #[test]
    fn d1_oracles() {
        assert_eq!(compute_d1(&p("4*y - 4*x")).unwrap(), 0);
        assert_eq!(compute_d1(&p("x^5*y - x^3*y^2 + x^2*y^4")).unwrap(), 1);
        assert_eq!(compute_d1(&p("2")).unwrap(), 0);
    }

    #[test]
    fn full_pipeline_x2y() {
        let inv = report("x^2*y", false);
        assert_eq!((inv.n, inv.kappa), (3, 1));
        assert_eq!(inv.delta, rat(1, 4));
        assert_eq!(inv.mu, 0);
        assert_eq!(inv.case_label, "2(a) n=3");
    }

    #[test]
    fn full_pipeline_x2y2() {
        let inv = report("x^2*y^2", false);
        assert_eq!((inv.n, inv.kappa), (4, 2));
        assert_eq!(inv.delta, rat(1, 4));
        assert_eq!(inv.mu, 1);
    }

    #[test]
    fn full_pipeline_figure_poly_as_ds() {
        let inv = report("x^5*y - x^3*y^2 + x^2*y^4", true);
        assert_eq!(inv.n, 8);
        assert_eq!(
            (inv.alpha, inv.beta, inv.gamma, inv.d0, inv.d1),
            (3, 2, 0, 0, 1)
        );
        assert_eq!(inv.kappa, 3);
        assert_eq!(inv.delta, rat(1, 5));
        assert_eq!(inv.mu, 2);
        assert_eq!(inv.case_label, "2(c) n=8");
    }

    #[test]
    fn full_pipeline_x9_y9_as_ds() {
        let inv = report("x^9 + y^9", true);
        assert_eq!(inv.n, 12);
        assert_eq!(
            (inv.alpha, inv.beta, inv.gamma, inv.d0, inv.d1),
            (0, 0, 1, 0, 0)
        );
        assert_eq!(inv.kappa, 1);
        assert_eq!(inv.delta, rat(1, 6));
        assert_eq!(inv.mu, 0);
        assert!(inv.sharp);
        assert_eq!(inv.case_label, "1(a) kappa < n/2-2");
    }

    #[test]
    fn phase_and_derivative_agree() {
        for s in ["x^2*y", "x^2*y^2", "x^3*y^3 - x^4*y"] {
            let from_phase = report(s, false);
            let ds = p(s).apply_d().unwrap();
            let direct = match decay_report(&ds, true).unwrap() {
                AnalysisOutcome::Invariants(inv) => inv,
                _ => panic!(),
            };
            assert_eq!(from_phase, direct, "phase {s}");
        }
    }

    #[test]
    fn degenerate_pipeline() {
        let degen = p("x^3 + y^3").add(&p("x + y").pow(3));
        match decay_report(&degen, false).unwrap() {
            AnalysisOutcome::Degenerate(d) => assert!(d.reason.contains("no decay")),
            _ => panic!("expected degenerate"),
        }
    }
}

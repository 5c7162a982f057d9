//! Numerical verification of the predicted decay: oscillatory quadrature of
//! the trilinear form, log-log decay fitting against the invariant-table
//! prediction, and sublevel-set measurement.
//!
//! The quadrature is a tensor midpoint rule whose node budget resolves the
//! oscillation (`lambda * max |dS/daxis| * h <= 2 pi / points_per_period`
//! per axis), validated by comparison with its own half-resolution grid.
//! The summation is reorganized per phase structure (see [`paths`]) so the
//! same discrete sum is affordable across the whole `lambda` range.

mod fit;
mod paths;

use crate::fracpoly::FracPoly;
use crate::invariants::{decay_report, AnalysisOutcome};
use crate::rational::{rat_to_f64, Rat};
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use paths::pairwise_sum;

#[derive(Debug, thiserror::Error)]
pub enum QuadError {
    #[error("grid budget exceeded: oscillation at lambda = {lambda} needs {needed} nodes per axis (budget {budget}); the oscillation is unresolvable within the configured budget")]
    GridBudgetExceeded {
        lambda: f64,
        needed: u64,
        budget: u64,
    },
    #[error("refinement tolerance not met: estimated error {err:.3e} exceeds {tol:.3e}")]
    ToleranceNotMet { err: f64, tol: f64 },
    #[error("sampled function exceeds the unit bound: |{which}| = {value}")]
    UnboundedInput { which: &'static str, value: f64 },
    #[error("phase must be a polynomial with integer exponents")]
    InvalidPhase,
    #[error("computed |form| = {got} exceeds the cutoff mass {mass}")]
    BoundViolated { got: f64, mass: f64 },
    #[error(transparent)]
    Poly(#[from] crate::fracpoly::PolyError),
    #[error(transparent)]
    Invariant(#[from] crate::invariants::InvariantError),
}

/// Cutoff shape: a C2 product bump for oscillatory work, an indicator for
/// sublevel work.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub enum CutoffShape {
    ProductBump,
    Indicator,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CutoffSpec {
    pub shape: CutoffShape,
    /// support half-width
    pub eps: f64,
}

impl CutoffSpec {
    pub fn bump(eps: f64) -> CutoffSpec {
        CutoffSpec {
            shape: CutoffShape::ProductBump,
            eps,
        }
    }

    pub fn indicator(eps: f64) -> CutoffSpec {
        CutoffSpec {
            shape: CutoffShape::Indicator,
            eps,
        }
    }

    /// One-dimensional factor: 1 on the inner half of the support, a C2
    /// quintic ramp on the outer half, 0 outside.
    pub fn one_dim(&self, u: f64) -> f64 {
        let w = self.eps;
        let a = u.abs();
        match self.shape {
            CutoffShape::Indicator => {
                if a < w {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffShape::ProductBump => {
                if a <= w / 2.0 {
                    1.0
                } else if a >= w {
                    0.0
                } else {
                    let s = (a - w / 2.0) / (w / 2.0);
                    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
                }
            }
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.one_dim(x) * self.one_dim(y)
    }

    /// Closed form of the one-dimensional integral.
    pub fn integral_one_dim(&self) -> f64 {
        match self.shape {
            CutoffShape::Indicator => 2.0 * self.eps,
            // inner half contributes eps, each ramp eps/4
            CutoffShape::ProductBump => 1.5 * self.eps,
        }
    }

    /// Closed form of the double integral of the cutoff.
    pub fn mass(&self) -> f64 {
        self.integral_one_dim().powi(2)
    }
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct QuadConfig {
    /// Oscillation resolution: at least this many nodes per period along
    /// each axis.
    pub points_per_period: u32,
    /// Minimum grid, used when the oscillation constraint is weaker.
    pub base_grid: u32,
    /// Relative tolerance (times the support area) of the half-grid
    /// comparison.
    pub refinement_tolerance: f64,
    /// Budget for the direct kernel, in total grid points.
    pub direct_budget: u64,
    /// Budget for the FFT kernels, in nodes per axis.
    pub fft_budget: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            points_per_period: 10,
            base_grid: 64,
            refinement_tolerance: 1e-4,
            direct_budget: 1 << 31,
            fft_budget: 1 << 24,
        }
    }
}

/// A bounded sampled function (`|value| <= 1`).
#[derive(Clone)]
pub enum Weight<'a> {
    One,
    Fn(&'a (dyn Fn(f64) -> Complex64 + Sync)),
}

impl<'a> Weight<'a> {
    fn is_one(&self) -> bool {
        matches!(self, Weight::One)
    }

    fn sample(&self, xs: &[f64], which: &'static str) -> Result<Vec<Complex64>, QuadError> {
        let one = Complex64::new(1.0, 0.0);
        match self {
            Weight::One => Ok(vec![one; xs.len()]),
            Weight::Fn(f) => {
                let vals: Vec<Complex64> = xs.iter().map(|&x| f(x)).collect();
                for v in &vals {
                    if v.norm() > 1.0 + 1e-9 {
                        return Err(QuadError::UnboundedInput {
                            which,
                            value: v.norm(),
                        });
                    }
                }
                Ok(vals)
            }
        }
    }
}

/// Which summation kernel evaluated the form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum QuadPath {
    Convolution,
    LinearPhase,
    Direct,
}

#[derive(Clone, Debug)]
pub struct TrilinearResult {
    pub value: Complex64,
    /// nodes per axis of the accepted grid
    pub nodes: u64,
    /// estimated error from the half-grid comparison
    pub err_estimate: f64,
    pub path: QuadPath,
}

/// Additive decomposition `S = A(x) + B(y) + C(x+y)` of a phase annihilated
/// by the mixed-derivative operator, with exact rational coefficients
/// (ascending). Exists if and only if the derivative vanishes identically.
pub fn additive_split(phase: &FracPoly) -> Option<(Vec<Rat>, Vec<Rat>, Vec<Rat>)> {
    if !phase.has_integer_exponents() {
        return None;
    }
    let deg = phase
        .max_total_degree()
        .map(|d| d.to_integer().to_usize().unwrap_or(0))
        .unwrap_or(0);
    let mut c_coeffs = vec![Rat::zero(); deg + 1];
    // mixed terms x^p y^q (p, q >= 1) must come from C(x+y)
    for t in phase.terms() {
        let p = t.ex.to_integer().to_u64().unwrap();
        let q = t.ey.to_integer().to_u64().unwrap();
        if p >= 1 && q >= 1 {
            let k = (p + q) as usize;
            let bin = binomial(p + q, p);
            let gamma = &t.coeff / Rat::from_integer(bin);
            if c_coeffs[k].is_zero() {
                c_coeffs[k] = gamma;
            } else if c_coeffs[k] != gamma {
                return None;
            }
        }
    }
    // reconstruct and compare: the remainder must have no mixed terms
    let mut c_poly = FracPoly::zero();
    let xpy = FracPoly::var_x().add(&FracPoly::var_y());
    for (k, c) in c_coeffs.iter().enumerate() {
        if !c.is_zero() {
            c_poly = c_poly.add(&xpy.pow(k as u32).scale(c));
        }
    }
    let rest = phase.sub(&c_poly);
    let mut a_coeffs = vec![Rat::zero(); deg + 1];
    let mut b_coeffs = vec![Rat::zero(); deg + 1];
    for t in rest.terms() {
        let p = t.ex.to_integer().to_usize().unwrap();
        let q = t.ey.to_integer().to_usize().unwrap();
        if p >= 1 && q >= 1 {
            return None; // genuinely nondegenerate phase
        }
        if q == 0 {
            a_coeffs[p] = t.coeff; // constant goes to A
        } else {
            b_coeffs[q] = t.coeff;
        }
    }
    Some((a_coeffs, b_coeffs, c_coeffs))
}

fn binomial(n: u64, k: u64) -> num_bigint::BigInt {
    let mut acc = num_bigint::BigInt::one();
    for i in 0..k.min(n - k) {
        acc = acc * num_bigint::BigInt::from(n - i) / num_bigint::BigInt::from(i + 1);
    }
    acc
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn to_f64_vec(coeffs: &[Rat]) -> Vec<f64> {
    coeffs.iter().map(rat_to_f64).collect()
}

/// Upper bound for `sup |dS/dx|` over the cutoff square, from term
/// magnitudes.
fn grad_bound_x(phase: &FracPoly, w: f64) -> f64 {
    let mut acc = 0.0;
    for t in phase.terms() {
        let p = rat_to_f64(&t.ex);
        let q = rat_to_f64(&t.ey);
        if p >= 1.0 {
            acc += rat_to_f64(&t.coeff).abs() * p * w.powf(p + q - 1.0);
        }
    }
    acc
}

fn nodes_for(lambda: f64, grad: f64, w: f64, cfg: &QuadConfig) -> u64 {
    let osc = (2.0 * w) * lambda.abs() * grad * cfg.points_per_period as f64
        / (2.0 * std::f64::consts::PI);
    (osc.ceil() as u64)
        .max(cfg.base_grid as u64)
        .next_power_of_two()
}

/// Evaluates the trilinear oscillatory form
/// `integral e^(i lambda S(x,y)) f(x) g(y) h(x+y) phi(x,y) dx dy`
/// by the midpoint rule at the oscillation-resolving budget, with a
/// half-grid consistency check. Deterministic for a fixed configuration.
pub fn trilinear_form(
    phase: &FracPoly,
    lambda: f64,
    f: &Weight,
    g: &Weight,
    h: &Weight,
    cutoff: &CutoffSpec,
    cfg: &QuadConfig,
) -> Result<Complex64, QuadError> {
    Ok(trilinear_form_detailed(phase, lambda, f, g, h, cutoff, cfg)?.value)
}

pub fn trilinear_form_detailed(
    phase: &FracPoly,
    lambda: f64,
    f: &Weight,
    g: &Weight,
    h: &Weight,
    cutoff: &CutoffSpec,
    cfg: &QuadConfig,
) -> Result<TrilinearResult, QuadError> {
    if !phase.has_integer_exponents() {
        return Err(QuadError::InvalidPhase);
    }
    let w = cutoff.eps;
    // Euclidean gradient bound, so the spacing invariant
    // lambda * max|grad S| * h <= 2 pi / points_per_period holds as stated
    let bx = grad_bound_x(phase, w);
    let by = grad_bound_x(&phase.swap_xy(), w);
    let mut n = nodes_for(lambda, bx.hypot(by), w, cfg);

    let area = (2.0 * w) * (2.0 * w);
    let tol = cfg.refinement_tolerance * area;
    let mut refinements = 0;
    loop {
        let coarse = eval_at_grid(phase, lambda, f, g, h, cutoff, cfg, (n / 2).max(16))?;
        let fine = eval_at_grid(phase, lambda, f, g, h, cutoff, cfg, n)?;
        let err = (fine.value - coarse.value).norm() / 3.0;
        let mass = cutoff.mass();
        if fine.value.norm() > mass * (1.0 + 1e-6) {
            return Err(QuadError::BoundViolated {
                got: fine.value.norm(),
                mass,
            });
        }
        if err <= tol {
            return Ok(TrilinearResult {
                err_estimate: err,
                ..fine
            });
        }
        refinements += 1;
        if refinements > 3 {
            return Err(QuadError::ToleranceNotMet { err, tol });
        }
        n *= 2;
    }
}

fn eval_at_grid(
    phase: &FracPoly,
    lambda: f64,
    f: &Weight,
    g: &Weight,
    h: &Weight,
    cutoff: &CutoffSpec,
    cfg: &QuadConfig,
    n: u64,
) -> Result<TrilinearResult, QuadError> {
    // kernel selection: exact additive split first, then linearity in one
    // variable (with trivial h), then the direct kernel
    if let Some((a, b, c)) = additive_split(phase) {
        if n > cfg.fft_budget {
            return Err(QuadError::GridBudgetExceeded {
                lambda,
                needed: n,
                budget: cfg.fft_budget,
            });
        }
        let value = convolution_path(
            &to_f64_vec(&a),
            &to_f64_vec(&b),
            &to_f64_vec(&c),
            lambda,
            f,
            g,
            h,
            cutoff,
            n as usize,
        )?;
        return Ok(TrilinearResult {
            value,
            nodes: n,
            err_estimate: f64::NAN,
            path: QuadPath::Convolution,
        });
    }
    let max_ey = phase
        .support()
        .iter()
        .map(|(_, ey)| ey.clone())
        .max()
        .unwrap_or_else(Rat::zero);
    let max_ex = phase
        .support()
        .iter()
        .map(|(ex, _)| ex.clone())
        .max()
        .unwrap_or_else(Rat::zero);
    if h.is_one() && max_ey <= Rat::one() && n <= cfg.fft_budget {
        let value = linear_phase_path(phase, lambda, f, g, cutoff, n as usize)?;
        return Ok(TrilinearResult {
            value,
            nodes: n,
            err_estimate: f64::NAN,
            path: QuadPath::LinearPhase,
        });
    }
    if h.is_one() && f.is_one() && max_ex <= Rat::one() && n <= cfg.fft_budget {
        // swap the roles of x and y; h(x+y) is symmetric and f = 1
        let value = linear_phase_path(&phase.swap_xy(), lambda, g, f, cutoff, n as usize)?;
        return Ok(TrilinearResult {
            value,
            nodes: n,
            err_estimate: f64::NAN,
            path: QuadPath::LinearPhase,
        });
    }
    if n * n > cfg.direct_budget {
        return Err(QuadError::GridBudgetExceeded {
            lambda,
            needed: n,
            budget: cfg.direct_budget,
        });
    }
    let value = direct_path(phase, lambda, f, g, h, cutoff, n as usize)?;
    Ok(TrilinearResult {
        value,
        nodes: n,
        err_estimate: f64::NAN,
        path: QuadPath::Direct,
    })
}

#[allow(clippy::too_many_arguments)]
fn convolution_path(
    a: &[f64],
    b: &[f64],
    c: &[f64],
    lambda: f64,
    f: &Weight,
    g: &Weight,
    h: &Weight,
    cutoff: &CutoffSpec,
    n: usize,
) -> Result<Complex64, QuadError> {
    let w = cutoff.eps;
    let (step, xs) = paths::midpoint_nodes(w, n);
    let fs = f.sample(&xs, "f")?;
    let gs = g.sample(&xs, "g")?;
    let zs: Vec<f64> = (0..2 * n - 1)
        .map(|k| -2.0 * w + (k as f64 + 1.0) * step)
        .collect();
    let hs = h.sample(&zs, "h")?;
    let fv: Vec<Complex64> = xs
        .iter()
        .zip(&fs)
        .map(|(&x, &fx)| fx * cutoff.one_dim(x) * Complex64::from_polar(1.0, lambda * horner(a, x)))
        .collect();
    let gv: Vec<Complex64> = xs
        .iter()
        .zip(&gs)
        .map(|(&y, &gy)| gy * cutoff.one_dim(y) * Complex64::from_polar(1.0, lambda * horner(b, y)))
        .collect();
    let hv: Vec<Complex64> = zs
        .iter()
        .zip(&hs)
        .map(|(&z, &hz)| hz * Complex64::from_polar(1.0, lambda * horner(c, z)))
        .collect();
    Ok(paths::convolution_sum(&fv, &gv, &hv, step))
}

/// Phase linear in `y`: `S = A(x) + B(x) y`.
fn linear_phase_path(
    phase: &FracPoly,
    lambda: f64,
    f: &Weight,
    g: &Weight,
    cutoff: &CutoffSpec,
    n: usize,
) -> Result<Complex64, QuadError> {
    let w = cutoff.eps;
    let (step, xs) = paths::midpoint_nodes(w, n);
    let fs = f.sample(&xs, "f")?;
    let gs = g.sample(&xs, "g")?;
    // split S into the y^0 and y^1 parts, as polynomials in x
    let mut a_terms: Vec<(f64, f64)> = Vec::new(); // (coeff, p) for y^0
    let mut b_terms: Vec<(f64, f64)> = Vec::new(); // (coeff, p) for y^1
    for t in phase.terms() {
        let entry = (rat_to_f64(&t.coeff), rat_to_f64(&t.ex));
        if t.ey.is_zero() {
            a_terms.push(entry);
        } else if t.ey.is_one() {
            b_terms.push(entry);
        } else {
            unreachable!("linear_phase_path needs max y-degree 1");
        }
    }
    let eval_terms = |terms: &[(f64, f64)], x: f64| -> f64 {
        terms.iter().map(|&(c, p)| c * x.powf(p)).sum()
    };
    let outer: Vec<Complex64> = xs
        .iter()
        .zip(&fs)
        .map(|(&x, &fx)| {
            fx * cutoff.one_dim(x) * Complex64::from_polar(1.0, lambda * eval_terms(&a_terms, x))
        })
        .collect();
    let ts: Vec<f64> = xs.iter().map(|&x| lambda * eval_terms(&b_terms, x)).collect();
    let inner: Vec<Complex64> = xs
        .iter()
        .zip(&gs)
        .map(|(&y, &gy)| gy * cutoff.one_dim(y))
        .collect();
    Ok(paths::linear_phase_sum(&outer, &ts, &inner, w, step))
}

fn direct_path(
    phase: &FracPoly,
    lambda: f64,
    f: &Weight,
    g: &Weight,
    h: &Weight,
    cutoff: &CutoffSpec,
    n: usize,
) -> Result<Complex64, QuadError> {
    let w = cutoff.eps;
    let (step, xs) = paths::midpoint_nodes(w, n);
    let fs = f.sample(&xs, "f")?;
    let gs = g.sample(&xs, "g")?;
    let zs: Vec<f64> = (0..2 * n - 1)
        .map(|k| -2.0 * w + (k as f64 + 1.0) * step)
        .collect();
    let hs = h.sample(&zs, "h")?;
    let weights: Vec<Complex64> = xs
        .iter()
        .zip(&gs)
        .map(|(&y, &gy)| gy * cutoff.one_dim(y))
        .collect();

    // group phase terms by y-degree: theta_i(y) = lambda sum_q A_q(x_i) y^q
    let mut by_q: Vec<(usize, Vec<(f64, f64)>)> = Vec::new(); // q -> [(coeff, p)]
    let mut max_q = 0usize;
    for t in phase.terms() {
        let q = t.ey.to_integer().to_usize().unwrap();
        max_q = max_q.max(q);
        let entry = (rat_to_f64(&t.coeff), rat_to_f64(&t.ex));
        match by_q.iter_mut().find(|(qq, _)| *qq == q) {
            Some((_, v)) => v.push(entry),
            None => by_q.push((q, vec![entry])),
        }
    }

    let row_sums: Vec<Complex64> = (0..n)
        .into_par_iter()
        .with_min_len(8)
        .map(|i| {
            let x = xs[i];
            let fw = fs[i] * cutoff.one_dim(x);
            if fw == Complex64::new(0.0, 0.0) {
                return fw;
            }
            let mut coeffs = vec![0.0; max_q + 1];
            for (q, terms) in &by_q {
                let mut acc = 0.0;
                for &(c, p) in terms {
                    acc += c * x.powf(p);
                }
                coeffs[*q] = lambda * acc;
            }
            fw * paths::oscillatory_row_sum(&coeffs, &xs, &weights, &hs, i)
        })
        .collect();
    Ok(paths::pairwise_sum(&row_sums) * (step * step))
}

// ---------------------------------------------------------------------------
// Decay fitting
// ---------------------------------------------------------------------------

/// Fitted decay of `|form|` along a lambda grid, against the predicted
/// exponent pair.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DecayFit {
    pub lambdas: Vec<f64>,
    pub values_re: Vec<f64>,
    pub values_im: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub fitted_delta: f64,
    pub fitted_mu: f64,
    pub residual: f64,
    /// max over the grid of `|form| lambda^delta / log(2+lambda)^mu`,
    /// normalized by its value at the smallest lambda.
    pub envelope_constant: f64,
    pub delta_predicted: f64,
    pub mu_predicted: u8,
    /// predicted envelope curve calibrated at the smallest lambda
    pub predicted_bound: Vec<f64>,
    /// true when the phase splits additively and the canceling extremizers
    /// were used in place of constant weights
    pub degenerate: bool,
}

/// Log-spaced grid of `points` lambdas in `[lo, hi]`.
pub fn log_lambda_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && lo > 0.0 && hi > lo);
    let step = (hi / lo).ln() / (points - 1) as f64;
    (0..points).map(|k| lo * (step * k as f64).exp()).collect()
}

/// Evaluates the form along the grid with unit weights (or, for a phase
/// annihilated by the mixed-derivative operator, the canceling unimodular
/// weights that realize the no-decay bound) and fits
/// `log |form| = c - delta log lambda (+ mu log log (2 + lambda))`.
pub fn decay_fit(
    phase: &FracPoly,
    lambda_grid: &[f64],
    cutoff: &CutoffSpec,
    cfg: &QuadConfig,
) -> Result<DecayFit, QuadError> {
    assert!(lambda_grid.len() >= 8, "grid needs at least 8 points");
    let outcome = decay_report(phase, false)?;
    let (delta_pred, mu_pred, degenerate) = match &outcome {
        AnalysisOutcome::Invariants(inv) => (inv.delta_f64(), inv.mu, false),
        AnalysisOutcome::Degenerate(_) => (0.0, 0, true),
    };
    let split = if degenerate {
        additive_split(phase).map(|(a, b, c)| (to_f64_vec(&a), to_f64_vec(&b), to_f64_vec(&c)))
    } else {
        None
    };

    let mut values = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let value = match &split {
            Some((a, b, c)) => {
                // canceling extremizers: f = e^{-i lambda A}, etc.
                let fa = move |x: f64| Complex64::from_polar(1.0, -lambda * horner(a, x));
                let gb = move |y: f64| Complex64::from_polar(1.0, -lambda * horner(b, y));
                let hc = move |z: f64| Complex64::from_polar(1.0, -lambda * horner(c, z));
                trilinear_form(
                    phase,
                    lambda,
                    &Weight::Fn(&fa),
                    &Weight::Fn(&gb),
                    &Weight::Fn(&hc),
                    cutoff,
                    cfg,
                )?
            }
            None => trilinear_form(
                phase,
                lambda,
                &Weight::One,
                &Weight::One,
                &Weight::One,
                cutoff,
                cfg,
            )?,
        };
        values.push(value);
    }
    let magnitudes: Vec<f64> = values.iter().map(|v| v.norm()).collect();

    // least squares on log |form|
    let logs: Vec<f64> = magnitudes.iter().map(|m| m.max(1e-300).ln()).collect();
    let ones = vec![1.0; lambda_grid.len()];
    let neg_loglam: Vec<f64> = lambda_grid.iter().map(|l| -l.ln()).collect();
    let (fitted_delta, fitted_mu, residual) = if mu_pred > 0 {
        let loglog: Vec<f64> = lambda_grid.iter().map(|l| (2.0 + l).ln().ln()).collect();
        let (c, rms) = fit::least_squares(&[ones, neg_loglam, loglog], &logs);
        (c[1], c[2], rms)
    } else {
        let (c, rms) = fit::least_squares(&[ones, neg_loglam], &logs);
        (c[1], 0.0, rms)
    };

    // envelope against the prediction, calibrated at the smallest lambda
    let ratio = |m: f64, l: f64| m * l.powf(delta_pred) / (2.0 + l).ln().powf(mu_pred as f64);
    let r0 = ratio(magnitudes[0], lambda_grid[0]);
    let envelope_constant = lambda_grid
        .iter()
        .zip(&magnitudes)
        .map(|(&l, &m)| ratio(m, l) / r0)
        .fold(0.0f64, f64::max);
    let predicted_bound: Vec<f64> = lambda_grid
        .iter()
        .map(|&l| r0 * l.powf(-delta_pred) * (2.0 + l).ln().powf(mu_pred as f64))
        .collect();

    Ok(DecayFit {
        lambdas: lambda_grid.to_vec(),
        values_re: values.iter().map(|v| v.re).collect(),
        values_im: values.iter().map(|v| v.im).collect(),
        magnitudes,
        fitted_delta,
        fitted_mu,
        residual,
        envelope_constant,
        delta_predicted: delta_pred,
        mu_predicted: mu_pred,
        predicted_bound,
        degenerate,
    })
}

// ---------------------------------------------------------------------------
// Sublevel measurement
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub enum SublevelMethod {
    /// Deterministic counting on an `n x n` midpoint grid.
    Grid(u32),
    /// `(samples, seed)` Monte Carlo.
    MonteCarlo(u64, u64),
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SublevelEstimate {
    pub measure: f64,
    /// standard error (Monte Carlo only)
    pub stderr: Option<f64>,
    /// area of cells whose classification is boundary-uncertain at the
    /// grid resolution (deterministic method only)
    pub uncertain: Option<f64>,
}

/// Measure report across a decreasing epsilon scan, with the fitted decay
/// exponent of measure against epsilon.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SublevelReport {
    pub epsilons: Vec<f64>,
    pub measures: Vec<f64>,
    pub stderrs: Vec<Option<f64>>,
    /// exponent of the model preferred between `C eps^e` and
    /// `C eps^e log(1/eps)^nu`
    pub fitted_exponent: f64,
    pub log_model_preferred: bool,
    pub fitted_exponent_plain: f64,
    pub fitted_log_power: f64,
}

/// Area of `{(x, y) in [-1, 1]^2 : |S(x, y)| < eps}`.
pub fn sublevel_measure(
    phase: &FracPoly,
    eps: f64,
    method: SublevelMethod,
) -> Result<SublevelEstimate, QuadError> {
    let scan = sublevel_scan(phase, &[eps], method)?;
    Ok(scan.0.into_iter().next().unwrap())
}

/// One pass over the domain classifying all thresholds at once.
/// Thresholds must be positive; they are processed as given.
pub fn sublevel_scan(
    phase: &FracPoly,
    epsilons: &[f64],
    method: SublevelMethod,
) -> Result<(Vec<SublevelEstimate>, SublevelReport), QuadError> {
    if !phase.has_integer_exponents() {
        return Err(QuadError::InvalidPhase);
    }
    let lip = grad_bound_x(phase, 1.0) + grad_bound_x(&phase.swap_xy(), 1.0);
    let mut counts = vec![0u64; epsilons.len()];
    let mut uncertain = vec![0u64; epsilons.len()];
    let estimates: Vec<SublevelEstimate> = match method {
        SublevelMethod::Grid(n) => {
            let n = n as usize;
            let h = 2.0 / n as f64;
            let rows: Vec<(Vec<u64>, Vec<u64>)> = (0..n)
                .into_par_iter()
                .with_min_len(8)
                .map(|i| {
                    let x = -1.0 + (i as f64 + 0.5) * h;
                    let mut c = vec![0u64; epsilons.len()];
                    let mut u = vec![0u64; epsilons.len()];
                    for j in 0..n {
                        let y = -1.0 + (j as f64 + 0.5) * h;
                        let v = phase.eval_f64_fast(x, y).abs();
                        for (k, &e) in epsilons.iter().enumerate() {
                            if v < e {
                                c[k] += 1;
                            }
                            if (v - e).abs() <= lip * h {
                                u[k] += 1;
                            }
                        }
                    }
                    (c, u)
                })
                .collect();
            for (c, u) in rows {
                for k in 0..epsilons.len() {
                    counts[k] += c[k];
                    uncertain[k] += u[k];
                }
            }
            let cell = 4.0 / (n * n) as f64;
            counts
                .iter()
                .zip(&uncertain)
                .map(|(&c, &u)| SublevelEstimate {
                    measure: c as f64 * cell,
                    stderr: None,
                    uncertain: Some(u as f64 * cell),
                })
                .collect()
        }
        SublevelMethod::MonteCarlo(samples, seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                let x = rng.gen_range(-1.0..1.0);
                let y = rng.gen_range(-1.0..1.0);
                let v = phase.eval_f64_fast(x, y).abs();
                for (k, &e) in epsilons.iter().enumerate() {
                    if v < e {
                        counts[k] += 1;
                    }
                }
            }
            counts
                .iter()
                .map(|&c| {
                    let p = c as f64 / samples as f64;
                    SublevelEstimate {
                        measure: 4.0 * p,
                        stderr: Some(4.0 * (p * (1.0 - p) / samples as f64).sqrt()),
                        uncertain: None,
                    }
                })
                .collect()
        }
    };

    // fit measure ~ eps^e, with and without a log(1/eps) factor
    let usable: Vec<(f64, f64)> = epsilons
        .iter()
        .zip(&estimates)
        .filter(|(_, est)| est.measure > 0.0)
        .map(|(&e, est)| (e, est.measure))
        .collect();
    let (fitted_exponent, log_model_preferred, plain, log_power) = if usable.len() >= 3 {
        let ones = vec![1.0; usable.len()];
        let log_eps: Vec<f64> = usable.iter().map(|(e, _)| e.ln()).collect();
        let log_m: Vec<f64> = usable.iter().map(|(_, m)| m.ln()).collect();
        let (ca, ra) = fit::least_squares(&[ones.clone(), log_eps.clone()], &log_m);
        let loglog: Vec<f64> = usable.iter().map(|(e, _)| (1.0 / e).ln().ln()).collect();
        let (cb, rb) = fit::least_squares(&[ones, log_eps, loglog], &log_m);
        // prefer the log model only on a decisive residual win with a
        // non-negligible log coefficient
        let prefer_log = rb < 0.5 * ra && cb[2].abs() > 0.2;
        if prefer_log {
            (cb[1], true, ca[1], cb[2])
        } else {
            (ca[1], false, ca[1], cb[2])
        }
    } else {
        (f64::NAN, false, f64::NAN, f64::NAN)
    };

    let report = SublevelReport {
        epsilons: epsilons.to_vec(),
        measures: estimates.iter().map(|e| e.measure).collect(),
        stderrs: estimates.iter().map(|e| e.stderr).collect(),
        fitted_exponent,
        log_model_preferred,
        fitted_exponent_plain: plain,
        fitted_log_power: log_power,
    };
    Ok((estimates, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> FracPoly {
        FracPoly::parse(s).unwrap()
    }

    #[test]
    fn additive_split_detects_degenerate_phases() {
        let degen = p("x^3 + y^3").add(&p("x + y").pow(3));
        let (a, b, c) = additive_split(&degen).unwrap();
        assert_eq!(rat_to_f64(&a[3]), 1.0);
        assert_eq!(rat_to_f64(&b[3]), 1.0);
        assert_eq!(rat_to_f64(&c[3]), 1.0);
        assert!(additive_split(&p("x^2*y")).is_none());
    }

    #[test]
    fn lambda_zero_matches_cutoff_mass() {
        let cutoff = CutoffSpec::bump(0.5);
        let cfg = QuadConfig::default();
        let v = trilinear_form(
            &p("x^2*y"),
            0.0,
            &Weight::One,
            &Weight::One,
            &Weight::One,
            &cutoff,
            &cfg,
        )
        .unwrap();
        let rel = (v.re - cutoff.mass()).abs() / cutoff.mass();
        assert!(rel < 1e-6, "relative error {rel}");
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn zero_phase_is_lambda_independent() {
        let cutoff = CutoffSpec::bump(0.5);
        let cfg = QuadConfig::default();
        let vals: Vec<Complex64> = [0.0, 17.0, 4096.0]
            .iter()
            .map(|&l| {
                trilinear_form(
                    &FracPoly::zero(),
                    l,
                    &Weight::One,
                    &Weight::One,
                    &Weight::One,
                    &cutoff,
                    &cfg,
                )
                .unwrap()
            })
            .collect();
        assert_eq!(vals[0], vals[1]);
        assert_eq!(vals[0], vals[2]);
    }

    #[test]
    fn conjugation_symmetry() {
        let cutoff = CutoffSpec::bump(0.5);
        let cfg = QuadConfig::default();
        let phase = p("x^2*y");
        let plus = trilinear_form(
            &phase, 300.0, &Weight::One, &Weight::One, &Weight::One, &cutoff, &cfg,
        )
        .unwrap();
        let minus = trilinear_form(
            &phase, -300.0, &Weight::One, &Weight::One, &Weight::One, &cutoff, &cfg,
        )
        .unwrap();
        assert!((plus - minus.conj()).norm() < 1e-10);
    }

    #[test]
    fn paths_agree_on_shared_grids() {
        let cutoff = CutoffSpec::bump(0.5);
        let lambda = 256.0;
        // x^2 y: linear-phase path vs direct kernel
        let phase = p("x^2*y");
        let lin = linear_phase_path(&phase, lambda, &Weight::One, &Weight::One, &cutoff, 512)
            .unwrap();
        let dir = direct_path(
            &phase,
            lambda,
            &Weight::One,
            &Weight::One,
            &Weight::One,
            &cutoff,
            512,
        )
        .unwrap();
        assert!((lin - dir).norm() <= 1e-9 * dir.norm().max(1e-3), "{lin} vs {dir}");

        // degenerate phase: convolution path vs direct kernel
        let degen = p("x^3 + y^3").add(&p("x + y").pow(3));
        let (a, b, c) = additive_split(&degen).unwrap();
        let conv = convolution_path(
            &to_f64_vec(&a),
            &to_f64_vec(&b),
            &to_f64_vec(&c),
            lambda,
            &Weight::One,
            &Weight::One,
            &Weight::One,
            &cutoff,
            512,
        )
        .unwrap();
        let dir = direct_path(
            &degen,
            lambda,
            &Weight::One,
            &Weight::One,
            &Weight::One,
            &cutoff,
            512,
        )
        .unwrap();
        assert!(
            (conv - dir).norm() <= 1e-10 * dir.norm().max(1e-3),
            "{conv} vs {dir}"
        );
    }

    #[test]
    fn zero_phase_fits_flat() {
        let cutoff = CutoffSpec::bump(0.5);
        let cfg = QuadConfig::default();
        let grid = log_lambda_grid(256.0, 65536.0, 8);
        let fit = decay_fit(&FracPoly::zero(), &grid, &cutoff, &cfg).unwrap();
        assert!(fit.degenerate);
        assert!(fit.fitted_delta.abs() < 1e-8, "{}", fit.fitted_delta);
    }

    #[test]
    fn sublevel_strip_measure_is_linear() {
        // |x| < eps over [-1,1]^2 has measure 4 eps
        let phase = p("x");
        for &eps in &[0.25, 0.0625] {
            let est = sublevel_measure(&phase, eps, SublevelMethod::Grid(1024)).unwrap();
            assert!(
                (est.measure - 4.0 * eps).abs() <= 2.0 / 1024.0 * 4.0,
                "eps {eps}: {}",
                est.measure
            );
        }
        // eps above sup |S| captures the full square
        let est = sublevel_measure(&phase, 2.0, SublevelMethod::Grid(256)).unwrap();
        assert_eq!(est.measure, 4.0);
    }

    #[test]
    fn sublevel_monotone_and_mc_agrees() {
        let phase = p("x^2*y^2");
        let epsilons: Vec<f64> = (1..=10).map(|k| 2f64.powi(-2 * k)).collect();
        let (grid, _) = sublevel_scan(&phase, &epsilons, SublevelMethod::Grid(512)).unwrap();
        for w in grid.windows(2) {
            assert!(w[0].measure >= w[1].measure);
        }
        let (mc, _) =
            sublevel_scan(&phase, &epsilons, SublevelMethod::MonteCarlo(200_000, 9)).unwrap();
        for (g, m) in grid.iter().zip(&mc) {
            let tol = 3.0 * m.stderr.unwrap() + g.uncertain.unwrap();
            assert!(
                (g.measure - m.measure).abs() <= tol,
                "grid {} mc {} tol {}",
                g.measure,
                m.measure,
                tol
            );
        }
    }
}

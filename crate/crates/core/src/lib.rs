//! Exact-arithmetic toolkit for the decay analysis of trilinear oscillatory
//! forms with bivariate polynomial phases.
//!
//! The crate has two halves.  The exact half works over arbitrary-precision
//! rationals: polynomial and fractional-power-polynomial arithmetic
//! ([`fracpoly`]), Newton polygon geometry ([`newton`]), the decay invariants
//! and exponent table ([`invariants`]), and a resolution-of-singularities
//! decomposition with monomial certificates ([`resolve`]).  The numerical
//! half ([`oscquad`]) evaluates the oscillatory form on tensor grids, fits
//! empirical decay exponents against the predictions and measures sublevel
//! sets.

pub mod dd;
pub mod fracpoly;
pub mod invariants;
pub mod newton;
pub mod oscquad;
pub mod rational;
pub mod resolve;
pub mod unipoly;

pub use fracpoly::{Frame, FracPoly};
pub use invariants::{decay_report, AnalysisOutcome, DegenerateReport, PhaseInvariants};
pub use newton::{Face, MainFace, NewtonPolygon, RootList};
pub use rational::Rat;

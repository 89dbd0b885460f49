//! Extremal deformations of circular annuli under radial conformal metrics.
//!
//! Given a radial metric `ρ(z) = h(|z|²)` on a target annulus `A′ = {τ < |z| < σ}`
//! and a source annulus `A = {r < |z| < 1}`, this crate
//!
//! * computes the ρ-Nitsche bound `r*` separating the range where an extremal
//!   (smallest mean distortion) map exists from the "fat" range where it does not,
//! * solves for the extremal radial stretching `f^c` and its ρ-harmonic inverse `h^c`,
//! * evaluates the mean-distortion functional `𝒦_ρ`, the energy `E_ρ` and the sharp
//!   lower bound in the fat regime,
//! * builds the minimizing sequence that approaches that bound, and
//! * checks all of the above against independent oracles (pointwise inequalities,
//!   discrete radial minimization, a log-polar mesh energy minimizer).
//!
//! All 2D integrals are reduced to 1D radial integrals and evaluated with tanh-sinh
//! quadrature; profiles are tabulated with monotone cubic Hermite interpolation.

pub mod error;
pub mod functionals;
pub mod interp;
pub mod maps;
pub mod metric;
pub mod minseq;
pub mod nitsche;
pub mod numerics;
pub mod verify;

pub use error::{Error, Result};
pub use functionals::{Estimate, FunctionalReport, Regime, SharpBound};
pub use maps::{Direction, PointDerivatives, RadialMap, RadialProfile};
pub use metric::{MetricKind, RadialMetric, RegularityReport};
pub use nitsche::{AnnulusGeometry, NitscheBound, NitscheProfile, TargetAnnulus};
pub use numerics::{QuadratureConfig, RootConfig};

pub use num_complex::Complex64;

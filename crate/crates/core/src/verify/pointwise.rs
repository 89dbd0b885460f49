//! Pointwise lower bounds for the distortion of an arbitrary map `f: A′ → A`:
//!
//! `K ≥ sφ′ + (1 - s²φ′²)|f_t|²/(2s²J)` and `K ≥ 1/(sφ′) + (s²φ′² - 1)|f_s|²/(2s²φ′²J)`,
//!
//! both equivalent to `|f_t - i f_s/φ′| ≥ 0`, with equality exactly where
//! `f_s = -iφ′ f_t`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::maps::RadialMap;

type PolarFn = dyn Fn(f64, f64) -> Complex64 + Send + Sync;
type PartialsFn = dyn Fn(f64, f64) -> Result<(Complex64, Complex64)> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DerivativeMode {
    Analytic,
    /// Central differences with step `step` in `s` and in `t`.
    FiniteDifference { step: f64 },
}

/// A map sampled in polar coordinates `(s, t) ↦ f(se^{it})`.
#[derive(Clone)]
pub struct TestMap {
    pub label: String,
    pub seed: Option<u64>,
    pub mode: DerivativeMode,
    sampler: Arc<PolarFn>,
    partials: Option<Arc<PartialsFn>>,
}

impl fmt::Debug for TestMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestMap")
            .field("label", &self.label)
            .field("seed", &self.seed)
            .field("mode", &self.mode)
            .finish()
    }
}

/// `(f_s, f_t)` with an estimate of their error.
#[derive(Debug, Clone, Copy)]
pub struct Partials {
    pub f_s: Complex64,
    pub f_t: Complex64,
    pub err: f64,
}

impl TestMap {
    /// Sampled map differentiated by central differences.
    pub fn sampled<F>(label: impl Into<String>, step: f64, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            seed: None,
            mode: DerivativeMode::FiniteDifference { step },
            sampler: Arc::new(f),
            partials: None,
        }
    }

    /// A radial map with its analytic polar partials.
    pub fn from_radial(map: &RadialMap, label: impl Into<String>) -> Self {
        let a = map.clone();
        let b = map.clone();
        Self {
            label: label.into(),
            seed: None,
            mode: DerivativeMode::Analytic,
            sampler: Arc::new(move |s, t| {
                a.eval(Complex64::from_polar(s, t))
                    .unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            }),
            partials: Some(Arc::new(move |s, t| {
                let d = b.derivatives(Complex64::from_polar(s, t))?;
                Ok((d.f_s, d.f_t))
            })),
        }
    }

    pub fn eval(&self, s: f64, t: f64) -> Complex64 {
        (self.sampler)(s, t)
    }

    pub fn partials(&self, s: f64, t: f64) -> Result<Partials> {
        match (self.mode, &self.partials) {
            (DerivativeMode::Analytic, Some(p)) => {
                let (f_s, f_t) = p(s, t)?;
                Ok(Partials {
                    f_s,
                    f_t,
                    err: 4.0 * f64::EPSILON * (f_s.norm() + f_t.norm()),
                })
            }
            (DerivativeMode::FiniteDifference { step }, _) => {
                let d = |h: f64| {
                    let fs = (self.eval(s + h, t) - self.eval(s - h, t)) / (2.0 * h);
                    let ft = (self.eval(s, t + h) - self.eval(s, t - h)) / (2.0 * h);
                    (fs, ft)
                };
                let (fs1, ft1) = d(step);
                let (fs2, ft2) = d(2.0 * step);
                // Richardson: the O(h²) error of the h-stencil is about a third of the gap
                let err = ((fs1 - fs2).norm() + (ft1 - ft2).norm()) / 3.0
                    + f64::EPSILON * (fs1.norm() + ft1.norm()) * (1.0 + 1.0 / step);
                Ok(Partials {
                    f_s: fs1,
                    f_t: ft1,
                    err,
                })
            }
            (DerivativeMode::Analytic, None) => Err(Error::Config(format!(
                "test map `{}` has no analytic derivatives",
                self.label
            ))),
        }
    }
}

/// Smooth orientation-preserving map `A′(τ, σ) → A(r, 1)`: a monotone radial part
/// with a bounded angular shear, parameters drawn from a seeded generator.
pub fn random_test_map(seed: u64, tau: f64, sigma: f64, r: f64) -> TestMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta: f64 = rng.gen_range(-0.9..0.9);
    let k = rng.gen_range(1..=3) as f64;
    let eps: f64 = rng.gen_range(0.0..0.25) / k;
    let delta: f64 = rng.gen_range(0.0..TAU);
    let twist: f64 = rng.gen_range(-0.5..0.5);
    let log_r = r.ln();
    let width = sigma - tau;
    let step = 1e-4 * width;
    let mut map = TestMap::sampled(format!("random-{seed}"), step, move |s, t| {
        let x = (s - tau) / width;
        let w = x + beta * x * (1.0 - x);
        let modulus = (log_r * (1.0 - w)).exp();
        let angle = t + twist * x + eps * (k * t + delta).sin() * 4.0 * x * (1.0 - x);
        Complex64::from_polar(modulus, angle)
    });
    map.seed = Some(seed);
    map
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub points: usize,
    /// Points with `J ≤ 0` (outside `A⁺`), skipped.
    pub excluded: usize,
    /// Points where either inequality fails by more than ten times the derivative
    /// error estimate.
    pub violations: usize,
    /// Largest `rhs - K` over both inequalities (positive means the inequality failed).
    pub max_violation: f64,
    /// Largest `|K - rhs|` over both inequalities; zero in the equality case.
    pub max_deviation: f64,
    /// Largest `|f_s + iφ′ f_t| / |f_t|`.
    pub max_equality_defect: f64,
    /// Largest derivative error estimate used for the tolerance.
    pub max_discretization_err: f64,
    /// More than 1% of the points were excluded.
    pub orientation_warning: bool,
}

/// Checks both distortion inequalities on an `n_r × n_t` polar grid interior to
/// `A′(lo, hi)`.
pub fn pointwise_check<P>(f: &TestMap, phi_prime: P, lo: f64, hi: f64, n_r: usize, n_t: usize) -> Result<PointwiseReport>
where
    P: Fn(f64) -> f64,
{
    if n_r == 0 || n_t == 0 || !(lo < hi) {
        return Err(Error::Config("pointwise grid needs n_r, n_t > 0 and lo < hi".into()));
    }
    let mut rep = PointwiseReport {
        points: 0,
        excluded: 0,
        violations: 0,
        max_violation: f64::NEG_INFINITY,
        max_deviation: 0.0,
        max_equality_defect: 0.0,
        max_discretization_err: 0.0,
        orientation_warning: false,
    };
    for i in 0..n_r {
        let s = lo + (hi - lo) * (i as f64 + 0.5) / n_r as f64;
        let pp = phi_prime(s);
        if !(pp > 0.0 && pp.is_finite()) {
            return Err(Error::Precondition(format!("φ′({s}) = {pp} must be positive")));
        }
        for j in 0..n_t {
            let t = TAU * j as f64 / n_t as f64;
            rep.points += 1;
            let d = f.partials(s, t)?;
            let im = (d.f_t * d.f_s.conj()).im;
            let jac = im / s;
            let scale = d.f_s.norm() + d.f_t.norm();
            if !(jac > 1e-12 * scale * scale) {
                rep.excluded += 1;
                continue;
            }
            let (fs2, ft2) = (d.f_s.norm_sqr(), d.f_t.norm_sqr());
            let k = (s * fs2 + ft2 / s) / (2.0 * im);
            let sp = s * pp;
            let rhs_ine = sp + (1.0 - sp * sp) / (2.0 * s * s * jac) * ft2;
            let rhs_eni = 1.0 / sp + (sp * sp - 1.0) / (pp * pp) / (2.0 * s * s * jac) * fs2;
            // error of K - rhs from the derivative error: both sides are quadratic in
            // the partials divided by J
            let rel = d.err / scale.max(f64::MIN_POSITIVE);
            let tol = 10.0 * (4.0 * rel * (k.abs() + rhs_ine.abs() + rhs_eni.abs()) + 1e-13 * (1.0 + k));
            rep.max_discretization_err = rep.max_discretization_err.max(rel * k.abs());
            for rhs in [rhs_ine, rhs_eni] {
                let v = rhs - k;
                rep.max_violation = rep.max_violation.max(v);
                rep.max_deviation = rep.max_deviation.max(v.abs());
                if v > tol {
                    rep.violations += 1;
                }
            }
            let defect = (d.f_s + Complex64::i() * pp * d.f_t).norm() / d.f_t.norm();
            rep.max_equality_defect = rep.max_equality_defect.max(defect);
        }
    }
    rep.orientation_warning = rep.excluded * 100 > rep.points;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{nitsche_map, Direction};
    use crate::metric::RadialMetric;
    use crate::nitsche::{solve_c, AnnulusGeometry};
    use crate::numerics::{QuadratureConfig, RootConfig};

    #[test]
    fn extremal_map_attains_equality() {
        let m = RadialMetric::builtin("hyperbolic_disk", &[]).unwrap();
        let geom = AnnulusGeometry::new(0.5, 0.9, 0.6).unwrap();
        let p = Arc::new(solve_c(&m, geom, &QuadratureConfig::default(), &RootConfig::default()).unwrap());
        let f = TestMap::from_radial(&nitsche_map(p.clone(), Direction::Forward, 0.3), "f^c");
        let rep = pointwise_check(&f, |s| p.phi_prime(s), 0.5, 0.9, 20, 16).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_deviation < 1e-8, "{rep:?}");
    }

    #[test]
    fn conformal_scaling_equality() {
        let f = TestMap::sampled("scaling", 1e-4, |s, t| Complex64::from_polar(2.0 * s, t));
        let rep = pointwise_check(&f, |s| 1.0 / s, 0.5, 1.0, 10, 8).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_deviation < 1e-8);
    }

    #[test]
    fn perturbed_map_is_strict() {
        let m = RadialMetric::euclidean();
        let geom = AnnulusGeometry::new(0.5, 1.0, 0.35).unwrap();
        let p = Arc::new(solve_c(&m, geom, &QuadratureConfig::default(), &RootConfig::default()).unwrap());
        let q = p.clone();
        let f = TestMap::sampled("perturbed", 1e-5, move |s, t| {
            let bump = 0.05 * ((s - 0.5) * (1.0 - s) * 4.0).powi(2);
            Complex64::from_polar(q.q(s).unwrap() * (1.0 + bump), t)
        });
        let rep = pointwise_check(&f, |s| p.phi_prime(s), 0.5, 1.0, 10, 4).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_violation < 0.0, "{rep:?}");
        assert!(rep.max_deviation > 1e-5);
    }

    #[test]
    fn seeded_maps_are_reproducible_and_pass() {
        let a = random_test_map(7, 0.5, 1.0, 0.3);
        let b = random_test_map(7, 0.5, 1.0, 0.3);
        assert_eq!(a.eval(0.7, 1.0), b.eval(0.7, 1.0));
        let rep = pointwise_check(&a, |s| 1.3 / s, 0.5, 1.0, 12, 12).unwrap();
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.excluded, 0);
    }
}

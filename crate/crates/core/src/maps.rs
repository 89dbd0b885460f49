//! Radial stretchings `P(s)e^{i(t+α)}` between annuli: evaluation, polar and
//! Wirtinger derivatives, Jacobian, distortion, the reduced harmonic-map ODE and the
//! Hopf differential.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::RadialMetric;
use crate::nitsche::NitscheProfile;

/// A monotone radial profile `P` on a closed interval of source radii.
pub trait RadialProfile: Debug + Send + Sync {
    /// Source radii `[lo, hi]`.
    fn domain(&self) -> (f64, f64);

    /// `P(s)`.
    fn value(&self, s: f64) -> Result<f64>;

    /// `P′(s)`.
    fn deriv(&self, s: f64) -> f64;

    /// `P″(s)` when available in closed form.
    fn second_deriv(&self, _s: f64) -> Option<f64> {
        None
    }

    /// `Φ′ = P′/P`.
    fn log_deriv(&self, s: f64) -> Result<f64> {
        Ok(self.deriv(s) / self.value(s)?)
    }

    /// `Φ′(lo + d)` where the offset `d` is known exactly (singular inner end).
    fn log_deriv_at_offset(&self, s: f64, _d: f64) -> Result<f64> {
        self.log_deriv(s)
    }

    /// Interior points where `P` is only piecewise smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Whether `Φ′` blows up like `(s - lo)^{-1/2}` at the inner end.
    fn singular_at_lo(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `f: A′(τ, σ) → A(r, 1)`.
    Forward,
    /// `h: A(r, 1) → A′(τ, σ)`.
    Inverse,
}

/// `P = q = e^φ` on `[τ, σ]`.
#[derive(Debug, Clone)]
pub struct NitscheForward(pub Arc<NitscheProfile>);

impl RadialProfile for NitscheForward {
    fn domain(&self) -> (f64, f64) {
        (self.0.tau(), self.0.sigma())
    }

    fn value(&self, s: f64) -> Result<f64> {
        self.0.q(s)
    }

    fn deriv(&self, s: f64) -> f64 {
        self.0.q(s).unwrap_or(f64::NAN) * self.0.phi_prime(s)
    }

    fn second_deriv(&self, s: f64) -> Option<f64> {
        let q = self.0.q(s).ok()?;
        let p1 = self.0.phi_prime(s);
        Some(q * (p1 * p1 + self.0.phi_second(s)))
    }

    fn log_deriv(&self, s: f64) -> Result<f64> {
        Ok(self.0.phi_prime(s))
    }

    fn log_deriv_at_offset(&self, _s: f64, d: f64) -> Result<f64> {
        Ok(self.0.phi_prime_at_offset(d))
    }

    fn singular_at_lo(&self) -> bool {
        self.0.is_critical()
    }
}

/// `P = q^{-1}` on `[r_achieved, 1]`.
#[derive(Debug, Clone)]
pub struct NitscheInverse(pub Arc<NitscheProfile>);

impl NitscheInverse {
    fn point(&self, s: f64) -> Result<(f64, f64)> {
        let (x, d) = self.0.q_inverse(s)?;
        Ok((x, self.0.phi_prime_at_offset(d)))
    }
}

impl RadialProfile for NitscheInverse {
    fn domain(&self) -> (f64, f64) {
        (self.0.r_achieved(), 1.0)
    }

    fn value(&self, s: f64) -> Result<f64> {
        Ok(self.0.q_inverse(s)?.0)
    }

    fn deriv(&self, s: f64) -> f64 {
        match self.point(s) {
            Ok((_, pp)) => 1.0 / (s * pp),
            Err(_) => f64::NAN,
        }
    }

    fn second_deriv(&self, s: f64) -> Option<f64> {
        let (x, pp) = self.point(s).ok()?;
        if !pp.is_finite() {
            return None;
        }
        let p1 = 1.0 / (s * pp);
        let w = s * pp;
        Some(-(pp + s * self.0.phi_second(x) * p1) / (w * w))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let nodes = self.0.nodes();
        nodes[1..nodes.len() - 1]
            .iter()
            .map(|n| n.phi.exp())
            .collect()
    }
}

/// `P(s) = a·s^k` on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Power {
    pub coef: f64,
    pub exponent: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Power {
    /// The power map sending `[lo, hi]` onto `[p_lo, p_hi]`.
    pub fn between(lo: f64, hi: f64, p_lo: f64, p_hi: f64) -> Result<Self> {
        if !(0.0 < lo && lo < hi && 0.0 < p_lo && p_lo < p_hi) {
            return Err(Error::Geometry(format!(
                "power map needs 0 < lo < hi and 0 < P(lo) < P(hi), got [{lo}, {hi}] -> [{p_lo}, {p_hi}]"
            )));
        }
        let exponent = (p_hi / p_lo).ln() / (hi / lo).ln();
        Ok(Self {
            coef: p_hi / hi.powf(exponent),
            exponent,
            lo,
            hi,
        })
    }

    /// The map `s ↦ p_hi (s/hi)^k` on `[lo, hi]` with a prescribed exponent.
    pub fn with_exponent(lo: f64, hi: f64, p_hi: f64, exponent: f64) -> Result<Self> {
        if !(0.0 < lo && lo < hi && p_hi > 0.0 && exponent > 0.0) {
            return Err(Error::Parameter(format!(
                "power map needs 0 < lo < hi, P(hi) > 0 and exponent > 0, got [{lo}, {hi}], {p_hi}, {exponent}"
            )));
        }
        Ok(Self {
            coef: p_hi / hi.powf(exponent),
            exponent,
            lo,
            hi,
        })
    }
}

impl RadialProfile for Power {
    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn value(&self, s: f64) -> Result<f64> {
        Ok(self.coef * s.powf(self.exponent))
    }

    fn deriv(&self, s: f64) -> f64 {
        self.coef * self.exponent * s.powf(self.exponent - 1.0)
    }

    fn second_deriv(&self, s: f64) -> Option<f64> {
        Some(self.coef * self.exponent * (self.exponent - 1.0) * s.powf(self.exponent - 2.0))
    }

    fn log_deriv(&self, s: f64) -> Result<f64> {
        Ok(self.exponent / s)
    }
}

/// Polar and Wirtinger derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointDerivatives {
    pub value: Complex64,
    pub f_s: Complex64,
    pub f_t: Complex64,
    pub f_z: Complex64,
    pub f_zbar: Complex64,
    /// `Im(f_t conj f_s)/s`.
    pub jacobian: f64,
    /// `½(sΦ′ + 1/(sΦ′))`.
    pub distortion: f64,
    /// `(s|f_s|² + |f_t|²/s) / (2 Im(f_t conj f_s))`, the same quantity from the
    /// polar partials.
    pub distortion_polar: f64,
    /// `J = 0`; the distortion is then set to 1.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct RadialMap {
    pub direction: Direction,
    pub profile: Arc<dyn RadialProfile>,
    /// Post-rotation `α`: `f(z) = P(|z|) e^{i(arg z + α)}`.
    pub rotation: f64,
    /// Rotation of the source applied before the map.
    pub pre_rotation: f64,
}

/// `f^c` (forward) or `h^c` (inverse) built on a solved profile.
pub fn nitsche_map(profile: Arc<NitscheProfile>, direction: Direction, rotation: f64) -> RadialMap {
    let p: Arc<dyn RadialProfile> = match direction {
        Direction::Forward => Arc::new(NitscheForward(profile)),
        Direction::Inverse => Arc::new(NitscheInverse(profile)),
    };
    RadialMap::new(direction, p, rotation)
}

impl RadialMap {
    pub fn new(direction: Direction, profile: Arc<dyn RadialProfile>, rotation: f64) -> Self {
        Self {
            direction,
            profile,
            rotation: rotation.rem_euclid(std::f64::consts::TAU),
            pre_rotation: 0.0,
        }
    }

    pub fn with_pre_rotation(mut self, angle: f64) -> Self {
        self.pre_rotation = angle.rem_euclid(std::f64::consts::TAU);
        self
    }

    pub fn rotated(mut self, angle: f64) -> Self {
        self.rotation = (self.rotation + angle).rem_euclid(std::f64::consts::TAU);
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        self.profile.domain()
    }

    fn radius(&self, z: Complex64) -> Result<f64> {
        let s = z.norm();
        let (lo, hi) = self.domain();
        let slack = 1e-14 * hi;
        if !(s >= lo - slack && s <= hi + slack) {
            return Err(Error::Domain {
                what: "map argument modulus",
                value: s,
                lo,
                hi,
            });
        }
        Ok(s.clamp(lo, hi))
    }

    fn phase(&self, z: Complex64) -> Complex64 {
        Complex64::from_polar(1.0, z.arg() + self.rotation + self.pre_rotation)
    }

    /// `P(|z|) e^{i(arg z + α)}`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let s = self.radius(z)?;
        Ok(self.phase(z) * self.profile.value(s)?)
    }

    /// Derivatives at an interior point.
    pub fn derivatives(&self, z: Complex64) -> Result<PointDerivatives> {
        let s = z.norm();
        let (lo, hi) = self.domain();
        if !(s > lo && s < hi) {
            return Err(Error::Domain {
                what: "interior point modulus",
                value: s,
                lo,
                hi,
            });
        }
        let p = self.profile.value(s)?;
        let dp = self.profile.deriv(s);
        let phase = self.phase(z);
        let value = phase * p;
        let f_s = phase * dp;
        let f_t = phase * Complex64::i() * p;
        let e_it = Complex64::from_polar(1.0, z.arg());
        let f_z = 0.5 * e_it.conj() * (f_s - Complex64::i() * f_t / s);
        let f_zbar = 0.5 * e_it * (f_s + Complex64::i() * f_t / s);
        let im = (f_t * f_s.conj()).im;
        let jacobian = im / s;
        if jacobian < 0.0 {
            return Err(Error::Orientation(format!("J = {jacobian} at |z| = {s}")));
        }
        if jacobian == 0.0 || !dp.is_finite() {
            return Ok(PointDerivatives {
                value,
                f_s,
                f_t,
                f_z,
                f_zbar,
                jacobian,
                distortion: 1.0,
                distortion_polar: 1.0,
                degenerate: true,
            });
        }
        let x = s * dp / p;
        let distortion = 0.5 * (x + 1.0 / x);
        let distortion_polar = (s * f_s.norm_sqr() + f_t.norm_sqr() / s) / (2.0 * im);
        Ok(PointDerivatives {
            value,
            f_s,
            f_t,
            f_z,
            f_zbar,
            jacobian,
            distortion,
            distortion_polar,
            degenerate: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicityResidual {
    /// `|s²g″ + sg′ - g + (ρ′(g)/ρ(g))(s²g′² - g²)| / max(1, |g|)`.
    pub residual: f64,
    /// `g″` came from finite differences (looser tolerance applies).
    pub finite_difference: bool,
}

fn require_inverse(map: &RadialMap) -> Result<()> {
    if map.direction != Direction::Inverse {
        return Err(Error::Precondition(
            "harmonicity is a property of the inverse-direction map h: A -> A'".into(),
        ));
    }
    Ok(())
}

/// Residual of the reduced ρ-harmonic ODE for `h = g(s)e^{it}`.
pub fn harmonicity_residual(map: &RadialMap, m: &RadialMetric, s: f64) -> Result<HarmonicityResidual> {
    require_inverse(map)?;
    let (lo, hi) = map.domain();
    if !(s > lo && s < hi) {
        return Err(Error::Domain {
            what: "residual radius",
            value: s,
            lo,
            hi,
        });
    }
    let p = map.profile.as_ref();
    let g = p.value(s)?;
    let g1 = p.deriv(s);
    let (g2, finite_difference) = match p.second_deriv(s) {
        Some(v) if v.is_finite() => (v, false),
        _ => {
            let h = 1e-4 * (s - lo).min(hi - s).min(s);
            ((p.deriv(s + h) - p.deriv(s - h)) / (2.0 * h), true)
        }
    };
    let res = s * s * g2 + s * g1 - g + (m.rho_prime(g) / m.rho(g)) * (s * s * g1 * g1 - g * g);
    Ok(HarmonicityResidual {
        residual: res.abs() / g.abs().max(1.0),
        finite_difference,
    })
}

/// Hopf differential `Ψ = ρ²(|h|) h_ζ conj(h_ζ̄)` at `ζ`.
pub fn hopf_differential(map: &RadialMap, m: &RadialMetric, zeta: Complex64) -> Result<Complex64> {
    let d = map.derivatives(zeta)?;
    let rho = m.rho(d.value.norm());
    Ok(rho * rho * d.f_z * d.f_zbar.conj())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfReport {
    pub n_r: usize,
    pub n_t: usize,
    /// Finite-difference step `(hi - lo)/n_r`.
    pub step: f64,
    /// Max `|∂Ψ/∂ζ̄|` by central differences in `x` and `y`.
    pub max_residual: f64,
    /// Max `|Ψ|` over the same nodes.
    pub max_psi: f64,
}

/// Discrete Cauchy–Riemann residual of the Hopf differential on a polar grid.
pub fn hopf_check(map: &RadialMap, m: &RadialMetric, n_r: usize, n_t: usize) -> Result<HopfReport> {
    require_inverse(map)?;
    if n_r < 16 || n_t < 16 {
        return Err(Error::Config(format!(
            "Hopf grid must be at least 16x16, got {n_r}x{n_t}"
        )));
    }
    let (lo, hi) = map.domain();
    let step = (hi - lo) / n_r as f64;
    let margin = (hi - lo) / 8.0;
    let psi = |z: Complex64| hopf_differential(map, m, z);
    let mut max_residual: f64 = 0.0;
    let mut max_psi: f64 = 0.0;
    for i in 0..=n_r {
        let s = lo + (hi - lo) * i as f64 / n_r as f64;
        if s < lo + margin - 1e-12 || s > hi - margin + 1e-12 {
            continue;
        }
        for j in 0..n_t {
            let t = std::f64::consts::TAU * j as f64 / n_t as f64;
            let z = Complex64::from_polar(s, t);
            let dx = (psi(z + step)? - psi(z - step)?) / (2.0 * step);
            let dy = (psi(z + Complex64::i() * step)? - psi(z - Complex64::i() * step)?) / (2.0 * step);
            let dbar = 0.5 * (dx + Complex64::i() * dy);
            max_residual = max_residual.max(dbar.norm());
            max_psi = max_psi.max(psi(z)?.norm());
        }
    }
    Ok(HopfReport {
        n_r,
        n_t,
        step,
        max_residual,
        max_psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nitsche::{solve_c, AnnulusGeometry};
    use crate::numerics::{QuadratureConfig, RootConfig};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn solved(name: &str, tau: f64, sigma: f64, r: f64) -> (RadialMetric, Arc<NitscheProfile>) {
        let m = RadialMetric::builtin(name, &[]).unwrap();
        let geom = AnnulusGeometry::new(tau, sigma, r).unwrap();
        let p = solve_c(&m, geom, &QuadratureConfig::default(), &RootConfig::default()).unwrap();
        (m, Arc::new(p))
    }

    #[test]
    fn conformal_scaling() {
        let (_, p) = solved("euclidean", 0.5, 1.0, 0.5);
        let f = nitsche_map(p, Direction::Forward, 0.0);
        for k in 1..20 {
            let z = Complex64::from_polar(0.5 + 0.5 * k as f64 / 20.0, 0.3 * k as f64);
            assert!((f.eval(z).unwrap() - z).norm() < 1e-9);
            let d = f.derivatives(z).unwrap();
            assert!((d.distortion - 1.0).abs() < 1e-10);
            assert!(d.f_zbar.norm() < 1e-9);
        }
    }

    #[test]
    fn boundary_values_and_rotation() {
        let (_, p) = solved("hyperbolic_disk", 0.5, 0.9, 0.5);
        let f = nitsche_map(p.clone(), Direction::Forward, 0.0);
        let w = f.eval(Complex64::from_polar(0.9, 1.0)).unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-12);
        let w = f.eval(Complex64::new(0.5, 0.0)).unwrap();
        assert!((w.norm() - 0.5).abs() < 1e-9);
        let g = nitsche_map(p, Direction::Forward, PI);
        let z = Complex64::from_polar(0.7, 0.4);
        assert!((g.eval(z).unwrap() + f.eval(z).unwrap()).norm() < 1e-12);
        assert!((f.eval(-z).unwrap() + f.eval(z).unwrap()).norm() < 1e-12);
        assert!(f.eval(Complex64::new(0.95, 0.0)).is_err());
    }

    #[test]
    fn distortion_formulas_agree() {
        let (_, p) = solved("spherical", 0.5, 0.9, 0.4);
        let f = nitsche_map(p.clone(), Direction::Forward, 1.0);
        let h = nitsche_map(p, Direction::Inverse, 0.0);
        for k in 1..30 {
            let z = Complex64::from_polar(0.5 + 0.4 * k as f64 / 30.0, 0.2 * k as f64);
            let d = f.derivatives(z).unwrap();
            assert!(d.distortion >= 1.0);
            assert_relative_eq!(d.distortion, d.distortion_polar, max_relative = 1e-12);
            let wz = d.f_z.norm_sqr();
            let wzb = d.f_zbar.norm_sqr();
            assert_relative_eq!(d.distortion, (wz + wzb) / (wz - wzb), max_relative = 1e-9);
            assert_relative_eq!(d.jacobian, wz - wzb, max_relative = 1e-9);
            // round trip through the inverse
            let back = h.eval(f.eval(z).unwrap() * Complex64::from_polar(1.0, -1.0)).unwrap();
            assert!((back - z).norm() < 1e-9);
        }
    }

    #[test]
    fn power_map_distortion() {
        let p = Power::with_exponent(0.5, 1.0, 1.0, 0.5).unwrap();
        let f = RadialMap::new(Direction::Forward, Arc::new(p), 0.0);
        let d = f.derivatives(Complex64::new(0.0, 0.8)).unwrap();
        assert_relative_eq!(d.distortion, 1.25, max_relative = 1e-14);
    }

    #[test]
    fn ode_residuals() {
        let (m, p) = solved("euclidean", 0.5, 1.0, 0.35);
        let h = nitsche_map(p, Direction::Inverse, 0.0);
        for k in 1..50 {
            let s = 0.35 + 0.65 * k as f64 / 50.0;
            let r = harmonicity_residual(&h, &m, s).unwrap();
            assert!(!r.finite_difference);
            assert!(r.residual < 1e-6, "{} at {s}", r.residual);
        }
        let id = RadialMap::new(
            Direction::Inverse,
            Arc::new(Power::with_exponent(0.5, 1.0, 1.0, 1.0).unwrap()),
            0.0,
        );
        assert_eq!(harmonicity_residual(&id, &m, 0.7).unwrap().residual, 0.0);
        let inv = RadialMetric::builtin("inverse_radius", &[]).unwrap();
        let pw = RadialMap::new(
            Direction::Inverse,
            Arc::new(Power::with_exponent(0.25, 1.0, 1.0, 0.5).unwrap()),
            0.0,
        );
        assert!(harmonicity_residual(&pw, &inv, 0.6).unwrap().residual < 1e-12);
        let fwd = nitsche_map(solved("euclidean", 0.5, 1.0, 0.35).1, Direction::Forward, 0.0);
        assert!(harmonicity_residual(&fwd, &m, 0.7).is_err());
    }

    #[test]
    fn hopf_differential_of_radial_harmonic_map() {
        let (m, p) = solved("euclidean", 0.5, 1.0, 0.35);
        let c = p.c();
        let h = nitsche_map(p, Direction::Inverse, 0.0);
        let z = Complex64::from_polar(0.6, 0.7);
        let psi = hopf_differential(&h, &m, z).unwrap();
        // ρ²(g)(s²g′² - g²) = c along the inverse map, so Ψ = c/(4ζ²)
        let expected = c / (4.0 * z * z);
        assert!((psi - expected).norm() < 1e-8 * expected.norm(), "{psi} vs {expected}");
        assert!(hopf_check(&h, &m, 8, 8).is_err());
        let coarse = hopf_check(&h, &m, 32, 32).unwrap();
        let fine = hopf_check(&h, &m, 64, 64).unwrap();
        assert!(fine.max_residual < coarse.max_residual);
    }

    #[test]
    fn conformal_hopf_vanishes() {
        let m = RadialMetric::euclidean();
        let id = RadialMap::new(
            Direction::Inverse,
            Arc::new(Power::with_exponent(0.5, 1.0, 1.0, 1.0).unwrap()),
            0.0,
        );
        let rep = hopf_check(&id, &m, 16, 16).unwrap();
        assert!(rep.max_psi < 1e-15);
        assert!(rep.max_residual < 1e-12);
    }
}

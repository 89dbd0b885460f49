//! Mean distortion `𝒦_ρ`, energy `E_ρ`, the sharp lower bound in the fat regime and
//! the regime classification.
//!
//! Every functional of a radial map reduces to a radial integral:
//! `𝒦_ρ[f] = 2π ∫ sρ²(s) ½(sΦ′ + 1/(sΦ′)) ds` over the target radii and
//! `E_ρ[h] = π ∫ sρ²(P)(P′² + P²/s²) ds` over the source radii.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::maps::{nitsche_map, Direction, RadialMap};
use crate::metric::{gauss_curvature, RadialMetric};
use crate::nitsche::{critical_profile, nitsche_bound, solve_c, AnnulusGeometry, NitscheProfile};
use crate::nitsche::REGIME_BAND;
use crate::numerics::{integrate, integrate_with_offset, QuadratureConfig, RootConfig};

/// A quadrature result with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub fn new(value: f64, err: f64) -> Self {
        Self { value, err }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NitscheRange,
    Fat,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NitscheRange => "nitsche_range",
            Regime::Fat => "fat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub regime: Regime,
    pub r_star: f64,
    pub degenerate: bool,
    /// `|r - r*|` is inside the tolerance band; the answer is the closed-range one.
    pub near_boundary: bool,
}

/// `r ≥ r*` (Nitsche range) versus `r < r*` (fat), with the band reported.
pub fn classify_regime(
    m: &RadialMetric,
    geom: AnnulusGeometry,
    cfg: &QuadratureConfig,
) -> Result<Classification> {
    let b = nitsche_bound(m, geom.target(), cfg)?;
    let regime = if geom.r >= b.r_star - REGIME_BAND {
        Regime::NitscheRange
    } else {
        Regime::Fat
    };
    Ok(Classification {
        regime,
        r_star: b.r_star,
        degenerate: b.degenerate,
        near_boundary: (geom.r - b.r_star).abs() < REGIME_BAND,
    })
}

/// Integrates `f(s, s - lo)` over `[lo, hi]`, splitting at `breaks`.
pub(crate) fn integrate_pieces<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    singular_lo: bool,
    cfg: &QuadratureConfig,
) -> Result<Estimate>
where
    F: FnMut(f64, f64) -> f64,
{
    let mut cuts = vec![lo];
    cuts.extend(breaks.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    let mut total = Estimate::new(0.0, 0.0);
    for (i, w) in cuts.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let (v, e) = if i == 0 && singular_lo {
            integrate_with_offset(&mut f, a, b, &cfg.singular())?
        } else {
            let base = a - lo;
            integrate_with_offset(|s, d| f(s, base + d), a, b, &cfg.regular())?
        };
        total.value += v;
        total.err += e;
    }
    Ok(total)
}

/// `𝒦_ρ[f] = π ∫ sρ²(s)(sΦ′ + 1/(sΦ′)) ds` for a forward radial map.
pub fn mean_distortion_radial(
    map: &RadialMap,
    m: &RadialMetric,
    cfg: &QuadratureConfig,
) -> Result<Estimate> {
    if map.direction != Direction::Forward {
        return Err(Error::Precondition(
            "mean distortion is evaluated on the forward map f: A' -> A".into(),
        ));
    }
    let p = map.profile.as_ref();
    let (lo, hi) = p.domain();
    let mut failure = None;
    let est = integrate_pieces(
        |s, d| {
            let lp = match p.log_deriv_at_offset(s, d) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    return f64::NAN;
                }
            };
            if !(lp > 0.0) {
                failure.get_or_insert(Error::Orientation(format!("Φ′ = {lp} at s = {s}")));
                return f64::NAN;
            }
            let x = s * lp;
            let rho = m.rho(s);
            s * rho * rho * (x + 1.0 / x)
        },
        lo,
        hi,
        &p.breakpoints(),
        p.singular_at_lo(),
        cfg,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let est = est?;
    Ok(Estimate::new(PI * est.value, PI * est.err))
}

/// `E_ρ[h] = ∫_A ‖Dh‖² ρ²(h) dm`, reduced to `π ∫ sρ²(P)(P′² + P²/s²) ds` over the
/// source radii, with `‖Dh‖² = |h_ζ|² + |h_ζ̄|²`.
pub fn energy_radial(map: &RadialMap, m: &RadialMetric, cfg: &QuadratureConfig) -> Result<Estimate> {
    if map.direction != Direction::Inverse {
        return Err(Error::Precondition(
            "energy is evaluated on the inverse map h: A -> A'".into(),
        ));
    }
    let p = map.profile.as_ref();
    let (lo, hi) = p.domain();
    let mut failure = None;
    let est = integrate_pieces(
        |s, _| {
            let g = match p.value(s) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    return f64::NAN;
                }
            };
            let g1 = p.deriv(s);
            if !(g1 >= 0.0) {
                failure.get_or_insert(Error::Orientation(format!("P′ = {g1} at s = {s}")));
                return f64::NAN;
            }
            let rho = m.rho(g);
            s * rho * rho * (g1 * g1 + g * g / (s * s))
        },
        lo,
        hi,
        &p.breakpoints(),
        false,
        cfg,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let est = est?;
    Ok(Estimate::new(PI * est.value, PI * est.err))
}

/// `π∫ s²ρ²/√(s² + cϱ²) ds + π∫ ρ²√(s² + cϱ²) ds`, the split form of `𝒦_ρ[f^c]`.
pub fn distortion_split_form(profile: &NitscheProfile, cfg: &QuadratureConfig) -> Result<Estimate> {
    let k = profile.kernel();
    let m = profile.metric();
    let e = profile.excess();
    let f = |s: f64, d: f64| {
        let rho = m.rho(s);
        let root = (k.diff(d) + e).sqrt();
        s * s * rho * rho * rho / root + rho * root
    };
    let (v, err) = if profile.is_critical() {
        integrate_with_offset(f, profile.tau(), profile.sigma(), &cfg.singular())?
    } else {
        integrate_with_offset(f, profile.tau(), profile.sigma(), &cfg.regular())?
    };
    Ok(Estimate::new(PI * v, PI * err))
}

/// `𝒦_ρ[f^c]` of a solved profile.
pub fn extremal_value(profile: &Arc<NitscheProfile>, cfg: &QuadratureConfig) -> Result<Estimate> {
    let f = nitsche_map(profile.clone(), Direction::Forward, 0.0);
    mean_distortion_radial(&f, profile.metric(), cfg)
}

/// Lower bound in the fat regime: `𝒦_ρ[f#] + (τ²ρ²(τ)/2) Mod A(r, r′)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpBound {
    /// `𝒦_ρ[f#]`.
    pub critical_value: Estimate,
    /// Inner radius reached by the critical profile.
    pub r_prime: f64,
    /// `(τ²ρ²(τ)/2) · 2π log(r′/r)`.
    pub modulus_term: f64,
    pub bound: Estimate,
}

/// Sharp lower bound for `𝒦_ρ` when `r ≤ r′`.
pub fn sharp_lower_bound(
    m: &RadialMetric,
    geom: AnnulusGeometry,
    cfg: &QuadratureConfig,
) -> Result<SharpBound> {
    let crit = Arc::new(critical_profile(m, geom.target(), cfg)?);
    sharp_lower_bound_from(&crit, geom.r, cfg)
}

/// Same as [`sharp_lower_bound`], reusing a critical profile.
pub fn sharp_lower_bound_from(
    crit: &Arc<NitscheProfile>,
    r: f64,
    cfg: &QuadratureConfig,
) -> Result<SharpBound> {
    let r_prime = crit.r_achieved();
    if r > r_prime + REGIME_BAND {
        return Err(Error::NitscheRange { r, r_star: r_prime });
    }
    let critical_value = extremal_value(crit, cfg)?;
    let g_tau = -crit.c_critical();
    let modulus_term = 0.5 * g_tau * std::f64::consts::TAU * (r_prime / r).ln().max(0.0);
    Ok(SharpBound {
        critical_value,
        r_prime,
        modulus_term,
        bound: Estimate::new(critical_value.value + modulus_term, critical_value.err),
    })
}

/// Functional values of a competitor against the sharp bound of its regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub k_rho: f64,
    pub e_rho: Option<f64>,
    pub lower_bound: f64,
    pub gap: f64,
    pub quadrature_err: f64,
    pub regime: Regime,
}

impl FunctionalReport {
    pub fn new(regime: Regime, k_rho: Estimate, e_rho: Option<Estimate>, lower: Estimate) -> Self {
        let mut err = k_rho.err + lower.err;
        if let Some(e) = e_rho {
            err = err.max(e.err + lower.err);
        }
        Self {
            k_rho: k_rho.value,
            e_rho: e_rho.map(|e| e.value),
            lower_bound: lower.value,
            gap: k_rho.value - lower.value,
            quadrature_err: err,
            regime,
        }
    }
}

/// Report for the extremal map of the Nitsche range: `𝒦_ρ[f^c]`, `E_ρ[h^c]`, and the
/// bound (which the extremal attains).
pub fn extremal_report(
    m: &RadialMetric,
    geom: AnnulusGeometry,
    qcfg: &QuadratureConfig,
    rcfg: &RootConfig,
) -> Result<(Arc<NitscheProfile>, FunctionalReport)> {
    let profile = Arc::new(solve_c(m, geom, qcfg, rcfg)?);
    let k = extremal_value(&profile, qcfg)?;
    let h = nitsche_map(profile.clone(), Direction::Inverse, 0.0);
    let e = energy_radial(&h, m, qcfg)?;
    Ok((profile, FunctionalReport::new(Regime::NitscheRange, k, Some(e), k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureSign {
    Negative,
    Positive,
    Zero,
    Mixed,
}

/// Both sides of `H(σ)/H(τ) ≥ 1 + (τ/(2H(τ))) log²r · (tρ(t))′`, `H(x) = ∫_0^x ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffeomorphismBound {
    pub lhs: f64,
    pub rhs: f64,
    /// Radius where `(tρ(t))′` is evaluated: `τ` for negative, `σ` for positive curvature.
    pub t: f64,
    pub curvature: CurvatureSign,
    /// `None` when the curvature sign does not select an evaluation point.
    pub holds: Option<bool>,
}

/// Necessary condition for a radial diffeomorphism between `A(r,1)` and `A′(τ,σ)`.
pub fn diffeomorphism_bound_check(
    m: &RadialMetric,
    geom: AnnulusGeometry,
    cfg: &QuadratureConfig,
) -> Result<DiffeomorphismBound> {
    if !m.defined_at_zero() {
        return Err(Error::Precondition(format!(
            "metric `{}` is not defined at 0, so H(x) = ∫_0^x ρ is unavailable",
            m.name()
        )));
    }
    let (tau, sigma, r) = (geom.tau, geom.sigma, geom.r);
    if !m.contains(sigma) {
        let (lo, hi) = m.domain();
        return Err(Error::Geometry(format!(
            "sigma = {sigma} outside the metric domain ({lo}, {hi})"
        )));
    }
    let (mut kmin, mut kmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 1..=200 {
        let s = sigma * i as f64 / 200.0;
        let k = gauss_curvature(m, s)?;
        kmin = kmin.min(k);
        kmax = kmax.max(k);
    }
    let tol = 1e-12;
    let curvature = if kmax.abs() <= tol && kmin.abs() <= tol {
        CurvatureSign::Zero
    } else if kmax <= tol {
        CurvatureSign::Negative
    } else if kmin >= -tol {
        CurvatureSign::Positive
    } else {
        CurvatureSign::Mixed
    };
    let h_tau = integrate(|x| m.rho(x), 0.0, tau, &cfg.regular())?.0;
    let h_sigma = h_tau + integrate(|x| m.rho(x), tau, sigma, &cfg.regular())?.0;
    let lhs = h_sigma / h_tau;
    let t = if curvature == CurvatureSign::Positive { sigma } else { tau };
    let slope = m.rho(t) + t * m.rho_prime(t);
    let log_r = r.ln();
    let rhs = 1.0 + tau / (2.0 * h_tau) * log_r * log_r * slope;
    let holds = match curvature {
        CurvatureSign::Negative | CurvatureSign::Positive => Some(lhs >= rhs),
        CurvatureSign::Zero | CurvatureSign::Mixed => None,
    };
    Ok(DiffeomorphismBound {
        lhs,
        rhs,
        t,
        curvature,
        holds,
    })
}

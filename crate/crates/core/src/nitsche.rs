//! The ρ-Nitsche bound, the parameter `c` of the radial harmonic family, and the
//! certified profiles `φ(s) = -∫_s^σ ρ(y) dy / √(y²ρ²(y) + c)`, `q = e^φ`.
//!
//! Every integral is written in terms of the excess `e = c - c#`, `c# = -τ²ρ²(τ)`:
//! the denominator is `√(g(y) - g(τ) + e)` with `g(y) = y²ρ²(y)`, and `g(y) - g(τ)` is
//! evaluated from the exact offset `y - τ` so that nothing cancels near the inner
//! boundary. Profiles are tabulated in `u = √(s - τ)`, where even the critical profile
//! is smooth.

use serde::{Deserialize, Serialize};
use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::metric::{check_regularity, s_rho_range, RadialMetric};
use crate::numerics::{expand_bracket_up, find_root, integrate, integrate_with_offset};
use crate::numerics::{QuadratureConfig, RootConfig};

/// `r` values closer than this to `r*` are treated as the boundary case.
pub const REGIME_BAND: f64 = 1e-8;
/// Interpolation error budget for tabulated profiles.
pub const PROFILE_TOL: f64 = 1e-9;

const BASE_NODES: usize = 512;
const MAX_NODES: usize = 1 << 16;

/// Target annulus `A′ = {τ < |w| < σ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetAnnulus {
    pub tau: f64,
    pub sigma: f64,
}

impl TargetAnnulus {
    pub fn new(tau: f64, sigma: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < sigma && sigma.is_finite()) {
            return Err(Error::Geometry(format!(
                "need 0 < tau < sigma, got tau = {tau}, sigma = {sigma}"
            )));
        }
        Ok(Self { tau, sigma })
    }
}

/// Target annulus `A′(τ, σ)` together with the source annulus `A(r, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusGeometry {
    pub tau: f64,
    pub sigma: f64,
    pub r: f64,
}

impl AnnulusGeometry {
    pub fn new(tau: f64, sigma: f64, r: f64) -> Result<Self> {
        TargetAnnulus::new(tau, sigma)?;
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Geometry(format!("need 0 < r < 1, got r = {r}")));
        }
        Ok(Self { tau, sigma, r })
    }

    pub fn target(&self) -> TargetAnnulus {
        TargetAnnulus {
            tau: self.tau,
            sigma: self.sigma,
        }
    }
}

/// `Mod A(p, q) = 2π log(q/p)`.
pub fn modulus(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && p < q) {
        return Err(Error::Geometry(format!("need 0 < p < q, got p = {p}, q = {q}")));
    }
    Ok(std::f64::consts::TAU * (q / p).ln())
}

/// `g(s) - g(τ)` and friends for a fixed metric and inner radius.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    pub metric: RadialMetric,
    pub tau: f64,
    pub sigma: f64,
    pub g_tau: f64,
    pub gp_tau: f64,
    gpp_tau: f64,
    taylor_below: f64,
}

impl Kernel {
    pub fn new(metric: &RadialMetric, target: TargetAnnulus) -> Self {
        let tau = target.tau;
        Self {
            metric: metric.clone(),
            tau,
            sigma: target.sigma,
            g_tau: metric.s2rho2(tau),
            gp_tau: metric.s2rho2_prime(tau),
            gpp_tau: metric.s2rho2_second(tau),
            taylor_below: 1e-5 * tau,
        }
    }

    /// `g(τ + d) - g(τ)` from the exact offset `d ≥ 0`.
    pub fn diff(&self, d: f64) -> f64 {
        if d < self.taylor_below {
            d * (self.gp_tau + 0.5 * self.gpp_tau * d)
        } else {
            self.metric.s2rho2(self.tau + d) - self.g_tau
        }
    }

    /// `ρ(s)/√(g(s) - g(τ) + e)` at `s = τ + d`.
    pub fn phi_prime(&self, d: f64, e: f64) -> f64 {
        self.metric.rho(self.tau + d) / (self.diff(d) + e).sqrt()
    }

    /// `dφ/du = 2uρ/√(g - g(τ) + e)` with `s = τ + u²`.
    pub fn dphi_du(&self, u: f64, e: f64) -> f64 {
        let d = u * u;
        if d == 0.0 {
            return if e > 0.0 {
                0.0
            } else {
                2.0 * self.metric.rho(self.tau) / self.gp_tau.sqrt()
            };
        }
        2.0 * u * self.phi_prime(d, e)
    }

    pub fn u_max(&self) -> f64 {
        (self.sigma - self.tau).sqrt()
    }

    /// Width in `u` of the region where `e` dominates `g - g(τ)`.
    pub fn layer(&self, e: f64) -> f64 {
        if e > 0.0 && self.gp_tau > 0.0 {
            (e / self.gp_tau).sqrt()
        } else {
            0.0
        }
    }

    /// `∫_{ua}^{ub} dφ/du du`, split at multiples of the layer width.
    pub fn increment(&self, ua: f64, ub: f64, e: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
        if ua == ub {
            return Ok((0.0, 0.0));
        }
        let cfg = cfg.regular();
        let mut cuts = vec![ua];
        let layer = self.layer(e);
        for k in [1.0, 8.0, 64.0] {
            let c = k * layer;
            if c > ua && c < ub && (c - ua) > 1e-3 * (ub - ua) && (ub - c) > 1e-3 * (ub - ua) {
                cuts.push(c);
            }
        }
        cuts.push(ub);
        let (mut v, mut err) = (0.0, 0.0);
        for w in cuts.windows(2) {
            let (a, b) = integrate(|u| self.dphi_du(u, e), w[0], w[1], &cfg)?;
            v += a;
            err += b;
        }
        Ok((v, err))
    }

    /// `-log R = ∫_τ^σ ρ/√(g - g(τ) + e)`.
    pub fn total(&self, e: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
        self.increment(0.0, self.u_max(), e, cfg)
    }

    /// `sρ` constant on the range, or `g′(τ) = 0`: the critical integral diverges.
    pub fn degenerate(&self) -> bool {
        let (lo, hi) = s_rho_range(&self.metric, self.tau, self.sigma, 256);
        hi - lo < 1e-12 * hi || self.gp_tau <= 1e-12 * self.g_tau / self.tau
    }
}

pub(crate) fn check_target(m: &RadialMetric, target: TargetAnnulus) -> Result<()> {
    TargetAnnulus::new(target.tau, target.sigma)?;
    for (what, s) in [("tau", target.tau), ("sigma", target.sigma)] {
        if !m.contains(s) {
            let (lo, hi) = m.domain();
            return Err(Error::Geometry(format!(
                "{what} = {s} is outside the domain of metric `{}` ({lo}, {hi})",
                m.name()
            )));
        }
    }
    let rep = check_regularity(m, target.tau, target.sigma, 64)?;
    if !rep.is_regular {
        return Err(Error::NotRegular {
            tau: target.tau,
            sigma: target.sigma,
            reason: format!(
                "inf sρ = {} at s = {} but lim_{{s→τ+}} sρ = {}",
                rep.inf_s_rho, rep.inf_location, rep.boundary_limit
            ),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NitscheBound {
    /// Smallest admissible inner radius `r*` (equal to `r′` of the critical profile).
    pub r_star: f64,
    /// `∫_τ^σ ρ/√(y²ρ² - τ²ρ²(τ))`, infinite when degenerate.
    pub integral: f64,
    pub err: f64,
    /// Set when the critical integral diverges and every `r ∈ (0, 1)` is admissible.
    pub degenerate: bool,
}

/// `r* = exp(-∫_τ^σ ρ(y) dy / √(y²ρ²(y) - τ²ρ²(τ)))`.
pub fn nitsche_bound(
    m: &RadialMetric,
    target: TargetAnnulus,
    cfg: &QuadratureConfig,
) -> Result<NitscheBound> {
    check_target(m, target)?;
    let k = Kernel::new(m, target);
    if k.degenerate() {
        return Ok(NitscheBound {
            r_star: 0.0,
            integral: f64::INFINITY,
            err: 0.0,
            degenerate: true,
        });
    }
    let (integral, err) = integrate_with_offset(
        |y, d| m.rho(y) / k.diff(d).sqrt(),
        target.tau,
        target.sigma,
        &cfg.singular(),
    )?;
    let r_star = (-integral).exp();
    Ok(NitscheBound {
        r_star,
        integral,
        err: r_star * err,
        degenerate: false,
    })
}

/// Monotone profile `φ` on `[τ, σ]`, `φ(σ) = 0`, tabulated in `u = √(s - τ)`.
#[derive(Debug, Clone)]
pub struct NitscheProfile {
    kernel: Kernel,
    c: f64,
    excess: f64,
    r_achieved: f64,
    is_critical: bool,
    table: MonotoneCubic,
    interp_err: f64,
    quad_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileNode {
    pub s: f64,
    pub phi: f64,
}

impl NitscheProfile {
    /// Builds the profile for a given `c ≥ -τ²ρ²(τ)`.
    pub fn from_c(
        m: &RadialMetric,
        target: TargetAnnulus,
        c: f64,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        check_target(m, target)?;
        let kernel = Kernel::new(m, target);
        let c_crit = -kernel.g_tau;
        let excess = c - c_crit;
        if !(excess >= -1e-14 * kernel.g_tau) {
            return Err(Error::Parameter(format!(
                "c = {c} is below the critical value {c_crit}"
            )));
        }
        let excess = excess.max(0.0);
        if excess == 0.0 && kernel.degenerate() {
            return Err(Error::Degenerate(format!(
                "the critical integral diverges for metric `{}` on ({}, {})",
                m.name(),
                target.tau,
                target.sigma
            )));
        }
        Self::tabulate(kernel, excess, cfg)
    }

    fn tabulate(kernel: Kernel, e: f64, cfg: &QuadratureConfig) -> Result<Self> {
        let u_max = kernel.u_max();
        let mut us: Vec<f64> = (0..=BASE_NODES)
            .map(|i| u_max * i as f64 / BASE_NODES as f64)
            .collect();
        us[BASE_NODES] = u_max;
        let layer = kernel.layer(e);
        let first = u_max / BASE_NODES as f64;
        if layer > 0.0 && layer < first {
            let mut x = layer / 256.0;
            while x < first {
                us.push(x);
                x *= 2.0;
            }
            us.sort_by(f64::total_cmp);
            us.dedup();
        }

        // cumulative integral from u = 0 at every node
        let mut quad_err = 0.0;
        let mut cum = vec![0.0; us.len()];
        for i in 1..us.len() {
            let (v, err) = kernel.increment(us[i - 1], us[i], e, cfg)?;
            cum[i] = cum[i - 1] + v;
            quad_err += err;
        }

        let mut worst;
        loop {
            let total = cum[cum.len() - 1];
            let phis: Vec<f64> = cum.iter().map(|v| v - total).collect();
            let slopes: Vec<f64> = us.iter().map(|&u| kernel.dphi_du(u, e)).collect();
            let table = MonotoneCubic::with_slopes(us.clone(), phis, slopes)?;
            // midpoint certification, bisecting failing intervals
            worst = 0.0f64;
            let mut new_us = Vec::with_capacity(us.len());
            let mut new_cum = Vec::with_capacity(us.len());
            for i in 0..us.len() - 1 {
                new_us.push(us[i]);
                new_cum.push(cum[i]);
                let mid = 0.5 * (us[i] + us[i + 1]);
                let (v, err) = kernel.increment(us[i], mid, e, cfg)?;
                let exact = cum[i] + v - total;
                let dev = (table.eval(mid)? - exact).abs();
                worst = worst.max(dev);
                if dev > PROFILE_TOL && us.len() < MAX_NODES {
                    new_us.push(mid);
                    new_cum.push(cum[i] + v);
                    quad_err += err;
                }
            }
            new_us.push(us[us.len() - 1]);
            new_cum.push(total);
            if new_us.len() == us.len() || us.len() >= MAX_NODES {
                if worst > PROFILE_TOL {
                    return Err(Error::Accuracy {
                        what: "profile interpolation",
                        estimate: total,
                        err: worst,
                    });
                }
                let r_achieved = (-total).exp();
                let c = e - kernel.g_tau;
                return Ok(Self {
                    c,
                    excess: e,
                    r_achieved,
                    is_critical: e == 0.0,
                    table,
                    interp_err: worst,
                    quad_err,
                    kernel,
                });
            }
            us = new_us;
            cum = new_cum;
        }
    }

    pub fn metric(&self) -> &RadialMetric {
        &self.kernel.metric
    }

    pub fn tau(&self) -> f64 {
        self.kernel.tau
    }

    pub fn sigma(&self) -> f64 {
        self.kernel.sigma
    }

    pub fn target(&self) -> TargetAnnulus {
        TargetAnnulus {
            tau: self.kernel.tau,
            sigma: self.kernel.sigma,
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `c - c#`.
    pub fn excess(&self) -> f64 {
        self.excess
    }

    /// `-τ²ρ²(τ)`.
    pub fn c_critical(&self) -> f64 {
        -self.kernel.g_tau
    }

    pub fn r_achieved(&self) -> f64 {
        self.r_achieved
    }

    pub fn is_critical(&self) -> bool {
        self.is_critical
    }

    /// Certified interpolation error of `φ` (maximum midpoint deviation).
    pub fn interp_err(&self) -> f64 {
        self.interp_err
    }

    /// Accumulated quadrature error estimate of the tabulated values.
    pub fn quad_err(&self) -> f64 {
        self.quad_err
    }

    pub fn node_count(&self) -> usize {
        self.table.knots().len()
    }

    pub fn nodes(&self) -> Vec<ProfileNode> {
        let tau = self.kernel.tau;
        let n = self.table.knots().len();
        self.table
            .knots()
            .iter()
            .zip(self.table.values())
            .enumerate()
            .map(|(i, (&u, &phi))| ProfileNode {
                s: if i + 1 == n { self.kernel.sigma } else { tau + u * u },
                phi,
            })
            .collect()
    }

    fn check(&self, s: f64) -> Result<f64> {
        if !(s >= self.kernel.tau && s <= self.kernel.sigma) {
            return Err(Error::Domain {
                what: "profile radius",
                value: s,
                lo: self.kernel.tau,
                hi: self.kernel.sigma,
            });
        }
        Ok(s - self.kernel.tau)
    }

    /// `φ(s)` for `s ∈ [τ, σ]`.
    pub fn phi(&self, s: f64) -> Result<f64> {
        let d = self.check(s)?;
        self.phi_at_offset(d)
    }

    /// `φ(τ + d)`.
    pub fn phi_at_offset(&self, d: f64) -> Result<f64> {
        let u = d.max(0.0).sqrt().min(self.kernel.u_max());
        self.table.eval(u)
    }

    /// `φ′(s) = ρ/√(s²ρ² + c)`; infinite at `s = τ` on the critical profile.
    pub fn phi_prime(&self, s: f64) -> f64 {
        self.kernel.phi_prime(s - self.kernel.tau, self.excess)
    }

    pub fn phi_prime_at_offset(&self, d: f64) -> f64 {
        self.kernel.phi_prime(d, self.excess)
    }

    /// `φ″(s) = ρ′/√D - ½ρ g′(s)/D^{3/2}`, `D = s²ρ² + c`.
    pub fn phi_second(&self, s: f64) -> f64 {
        let d = s - self.kernel.tau;
        let m = &self.kernel.metric;
        let big_d = self.kernel.diff(d) + self.excess;
        m.rho_prime(s) / big_d.sqrt() - 0.5 * m.rho(s) * m.s2rho2_prime(s) / (big_d * big_d.sqrt())
    }

    /// `q(s) = e^{φ(s)}`.
    pub fn q(&self, s: f64) -> Result<f64> {
        Ok(self.phi(s)?.exp())
    }

    /// `q^{-1}(x)` for `x ∈ [r_achieved, 1]`, returned as `(s, s - τ)`.
    pub fn q_inverse(&self, x: f64) -> Result<(f64, f64)> {
        if !(x > 0.0) {
            return Err(Error::Domain {
                what: "profile value",
                value: x,
                lo: self.r_achieved,
                hi: 1.0,
            });
        }
        self.phi_inverse(x.ln())
    }

    /// Inverse of `φ`, returned as `(s, s - τ)`.
    pub fn phi_inverse(&self, phi: f64) -> Result<(f64, f64)> {
        let lo = self.table.values()[0];
        // tolerate the rounding of exp/ln at the end points
        let phi = if phi < lo && phi > lo - 1e-13 {
            lo
        } else if phi > 0.0 && phi < 1e-13 {
            0.0
        } else {
            phi
        };
        let u = self.table.invert(phi)?;
        if u >= self.kernel.u_max() {
            return Ok((self.kernel.sigma, self.kernel.sigma - self.kernel.tau));
        }
        let d = u * u;
        Ok((self.kernel.tau + d, d))
    }

    /// Quadrature value of `∫_a^b φ′` (independent of the table).
    pub fn integral_between(&self, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
        let da = self.check(a)?;
        let db = self.check(b)?;
        Ok(self
            .kernel
            .increment(da.sqrt(), db.sqrt(), self.excess, cfg)?
            .0)
    }

    pub(crate) fn kernel(&self) -> &Kernel {
        &self.kernel
    }
}

/// Finds `c` with `R(c) = r`; at `r = r*` (within [`REGIME_BAND`]) the critical profile.
pub fn solve_c(
    m: &RadialMetric,
    geom: AnnulusGeometry,
    qcfg: &QuadratureConfig,
    rcfg: &RootConfig,
) -> Result<NitscheProfile> {
    if !(geom.r < 1.0) {
        return Err(Error::Geometry(format!("need r < 1, got r = {}", geom.r)));
    }
    AnnulusGeometry::new(geom.tau, geom.sigma, geom.r)?;
    let target = geom.target();
    let bound = nitsche_bound(m, target, qcfg)?;
    if geom.r < bound.r_star - REGIME_BAND {
        return Err(Error::FatRange {
            r: geom.r,
            r_star: bound.r_star,
        });
    }
    let kernel = Kernel::new(m, target);
    if !bound.degenerate && geom.r <= bound.r_star + REGIME_BAND {
        return NitscheProfile::tabulate(kernel, 0.0, qcfg);
    }

    let target_log = -geom.r.ln();
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let g = |w: f64| -> f64 {
        match kernel.total(w * w, qcfg) {
            Ok((v, _)) => target_log - v,
            Err(err) => {
                failure.borrow_mut().get_or_insert(err);
                f64::NAN
            }
        }
    };
    let failed = |x: f64| failure.borrow_mut().take().unwrap_or(Error::Evaluation { x });
    let scale = kernel.g_tau.sqrt();
    let bracket = if bound.degenerate {
        // G(w) → -∞ as w → 0: walk down until negative, or up until positive
        let mut w = scale;
        let gw = g(w);
        if gw.is_nan() {
            return Err(failed(w));
        }
        if gw > 0.0 {
            let mut hi = w;
            let mut found = None;
            for _ in 0..200 {
                w *= 0.5;
                let v = g(w);
                if v.is_nan() {
                    return Err(failed(w));
                }
                if v <= 0.0 {
                    found = Some((w, hi));
                    break;
                }
                hi = w;
            }
            found.ok_or(Error::Bracket {
                lo: w,
                hi: scale,
                f_lo: f64::NAN,
                f_hi: gw,
                hint: "; r too close to 0 for the degenerate metric",
            })?
        } else {
            expand_bracket_up(g, w, scale).map_err(|e| failure.take().unwrap_or(e))?
        }
    } else {
        expand_bracket_up(g, 0.0, scale).map_err(|e| failure.take().unwrap_or(e))?
    };
    let w = find_root(g, bracket, rcfg).map_err(|e| failure.take().unwrap_or(e))?;
    if let Some(err) = failure.take() {
        return Err(err);
    }
    let profile = NitscheProfile::tabulate(kernel, w * w, qcfg)?;
    let mismatch = (profile.r_achieved - geom.r).abs();
    if mismatch > 1e-9 * geom.r.max(1e-3) {
        return Err(Error::Accuracy {
            what: "solve_c inner radius",
            estimate: profile.c,
            err: mismatch,
        });
    }
    Ok(profile)
}

/// Profile with `c = -τ²ρ²(τ)`; its inner radius is `r′ = r*`.
pub fn critical_profile(
    m: &RadialMetric,
    target: TargetAnnulus,
    cfg: &QuadratureConfig,
) -> Result<NitscheProfile> {
    check_target(m, target)?;
    let kernel = Kernel::new(m, target);
    if kernel.degenerate() {
        return Err(Error::Degenerate(format!(
            "sρ(s) is constant (or stationary at τ) for metric `{}` on ({}, {})",
            m.name(),
            target.tau,
            target.sigma
        )));
    }
    NitscheProfile::tabulate(kernel, 0.0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn euclid() -> RadialMetric {
        RadialMetric::euclidean()
    }

    #[test]
    fn modulus_examples() {
        assert_relative_eq!(modulus(0.5, 1.0).unwrap(), 4.355172180607204, max_relative = 1e-14);
        let e = std::f64::consts::E;
        assert_relative_eq!(modulus(0.3, 0.3 * e).unwrap(), std::f64::consts::TAU, max_relative = 1e-14);
        assert_relative_eq!(
            modulus(0.25, 1.0).unwrap(),
            2.0 * modulus(0.5, 1.0).unwrap(),
            max_relative = 1e-14
        );
        assert!(modulus(1.0, 0.5).is_err());
    }

    #[test]
    fn classical_bound() {
        let b = nitsche_bound(&euclid(), TargetAnnulus::new(0.5, 1.0).unwrap(), &q()).unwrap();
        assert!(!b.degenerate);
        assert!((b.r_star - (2.0 - 3f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn bound_tends_to_one_for_thin_targets() {
        let b = nitsche_bound(&euclid(), TargetAnnulus::new(0.5, 0.5001).unwrap(), &q()).unwrap();
        assert!(b.r_star > 0.97);
    }

    #[test]
    fn inverse_radius_is_degenerate() {
        let m = RadialMetric::builtin("inverse_radius", &[]).unwrap();
        let t = TargetAnnulus::new(0.3, 2.0).unwrap();
        let b = nitsche_bound(&m, t, &q()).unwrap();
        assert!(b.degenerate);
        assert_eq!(b.r_star, 0.0);
        assert!(matches!(critical_profile(&m, t, &q()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn power_map_parameter() {
        let m = RadialMetric::builtin("inverse_radius", &[]).unwrap();
        let geom = AnnulusGeometry::new(0.5, 1.0, 0.25).unwrap();
        let p = solve_c(&m, geom, &q(), &RootConfig::default()).unwrap();
        assert!((p.c() + 0.75).abs() < 1e-10, "c = {}", p.c());
        for i in 0..=20 {
            let s = 0.5 + 0.5 * i as f64 / 20.0;
            // φ = (1/α) log(s/σ) with α = log(σ/τ)/log(1/r) = 1/2
            assert!((p.phi(s).unwrap() - 2.0 * s.ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn conformal_parameter() {
        let geom = AnnulusGeometry::new(0.5, 1.0, 0.5).unwrap();
        let p = solve_c(&euclid(), geom, &q(), &RootConfig::default()).unwrap();
        assert!(p.c().abs() < 1e-10);
        assert!((p.phi(0.7).unwrap() - 0.7f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn critical_case_matches_bound() {
        let t = TargetAnnulus::new(0.5, 1.0).unwrap();
        let crit = critical_profile(&euclid(), t, &q()).unwrap();
        assert!(crit.is_critical());
        assert_relative_eq!(crit.c(), -0.25);
        assert!((crit.r_achieved() - (2.0 - 3f64.sqrt())).abs() < 1e-9);

        let geom = AnnulusGeometry::new(0.5, 1.0, 0.2679492).unwrap();
        let p = solve_c(&euclid(), geom, &q(), &RootConfig::default()).unwrap();
        assert!((p.c() + 0.25).abs() < 1e-8);

        let geom = AnnulusGeometry::new(0.5, 1.0, 0.1).unwrap();
        assert!(matches!(
            solve_c(&euclid(), geom, &q(), &RootConfig::default()),
            Err(Error::FatRange { .. })
        ));
    }

    #[test]
    fn near_critical_solution_is_certified() {
        let t = TargetAnnulus::new(0.5, 1.0).unwrap();
        let r_star = 2.0 - 3f64.sqrt();
        for r in [r_star + 1e-7, r_star + 1e-4, 0.3, 0.9] {
            let geom = AnnulusGeometry::new(t.tau, t.sigma, r).unwrap();
            let p = solve_c(&euclid(), geom, &q(), &RootConfig::default()).unwrap();
            assert!((p.r_achieved() - r).abs() < 1e-9, "r = {r}");
            assert!(p.interp_err() <= PROFILE_TOL);
            // sign of s²φ′² - 1 is the sign of -c
            for node in p.nodes().iter().skip(1) {
                let v = node.s * node.s * p.phi_prime(node.s).powi(2) - 1.0;
                assert!(v * -p.c() >= -1e-12, "sign invariant at s = {}", node.s);
            }
        }
    }

    #[test]
    fn hyperbolic_critical_regression() {
        let m = RadialMetric::builtin("hyperbolic_disk", &[]).unwrap();
        let t = TargetAnnulus::new(0.5, 0.9).unwrap();
        let crit = critical_profile(&m, t, &q()).unwrap();
        let b = nitsche_bound(&m, t, &q()).unwrap();
        assert!(crit.r_achieved() > 0.0 && crit.r_achieved() < 1.0);
        assert!((crit.r_achieved() - b.r_star).abs() < 1e-9);
        let geom = AnnulusGeometry::new(0.5, 0.9, crit.r_achieved()).unwrap();
        let p = solve_c(&m, geom, &q(), &RootConfig::default()).unwrap();
        assert!((p.c() - crit.c()).abs() < 1e-8);
    }

    #[test]
    fn inverse_round_trip() {
        let geom = AnnulusGeometry::new(0.5, 1.0, 0.3).unwrap();
        let p = solve_c(&euclid(), geom, &q(), &RootConfig::default()).unwrap();
        for i in 0..=50 {
            let s = 0.5 + 0.5 * i as f64 / 50.0;
            let (back, _) = p.q_inverse(p.q(s).unwrap()).unwrap();
            assert!((back - s).abs() < 1e-10, "{s} -> {back}");
        }
        let (s, d) = p.q_inverse(p.r_achieved()).unwrap();
        assert_eq!((s, d), (0.5, 0.0));
        assert_eq!(p.q_inverse(1.0).unwrap().0, 1.0);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(TargetAnnulus::new(1.0, 0.5).is_err());
        assert!(AnnulusGeometry::new(0.5, 1.0, 1.0).is_err());
        let m = RadialMetric::builtin("hyperbolic_disk", &[]).unwrap();
        assert!(nitsche_bound(&m, TargetAnnulus::new(0.5, 1.0).unwrap(), &q()).is_err());
    }
}

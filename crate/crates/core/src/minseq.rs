//! Minimizing sequence for fat annuli: the critical profile on `[s_n, σ]` spliced with
//! the power map `r z|z|^{n-1}/τ^n` on `[τ, s_n]`.
//!
//! The splice radius solves `φ#(s_n) = log r + n log(s_n/τ)`. Both the root search and
//! the distortion integral run in `u = √(s - τ)` with exact offsets, so that large `n`
//! (where `s_n - τ` is of order `1/n`) loses no accuracy.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functionals::{sharp_lower_bound_from, Estimate, SharpBound};
use crate::maps::{Direction, RadialMap, RadialProfile};
use crate::metric::RadialMetric;
use crate::nitsche::{critical_profile, AnnulusGeometry, NitscheProfile};
use crate::numerics::{find_root, integrate, QuadratureConfig, RootConfig};

/// Default ladder of `n` values.
pub const DEFAULT_LADDER: [u64; 6] = [10, 30, 100, 300, 1000, 3000];

/// Forward profile of `f_n`: `r(s/τ)^n` below `s_n`, `q#(s)` above.
#[derive(Debug, Clone)]
pub struct SplicedProfile {
    pub critical: Arc<NitscheProfile>,
    pub r: f64,
    pub n: u64,
    pub s_n: f64,
    /// `s_n - τ`, exact.
    pub offset: f64,
}

impl SplicedProfile {
    fn tau(&self) -> f64 {
        self.critical.tau()
    }

    /// Modulus of the inner piece at `s`.
    pub fn inner_value(&self, s: f64) -> f64 {
        self.r * (self.n as f64 * ((s - self.tau()) / self.tau()).ln_1p()).exp()
    }
}

impl RadialProfile for SplicedProfile {
    fn domain(&self) -> (f64, f64) {
        (self.critical.tau(), self.critical.sigma())
    }

    fn value(&self, s: f64) -> Result<f64> {
        if s <= self.s_n {
            let (lo, hi) = self.domain();
            if s < lo {
                return Err(Error::Domain {
                    what: "profile radius",
                    value: s,
                    lo,
                    hi,
                });
            }
            Ok(self.inner_value(s))
        } else {
            self.critical.q(s)
        }
    }

    fn deriv(&self, s: f64) -> f64 {
        match self.value(s) {
            Ok(v) => v * self.log_deriv(s).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    }

    fn log_deriv(&self, s: f64) -> Result<f64> {
        Ok(if s <= self.s_n {
            self.n as f64 / s
        } else {
            self.critical.phi_prime(s)
        })
    }

    fn log_deriv_at_offset(&self, s: f64, d: f64) -> Result<f64> {
        Ok(if d <= self.offset {
            self.n as f64 / s
        } else {
            self.critical.phi_prime_at_offset(d)
        })
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.s_n]
    }
}

#[derive(Debug, Clone)]
pub struct MinSeqElement {
    pub n: u64,
    pub s_n: f64,
    /// `s_n - τ`.
    pub offset: f64,
    pub k_rho_n: Estimate,
    pub profile: Arc<SplicedProfile>,
}

impl MinSeqElement {
    pub fn map(&self) -> RadialMap {
        RadialMap::new(Direction::Forward, self.profile.clone(), 0.0)
    }
}

fn check_fat(crit: &NitscheProfile, r: f64) -> Result<()> {
    if !(r < crit.r_achieved()) {
        return Err(Error::NitscheRange {
            r,
            r_star: crit.r_achieved(),
        });
    }
    Ok(())
}

/// Root `s_n` of `q#(s) = r(s/τ)^n`, returned as `(s_n, s_n - τ)`.
pub fn splice_radius(
    crit: &NitscheProfile,
    r: f64,
    n: u64,
    qcfg: &QuadratureConfig,
    rcfg: &RootConfig,
) -> Result<(f64, f64)> {
    check_fat(crit, r)?;
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    let tau = crit.tau();
    let nf = n as f64;
    let u_max = (crit.sigma() - tau).sqrt();
    let f_hi = -r.ln() - nf * (crit.sigma() / tau).ln();
    if f_hi >= 0.0 {
        return Err(Error::Bracket {
            lo: tau,
            hi: crit.sigma(),
            f_lo: (crit.r_achieved() / r).ln(),
            f_hi,
            hint: "; increase n until r (sigma/tau)^n > 1",
        });
    }
    let log_rp = crit.r_achieved().ln();
    let kernel = crit.kernel();
    let failure = std::cell::RefCell::new(None);
    let p = |u: f64| {
        if u >= u_max {
            return f_hi;
        }
        let rise = match kernel.increment(0.0, u, 0.0, qcfg) {
            Ok((v, _)) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return f64::NAN;
            }
        };
        if u == 0.0 {
            return log_rp - r.ln();
        }
        log_rp + rise - r.ln() - nf * (u * u / tau).ln_1p()
    };
    let u = find_root(p, (0.0, u_max), rcfg).map_err(|e| failure.borrow_mut().take().unwrap_or(e))?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let d = u * u;
    Ok((tau + d, d))
}

/// Builds `f_n` and its mean distortion
/// `K_ρ,n = π ∫_{s_n}^σ sρ²(sφ#′ + 1/(sφ#′)) ds + π(n + 1/n) ∫_τ^{s_n} sρ² ds`.
pub fn build_element(
    crit: &Arc<NitscheProfile>,
    r: f64,
    n: u64,
    qcfg: &QuadratureConfig,
    rcfg: &RootConfig,
) -> Result<MinSeqElement> {
    let (s_n, offset) = splice_radius(crit, r, n, qcfg, rcfg)?;
    let m = crit.metric();
    let tau = crit.tau();
    let nf = n as f64;
    // outer piece in u = √(s - τ): ds = 2u du and sφ′ ~ 1/u stay balanced
    let u_n = offset.sqrt();
    let u_max = (crit.sigma() - tau).sqrt();
    let (outer, outer_err) = integrate(
        |u| {
            let d = u * u;
            let s = tau + d;
            let rho = m.rho(s);
            let x = s * crit.phi_prime_at_offset(d);
            2.0 * u * s * rho * rho * (x + 1.0 / x)
        },
        u_n,
        u_max,
        &qcfg.regular(),
    )?;
    let (inner, inner_err) = integrate(
        |s| {
            let rho = m.rho(s);
            s * rho * rho
        },
        tau,
        s_n,
        &qcfg.regular(),
    )?;
    let weight = nf + 1.0 / nf;
    let k = Estimate::new(
        PI * (outer + weight * inner),
        PI * (outer_err + weight * inner_err),
    );
    Ok(MinSeqElement {
        n,
        s_n,
        offset,
        k_rho_n: k,
        profile: Arc::new(SplicedProfile {
            critical: crit.clone(),
            r,
            n,
            s_n,
            offset,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub n: u64,
    pub s_n: f64,
    /// `n(s_n - τ)`.
    pub n_offset: f64,
    /// `(n/2)(s_n² - τ²)`.
    pub half_n_sq: f64,
    pub k_rho_n: f64,
    pub k_err: f64,
    /// `K_ρ,n - bound`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitStudy {
    pub bound: SharpBound,
    /// `τ log(r′/r)`, the limit of `n(s_n - τ)`.
    pub offset_limit: f64,
    /// `τ² log(r′/r)`, the limit of `(n/2)(s_n² - τ²)`.
    pub half_sq_limit: f64,
    pub rows: Vec<LimitRow>,
    /// Least-squares `C` in `gap ≈ C/n`.
    pub fitted_c: f64,
    /// `K_ρ,n` is non-increasing along the ladder (to 1e-9).
    pub monotone: bool,
    /// Every gap is positive.
    pub above_bound: bool,
}

/// Convergence table of the minimizing sequence along `n_list`.
pub fn limit_study(
    m: &RadialMetric,
    geom: AnnulusGeometry,
    n_list: &[u64],
    qcfg: &QuadratureConfig,
    rcfg: &RootConfig,
) -> Result<LimitStudy> {
    let crit = Arc::new(critical_profile(m, geom.target(), qcfg)?);
    limit_study_from(&crit, geom.r, n_list, qcfg, rcfg)
}

/// Same as [`limit_study`], reusing a critical profile.
pub fn limit_study_from(
    crit: &Arc<NitscheProfile>,
    r: f64,
    n_list: &[u64],
    qcfg: &QuadratureConfig,
    rcfg: &RootConfig,
) -> Result<LimitStudy> {
    check_fat(crit, r)?;
    let bound = sharp_lower_bound_from(crit, r, qcfg)?;
    let tau = crit.tau();
    let log_ratio = (crit.r_achieved() / r).ln();
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let el = build_element(crit, r, n, qcfg, rcfg)?;
        let nf = n as f64;
        rows.push(LimitRow {
            n,
            s_n: el.s_n,
            n_offset: nf * el.offset,
            half_n_sq: 0.5 * nf * el.offset * (2.0 * tau + el.offset),
            k_rho_n: el.k_rho_n.value,
            k_err: el.k_rho_n.err,
            gap: el.k_rho_n.value - bound.bound.value,
        });
    }
    let (num, den) = rows.iter().fold((0.0, 0.0), |(a, b), row| {
        let x = 1.0 / row.n as f64;
        (a + row.gap * x, b + x * x)
    });
    let monotone = rows.windows(2).all(|w| w[1].k_rho_n <= w[0].k_rho_n + 1e-9);
    let above_bound = rows.iter().all(|row| row.gap > 0.0);
    Ok(LimitStudy {
        bound,
        offset_limit: tau * log_ratio,
        half_sq_limit: tau * tau * log_ratio,
        rows,
        fitted_c: if den > 0.0 { num / den } else { f64::NAN },
        monotone,
        above_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::mean_distortion_radial;
    use crate::nitsche::TargetAnnulus;
    use approx::assert_relative_eq;

    fn crit() -> Arc<NitscheProfile> {
        let m = RadialMetric::euclidean();
        Arc::new(
            critical_profile(&m, TargetAnnulus::new(0.5, 1.0).unwrap(), &QuadratureConfig::default())
                .unwrap(),
        )
    }

    #[test]
    fn splice_needs_large_enough_n() {
        let c = crit();
        let (q, rc) = (QuadratureConfig::default(), RootConfig::default());
        assert!(matches!(splice_radius(&c, 0.1, 3, &q, &rc), Err(Error::Bracket { .. })));
        let (s, _) = splice_radius(&c, 0.1, 4, &q, &rc).unwrap();
        assert!(s > 0.5 && s < 1.0);
    }

    #[test]
    fn pieces_match_at_splice() {
        let c = crit();
        let (q, rc) = (QuadratureConfig::default(), RootConfig::default());
        for n in [10, 100, 1000] {
            let el = build_element(&c, 0.1, n, &q, &rc).unwrap();
            let inner = el.profile.inner_value(el.s_n);
            let outer = c.q(el.s_n).unwrap();
            assert!((inner - outer).abs() < 1e-10, "n = {n}: {inner} vs {outer}");
        }
    }

    #[test]
    fn regression_values() {
        let c = crit();
        let (q, rc) = (QuadratureConfig::default(), RootConfig::default());
        for (n, expected) in [(10, 3.61628553225057), (100, 3.50331108353999), (1000, 3.49559606630735)] {
            let el = build_element(&c, 0.1, n, &q, &rc).unwrap();
            assert_relative_eq!(el.k_rho_n.value, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn generic_quadrature_agrees() {
        let c = crit();
        let (q, rc) = (QuadratureConfig::default(), RootConfig::default());
        let el = build_element(&c, 0.1, 30, &q, &rc).unwrap();
        let generic = mean_distortion_radial(&el.map(), c.metric(), &q).unwrap();
        assert_relative_eq!(generic.value, el.k_rho_n.value, max_relative = 1e-8);
        let d = el.map().derivatives(num_complex::Complex64::new(0.5 + 0.5 * el.offset, 0.0)).unwrap();
        assert_relative_eq!(d.distortion, 0.5 * (30.0 + 1.0 / 30.0), max_relative = 1e-12);
    }

    #[test]
    fn study_approaches_bound() {
        let m = RadialMetric::euclidean();
        let geom = AnnulusGeometry::new(0.5, 1.0, 0.1).unwrap();
        let st = limit_study(
            &m,
            geom,
            &[10, 100, 1000],
            &QuadratureConfig::default(),
            &RootConfig::default(),
        )
        .unwrap();
        assert!(st.monotone && st.above_bound);
        assert!(st.rows[2].gap < st.rows[1].gap && st.rows[1].gap < st.rows[0].gap);
        assert!(st.fitted_c > 0.0);
        assert!(limit_study(
            &m,
            AnnulusGeometry::new(0.5, 1.0, 0.5).unwrap(),
            &[10],
            &QuadratureConfig::default(),
            &RootConfig::default()
        )
        .is_err());
    }
}

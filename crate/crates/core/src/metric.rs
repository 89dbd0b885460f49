//! Radial conformal metrics `ρ(z) = h(|z|²)`.
//!
//! A metric is stored as a density in the radial variable `s = |z|` together with its
//! first two derivatives. Builtins carry closed forms; user metrics are tables of
//! `(s, ρ)` pairs interpolated by monotone cubics, differentiated by central
//! differences in `log s`.

use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

/// Relative tolerance certifying `inf sρ(s) = lim_{s→τ+} sρ(s)`.
pub const REGULARITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    InverseRadius,
    HyperbolicDisk,
    PuncturedDisk,
    HyperbolicAnnulus { radius: f64 },
    Spherical,
    Cigar,
    Table,
}

/// Metric description as it appears in configuration files:
/// `{"name": "...", "params": [...]}` or `{"table": [[s, rho], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<[f64; 2]>>,
}

impl MetricSpec {
    pub fn named(name: &str, params: &[f64]) -> Self {
        Self {
            name: Some(name.to_string()),
            params: params.to_vec(),
            table: None,
        }
    }

    pub fn build(&self) -> Result<RadialMetric> {
        match (&self.name, &self.table) {
            (Some(name), None) => RadialMetric::builtin(name, &self.params),
            (None, Some(table)) if self.params.is_empty() => RadialMetric::from_table(table),
            _ => Err(Error::Config(
                "metric needs exactly one of `name` (with optional `params`) or `table`".into(),
            )),
        }
    }
}

#[derive(Debug)]
struct TableDensity {
    interp: MonotoneCubic,
    log_lo: f64,
    log_hi: f64,
}

/// Radial density `s ↦ ρ(s)` on `(domain_lo, domain_hi)`.
///
/// Immutable and cheap to clone; tabulated data are shared.
#[derive(Debug, Clone)]
pub struct RadialMetric {
    name: String,
    kind: MetricKind,
    table: Option<Arc<TableDensity>>,
    domain_lo: f64,
    domain_hi: f64,
    defined_at_zero: bool,
}

impl RadialMetric {
    pub fn builtin(name: &str, params: &[f64]) -> Result<Self> {
        let no_params = |kind: MetricKind, lo: f64, hi: f64, at_zero: bool| {
            if params.is_empty() {
                Ok(Self {
                    name: name.to_string(),
                    kind,
                    table: None,
                    domain_lo: lo,
                    domain_hi: hi,
                    defined_at_zero: at_zero,
                })
            } else {
                Err(Error::Parameter(format!(
                    "metric `{name}` takes no parameters, got {params:?}"
                )))
            }
        };
        match name {
            "euclidean" => no_params(MetricKind::Euclidean, 0.0, f64::INFINITY, true),
            "inverse_radius" => no_params(MetricKind::InverseRadius, 0.0, f64::INFINITY, false),
            "hyperbolic_disk" => no_params(MetricKind::HyperbolicDisk, 0.0, 1.0, true),
            "punctured_disk" => no_params(MetricKind::PuncturedDisk, 0.0, 1.0, false),
            "spherical" => no_params(MetricKind::Spherical, 0.0, f64::INFINITY, true),
            "cigar" => no_params(MetricKind::Cigar, 0.0, f64::INFINITY, true),
            "hyperbolic_annulus" => match params {
                [radius] if *radius > 1.0 && radius.is_finite() => Ok(Self {
                    name: name.to_string(),
                    kind: MetricKind::HyperbolicAnnulus { radius: *radius },
                    table: None,
                    domain_lo: 1.0 / radius,
                    domain_hi: *radius,
                    defined_at_zero: false,
                }),
                _ => Err(Error::Parameter(format!(
                    "hyperbolic_annulus needs one parameter R > 1, got {params:?}"
                ))),
            },
            other => Err(Error::UnknownMetric(other.to_string())),
        }
    }

    pub fn euclidean() -> Self {
        Self::builtin("euclidean", &[]).expect("builtin")
    }

    /// Metric from `(s, ρ)` samples; no extrapolation beyond the first and last radius.
    pub fn from_table(pairs: &[[f64; 2]]) -> Result<Self> {
        if pairs.len() < 4 {
            return Err(Error::Parameter(
                "a metric table needs at least four (s, rho) pairs".into(),
            ));
        }
        if pairs.iter().any(|p| !(p[0] > 0.0) || !(p[1] > 0.0)) {
            return Err(Error::Parameter(
                "metric table radii and densities must be positive".into(),
            ));
        }
        let xs: Vec<f64> = pairs.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p[1]).collect();
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        let interp = MonotoneCubic::new(xs, ys)?;
        Ok(Self {
            name: "table".to_string(),
            kind: MetricKind::Table,
            table: Some(Arc::new(TableDensity {
                interp,
                log_lo: lo.ln(),
                log_hi: hi.ln(),
            })),
            domain_lo: lo,
            domain_hi: hi,
            defined_at_zero: false,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.domain_lo, self.domain_hi)
    }

    pub fn defined_at_zero(&self) -> bool {
        self.defined_at_zero
    }

    pub fn is_builtin(&self) -> bool {
        self.table.is_none()
    }

    pub fn spec(&self) -> MetricSpec {
        match (&self.kind, &self.table) {
            (MetricKind::Table, Some(t)) => MetricSpec {
                name: None,
                params: Vec::new(),
                table: Some(
                    t.interp
                        .knots()
                        .iter()
                        .zip(t.interp.values())
                        .map(|(&s, &r)| [s, r])
                        .collect(),
                ),
            },
            (MetricKind::HyperbolicAnnulus { radius }, _) => {
                MetricSpec::named(&self.name, &[*radius])
            }
            _ => MetricSpec::named(&self.name, &[]),
        }
    }

    /// Closed interval check, allowing the endpoint only where the density is defined.
    pub fn contains(&self, s: f64) -> bool {
        let lo_ok = s > self.domain_lo
            || (s == self.domain_lo && (self.table.is_some() || (s == 0.0 && self.defined_at_zero)));
        let hi_ok = s < self.domain_hi || (s == self.domain_hi && self.table.is_some());
        lo_ok && hi_ok
    }

    pub fn contains_open(&self, s: f64) -> bool {
        s > self.domain_lo && s < self.domain_hi
    }

    fn require(&self, s: f64, what: &'static str) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::Domain {
                what,
                value: s,
                lo: self.domain_lo,
                hi: self.domain_hi,
            })
        }
    }

    /// `ρ(s)`, checked against the domain.
    pub fn density(&self, s: f64) -> Result<f64> {
        self.require(s, "metric radius")?;
        Ok(self.rho(s))
    }

    /// `ρ(s)` without a domain check (hot loops).
    pub fn rho(&self, s: f64) -> f64 {
        match self.kind {
            MetricKind::Euclidean => 1.0,
            MetricKind::InverseRadius => 1.0 / s,
            MetricKind::HyperbolicDisk => 2.0 / (1.0 - s * s),
            MetricKind::PuncturedDisk => -1.0 / (s * s.ln()),
            MetricKind::HyperbolicAnnulus { radius } => {
                let a = std::f64::consts::FRAC_PI_2 / radius.ln();
                a / (s * (a * s.ln()).cos())
            }
            MetricKind::Spherical => 2.0 / (1.0 + s * s),
            MetricKind::Cigar => 1.0 / (1.0 + s * s).sqrt(),
            MetricKind::Table => self.table_rho(s),
        }
    }

    /// `ϱ = 1/ρ`.
    pub fn varrho(&self, s: f64) -> f64 {
        1.0 / self.rho(s)
    }

    /// `ρ′(s)`: analytic for builtins, central differences in `log s` for tables.
    pub fn rho_prime(&self, s: f64) -> f64 {
        match self.kind {
            MetricKind::Euclidean => 0.0,
            MetricKind::InverseRadius => -1.0 / (s * s),
            MetricKind::HyperbolicDisk => {
                let w = 1.0 - s * s;
                4.0 * s / (w * w)
            }
            MetricKind::PuncturedDisk => {
                let u = s * s.ln();
                (s.ln() + 1.0) / (u * u)
            }
            MetricKind::HyperbolicAnnulus { radius } => {
                let a = std::f64::consts::FRAC_PI_2 / radius.ln();
                let th = a * s.ln();
                a / (th.cos() * s * s) * (a * th.tan() - 1.0)
            }
            MetricKind::Spherical => {
                let w = 1.0 + s * s;
                -4.0 * s / (w * w)
            }
            MetricKind::Cigar => -s / (1.0 + s * s).powf(1.5),
            MetricKind::Table => self.table_derivs(s).1,
        }
    }

    /// `ρ″(s)`.
    pub fn rho_second(&self, s: f64) -> f64 {
        match self.kind {
            MetricKind::Euclidean => 0.0,
            MetricKind::InverseRadius => 2.0 / (s * s * s),
            MetricKind::HyperbolicDisk => {
                let w = 1.0 - s * s;
                (4.0 + 12.0 * s * s) / (w * w * w)
            }
            MetricKind::PuncturedDisk => {
                let u = s * s.ln();
                let du = s.ln() + 1.0;
                1.0 / (s * u * u) - 2.0 * du * du / (u * u * u)
            }
            MetricKind::HyperbolicAnnulus { radius } => {
                let a = std::f64::consts::FRAC_PI_2 / radius.ln();
                let th = a * s.ln();
                let (t, sec) = (th.tan(), 1.0 / th.cos());
                a * sec / (s * s * s) * (a * a * t * t + a * a * sec * sec - 3.0 * a * t + 2.0)
            }
            MetricKind::Spherical => {
                let w = 1.0 + s * s;
                (12.0 * s * s - 4.0) / (w * w * w)
            }
            MetricKind::Cigar => (2.0 * s * s - 1.0) / (1.0 + s * s).powf(2.5),
            MetricKind::Table => self.table_derivs(s).2,
        }
    }

    /// `g(s) = s²ρ²(s)`, the quantity whose increments drive every Nitsche integral.
    pub fn s2rho2(&self, s: f64) -> f64 {
        let v = s * self.rho(s);
        v * v
    }

    /// `g′(s) = 2sρ(ρ + sρ′)`.
    pub fn s2rho2_prime(&self, s: f64) -> f64 {
        let rho = self.rho(s);
        2.0 * s * rho * (rho + s * self.rho_prime(s))
    }

    /// `g″(s) = 2ρ² + 8sρρ′ + 2s²(ρ′² + ρρ″)`.
    pub fn s2rho2_second(&self, s: f64) -> f64 {
        let (r, r1, r2) = (self.rho(s), self.rho_prime(s), self.rho_second(s));
        2.0 * r * r + 8.0 * s * r * r1 + 2.0 * s * s * (r1 * r1 + r * r2)
    }

    fn table_rho(&self, s: f64) -> f64 {
        let t = self.table.as_ref().expect("table metric");
        t.interp.eval(s).unwrap_or(f64::NAN)
    }

    /// `(log ρ, d/dx log ρ, d²/dx² log ρ)` at `x = log s` by five-point stencils.
    fn table_log_derivs(&self, s: f64) -> (f64, f64, f64) {
        let t = self.table.as_ref().expect("table metric");
        let x = s.ln();
        let room = (x - t.log_lo).min(t.log_hi - x);
        let h = (room / 2.5).min(1e-3);
        let lr = |x: f64| t.interp.eval(x.exp()).map(f64::ln).unwrap_or(f64::NAN);
        let f0 = lr(x);
        if !(h > 1e-7) {
            // too close to the table edge for a centred stencil: interpolant slope
            let (v, d) = t.interp.eval_with_deriv(s).unwrap_or((f64::NAN, f64::NAN));
            return (f0, s * d / v, 0.0);
        }
        let (fm2, fm1, fp1, fp2) = (lr(x - 2.0 * h), lr(x - h), lr(x + h), lr(x + 2.0 * h));
        let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
        let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
        (f0, d1, d2)
    }

    fn table_derivs(&self, s: f64) -> (f64, f64, f64) {
        let (lr, d1, d2) = self.table_log_derivs(s);
        let rho = lr.exp();
        // ρ′ = ρ (log ρ)_x / s ; ρ″ = ρ ((log ρ)_xx + (log ρ)_x² − (log ρ)_x) / s²
        let r1 = rho * d1 / s;
        let r2 = rho * (d2 + d1 * d1 - d1) / (s * s);
        (rho, r1, r2)
    }

    /// `max |ρ′(s) − central difference| / (1 + |ρ′(s)|)` over `n` interior radii.
    pub fn derivative_consistency(&self, lo: f64, hi: f64, n: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 1..=n {
            let s = lo + (hi - lo) * i as f64 / (n + 1) as f64;
            let h = 1e-5 * s.max(1e-3).min((s - lo).min(hi - s) / 2.0).max(1e-9);
            let fd = (self.rho(s + h) - self.rho(s - h)) / (2.0 * h);
            let d = self.rho_prime(s);
            worst = worst.max((d - fd).abs() / (1.0 + d.abs()));
        }
        worst
    }
}

/// Gauss curvature `K = −Δ log ρ / ρ²` at radius `s`, equivalently
/// `−(1/h²) d/dt (4t h′(t)/h)` with `t = s²`.
pub fn gauss_curvature(m: &RadialMetric, s: f64) -> Result<f64> {
    if !m.contains_open(s) || (m.table.is_some() && (s <= m.domain_lo || s >= m.domain_hi)) {
        return Err(Error::Domain {
            what: "curvature radius",
            value: s,
            lo: m.domain_lo,
            hi: m.domain_hi,
        });
    }
    let rho = m.rho(s);
    if m.table.is_some() {
        // Δ log ρ = s⁻² (log ρ)_xx with x = log s
        let (_, _, d2) = m.table_log_derivs(s);
        return Ok(-d2 / (s * s * rho * rho));
    }
    let l1 = m.rho_prime(s) / rho;
    let l2 = m.rho_second(s) / rho - l1 * l1;
    Ok(-(l2 + l1 / s) / (rho * rho))
}

/// `4t h′(t)/h(t)` written in the radial variable: `2sρ′(s)/ρ(s)`.
pub fn log_slope_of_h(m: &RadialMetric, s: f64) -> f64 {
    2.0 * s * m.rho_prime(s) / m.rho(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    /// `4th′/h` is constant (flat metric); compatible with either curvature sign.
    Constant,
    /// Curvature changes sign on the range, so no direction is implied.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub direction: Monotonicity,
    pub min_curvature: f64,
    pub max_curvature: f64,
    /// The detected direction agrees with the curvature sign
    /// (increasing for `K ≤ 0`, decreasing for `K ≥ 0`).
    pub consistent: bool,
}

/// Detects the direction in which `4th′(t)/h(t)` moves over `s ∈ [lo, hi]`.
pub fn monotonicity_of_h(m: &RadialMetric, lo: f64, hi: f64) -> Result<MonotonicityReport> {
    if !(lo < hi) {
        return Err(Error::Parameter(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    const N: usize = 200;
    let radii: Vec<f64> = (0..=N)
        .map(|i| lo + (hi - lo) * i as f64 / N as f64)
        .collect();
    let mut kmin = f64::INFINITY;
    let mut kmax = f64::NEG_INFINITY;
    for &s in &radii {
        if s > 0.0 {
            let k = gauss_curvature(m, s)?;
            kmin = kmin.min(k);
            kmax = kmax.max(k);
        } else if !m.contains(s) {
            return Err(Error::Domain {
                what: "monotonicity range",
                value: s,
                lo: m.domain_lo,
                hi: m.domain_hi,
            });
        }
    }
    let vals: Vec<f64> = radii.iter().map(|&s| log_slope_of_h(m, s)).collect();
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-12 * scale;
    let diffs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let flat = diffs.iter().all(|d| d.abs() <= tol);
    let up = diffs.iter().all(|&d| d >= -tol);
    let down = diffs.iter().all(|&d| d <= tol);
    let curv_tol = 1e-9;
    let nonpositive = kmax <= curv_tol;
    let nonnegative = kmin >= -curv_tol;

    let direction = if !(nonpositive || nonnegative) {
        Monotonicity::Inconclusive
    } else if flat {
        Monotonicity::Constant
    } else if up {
        Monotonicity::Increasing
    } else if down {
        Monotonicity::Decreasing
    } else {
        Monotonicity::Inconclusive
    };
    let consistent = match direction {
        Monotonicity::Increasing => nonpositive,
        Monotonicity::Decreasing => nonnegative,
        Monotonicity::Constant => true,
        Monotonicity::Inconclusive => false,
    };
    Ok(MonotonicityReport {
        direction,
        min_curvature: kmin,
        max_curvature: kmax,
        consistent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `inf_{τ<s<σ} sρ(s)`.
    pub inf_s_rho: f64,
    /// Radius where the infimum is approached.
    pub inf_location: f64,
    /// `lim_{s→τ+} sρ(s)`.
    pub boundary_limit: f64,
    /// `sup |K|` over the sample grid.
    pub curvature_bound: f64,
    pub is_regular: bool,
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Sample radii on `(τ, σ)`, refined geometrically towards `τ`.
fn regularity_grid(tau: f64, sigma: f64, n: usize) -> Vec<f64> {
    let len = sigma - tau;
    let mut w: Vec<f64> = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) / n as f64;
            x * x
        })
        .collect();
    w.extend([1e-10, 1e-8, 1e-6, 1e-4, 1e-3]);
    w.sort_by(f64::total_cmp);
    w.into_iter().map(|x| tau + len * x).collect()
}

/// Checks that `sρ(s)` attains its infimum at the inner boundary and that the
/// curvature stays bounded on the sample grid.
pub fn check_regularity(
    m: &RadialMetric,
    tau: f64,
    sigma: f64,
    grid_n: usize,
) -> Result<RegularityReport> {
    if grid_n < 16 {
        return Err(Error::Config(format!(
            "regularity grid needs at least 16 points, got {grid_n}"
        )));
    }
    let (lo, hi) = m.domain();
    if !(tau >= lo && tau < sigma && sigma <= hi) {
        return Err(Error::Geometry(format!(
            "need {lo} <= tau < sigma <= {hi}, got tau = {tau}, sigma = {sigma}"
        )));
    }
    let s_rho = |s: f64| s * m.rho(s);
    let grid = regularity_grid(tau, sigma, grid_n);
    let mut best = (f64::NAN, f64::INFINITY);
    let mut idx = 0;
    let mut curvature_bound: f64 = 0.0;
    for (i, &s) in grid.iter().enumerate() {
        let v = s_rho(s);
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Evaluation { x: s });
        }
        if v < best.1 {
            best = (s, v);
            idx = i;
        }
        let k = gauss_curvature(m, s)?;
        curvature_bound = curvature_bound.max(if k.is_finite() { k.abs() } else { f64::INFINITY });
    }
    // refine around the grid minimum
    let a = if idx == 0 { tau } else { grid[idx - 1] };
    let b = grid.get(idx + 1).copied().unwrap_or(sigma);
    let (a, b) = (a.max(tau + 1e-14 * tau.max(1.0)), b.min(sigma));
    if a < b {
        let refined = golden_min(s_rho, a, b);
        if refined.1 < best.1 {
            best = refined;
        }
    }

    let boundary_limit = if m.contains(tau) && tau > 0.0 {
        s_rho(tau)
    } else if tau == 0.0 && m.defined_at_zero {
        0.0
    } else {
        s_rho(tau + 1e-12 * (sigma - tau))
    };
    let (inf_location, inf_s_rho) = if boundary_limit <= best.1 {
        (tau, boundary_limit)
    } else {
        best
    };
    let is_regular = boundary_limit.is_finite()
        && (inf_s_rho - boundary_limit).abs() <= (REGULARITY_TOL * boundary_limit).max(1e-14)
        && curvature_bound.is_finite();
    Ok(RegularityReport {
        inf_s_rho,
        inf_location,
        boundary_limit,
        curvature_bound,
        is_regular,
    })
}

/// `(min, max)` of `sρ(s)` over a grid on `[τ, σ]`; used to detect metrics for
/// which every Nitsche integrand degenerates.
pub fn s_rho_range(m: &RadialMetric, tau: f64, sigma: f64, n: usize) -> (f64, f64) {
    (0..=n)
        .map(|i| {
            let s = tau + (sigma - tau) * i as f64 / n as f64;
            s * m.rho(s)
        })
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(name: &str) -> RadialMetric {
        RadialMetric::builtin(name, &[]).unwrap()
    }

    #[test]
    fn builtin_densities() {
        assert_relative_eq!(m("hyperbolic_disk").density(0.0).unwrap(), 2.0);
        assert_relative_eq!(m("euclidean").density(3.7).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(
            m("punctured_disk").density(1.0 / e).unwrap(),
            e,
            max_relative = 1e-14
        );
        assert!(m("hyperbolic_disk").density(1.0).is_err());
        assert!(m("punctured_disk").density(0.0).is_err());
    }

    #[test]
    fn unknown_and_bad_parameters() {
        assert!(matches!(
            RadialMetric::builtin("flat", &[]),
            Err(Error::UnknownMetric(_))
        ));
        assert!(matches!(
            RadialMetric::builtin("hyperbolic_annulus", &[1.0]),
            Err(Error::Parameter(_))
        ));
        assert!(RadialMetric::builtin("hyperbolic_annulus", &[]).is_err());
        assert!(RadialMetric::builtin("euclidean", &[2.0]).is_err());
    }

    #[test]
    fn curvature_examples() {
        assert_relative_eq!(
            gauss_curvature(&m("hyperbolic_disk"), 0.3).unwrap(),
            -1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            gauss_curvature(&m("spherical"), 0.7).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(gauss_curvature(&m("cigar"), 1.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(gauss_curvature(&m("hyperbolic_disk"), 1.0).is_err());
        assert!(gauss_curvature(&m("euclidean"), 0.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let ann = RadialMetric::builtin("hyperbolic_annulus", &[2.0]).unwrap();
        for (metric, lo, hi) in [
            (m("euclidean"), 0.1, 3.0),
            (m("inverse_radius"), 0.1, 3.0),
            (m("hyperbolic_disk"), 0.05, 0.95),
            (m("punctured_disk"), 0.05, 0.95),
            (ann, 0.55, 1.9),
            (m("spherical"), 0.05, 3.0),
            (m("cigar"), 0.05, 3.0),
        ] {
            assert!(metric.derivative_consistency(lo, hi, 50) < 1e-6, "{}", metric.name());
            for i in 1..20 {
                let s = lo + (hi - lo) * i as f64 / 20.0;
                let h = 1e-5 * s;
                let fd = (metric.rho_prime(s + h) - metric.rho_prime(s - h)) / (2.0 * h);
                let d2 = metric.rho_second(s);
                assert!((fd - d2).abs() <= 1e-5 * (1.0 + d2.abs()), "{} at {s}", metric.name());
            }
        }
    }

    #[test]
    fn varrho_is_reciprocal() {
        let metric = m("spherical");
        for i in 1..50 {
            let s = i as f64 * 0.1;
            assert!((metric.varrho(s) * metric.rho(s) - 1.0).abs() <= 2.0 * f64::EPSILON);
        }
    }

    #[test]
    fn regularity_examples() {
        let r = check_regularity(&m("euclidean"), 0.5, 1.0, 64).unwrap();
        assert!(r.is_regular);
        let r = check_regularity(&m("hyperbolic_disk"), 0.5, 0.9, 64).unwrap();
        assert!(r.is_regular);
        let r = check_regularity(&m("inverse_radius"), 0.5, 1.0, 64).unwrap();
        assert!(r.is_regular);
        assert_relative_eq!(r.inf_s_rho, 1.0, max_relative = 1e-14);
        // sρ decreases towards s = 1 for the hyperbolic annulus
        let ann = RadialMetric::builtin("hyperbolic_annulus", &[2.0]).unwrap();
        assert!(!check_regularity(&ann, 0.6, 0.9, 64).unwrap().is_regular);
        assert!(check_regularity(&ann, 1.1, 1.8, 64).unwrap().is_regular);
        // spherical sρ = 2s/(1+s²) peaks at s = 1
        assert!(!check_regularity(&m("spherical"), 0.5, 3.0, 64).unwrap().is_regular);
        assert!(check_regularity(&m("euclidean"), 0.5, 1.0, 8).is_err());
    }

    #[test]
    fn monotonicity_examples() {
        let r = monotonicity_of_h(&m("hyperbolic_disk"), 0.1, 0.8).unwrap();
        assert_eq!(r.direction, Monotonicity::Increasing);
        assert!(r.consistent);
        let r = monotonicity_of_h(&m("spherical"), 0.1, 0.8).unwrap();
        assert_eq!(r.direction, Monotonicity::Decreasing);
        assert!(r.consistent);
        let r = monotonicity_of_h(&m("euclidean"), 0.1, 0.8).unwrap();
        assert_eq!(r.direction, Monotonicity::Constant);
    }

    #[test]
    fn table_metric_tracks_builtin() {
        let hyp = m("hyperbolic_disk");
        let pairs: Vec<[f64; 2]> = (0..=400)
            .map(|i| {
                let s = 0.2 + 0.7 * i as f64 / 400.0;
                [s, hyp.rho(s)]
            })
            .collect();
        let t = RadialMetric::from_table(&pairs).unwrap();
        assert!(t.density(0.1).is_err());
        for s in [0.3, 0.5, 0.7] {
            assert_relative_eq!(t.rho(s), hyp.rho(s), max_relative = 1e-8);
            assert_relative_eq!(t.rho_prime(s), hyp.rho_prime(s), max_relative = 1e-4);
            let k = gauss_curvature(&t, s).unwrap();
            assert!((k + 1.0).abs() < 1e-2, "table curvature {k} at {s}");
        }
        assert!(check_regularity(&t, 0.3, 0.8, 32).unwrap().is_regular);
        let spec = t.spec();
        assert!(spec.table.is_some());
        assert!(spec.build().is_ok());
    }
}

//! Discrete minimisation of the mean distortion over radial stretchings.
//!
//! The slope `p = Φ′` is piecewise constant on `n` equal cells of `[τ, σ]`. On a cell
//! the objective is exactly `π(p A_i + B_i/p)` with `A_i = ∫ s²ρ²` and `B_i = ∫ ρ²`,
//! so every discrete candidate is an admissible radial map and its value is an upper
//! bound for the continuous minimum. Stationarity under `Σ h_i p_i = log(1/r)` gives
//! `p_i = √(B_i / (A_i + ν h_i))` for a single multiplier `ν`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::functionals::{classify_regime, Regime};
use crate::metric::RadialMetric;
use crate::nitsche::{check_target, AnnulusGeometry, NitscheProfile};
use crate::numerics::{expand_bracket_up, find_root, integrate, QuadratureConfig, RootConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMinimum {
    pub n_cells: usize,
    /// Cell edges `τ = s_0 < … < s_n = σ`.
    pub edges: Vec<f64>,
    /// Optimal slope on each cell.
    pub slopes: Vec<f64>,
    /// Lagrange multiplier; the continuous analogue is `c`.
    pub multiplier: f64,
    pub value: f64,
    /// Accumulated quadrature error of the cell moments, propagated to the value.
    pub value_err: f64,
}

impl RadialMinimum {
    pub fn midpoints(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// `max_i |p_i - φ′(m_i)|` at the cell midpoints.
    pub fn slope_error(&self, profile: &NitscheProfile) -> f64 {
        self.midpoints()
            .iter()
            .zip(&self.slopes)
            .map(|(&s, &p)| (p - profile.phi_prime(s)).abs())
            .fold(0.0, f64::max)
    }

    /// `Φ` at the cell edges, normalised so that `Φ(σ) = 0`.
    pub fn profile(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.edges.len());
        let mut phi = 0.0;
        out.push((self.edges[self.n_cells], 0.0));
        for i in (0..self.n_cells).rev() {
            phi -= self.slopes[i] * (self.edges[i + 1] - self.edges[i]);
            out.push((self.edges[i], phi));
        }
        out.reverse();
        out
    }
}

pub fn radial_discrete_minimize(
    m: &RadialMetric,
    geom: AnnulusGeometry,
    n_cells: usize,
    qcfg: &QuadratureConfig,
    rcfg: &RootConfig,
) -> Result<RadialMinimum> {
    if n_cells < 2 {
        return Err(Error::Config(format!("need at least 2 cells, got {n_cells}")));
    }
    check_target(m, geom.target())?;
    let class = classify_regime(m, geom, qcfg)?;
    if class.regime == Regime::Fat {
        return Err(Error::FatRange {
            r: geom.r,
            r_star: class.r_star,
        });
    }
    let (tau, sigma) = (geom.tau, geom.sigma);
    let target = (1.0 / geom.r).ln();
    let edges: Vec<f64> = (0..=n_cells)
        .map(|i| {
            if i == n_cells {
                sigma
            } else {
                tau + (sigma - tau) * i as f64 / n_cells as f64
            }
        })
        .collect();
    let cfg = qcfg.regular();
    let mut a = Vec::with_capacity(n_cells);
    let mut b = Vec::with_capacity(n_cells);
    let mut h = Vec::with_capacity(n_cells);
    let mut moment_err = 0.0;
    for w in edges.windows(2) {
        let (ai, ea) = integrate(|s| m.s2rho2(s), w[0], w[1], &cfg)?;
        let (bi, eb) = integrate(|s| m.rho(s).powi(2), w[0], w[1], &cfg)?;
        a.push(ai);
        b.push(bi);
        h.push(w[1] - w[0]);
        moment_err += ea + eb;
    }
    let nu_min = a
        .iter()
        .zip(&h)
        .map(|(ai, hi)| -ai / hi)
        .fold(f64::NEG_INFINITY, f64::max);
    let slopes_at = |w: f64| -> Vec<f64> {
        let nu = nu_min + w * w;
        a.iter()
            .zip(&b)
            .zip(&h)
            .map(|((ai, bi), hi)| (bi / (ai + nu * hi).max(f64::MIN_POSITIVE)).sqrt())
            .collect()
    };
    let residual = |w: f64| -> f64 {
        let p = slopes_at(w);
        p.iter().zip(&h).map(|(pi, hi)| pi * hi).sum::<f64>() - target
    };
    // the residual decreases from +∞ at w = 0 to -log(1/r) as w → ∞
    let scale = nu_min.abs().max(1.0).sqrt();
    let start = 1e-9 * scale;
    let bracket = expand_bracket_up(residual, start, start)?;
    let w = if bracket.0 == bracket.1 {
        bracket.0
    } else {
        find_root(residual, bracket, rcfg)?
    };
    let slopes = slopes_at(w);
    let value = PI
        * slopes
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(p, (ai, bi))| p * ai + bi / p)
            .sum::<f64>();
    let max_ratio = slopes.iter().map(|p| p.max(1.0 / p)).fold(0.0, f64::max);
    Ok(RadialMinimum {
        n_cells,
        edges,
        slopes,
        multiplier: nu_min + w * w,
        value,
        value_err: PI * max_ratio * moment_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::extremal_value;
    use crate::nitsche::solve_c;
    use std::sync::Arc;

    fn run(m: &RadialMetric, geom: AnnulusGeometry, n: usize) -> RadialMinimum {
        radial_discrete_minimize(m, geom, n, &QuadratureConfig::default(), &RootConfig::default())
            .unwrap()
    }

    #[test]
    fn conformal_case() {
        let m = RadialMetric::euclidean();
        let rm = run(&m, AnnulusGeometry::new(0.5, 1.0, 0.5).unwrap(), 200);
        assert!((rm.value - 0.75 * PI).abs() < 1e-5, "{}", rm.value);
        assert!(rm.multiplier.abs() < 1e-4);
        for (s, p) in rm.midpoints().iter().zip(&rm.slopes) {
            assert!((p - 1.0 / s).abs() < 1e-4);
        }
    }

    #[test]
    fn upper_bound_and_convergence() {
        let m = RadialMetric::builtin("hyperbolic_disk", &[]).unwrap();
        let geom = AnnulusGeometry::new(0.5, 0.9, 0.6).unwrap();
        let q = QuadratureConfig::default();
        let p = Arc::new(solve_c(&m, geom, &q, &RootConfig::default()).unwrap());
        let exact = extremal_value(&p, &q).unwrap().value;
        let mut last = f64::INFINITY;
        for n in [25, 50, 100, 200] {
            let rm = run(&m, geom, n);
            let gap = rm.value - exact;
            assert!(gap > -1e-9, "n = {n}: {gap}");
            assert!(gap < last);
            last = gap;
        }
        assert!(last / exact < 1e-4);
    }

    #[test]
    fn profile_endpoints() {
        let m = RadialMetric::euclidean();
        let geom = AnnulusGeometry::new(0.5, 1.0, 0.4).unwrap();
        let rm = run(&m, geom, 40);
        let prof = rm.profile();
        assert!((prof[0].1 - 0.4f64.ln()).abs() < 1e-10);
        assert_eq!(prof.last().unwrap().1, 0.0);
    }

    #[test]
    fn fat_regime_rejected() {
        let m = RadialMetric::euclidean();
        let geom = AnnulusGeometry::new(0.5, 1.0, 0.1).unwrap();
        let err = radial_discrete_minimize(&m, geom, 50, &QuadratureConfig::default(), &RootConfig::default());
        assert!(matches!(err, Err(Error::FatRange { .. })));
    }
}

//! Rotations of the source or the target are isometries of every radial metric, so
//! the functionals and the harmonicity residual of a radial map must not see them.
//!
//! The functionals are evaluated here from their two-dimensional definitions (a fixed
//! product rule over radius and angle using the pointwise derivatives), not from the
//! one-dimensional reductions, so the check exercises the angular dependence of the
//! derivative code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::Result;
use crate::maps::{harmonicity_residual, Direction, RadialMap};
use crate::metric::RadialMetric;
use crate::numerics::{QuadratureConfig, RootConfig};

pub const ROTATION_TOL: f64 = 1e-12;

const N_RADIAL: usize = 256;
const N_ANGULAR: usize = 16;

/// Scalars of one map variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationScalars {
    pub pre_rotation: f64,
    pub rotation: f64,
    /// `∫ K ρ²(|z|) dm` for forward maps.
    pub mean_distortion: Option<f64>,
    /// `∫ ‖Dh‖² ρ²(|h|) dm` for inverse maps.
    pub energy: Option<f64>,
    /// Max ODE residual for inverse maps.
    pub max_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationReport {
    pub seed: u64,
    /// Unrotated, post-rotated and pre-rotated variants, in that order.
    pub variants: Vec<RotationScalars>,
    /// Largest relative difference to the unrotated variant.
    pub max_rel_diff: f64,
    pub invariant: bool,
}

fn scalars(map: &RadialMap, m: &RadialMetric) -> Result<RotationScalars> {
    let (lo, hi) = map.domain();
    let len = hi - lo;
    // midpoint rule in v with s = lo + len·v², which absorbs a square-root endpoint
    let mut total = 0.0;
    for i in 0..N_RADIAL {
        let v = (i as f64 + 0.5) / N_RADIAL as f64;
        let s = lo + len * v * v;
        let ds = 2.0 * len * v / N_RADIAL as f64;
        let mut ring = 0.0;
        for j in 0..N_ANGULAR {
            let t = TAU * (j as f64 + 0.25) / N_ANGULAR as f64;
            let d = map.derivatives(num_complex::Complex64::from_polar(s, t))?;
            ring += match map.direction {
                Direction::Forward => d.distortion_polar * m.rho(s).powi(2),
                Direction::Inverse => {
                    (d.f_z.norm_sqr() + d.f_zbar.norm_sqr()) * m.rho(d.value.norm()).powi(2)
                }
            };
        }
        total += ring * TAU / N_ANGULAR as f64 * s * ds;
    }
    let (mean_distortion, energy, max_residual) = match map.direction {
        Direction::Forward => (Some(total), None, None),
        Direction::Inverse => {
            let mut worst: f64 = 0.0;
            for i in 1..64 {
                let s = lo + len * i as f64 / 64.0;
                worst = worst.max(harmonicity_residual(map, m, s)?.residual);
            }
            (None, Some(total), Some(worst))
        }
    };
    Ok(RotationScalars {
        pre_rotation: map.pre_rotation,
        rotation: map.rotation,
        mean_distortion,
        energy,
        max_residual,
    })
}

fn rel_diff(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE),
        _ => 0.0,
    }
}

/// Compares the map against a post-rotated and a pre-rotated copy, with angles drawn
/// from `seed`.
pub fn rotation_invariance_check(map: &RadialMap, m: &RadialMetric, seed: u64) -> Result<RotationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let post: f64 = rng.gen_range(0.0..TAU);
    let pre: f64 = rng.gen_range(0.0..TAU);
    let base = scalars(map, m)?;
    let variants = vec![
        base,
        scalars(&map.clone().rotated(post), m)?,
        scalars(&map.clone().with_pre_rotation(map.pre_rotation + pre), m)?,
    ];
    let mut max_rel_diff: f64 = 0.0;
    for v in &variants[1..] {
        max_rel_diff = max_rel_diff
            .max(rel_diff(base.mean_distortion, v.mean_distortion))
            .max(rel_diff(base.energy, v.energy));
        // the residual is near zero, so compare it on an absolute scale
        if let (Some(a), Some(b)) = (base.max_residual, v.max_residual) {
            max_rel_diff = max_rel_diff.max((a - b).abs());
        }
    }
    Ok(RotationReport {
        seed,
        variants,
        max_rel_diff,
        invariant: max_rel_diff <= ROTATION_TOL,
    })
}

/// Convenience wrapper: solves `h^c` and `f^c` and checks both.
pub fn rotation_check_nitsche(
    m: &RadialMetric,
    geom: crate::nitsche::AnnulusGeometry,
    seed: u64,
) -> Result<(RotationReport, RotationReport)> {
    let p = std::sync::Arc::new(crate::nitsche::solve_c(
        m,
        geom,
        &QuadratureConfig::default(),
        &RootConfig::default(),
    )?);
    let f = crate::maps::nitsche_map(p.clone(), Direction::Forward, 0.0);
    let h = crate::maps::nitsche_map(p, Direction::Inverse, 0.0);
    Ok((rotation_invariance_check(&f, m, seed)?, rotation_invariance_check(&h, m, seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nitsche::AnnulusGeometry;

    #[test]
    fn nitsche_maps_are_invariant() {
        let m = RadialMetric::builtin("spherical", &[]).unwrap();
        let geom = AnnulusGeometry::new(0.5, 0.9, 0.6).unwrap();
        let (f, h) = rotation_check_nitsche(&m, geom, 3).unwrap();
        assert!(f.invariant, "{f:?}");
        assert!(h.invariant, "{h:?}");
        assert!(f.variants[0].mean_distortion.unwrap() > 0.0);
        assert!(h.variants[0].max_residual.unwrap() < 1e-6);
    }

    #[test]
    fn angles_come_from_seed() {
        let m = RadialMetric::euclidean();
        let geom = AnnulusGeometry::new(0.5, 1.0, 0.4).unwrap();
        let (a, _) = rotation_check_nitsche(&m, geom, 11).unwrap();
        let (b, _) = rotation_check_nitsche(&m, geom, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.variants[1].rotation > 0.0);
    }
}

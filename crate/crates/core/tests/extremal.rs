//! Property tests of the extremal construction against independent oracles.

use annuli::functionals::{distortion_split_form, extremal_value, mean_distortion_radial, sharp_lower_bound};
use annuli::maps::{nitsche_map, RadialProfile};
use annuli::metric::gauss_curvature;
use annuli::minseq::limit_study;
use annuli::nitsche::solve_c;
use annuli::{AnnulusGeometry, Complex64, Direction, NitscheProfile, QuadratureConfig, RadialMap, RadialMetric, RootConfig};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn profile(name: &str, tau: f64, sigma: f64, r: f64) -> Arc<NitscheProfile> {
    let m = RadialMetric::builtin(name, &[]).unwrap();
    let g = AnnulusGeometry::new(tau, sigma, r).unwrap();
    Arc::new(solve_c(&m, g, &QuadratureConfig::default(), &RootConfig::default()).unwrap())
}

/// `P·exp(ε sin(kπ(s-lo)/(hi-lo)))`: same boundary values, still increasing for small ε.
#[derive(Debug)]
struct Wiggled {
    base: Arc<dyn RadialProfile>,
    eps: f64,
    k: f64,
}

impl Wiggled {
    fn arg(&self, s: f64) -> f64 {
        let (lo, hi) = self.base.domain();
        self.k * PI * (s - lo) / (hi - lo)
    }
}

impl RadialProfile for Wiggled {
    fn domain(&self) -> (f64, f64) {
        self.base.domain()
    }

    fn value(&self, s: f64) -> annuli::Result<f64> {
        Ok(self.base.value(s)? * (self.eps * self.arg(s).sin()).exp())
    }

    fn deriv(&self, s: f64) -> f64 {
        self.value(s).unwrap() * self.log_deriv(s).unwrap()
    }

    fn log_deriv(&self, s: f64) -> annuli::Result<f64> {
        let (lo, hi) = self.base.domain();
        Ok(self.base.log_deriv(s)? + self.eps * self.k * PI / (hi - lo) * self.arg(s).cos())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constant_curvature_metrics(s in 0.01f64..0.99) {
        for name in ["hyperbolic_disk", "punctured_disk"] {
            let m = RadialMetric::builtin(name, &[]).unwrap();
            prop_assert!((gauss_curvature(&m, s).unwrap() + 1.0).abs() < 1e-9);
        }
        let sph = RadialMetric::builtin("spherical", &[]).unwrap();
        prop_assert!((gauss_curvature(&sph, 4.0 * s).unwrap() - 1.0).abs() < 1e-9);
        let cigar = RadialMetric::builtin("cigar", &[]).unwrap();
        let x = 4.0 * s;
        prop_assert!((gauss_curvature(&cigar, x).unwrap() - 2.0 / (1.0 + x * x)).abs() < 1e-9);
    }

    #[test]
    fn inverse_undoes_forward(s in 0.5001f64..0.8999, t in 0.0f64..std::f64::consts::TAU) {
        let p = profile("hyperbolic_disk", 0.5, 0.9, 0.6);
        let f = nitsche_map(p.clone(), Direction::Forward, 0.0);
        let h = nitsche_map(p, Direction::Inverse, 0.0);
        let z = Complex64::from_polar(s, t);
        let back = h.eval(f.eval(z).unwrap()).unwrap();
        prop_assert!((back - z).norm() < 1e-9, "|h(f(z)) - z| = {:e}", (back - z).norm());
    }

    #[test]
    fn extremal_beats_radial_perturbations(eps in -0.02f64..0.02, k in 1u32..4) {
        let p = profile("hyperbolic_disk", 0.5, 0.9, 0.6);
        let m = p.metric().clone();
        let q = QuadratureConfig::default();
        let f = nitsche_map(p, Direction::Forward, 0.0);
        let best = mean_distortion_radial(&f, &m, &q).unwrap().value;
        let w = RadialMap::new(Direction::Forward, Arc::new(Wiggled { base: f.profile.clone(), eps, k: k as f64 }), 0.0);
        let other = mean_distortion_radial(&w, &m, &q).unwrap().value;
        prop_assert!(other >= best - 1e-9, "{other} < {best}");
    }
}

#[test]
fn split_form_matches_direct_integral() {
    for (name, tau, sigma, r) in [("euclidean", 0.5, 1.0, 0.35), ("spherical", 0.5, 0.9, 0.3), ("cigar", 0.5, 0.9, 0.5)] {
        let p = profile(name, tau, sigma, r);
        let q = QuadratureConfig::default();
        let direct = mean_distortion_radial(&nitsche_map(p.clone(), Direction::Forward, 0.0), p.metric(), &q).unwrap();
        let split = distortion_split_form(&p, &q).unwrap();
        assert!((direct.value - split.value).abs() < 1e-9 * (1.0 + direct.value), "{name}: {direct:?} vs {split:?}");
        assert!((extremal_value(&p, &q).unwrap().value - direct.value).abs() < 1e-9 * (1.0 + direct.value));
    }
}

#[test]
fn minimizing_sequence_decreases_to_bound() {
    let m = RadialMetric::euclidean();
    let g = AnnulusGeometry::new(0.5, 1.0, 0.1).unwrap();
    let q = QuadratureConfig::default();
    let study = limit_study(&m, g, &[10, 100, 1000], &q, &RootConfig::default()).unwrap();
    let bound = sharp_lower_bound(&m, g, &q).unwrap().bound.value;
    assert!((bound - 3.49480883594).abs() < 1e-9);
    let ks: Vec<f64> = study.rows.iter().map(|row| row.k_rho_n).collect();
    assert!(ks.windows(2).all(|w| w[1] < w[0]), "{ks:?}");
    assert!(ks.iter().all(|&k| k > bound));
    assert!((ks[2] - 3.49559606631).abs() < 1e-8);
}

//! Discrete minimizers used as oracles for the continuous extremal.

use annuli::functionals::extremal_value;
use annuli::nitsche::solve_c;
use annuli::verify::mesh::{MeshOptions, MeshSpec, MeshState};
use annuli::verify::{mesh_energy_minimize, radial_discrete_minimize};
use annuli::{AnnulusGeometry, QuadratureConfig, RadialMetric, RootConfig};
use std::sync::Arc;

#[test]
fn radial_ladder_converges_from_above() {
    let m = RadialMetric::builtin("spherical", &[]).unwrap();
    let g = AnnulusGeometry::new(0.5, 0.9, 0.3).unwrap();
    let (q, rc) = (QuadratureConfig::default(), RootConfig::default());
    let exact = extremal_value(&Arc::new(solve_c(&m, g, &q, &rc).unwrap()), &q).unwrap().value;
    let gaps: Vec<f64> = [25, 50, 100, 200]
        .iter()
        .map(|&n| radial_discrete_minimize(&m, g, n, &q, &rc).unwrap().value - exact)
        .collect();
    assert!(gaps.iter().all(|&d| d > -1e-9), "{gaps:?}");
    for w in gaps.windows(2) {
        assert!(w[1] < w[0], "{gaps:?}");
        // second order in the cell width
        assert!((w[0] / w[1]).log2() > 1.7, "{gaps:?}");
    }
}

#[test]
fn mesh_descent_is_monotone() {
    let m = RadialMetric::builtin("hyperbolic_disk", &[]).unwrap();
    let g = AnnulusGeometry::new(0.5, 0.9, 0.6).unwrap();
    let spec = MeshSpec::new(32, 64).unwrap();
    let opts = MeshOptions {
        max_iters: 300,
        ..MeshOptions::default()
    };
    let run = mesh_energy_minimize(&m, g, MeshState::initial(&m, g, spec).unwrap(), &opts).unwrap();
    assert!(run.max_energy_increase() <= 0.0);
    assert!(run.history.last().unwrap() < run.history.first().unwrap());
    assert!(run.diagnostics.positive_jacobian_fraction >= 0.99);
}

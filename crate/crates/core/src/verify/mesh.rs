//! Direct minimisation of the ρ-energy of maps `h: A(r, 1) → A′(τ, σ)` on a
//! log-polar mesh.
//!
//! The source is parametrised by `(x, θ) = (log|ζ|, arg ζ)`, where the energy reads
//! `½∫ G(l)(|∇l|² + |∇α|²) dx dθ` for `h = e^{l + iα}` and `G(l) = g(e^l) = s²ρ²(s)`.
//! Every grid cell is split into two triangles on which `l + iα` is linear, so the
//! discrete energy is the exact energy of a piecewise smooth competitor and the
//! gradient is exact. Nothing forces the competitor to stay radial.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::functionals::{classify_regime, Regime};
use crate::metric::RadialMetric;
use crate::nitsche::{check_target, critical_profile, solve_c, AnnulusGeometry};
use crate::numerics::{QuadratureConfig, RootConfig};

pub const MIN_RADIAL: usize = 32;
pub const MIN_ANGULAR: usize = 64;

// Degree-5 seven-point rule on the reference triangle: (barycentrics, weight).
const DUNAVANT: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059715871789770;
    const B1: f64 = 0.470142064105115;
    const W1: f64 = 0.132394152788506;
    const A2: f64 = 0.797426985353087;
    const B2: f64 = 0.101286507323456;
    const W2: f64 = 0.125939180544827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Grid resolution `N_r x N_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub n_r: usize,
    pub n_t: usize,
}

impl MeshSpec {
    pub fn new(n_r: usize, n_t: usize) -> Result<Self> {
        if n_r < MIN_RADIAL || n_t < MIN_ANGULAR {
            return Err(Error::Config(format!(
                "mesh must be at least {MIN_RADIAL}x{MIN_ANGULAR}, got {n_r}x{n_t}"
            )));
        }
        Ok(Self { n_r, n_t })
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_r, self.n_t)
    }
}

impl FromStr for MeshSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("mesh spec `{s}` is not of the form <N_r>x<N_t>"));
        let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
        let n_r = a.trim().parse().map_err(|_| bad())?;
        let n_t = b.trim().parse().map_err(|_| bad())?;
        Self::new(n_r, n_t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    pub max_iters: usize,
    /// Stop once the relative energy decrease of an accepted step is below this.
    pub rel_tol: f64,
    /// Stop once the sup norm of the projected gradient step is below this.
    pub step_tol: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            rel_tol: 1e-13,
            step_tol: 1e-12,
        }
    }
}

/// Node values `log h = l + iα` on the log-polar grid; node `(i, j)` sits at
/// `x = log r + iΔx`, `θ = jΔθ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshState {
    pub spec: MeshSpec,
    pub geometry: AnnulusGeometry,
    pub l: Vec<f64>,
    /// Unwrapped argument; crossing `θ = 2π` adds `2π`.
    pub alpha: Vec<f64>,
    pub energy: f64,
}

impl MeshState {
    /// Radial, linear in `log|ζ|` between the boundary circles.
    pub fn initial(m: &RadialMetric, geom: AnnulusGeometry, spec: MeshSpec) -> Result<Self> {
        let spec = MeshSpec::new(spec.n_r, spec.n_t)?;
        let (lt, ls) = (geom.tau.ln(), geom.sigma.ln());
        let nodes = (spec.n_r + 1) * spec.n_t;
        let mut l = Vec::with_capacity(nodes);
        let mut alpha = Vec::with_capacity(nodes);
        for i in 0..=spec.n_r {
            let w = i as f64 / spec.n_r as f64;
            for j in 0..spec.n_t {
                l.push(if i == spec.n_r { ls } else { lt + (ls - lt) * w });
                alpha.push(TAU * j as f64 / spec.n_t as f64);
            }
        }
        let mut st = Self {
            spec,
            geometry: geom,
            l,
            alpha,
            energy: 0.0,
        };
        st.energy = Assembly::new(m, &st).energy(&st.l, &st.alpha, None);
        Ok(st)
    }

    pub fn dx(&self) -> f64 {
        -self.geometry.r.ln() / self.spec.n_r as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.spec.n_t as f64
    }

    /// `(ζ, h(ζ))` at node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> (num_complex::Complex64, num_complex::Complex64) {
        let k = i * self.spec.n_t + j;
        let x = self.geometry.r.ln() + self.dx() * i as f64;
        let z = num_complex::Complex64::from_polar(x.exp(), self.dtheta() * j as f64);
        let h = num_complex::Complex64::from_polar(self.l[k].exp(), self.alpha[k]);
        (z, h)
    }

    /// Fraction of triangles on which `(x, θ) ↦ (l, α)` preserves orientation.
    pub fn positive_jacobian_fraction(&self) -> f64 {
        let (dx, dt) = (self.dx(), self.dtheta());
        let mut pos = 0usize;
        let mut total = 0usize;
        for (ga, gb) in triangle_gradients(self, dx, dt) {
            total += 1;
            if ga[0] * gb[1] - ga[1] * gb[0] > 0.0 {
                pos += 1;
            }
        }
        pos as f64 / total as f64
    }
}

/// Per-triangle gradients of `l` and `α` in `(x, θ)`.
fn triangle_gradients(st: &MeshState, dx: f64, dt: f64) -> Vec<([f64; 2], [f64; 2])> {
    let n_t = st.spec.n_t;
    let mut out = Vec::with_capacity(2 * st.spec.n_r * n_t);
    for i in 0..st.spec.n_r {
        for j in 0..n_t {
            let cell = Cell::new(i, j, n_t);
            let la = cell.values(&st.l, 0.0);
            let aa = cell.values(&st.alpha, TAU);
            for tri in [Tri::Lower, Tri::Upper] {
                out.push((tri.grad(&la, dx, dt), tri.grad(&aa, dx, dt)));
            }
        }
    }
    out
}

/// Corners `a = (i, j)`, `b = (i+1, j)`, `c = (i+1, j+1)`, `d = (i, j+1)`.
struct Cell {
    idx: [usize; 4],
    wraps: bool,
}

impl Cell {
    fn new(i: usize, j: usize, n_t: usize) -> Self {
        let jn = (j + 1) % n_t;
        Self {
            idx: [i * n_t + j, (i + 1) * n_t + j, (i + 1) * n_t + jn, i * n_t + jn],
            wraps: jn == 0,
        }
    }

    /// Corner values, adding `period` to the wrapped corners `c` and `d`.
    fn values(&self, v: &[f64], period: f64) -> [f64; 4] {
        let shift = if self.wraps { period } else { 0.0 };
        [
            v[self.idx[0]],
            v[self.idx[1]],
            v[self.idx[2]] + shift,
            v[self.idx[3]] + shift,
        ]
    }
}

#[derive(Clone, Copy)]
enum Tri {
    /// `(a, b, c)`
    Lower,
    /// `(a, c, d)`
    Upper,
}

impl Tri {
    fn corners(self) -> [usize; 3] {
        match self {
            Tri::Lower => [0, 1, 2],
            Tri::Upper => [0, 2, 3],
        }
    }

    fn grad(self, v: &[f64; 4], dx: f64, dt: f64) -> [f64; 2] {
        match self {
            Tri::Lower => [(v[1] - v[0]) / dx, (v[2] - v[1]) / dt],
            Tri::Upper => [(v[2] - v[3]) / dx, (v[3] - v[0]) / dt],
        }
    }

    /// `∂(|∇v|²)/∂v_k` for the cell corners.
    fn grad_sq_partials(self, g: [f64; 2], dx: f64, dt: f64) -> [f64; 4] {
        let (px, pt) = (2.0 * g[0] / dx, 2.0 * g[1] / dt);
        match self {
            Tri::Lower => [-px, px - pt, pt, 0.0],
            Tri::Upper => [-pt, 0.0, px, pt - px],
        }
    }
}

struct Assembly<'a> {
    m: &'a RadialMetric,
    n_r: usize,
    n_t: usize,
    dx: f64,
    dt: f64,
}

impl<'a> Assembly<'a> {
    fn new(m: &'a RadialMetric, st: &MeshState) -> Self {
        Self {
            m,
            n_r: st.spec.n_r,
            n_t: st.spec.n_t,
            dx: st.dx(),
            dt: st.dtheta(),
        }
    }

    /// Discrete energy; with `grad` the exact gradient in `(l, α)` is accumulated.
    /// Cells are visited in a fixed order, so the result is reproducible bit for bit.
    fn energy(&self, l: &[f64], alpha: &[f64], mut grad: Option<(&mut [f64], &mut [f64])>) -> f64 {
        if let Some((gl, ga)) = grad.as_mut() {
            gl.fill(0.0);
            ga.fill(0.0);
        }
        let area = 0.5 * self.dx * self.dt;
        let mut total = 0.0;
        for i in 0..self.n_r {
            for j in 0..self.n_t {
                let cell = Cell::new(i, j, self.n_t);
                let lv = cell.values(l, 0.0);
                let av = cell.values(alpha, TAU);
                for tri in [Tri::Lower, Tri::Upper] {
                    let cn = tri.corners();
                    let gl_t = tri.grad(&lv, self.dx, self.dt);
                    let ga_t = tri.grad(&av, self.dx, self.dt);
                    let sq = gl_t[0] * gl_t[0] + gl_t[1] * gl_t[1] + ga_t[0] * ga_t[0] + ga_t[1] * ga_t[1];
                    let mut mass = 0.0;
                    let mut dmass = [0.0; 3];
                    for (bary, w) in DUNAVANT {
                        let lq = bary[0] * lv[cn[0]] + bary[1] * lv[cn[1]] + bary[2] * lv[cn[2]];
                        let s = lq.exp();
                        mass += w * self.m.s2rho2(s);
                        if grad.is_some() {
                            let dg = w * s * self.m.s2rho2_prime(s);
                            for k in 0..3 {
                                dmass[k] += dg * bary[k];
                            }
                        }
                    }
                    mass *= area;
                    total += 0.5 * sq * mass;
                    if let Some((gl, ga)) = grad.as_mut() {
                        let pl = tri.grad_sq_partials(gl_t, self.dx, self.dt);
                        let pa = tri.grad_sq_partials(ga_t, self.dx, self.dt);
                        for k in 0..4 {
                            gl[cell.idx[k]] += 0.5 * pl[k] * mass;
                            ga[cell.idx[k]] += 0.5 * pa[k] * mass;
                        }
                        for (k, &c) in cn.iter().enumerate() {
                            gl[cell.idx[c]] += 0.5 * sq * dmass[k] * area;
                        }
                    }
                }
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDiagnostics {
    pub regime: Regime,
    /// Sup over nodes of `||h(ζ)| - q⁻¹(|ζ|)|` (Nitsche range only).
    pub sup_profile_error: Option<f64>,
    pub positive_jacobian_fraction: f64,
    /// Radius `r′` of the circle that the critical profile sends to `τ`.
    pub r_prime: f64,
    /// `max(|h| - τ)` over nodes with `|ζ| ≤ r′` (fat regime only).
    pub layer_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshRun {
    pub state: MeshState,
    /// Energy after every accepted step, starting with the initial state.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The line search failed to find a decrease; the last state is returned.
    pub stagnated: bool,
    pub diagnostics: MeshDiagnostics,
}

impl MeshRun {
    /// Largest increase between consecutive accepted energies (zero for a monotone run).
    pub fn max_energy_increase(&self) -> f64 {
        self.history
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Projected Barzilai–Borwein descent with Armijo backtracking. Boundary moduli stay
/// fixed, the boundary arguments are free, and interior moduli are projected into
/// `[τ, σ]`.
pub fn mesh_energy_minimize(
    m: &RadialMetric,
    geom: AnnulusGeometry,
    initial: MeshState,
    opts: &MeshOptions,
) -> Result<MeshRun> {
    check_target(m, geom.target())?;
    MeshSpec::new(initial.spec.n_r, initial.spec.n_t)?;
    if initial.geometry != geom {
        return Err(Error::Config("mesh state was built for a different geometry".into()));
    }
    let n = initial.l.len();
    let n_t = initial.spec.n_t;
    let n_r = initial.spec.n_r;
    let (lo, hi) = (geom.tau.ln(), geom.sigma.ln());
    let fixed = |k: usize| k < n_t || k >= n_r * n_t;
    let asm = Assembly::new(m, &initial);

    let mut st = initial;
    let mut gl = vec![0.0; n];
    let mut ga = vec![0.0; n];
    st.energy = asm.energy(&st.l, &st.alpha, Some((&mut gl, &mut ga)));
    for k in 0..n_t {
        gl[k] = 0.0;
        gl[n - 1 - k] = 0.0;
    }
    let mut history = vec![st.energy];
    let gmax = gl.iter().chain(&ga).fold(0.0f64, |a, g| a.max(g.abs()));
    let mut step = if gmax > 0.0 { 1e-2 / gmax } else { 1.0 };
    let mut converged = false;
    let mut stagnated = false;
    let mut iterations = 0;
    let mut trial_l = vec![0.0; n];
    let mut trial_a = vec![0.0; n];
    let mut new_gl = vec![0.0; n];
    let mut new_ga = vec![0.0; n];

    while iterations < opts.max_iters {
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            let mut decrease = 0.0;
            let mut max_move: f64 = 0.0;
            for k in 0..n {
                trial_l[k] = if fixed(k) {
                    st.l[k]
                } else {
                    (st.l[k] - t * gl[k]).clamp(lo, hi)
                };
                trial_a[k] = st.alpha[k] - t * ga[k];
                let (dl, da) = (trial_l[k] - st.l[k], trial_a[k] - st.alpha[k]);
                decrease += gl[k] * dl + ga[k] * da;
                max_move = max_move.max(dl.abs()).max(da.abs());
            }
            if max_move == 0.0 {
                break;
            }
            let e = asm.energy(&trial_l, &trial_a, None);
            if e.is_finite() && e <= st.energy + 1e-4 * decrease {
                accepted = Some((e, max_move));
                break;
            }
            t *= 0.5;
        }
        let Some((e_new, max_move)) = accepted else {
            stagnated = true;
            break;
        };
        iterations += 1;
        asm.energy(&trial_l, &trial_a, Some((&mut new_gl, &mut new_ga)));
        for k in 0..n_t {
            new_gl[k] = 0.0;
            new_gl[n - 1 - k] = 0.0;
        }
        // Barzilai–Borwein step from the last accepted move
        let mut ss = 0.0;
        let mut sy = 0.0;
        for k in 0..n {
            let (sl, sa) = (trial_l[k] - st.l[k], trial_a[k] - st.alpha[k]);
            ss += sl * sl + sa * sa;
            sy += sl * (new_gl[k] - gl[k]) + sa * (new_ga[k] - ga[k]);
        }
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 4.0 * t };
        let rel = (st.energy - e_new) / st.energy.abs().max(f64::MIN_POSITIVE);
        std::mem::swap(&mut st.l, &mut trial_l);
        std::mem::swap(&mut st.alpha, &mut trial_a);
        std::mem::swap(&mut gl, &mut new_gl);
        std::mem::swap(&mut ga, &mut new_ga);
        st.energy = e_new;
        history.push(e_new);
        if rel < opts.rel_tol || max_move < opts.step_tol {
            converged = true;
            break;
        }
    }
    if stagnated {
        log::warn!("mesh descent stagnated after {iterations} iterations at E = {}", st.energy);
    }
    let diagnostics = diagnose(m, &st, &QuadratureConfig::default())?;
    Ok(MeshRun {
        state: st,
        history,
        iterations,
        converged,
        stagnated,
        diagnostics,
    })
}

fn diagnose(m: &RadialMetric, st: &MeshState, cfg: &QuadratureConfig) -> Result<MeshDiagnostics> {
    let geom = st.geometry;
    let class = classify_regime(m, geom, cfg)?;
    let crit = critical_profile(m, geom.target(), cfg)?;
    let r_prime = crit.r_achieved();
    let (n_r, n_t) = (st.spec.n_r, st.spec.n_t);
    let mut sup_profile_error = None;
    let mut layer_width = None;
    match class.regime {
        Regime::NitscheRange => {
            let p = solve_c(m, geom, cfg, &RootConfig::default())?;
            let mut sup: f64 = 0.0;
            // the profile realises ln r only to within its solve tolerance
            let x_lo = p.r_achieved().ln();
            for i in 0..=n_r {
                let x = (geom.r.ln() + st.dx() * i as f64).clamp(x_lo, 0.0);
                let (s_exact, _) = p.phi_inverse(x)?;
                for j in 0..n_t {
                    let (_, h) = st.node(i, j);
                    sup = sup.max((h.norm() - s_exact).abs());
                }
            }
            sup_profile_error = Some(sup);
        }
        Regime::Fat => {
            let mut w: f64 = 0.0;
            for i in 0..=n_r {
                for j in 0..n_t {
                    let (z, h) = st.node(i, j);
                    if z.norm() <= r_prime {
                        w = w.max(h.norm() - geom.tau);
                    }
                }
            }
            layer_width = Some(w);
        }
    }
    Ok(MeshDiagnostics {
        regime: class.regime,
        sup_profile_error,
        positive_jacobian_fraction: st.positive_jacobian_fraction(),
        r_prime,
        layer_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spec_parsing() {
        let s: MeshSpec = "64x128".parse().unwrap();
        assert_eq!((s.n_r, s.n_t), (64, 128));
        assert_eq!(s.to_string(), "64x128");
        assert!("16x16".parse::<MeshSpec>().is_err());
        assert!("64by128".parse::<MeshSpec>().is_err());
    }

    #[test]
    fn gradient_matches_differences() {
        let m = RadialMetric::builtin("hyperbolic_disk", &[]).unwrap();
        let geom = AnnulusGeometry::new(0.5, 0.9, 0.6).unwrap();
        let mut st = MeshState::initial(&m, geom, MeshSpec::new(32, 64).unwrap()).unwrap();
        for (k, v) in st.l.iter_mut().enumerate().skip(64).take(32 * 64 - 64) {
            *v += 0.01 * ((k as f64) * 0.37).sin();
        }
        for (k, v) in st.alpha.iter_mut().enumerate() {
            *v += 0.02 * ((k as f64) * 0.11).cos();
        }
        let asm = Assembly::new(&m, &st);
        let n = st.l.len();
        let (mut gl, mut ga) = (vec![0.0; n], vec![0.0; n]);
        asm.energy(&st.l, &st.alpha, Some((&mut gl, &mut ga)));
        let h = 1e-6;
        for k in [100, 777, 1500] {
            let mut lp = st.l.clone();
            lp[k] += h;
            let mut lm = st.l.clone();
            lm[k] -= h;
            let fd = (asm.energy(&lp, &st.alpha, None) - asm.energy(&lm, &st.alpha, None)) / (2.0 * h);
            assert!((fd - gl[k]).abs() < 1e-7 * (1.0 + fd.abs()), "l[{k}]: {fd} vs {}", gl[k]);
            let mut ap = st.alpha.clone();
            ap[k] += h;
            let mut am = st.alpha.clone();
            am[k] -= h;
            let fd = (asm.energy(&st.l, &ap, None) - asm.energy(&st.l, &am, None)) / (2.0 * h);
            assert!((fd - ga[k]).abs() < 1e-7 * (1.0 + fd.abs()), "alpha[{k}]");
        }
    }

    #[test]
    fn conformal_scaling_is_stationary() {
        let m = RadialMetric::euclidean();
        let geom = AnnulusGeometry::new(0.5, 1.0, 0.5).unwrap();
        let st = MeshState::initial(&m, geom, MeshSpec::new(32, 64).unwrap()).unwrap();
        assert!((st.energy - 0.75 * PI).abs() < 1e-3, "{}", st.energy);
        let run = mesh_energy_minimize(&m, geom, st, &MeshOptions { max_iters: 50, ..Default::default() }).unwrap();
        assert!((run.state.energy - 0.75 * PI).abs() < 1e-3);
        assert_eq!(run.max_energy_increase(), 0.0);
        assert_eq!(run.diagnostics.positive_jacobian_fraction, 1.0);
        assert!(run.diagnostics.sup_profile_error.unwrap() < 1e-3);
    }
}
